//! Helpers shared by the CLI test targets.
#![allow(dead_code)]

pub mod gen;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bpa_cli::config::EnvVars;
use bpa_core::dependence::{DependenceGraph, LineSet};
use bpa_core::lang::Line;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn corpus_dir() -> PathBuf {
    workspace_root().join("corpus")
}

pub fn pair_file(pair: &str, name: &str) -> String {
    corpus_dir().join(pair).join(name).display().to_string()
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in-process with no provider endpoints in the environment.
pub fn bpa(args: &[&str]) -> Output {
    bpa_env(args, &EnvVars::default())
}

pub fn bpa_env(args: &[&str], env: &EnvVars) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bpa").chain(args.iter().copied());
    let code = bpa_cli::run(argv, env, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// Compares `actual` with a checked-in golden file; `UPDATE_GOLDENS=1`
/// rewrites the file instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path)
        .map_err(|e| format!("golden {} unreadable: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("output differs from golden {}", path.display()))
    }
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Reachability by transitive closure of the adjacency matrix, independent
/// of the graph's own traversal.
pub struct ClosureOracle {
    index: BTreeMap<Line, usize>,
    lines: Vec<Line>,
    reach: Vec<Vec<bool>>,
}

impl ClosureOracle {
    pub fn new(g: &DependenceGraph) -> Self {
        let lines: Vec<Line> = g.nodes.iter().copied().collect();
        let index: BTreeMap<Line, usize> = lines.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let n = lines.len();
        let mut reach = vec![vec![false; n]; n];
        for (a, b, _) in g.edges() {
            reach[index[&a]][index[&b]] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    let row_k = reach[k].clone();
                    for (cell, via) in reach[i].iter_mut().zip(row_k) {
                        *cell |= via;
                    }
                }
            }
        }
        ClosureOracle { index, lines, reach }
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn backward(&self, seeds: &LineSet) -> LineSet {
        let mut out = seeds.clone();
        for (i, &l) in self.lines.iter().enumerate() {
            if seeds.iter().any(|s| self.reach[i][self.index[s]]) {
                out.insert(l);
            }
        }
        out
    }

    pub fn forward(&self, seeds: &LineSet) -> LineSet {
        let mut out = seeds.clone();
        for (j, &l) in self.lines.iter().enumerate() {
            if seeds.iter().any(|s| self.reach[self.index[s]][j]) {
                out.insert(l);
            }
        }
        out
    }

    pub fn region(&self, seeds: &LineSet) -> LineSet {
        let mut r = self.backward(seeds);
        r.extend(self.forward(seeds));
        r
    }
}
