use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use super::cfg::build_cfg;
use super::reaching::reaching_definitions;
use crate::lang::{Block, Line, Program, StmtKind};

pub type LineSet = BTreeSet<Line>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataEdge {
    pub from: Line,
    pub to: Line,
    pub var: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Data,
    Control,
    Call,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SliceError {
    #[error("line {0} is not a node of the dependence graph")]
    UnknownLine(Line),
}

/// Line-keyed dependence graph of one program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceGraph {
    pub nodes: LineSet,
    pub data_edges: BTreeSet<DataEdge>,
    pub control_edges: BTreeSet<(Line, Line)>,
    /// Call site to callee header, and callee return line to call site.
    pub call_edges: BTreeSet<(Line, Line)>,
    succ: BTreeMap<Line, LineSet>,
    pred: BTreeMap<Line, LineSet>,
}

pub fn build_dependence_graph(p: &Program) -> DependenceGraph {
    let mut nodes = LineSet::new();
    for f in &p.functions {
        nodes.insert(f.header_line);
        nodes.extend(f.statements().iter().map(|s| s.line));
    }

    let rd = reaching_definitions(&build_cfg(p));
    let data_edges: BTreeSet<DataEdge> = rd
        .by_use
        .iter()
        .flat_map(|((line, var), defs)| {
            defs.iter().map(move |&d| DataEdge {
                from: d,
                to: *line,
                var: var.clone(),
            })
        })
        .collect();

    let mut control_edges = BTreeSet::new();
    for f in &p.functions {
        collect_control(&f.body, &mut control_edges);
    }

    let mut call_edges = BTreeSet::new();
    for f in &p.functions {
        for s in f.statements() {
            for callee in s.own_exprs().iter().flat_map(|e| e.calls()) {
                let Some(g) = p.function(callee) else { continue };
                call_edges.insert((s.line, g.header_line));
                for r in g.statements() {
                    if matches!(r.kind, StmtKind::Return(_)) {
                        call_edges.insert((r.line, s.line));
                    }
                }
            }
        }
    }

    DependenceGraph::from_edges(nodes, data_edges, control_edges, call_edges)
}

/// Each construct controls the statements directly inside its blocks;
/// nested constructs relay control to their own bodies.
fn collect_control(block: &Block, out: &mut BTreeSet<(Line, Line)>) {
    for s in block {
        for b in s.blocks() {
            for child in b {
                if child.line != s.line {
                    out.insert((s.line, child.line));
                }
            }
            collect_control(b, out);
        }
    }
}

impl DependenceGraph {
    pub fn from_edges(
        nodes: LineSet,
        data_edges: BTreeSet<DataEdge>,
        control_edges: BTreeSet<(Line, Line)>,
        call_edges: BTreeSet<(Line, Line)>,
    ) -> Self {
        let mut succ: BTreeMap<Line, LineSet> = nodes.iter().map(|&n| (n, LineSet::new())).collect();
        let mut pred = succ.clone();
        let pairs = data_edges
            .iter()
            .map(|e| (e.from, e.to))
            .chain(control_edges.iter().copied())
            .chain(call_edges.iter().copied());
        for (a, b) in pairs {
            succ.entry(a).or_default().insert(b);
            pred.entry(b).or_default().insert(a);
        }
        DependenceGraph {
            nodes,
            data_edges,
            control_edges,
            call_edges,
            succ,
            pred,
        }
    }

    /// All edges as `(from, to, kind)` triples, without variable labels.
    pub fn edges(&self) -> Vec<(Line, Line, EdgeKind)> {
        let mut out: Vec<_> = self
            .data_edges
            .iter()
            .map(|e| (e.from, e.to, EdgeKind::Data))
            .chain(self.control_edges.iter().map(|&(a, b)| (a, b, EdgeKind::Control)))
            .chain(self.call_edges.iter().map(|&(a, b)| (a, b, EdgeKind::Call)))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn successors(&self, line: Line) -> impl Iterator<Item = Line> + '_ {
        self.succ.get(&line).into_iter().flatten().copied()
    }

    pub fn predecessors(&self, line: Line) -> impl Iterator<Item = Line> + '_ {
        self.pred.get(&line).into_iter().flatten().copied()
    }

    fn check(&self, seeds: &LineSet) -> Result<(), SliceError> {
        match seeds.iter().find(|l| !self.nodes.contains(l)) {
            Some(&l) => Err(SliceError::UnknownLine(l)),
            None => Ok(()),
        }
    }

    fn closure(&self, seeds: &LineSet, adj: &BTreeMap<Line, LineSet>) -> LineSet {
        let mut seen = seeds.clone();
        let mut queue: VecDeque<Line> = seeds.iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            for &v in adj.get(&u).into_iter().flatten() {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Least superset of `seeds` closed under predecessors.
    pub fn backward_slice(&self, seeds: &LineSet) -> Result<LineSet, SliceError> {
        self.check(seeds)?;
        Ok(self.closure(seeds, &self.pred))
    }

    /// Least superset of `seeds` closed under successors.
    pub fn forward_slice(&self, seeds: &LineSet) -> Result<LineSet, SliceError> {
        self.check(seeds)?;
        Ok(self.closure(seeds, &self.succ))
    }

    pub fn slice_region(&self, seeds: &LineSet) -> Result<LineSet, SliceError> {
        let mut s = self.backward_slice(seeds)?;
        s.extend(self.forward_slice(seeds)?);
        Ok(s)
    }

    /// BFS hop count from the nearest seed along successor edges.
    pub fn forward_distances(&self, seeds: &LineSet) -> BTreeMap<Line, usize> {
        self.distances(seeds, &self.succ)
    }

    /// BFS hop count from the nearest seed along predecessor edges.
    pub fn backward_distances(&self, seeds: &LineSet) -> BTreeMap<Line, usize> {
        self.distances(seeds, &self.pred)
    }

    fn distances(&self, seeds: &LineSet, adj: &BTreeMap<Line, LineSet>) -> BTreeMap<Line, usize> {
        let mut dist: BTreeMap<Line, usize> = seeds.iter().map(|&s| (s, 0)).collect();
        let mut queue: VecDeque<Line> = seeds.iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            for &v in adj.get(&u).into_iter().flatten() {
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Graphviz rendering: data edges solid, control dashed, call dotted.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dependence {\n  node [shape=box];\n");
        for n in &self.nodes {
            let _ = writeln!(out, "  L{n} [label=\"{n}\"];");
        }
        for e in &self.data_edges {
            let _ = writeln!(
                out,
                "  L{} -> L{} [style=solid, label=\"{}\"];",
                e.from, e.to, e.var
            );
        }
        for (a, b) in &self.control_edges {
            let _ = writeln!(out, "  L{a} -> L{b} [style=dashed];");
        }
        for (a, b) in &self.call_edges {
            let _ = writeln!(out, "  L{a} -> L{b} [style=dotted];");
        }
        out.push_str("}\n");
        out
    }
}
