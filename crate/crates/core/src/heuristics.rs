//! Deterministic breakpoint placement heuristics, one per edit trigger.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::dependence::LineSet;
use crate::diff::ChangeSite;
use crate::lang::{FunctionDef, Line, Program, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum HeuristicSource {
    /// Conditional statement heuristic.
    H1,
    /// Variable modification heuristic.
    H2,
    /// Function scope heuristic.
    H3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    BranchEntry,
    AfterConstruct,
    VarWrite,
    VarAfterWrite,
    FunctionEntry,
    CallSite,
}

impl Reason {
    pub fn tag(self) -> &'static str {
        match self {
            Reason::BranchEntry => "branch-entry",
            Reason::AfterConstruct => "after-construct",
            Reason::VarWrite => "var-write",
            Reason::VarAfterWrite => "var-after-write",
            Reason::FunctionEntry => "function-entry",
            Reason::CallSite => "call-site",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HeuristicCandidate {
    pub line: Line,
    pub source: HeuristicSource,
    pub reason: Reason,
    /// Variable (H2) or function (H3) the candidate watches.
    pub subject: Option<String>,
}

impl HeuristicCandidate {
    /// Provenance tag such as `H2:var-write`.
    pub fn tag(&self) -> String {
        format!("{:?}:{}", self.source, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicConfig {
    /// Also place an H1 candidate on the first statement after the construct.
    pub h1_include_exit: bool,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            h1_include_exit: true,
        }
    }
}

fn candidate(line: Line, source: HeuristicSource, reason: Reason, subject: Option<&str>) -> HeuristicCandidate {
    HeuristicCandidate {
        line,
        source,
        reason,
        subject: subject.map(str::to_string),
    }
}

/// Statements of `f` in source order and the index of the statement that
/// follows the subtree rooted at each position.
struct Layout<'a> {
    order: Vec<&'a Stmt>,
    subtree_end: Vec<usize>,
}

impl<'a> Layout<'a> {
    fn of(f: &'a FunctionDef) -> Self {
        let order = f.statements();
        let mut subtree_end = vec![0; order.len()];
        fn size(s: &Stmt) -> usize {
            1 + s.blocks().iter().flat_map(|b| b.iter()).map(size).sum::<usize>()
        }
        for (i, s) in order.iter().enumerate() {
            subtree_end[i] = i + size(s);
        }
        Layout { order, subtree_end }
    }

    fn position(&self, line: Line) -> Option<usize> {
        self.order.iter().position(|s| s.line == line)
    }

    /// Next statement line in source order after position `i`.
    fn next_line(&self, i: usize) -> Option<Line> {
        self.order.get(i + 1).map(|s| s.line)
    }

    /// First statement after the whole construct at position `i`.
    fn line_after_subtree(&self, i: usize) -> Option<Line> {
        self.order.get(self.subtree_end[i]).map(|s| s.line)
    }

    /// Innermost construct at or enclosing position `i`.
    fn construct_for(&self, i: usize) -> Option<usize> {
        if self.order[i].is_construct() {
            return Some(i);
        }
        (0..i)
            .rev()
            .find(|&c| self.order[c].is_construct() && self.subtree_end[c] > i)
    }
}

/// H1: block entries of the conditional at or around the change, plus the
/// statement following it when `h1_include_exit` is set.
pub fn conditional_heuristic(
    site: &ChangeSite,
    p: &Program,
    cfg: &HeuristicConfig,
) -> Vec<HeuristicCandidate> {
    if !site.has_condition_change() {
        return Vec::new();
    }
    let Some(f) = p.function_at(site.anchor_line) else {
        return Vec::new();
    };
    let layout = Layout::of(f);
    let Some(c) = layout
        .position(site.anchor_line)
        .and_then(|i| layout.construct_for(i))
    else {
        return Vec::new();
    };
    let construct = layout.order[c];
    let mut out: Vec<HeuristicCandidate> = construct
        .blocks()
        .iter()
        .filter_map(|b| b.first())
        .map(|s| candidate(s.line, HeuristicSource::H1, Reason::BranchEntry, None))
        .collect();
    if cfg.h1_include_exit {
        if let Some(l) = layout.line_after_subtree(c) {
            out.push(candidate(l, HeuristicSource::H1, Reason::AfterConstruct, None));
        }
    }
    out
}

/// H2: for each variable involved in the change, every write of it in the
/// enclosing function and the statement after each write.
pub fn variable_heuristic(site: &ChangeSite, p: &Program) -> Vec<HeuristicCandidate> {
    let vars = site.modified_vars();
    if vars.is_empty() {
        return Vec::new();
    }
    let Some(f) = p.function_at(site.anchor_line) else {
        return Vec::new();
    };
    let layout = Layout::of(f);
    let mut out = Vec::new();
    for v in vars {
        for (i, s) in layout.order.iter().enumerate() {
            if s.written_var() != Some(v) {
                continue;
            }
            out.push(candidate(s.line, HeuristicSource::H2, Reason::VarWrite, Some(v)));
            if let Some(next) = layout.next_line(i) {
                out.push(candidate(next, HeuristicSource::H2, Reason::VarAfterWrite, Some(v)));
            }
        }
    }
    out
}

/// H3: the changed function's first body statement and every call site.
pub fn function_heuristic(site: &ChangeSite, p: &Program) -> Vec<HeuristicCandidate> {
    let Some(name) = site.function() else {
        return Vec::new();
    };
    let Some(f) = p.function(name) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    if let Some(l) = f.first_statement_line() {
        out.push(candidate(l, HeuristicSource::H3, Reason::FunctionEntry, Some(name)));
    }
    for s in p.statements() {
        if s.own_exprs().iter().any(|e| e.calls().contains(&name)) {
            out.push(candidate(s.line, HeuristicSource::H3, Reason::CallSite, Some(name)));
        }
    }
    out
}

/// Pooled candidates of all sites, with per-line provenance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeuristicCandidates {
    /// Deduplicated, ordered by (line, source, reason, subject).
    pub candidates: Vec<HeuristicCandidate>,
}

impl HeuristicCandidates {
    pub fn lines(&self) -> LineSet {
        self.candidates.iter().map(|c| c.line).collect()
    }

    pub fn for_line(&self, line: Line) -> impl Iterator<Item = &HeuristicCandidate> {
        self.candidates.iter().filter(move |c| c.line == line)
    }

    pub fn by_line(&self) -> BTreeMap<Line, Vec<&HeuristicCandidate>> {
        let mut m: BTreeMap<Line, Vec<&HeuristicCandidate>> = BTreeMap::new();
        for c in &self.candidates {
            m.entry(c.line).or_default().push(c);
        }
        m
    }
}

pub fn heuristic_candidates(
    sites: &[ChangeSite],
    p: &Program,
    cfg: &HeuristicConfig,
) -> HeuristicCandidates {
    let mut all = BTreeSet::new();
    for site in sites {
        all.extend(conditional_heuristic(site, p, cfg));
        all.extend(variable_heuristic(site, p));
        all.extend(function_heuristic(site, p));
    }
    HeuristicCandidates {
        candidates: all.into_iter().collect(),
    }
}
