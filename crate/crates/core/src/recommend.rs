//! Breakpoint plan assembly: changed lines become bug-site breakpoints;
//! lines in both the slice of the change and the heuristic candidates
//! become affected breakpoints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dependence::{build_dependence_graph, DependenceGraph, LineSet, SliceError};
use crate::diff::{anchor_and_classify, diff_lines, ChangeSite};
use crate::exec::{run_test, TestCase, TestStatus};
use crate::heuristics::{heuristic_candidates, HeuristicCandidates, HeuristicConfig};
use crate::lang::{pretty_print, Line, Program};

pub const DEFAULT_MAX_BREAKPOINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BreakpointKind {
    BugSite,
    Affected,
}

pub const PROVENANCE_DIFF: &str = "diff";
pub const PROVENANCE_SLICE: &str = "slice";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub line: Line,
    pub kind: BreakpointKind,
    pub provenance: Vec<String>,
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakpointPlan {
    pub task_id: String,
    pub failed_test_id: String,
    pub breakpoints: Vec<Breakpoint>,
    #[serde(skip)]
    pub fixed_source_digest: String,
}

impl BreakpointPlan {
    pub fn lines(&self) -> LineSet {
        self.breakpoints.iter().map(|b| b.line).collect()
    }

    pub fn lines_of(&self, kind: BreakpointKind) -> Vec<Line> {
        self.breakpoints
            .iter()
            .filter(|b| b.kind == kind)
            .map(|b| b.line)
            .collect()
    }

    /// Serialized form: `task_id`, `failed_test_id`, `breakpoints`, in that
    /// order, pretty-printed with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecommenderConfig {
    pub max_breakpoints: usize,
    pub heuristics: HeuristicConfig,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        RecommenderConfig {
            max_breakpoints: DEFAULT_MAX_BREAKPOINTS,
            heuristics: HeuristicConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecommendError {
    #[error("the fixed program does not pass test '{test_id}' ({status:?})")]
    FixDoesNotPass { test_id: String, status: TestStatus },
    #[error(transparent)]
    Slice(#[from] SliceError),
}

/// Every intermediate set the plan is derived from.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub sites: Vec<ChangeSite>,
    pub graph: DependenceGraph,
    pub bug_sites: LineSet,
    pub slice: LineSet,
    pub heuristics: HeuristicCandidates,
}

impl Analysis {
    pub fn is_empty_diff(&self) -> bool {
        self.sites.is_empty()
    }

    /// Slice ∩ heuristic candidates, minus the bug sites.
    pub fn affected(&self) -> LineSet {
        let h = self.heuristics.lines();
        self.slice
            .iter()
            .filter(|l| h.contains(l) && !self.bug_sites.contains(l))
            .copied()
            .collect()
    }
}

/// Diff, slice and heuristics for a student/fixed pair, without checking
/// the fix against any test.
pub fn analyze(
    student: &Program,
    fixed: &Program,
    cfg: &RecommenderConfig,
) -> Result<Analysis, RecommendError> {
    let graph = build_dependence_graph(student);
    let sites = anchor_and_classify(&diff_lines(student, fixed), student, fixed).unwrap_or_default();
    let bug_sites: LineSet = sites.iter().map(|s| s.anchor_line).collect();
    let slice = graph.slice_region(&bug_sites)?;
    let heuristics = heuristic_candidates(&sites, student, &cfg.heuristics);
    Ok(Analysis {
        sites,
        graph,
        bug_sites,
        slice,
        heuristics,
    })
}

pub fn source_digest(p: &Program) -> String {
    hex::encode(Sha256::digest(pretty_print(p).as_bytes()))
}

pub fn recommend(
    student: &Program,
    fixed: &Program,
    failed_test: &TestCase,
    task_id: &str,
    cfg: &RecommenderConfig,
) -> Result<BreakpointPlan, RecommendError> {
    let verdict = run_test(fixed, failed_test);
    if !verdict.passed() {
        return Err(RecommendError::FixDoesNotPass {
            test_id: failed_test.id.clone(),
            status: verdict.status,
        });
    }
    let analysis = analyze(student, fixed, cfg)?;
    Ok(plan_from_analysis(
        &analysis,
        task_id,
        &failed_test.id,
        source_digest(fixed),
        cfg.max_breakpoints,
    ))
}

pub fn plan_from_analysis(
    a: &Analysis,
    task_id: &str,
    failed_test_id: &str,
    fixed_source_digest: String,
    max_breakpoints: usize,
) -> BreakpointPlan {
    let affected = a.affected();
    let forward = a.graph.forward_distances(&a.bug_sites);
    let backward = a.graph.backward_distances(&a.bug_sites);

    // Priority: bug sites by line, then affected lines by forward distance
    // from the nearest bug site and line. Lines unreachable forward come
    // last, ordered by backward distance and line.
    let mut ranked: Vec<(Line, BreakpointKind)> = a
        .bug_sites
        .iter()
        .map(|&l| (l, BreakpointKind::BugSite))
        .collect();
    let mut aff: Vec<Line> = affected.into_iter().collect();
    aff.sort_by_key(|l| {
        match forward.get(l) {
            Some(&d) => (0, d, *l),
            None => (1, backward.get(l).copied().unwrap_or(usize::MAX), *l),
        }
    });
    ranked.extend(aff.into_iter().map(|l| (l, BreakpointKind::Affected)));
    ranked.truncate(max_breakpoints);
    ranked.sort_by_key(|&(l, k)| (k, l));

    let tags: BTreeMap<Line, Vec<String>> = a
        .heuristics
        .by_line()
        .into_iter()
        .map(|(l, cs)| {
            let mut t: Vec<String> = Vec::new();
            for c in cs {
                let tag = c.tag();
                if !t.contains(&tag) {
                    t.push(tag);
                }
            }
            (l, t)
        })
        .collect();

    let breakpoints = ranked
        .into_iter()
        .map(|(line, kind)| {
            let provenance = match kind {
                BreakpointKind::BugSite => vec![PROVENANCE_DIFF.to_string()],
                BreakpointKind::Affected => std::iter::once(PROVENANCE_SLICE.to_string())
                    .chain(tags.get(&line).into_iter().flatten().cloned())
                    .collect(),
            };
            Breakpoint {
                line,
                kind,
                provenance,
                explanation: None,
            }
        })
        .collect();

    BreakpointPlan {
        task_id: task_id.to_string(),
        failed_test_id: failed_test_id.to_string(),
        breakpoints,
        fixed_source_digest,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Value;
    use crate::lang::parse;
    use crate::testutil::{fix_source, STU};

    fn sum3() -> TestCase {
        TestCase {
            id: "sum_3".into(),
            entry: "sum".into(),
            args: vec![Value::Int(3)],
            expected_value: Some(Value::Int(6)),
            expected_stdout: None,
        }
    }

    fn pair() -> (Program, Program) {
        (parse(STU).unwrap(), parse(&fix_source()).unwrap())
    }

    #[test]
    fn reference_plan() {
        let (s, f) = pair();
        let plan = recommend(&s, &f, &sum3(), "sum", &RecommenderConfig::default()).unwrap();
        assert_eq!(plan.lines_of(BreakpointKind::BugSite), vec![4]);
        assert_eq!(plan.lines_of(BreakpointKind::Affected), vec![3, 5, 6, 8]);
        let order: Vec<Line> = plan.breakpoints.iter().map(|b| b.line).collect();
        assert_eq!(order, vec![4, 3, 5, 6, 8]);
        assert_eq!(plan.breakpoints[0].provenance, vec!["diff"]);
        assert_eq!(plan.breakpoints[1].provenance, vec!["slice", "H2:var-write"]);
        assert_eq!(
            plan.breakpoints[4].provenance,
            vec!["slice", "H1:after-construct", "H2:var-after-write"]
        );
        assert_eq!(plan.fixed_source_digest.len(), 64);
    }

    #[test]
    fn cap_of_two_keeps_nearest_forward_line() {
        let (s, f) = pair();
        let cfg = RecommenderConfig {
            max_breakpoints: 2,
            ..Default::default()
        };
        let plan = recommend(&s, &f, &sum3(), "sum", &cfg).unwrap();
        let order: Vec<(Line, BreakpointKind)> =
            plan.breakpoints.iter().map(|b| (b.line, b.kind)).collect();
        assert_eq!(
            order,
            vec![(4, BreakpointKind::BugSite), (5, BreakpointKind::Affected)]
        );
    }

    #[test]
    fn identical_programs_give_empty_plan() {
        let (s, _) = pair();
        let fixed = parse(&fix_source()).unwrap();
        let plan = recommend(&fixed, &fixed, &sum3(), "sum", &RecommenderConfig::default()).unwrap();
        assert!(plan.breakpoints.is_empty());
        // The student program does not pass, so it cannot serve as the fix.
        assert!(matches!(
            recommend(&fixed, &s, &sum3(), "sum", &RecommenderConfig::default()),
            Err(RecommendError::FixDoesNotPass { .. })
        ));
    }

    #[test]
    fn json_field_order() {
        let (s, f) = pair();
        let plan = recommend(&s, &f, &sum3(), "sum", &RecommenderConfig::default()).unwrap();
        let json = plan.to_json();
        let t = json.find("\"task_id\"").unwrap();
        let ft = json.find("\"failed_test_id\"").unwrap();
        let b = json.find("\"breakpoints\"").unwrap();
        assert!(t < ft && ft < b);
        let l = json.find("\"line\"").unwrap();
        let k = json.find("\"kind\"").unwrap();
        let p = json.find("\"provenance\"").unwrap();
        let e = json.find("\"explanation\"").unwrap();
        assert!(l < k && k < p && p < e);
        assert!(!json.contains("digest"));
    }
}
