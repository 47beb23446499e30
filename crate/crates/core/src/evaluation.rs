//! Precision, recall and F1 for breakpoint plans against gold labels and
//! for classifier predictions against execution.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dependence::LineSet;
use crate::exec::{TestCase, TestSuite};
use crate::lang::{parse, Line, Program};
use crate::recommend::{recommend, BreakpointPlan, RecommenderConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize, other_den: usize) -> f64 {
    match (den, other_den) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => num as f64 / den as f64,
    }
}

pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Metrics {
    /// With nothing predicted and nothing expected, precision and recall
    /// are both 1; when only one side is empty the empty ratio is 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp, tp + fn_);
        let recall = ratio(tp, tp + fn_, tp + fp);
        Metrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            tp,
            fp,
            fn_,
        }
    }
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn set_metrics(predicted: &LineSet, gold: &LineSet) -> Metrics {
    let tp = predicted.intersection(gold).count();
    Metrics::from_counts(tp, predicted.len() - tp, gold.len() - tp)
}

/// Positive class: predicted to pass.
pub fn classifier_metrics(rows: &[(bool, bool)]) -> Metrics {
    let count = |p: bool, a: bool| rows.iter().filter(|&&r| r == (p, a)).count();
    Metrics::from_counts(count(true, true), count(true, false), count(false, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub pair_id: String,
    pub predicted: Vec<Line>,
    pub gold: Vec<Line>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointReport {
    pub pairs: Vec<PairRow>,
    /// Pooled counts over all pairs.
    pub micro: Metrics,
    /// Unweighted mean of the per-pair scores.
    #[serde(rename = "macro")]
    pub macro_: MeanMetrics,
}

impl BreakpointReport {
    pub fn from_rows(pairs: Vec<PairRow>) -> Self {
        let (tp, fp, fn_) = pairs.iter().fold((0, 0, 0), |(a, b, c), r| {
            (a + r.metrics.tp, b + r.metrics.fp, c + r.metrics.fn_)
        });
        let n = pairs.len().max(1) as f64;
        let mean = |f: fn(&Metrics) -> f64| pairs.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
        let macro_ = MeanMetrics {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        };
        BreakpointReport {
            micro: Metrics::from_counts(tp, fp, fn_),
            macro_,
            pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pair}: {message}")]
pub struct CorpusError {
    pub pair: String,
    pub message: String,
}

impl CorpusError {
    fn new(pair: &str, message: impl Into<String>) -> Self {
        CorpusError {
            pair: pair.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct GoldFile {
    lines: Vec<Line>,
}

/// One labeled student/fixed pair.
#[derive(Debug, Clone)]
pub struct CorpusPair {
    pub id: String,
    pub dir: PathBuf,
    pub student: Program,
    pub fixed: Program,
    pub suite: TestSuite,
    pub failed_test: TestCase,
    pub gold: LineSet,
}

pub const STUDENT_FILE: &str = "student.ml";
pub const FIXED_FILE: &str = "fixed.ml";
pub const TESTS_FILE: &str = "tests.json";
pub const FAILED_TEST_FILE: &str = "failed_test.txt";
pub const GOLD_FILE: &str = "gold_breakpoints.json";

fn read(dir: &Path, id: &str, name: &str) -> Result<String, CorpusError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(CorpusError::new(id, format!("{name} not found")));
    }
    std::fs::read_to_string(&path).map_err(|e| CorpusError::new(id, format!("{name}: {e}")))
}

pub fn load_pair(dir: &Path) -> Result<CorpusPair, CorpusError> {
    let id = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let program = |name: &str| -> Result<Program, CorpusError> {
        parse(&read(dir, &id, name)?).map_err(|e| CorpusError::new(&id, format!("{name}: {e}")))
    };
    let student = program(STUDENT_FILE)?;
    let fixed = program(FIXED_FILE)?;
    let suite = TestSuite::from_json(&read(dir, &id, TESTS_FILE)?)
        .map_err(|e| CorpusError::new(&id, format!("{TESTS_FILE}: {e}")))?;
    let failed_id = read(dir, &id, FAILED_TEST_FILE)?.trim().to_string();
    let failed_test = suite
        .test(&failed_id)
        .cloned()
        .ok_or_else(|| CorpusError::new(&id, format!("failed test '{failed_id}' is not in {TESTS_FILE}")))?;
    let gold: GoldFile = serde_json::from_str(&read(dir, &id, GOLD_FILE)?)
        .map_err(|e| CorpusError::new(&id, format!("{GOLD_FILE}: {e}")))?;
    let gold: LineSet = gold.lines.into_iter().collect();
    for &l in &gold {
        let header = student.functions.iter().any(|f| f.header_line == l);
        if !student.is_statement_line(l) && !header {
            return Err(CorpusError::new(
                &id,
                format!("gold line {l} is not a statement or function header of {STUDENT_FILE}"),
            ));
        }
    }
    Ok(CorpusPair {
        id,
        dir: dir.to_path_buf(),
        student,
        fixed,
        suite,
        failed_test,
        gold,
    })
}

/// Every subdirectory of `root`, in name order.
pub fn load_corpus(root: &Path) -> Result<Vec<CorpusPair>, CorpusError> {
    let root_name = root.display().to_string();
    let entries = std::fs::read_dir(root).map_err(|e| CorpusError::new(&root_name, e.to_string()))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CorpusError::new(&root_name, "no pairs found"));
    }
    dirs.iter().map(|d| load_pair(d)).collect()
}

pub fn plan_for_pair(pair: &CorpusPair, cfg: &RecommenderConfig) -> Result<BreakpointPlan, CorpusError> {
    recommend(&pair.student, &pair.fixed, &pair.failed_test, &pair.id, cfg)
        .map_err(|e| CorpusError::new(&pair.id, e.to_string()))
}

pub fn eval_pairs(pairs: &[CorpusPair], cfg: &RecommenderConfig) -> Result<BreakpointReport, CorpusError> {
    let rows = pairs
        .iter()
        .map(|pair| {
            let predicted = plan_for_pair(pair, cfg)?.lines();
            Ok(PairRow {
                pair_id: pair.id.clone(),
                metrics: set_metrics(&predicted, &pair.gold),
                predicted: predicted.into_iter().collect(),
                gold: pair.gold.iter().copied().collect(),
            })
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;
    Ok(BreakpointReport::from_rows(rows))
}

pub fn eval_breakpoints(corpus: &Path, cfg: &RecommenderConfig) -> Result<BreakpointReport, CorpusError> {
    eval_pairs(&load_corpus(corpus)?, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictPair {
    pub predicted_pass: bool,
    pub actual_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub rows: usize,
    pub metrics: Metrics,
}

pub fn eval_classifier(rows: &[VerdictPair]) -> ClassifierReport {
    let pairs: Vec<(bool, bool)> = rows.iter().map(|r| (r.predicted_pass, r.actual_pass)).collect();
    ClassifierReport {
        rows: rows.len(),
        metrics: classifier_metrics(&pairs),
    }
}
