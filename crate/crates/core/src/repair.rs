//! Obtaining a fixed program: retrieve a validated solution from the store,
//! or generate candidates, screen them with a classifier and rank them by
//! similarity to the student's code. Generated candidates are later
//! executed and the passing ones uploaded to the store.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{run_suite, run_test, TestCase, TestStatus};
use crate::lang::{parse, pretty_print, Program};
use crate::providers::{ClassifierProvider, GeneratorProvider, ProviderError};
use crate::retrieval::{cosine, EmbedError, Embedder, RetrievalConfig, Store, StoreEntry, StoreError};

pub const DEFAULT_CANDIDATES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepairConfig {
    pub n_candidates: usize,
    pub retrieval: RetrievalConfig,
    /// Execute candidates when the classifier rejects all of them.
    pub fallback_execute: bool,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            n_candidates: DEFAULT_CANDIDATES,
            retrieval: RetrievalConfig::default(),
            fallback_execute: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixSource {
    Retrieved,
    Generated,
}

/// One generated candidate and how it was judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    /// Position in the generator's response.
    pub slot: usize,
    pub text: String,
    pub parsed: bool,
    pub predicted_pass: bool,
    pub similarity_to_student: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub source: FixSource,
    /// Store entry returned, for retrieved outcomes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    pub fixed_source: String,
    /// Ranked candidate ledger; empty for retrieved outcomes.
    pub candidates: Vec<CandidateRow>,
    /// Generator plus classifier calls made for this request.
    pub llm_calls: usize,
    /// Set when the fix was accepted by execution after every candidate was
    /// predicted to fail.
    #[serde(default)]
    pub accepted_by_execution: bool,
    pub failed_test: TestCase,
}

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("the student program already passes test '{0}'")]
    StudentAlreadyPasses(String),
    #[error("no candidate was predicted to pass test '{0}'")]
    AllCandidatesRejected(String),
    #[error("no generator or classifier provider is configured and the store has no match")]
    NoProviders,
    #[error("n_candidates must be at least 1")]
    InvalidConfig,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub generator: Option<&'a dyn GeneratorProvider>,
    pub classifier: Option<&'a dyn ClassifierProvider>,
    pub embedder: &'a dyn Embedder,
}

/// Stable order: predicted passes first by descending similarity, then
/// predicted failures in their original order.
pub fn rank_candidates(mut ledger: Vec<CandidateRow>) -> Vec<CandidateRow> {
    ledger.sort_by(|a, b| match (a.predicted_pass, b.predicted_pass) {
        (true, true) => b.similarity_to_student.total_cmp(&a.similarity_to_student),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => Ordering::Equal,
    });
    ledger
}

fn similarity(embedder: &dyn Embedder, text: &str, student: &crate::retrieval::Embedding) -> f64 {
    match embedder.embed(text) {
        Ok(e) => cosine(&e, student).unwrap_or(0.0),
        Err(_) => 0.0,
    }
}

pub fn repair(
    student: &Program,
    failed_test: &TestCase,
    task_id: &str,
    providers: Providers<'_>,
    store: &Store,
    cfg: &RepairConfig,
) -> Result<RepairOutcome, RepairError> {
    if cfg.n_candidates == 0 {
        return Err(RepairError::InvalidConfig);
    }
    if run_test(student, failed_test).passed() {
        return Err(RepairError::StudentAlreadyPasses(failed_test.id.clone()));
    }
    let student_text = pretty_print(student);
    let student_emb = providers.embedder.embed(&student_text)?;

    if let Some(hit) = store.query(task_id, &failed_test.id, &student_emb, &cfg.retrieval) {
        log::info!(
            "retrieved {} (similarity {:.4})",
            hit.entry.entry_id,
            hit.similarity
        );
        return Ok(RepairOutcome {
            source: FixSource::Retrieved,
            entry_id: Some(hit.entry.entry_id.clone()),
            similarity: Some(hit.similarity),
            fixed_source: hit.entry.source_text.clone(),
            candidates: Vec::new(),
            llm_calls: 0,
            accepted_by_execution: false,
            failed_test: failed_test.clone(),
        });
    }

    let (Some(generator), Some(classifier)) = (providers.generator, providers.classifier) else {
        return Err(RepairError::NoProviders);
    };
    let texts = generator.generate(&student_text, failed_test, cfg.n_candidates)?;
    if texts.len() != cfg.n_candidates {
        return Err(ProviderError::Protocol(format!(
            "expected {} candidates, got {}",
            cfg.n_candidates,
            texts.len()
        ))
        .into());
    }
    let mut llm_calls = 1;

    // Parsed candidates are canonicalized; the classifier sees canonical
    // text. Calls run concurrently and land in their slot.
    let parsed: Vec<Option<Program>> = texts.iter().map(|t| parse(t).ok()).collect();
    let predictions: Vec<Option<Result<bool, ProviderError>>> = thread::scope(|s| {
        let handles: Vec<_> = parsed
            .iter()
            .map(|p| {
                p.as_ref().map(|p| {
                    let text = pretty_print(p);
                    s.spawn(move || classifier.predict_pass(&text, failed_test))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.map(|h| h.join().expect("classifier thread panicked")))
            .collect()
    });

    let mut ledger = Vec::with_capacity(texts.len());
    for (slot, ((raw, prog), pred)) in texts.iter().zip(&parsed).zip(predictions).enumerate() {
        let text = prog.as_ref().map_or_else(|| raw.clone(), pretty_print);
        let (predicted_pass, classifier_error) = match pred {
            None => (false, None),
            Some(r) => {
                llm_calls += 1;
                match r {
                    Ok(b) => (b, None),
                    Err(e) => {
                        log::warn!("classifier failed on candidate {slot}: {e}");
                        (false, Some(e.to_string()))
                    }
                }
            }
        };
        ledger.push(CandidateRow {
            slot,
            similarity_to_student: similarity(providers.embedder, &text, &student_emb),
            text,
            parsed: prog.is_some(),
            predicted_pass,
            classifier_error,
        });
    }
    let ledger = rank_candidates(ledger);

    let chosen = match ledger.first().filter(|r| r.predicted_pass) {
        Some(r) => Some((r.text.clone(), false)),
        None if cfg.fallback_execute => {
            let mut by_slot: Vec<&CandidateRow> = ledger.iter().collect();
            by_slot.sort_by_key(|r| r.slot);
            by_slot
                .into_iter()
                .find(|r| parsed[r.slot].as_ref().is_some_and(|p| run_test(p, failed_test).passed()))
                .map(|r| (r.text.clone(), true))
        }
        None => None,
    };
    let Some((fixed_source, accepted_by_execution)) = chosen else {
        return Err(RepairError::AllCandidatesRejected(failed_test.id.clone()));
    };
    Ok(RepairOutcome {
        source: FixSource::Generated,
        entry_id: None,
        similarity: None,
        fixed_source,
        candidates: ledger,
        llm_calls,
        accepted_by_execution,
        failed_test: failed_test.clone(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadReport {
    pub executed: usize,
    pub uploaded: usize,
    pub classifier_errors: usize,
}

/// Test ids a program passes, by actual execution.
pub fn passing_tests(p: &Program, suite: &[TestCase]) -> BTreeSet<String> {
    run_suite(p, suite)
        .into_iter()
        .filter(|v| v.status == TestStatus::Pass)
        .map(|v| v.test_id)
        .collect()
}

/// Executes every generated candidate against the full suite and stores
/// those that pass the failed test as validated entries. A candidate whose
/// text is already stored for the task is not stored twice.
pub fn validate_and_upload(
    outcome: &RepairOutcome,
    suite: &[TestCase],
    store: &mut Store,
    task_id: &str,
    embedder: &dyn Embedder,
) -> Result<UploadReport, StoreError> {
    let mut report = UploadReport::default();
    if outcome.source == FixSource::Retrieved {
        return Ok(report);
    }
    let mut rows: Vec<&CandidateRow> = outcome.candidates.iter().collect();
    rows.sort_by_key(|r| r.slot);
    for row in rows {
        report.executed += 1;
        let Ok(prog) = parse(&row.text) else {
            if row.predicted_pass {
                report.classifier_errors += 1;
            }
            continue;
        };
        let passing = passing_tests(&prog, suite);
        let actual = passing.contains(&outcome.failed_test.id);
        if actual != row.predicted_pass {
            report.classifier_errors += 1;
        }
        if !actual {
            continue;
        }
        let text = pretty_print(&prog);
        if store
            .entries()
            .iter()
            .any(|e| e.task_id == task_id && e.source_text == text)
        {
            continue;
        }
        let Ok(embedding) = embedder.embed(&text) else {
            continue;
        };
        store.put(StoreEntry {
            entry_id: store.fresh_id(task_id),
            task_id: task_id.to_string(),
            source_text: text,
            embedding,
            passing_test_ids: passing,
            validated: true,
        })?;
        report.uploaded += 1;
    }
    Ok(report)
}
