use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{ClassifierProvider, GeneratorProvider, ProviderError, TextProvider};
use crate::exec::{run_test, TestCase};
use crate::lang::parse;

/// Returns the same scripted candidate list on every call (truncated or
/// rejected when `n` does not match).
#[derive(Debug, Default)]
pub struct ScriptedGenerator {
    pub candidates: Vec<String>,
    calls: AtomicUsize,
}

impl ScriptedGenerator {
    pub fn new<S: Into<String>>(candidates: impl IntoIterator<Item = S>) -> Self {
        ScriptedGenerator {
            candidates: candidates.into_iter().map(Into::into).collect(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GeneratorProvider for ScriptedGenerator {
    fn generate(&self, _: &str, _: &TestCase, n: usize) -> Result<Vec<String>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self.candidates.len() < n {
            return Err(ProviderError::Scripted(format!(
                "only {} scripted candidates for n = {n}",
                self.candidates.len()
            )));
        }
        Ok(self.candidates[..n].to_vec())
    }
}

/// Answers from a table keyed by candidate text, with a default for
/// unlisted candidates. `None` answers fail the call.
#[derive(Debug, Default)]
pub struct ScriptedClassifier {
    table: HashMap<String, Option<bool>>,
    default: Option<bool>,
    calls: AtomicUsize,
}

impl ScriptedClassifier {
    pub fn always(answer: bool) -> Self {
        ScriptedClassifier {
            default: Some(answer),
            ..Default::default()
        }
    }

    pub fn failing() -> Self {
        Self::default()
    }

    pub fn with(mut self, candidate: impl Into<String>, answer: Option<bool>) -> Self {
        self.table.insert(candidate.into(), answer);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ClassifierProvider for ScriptedClassifier {
    fn predict_pass(&self, candidate: &str, _: &TestCase) -> Result<bool, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.table
            .get(candidate)
            .copied()
            .unwrap_or(self.default)
            .ok_or_else(|| ProviderError::Scripted("classifier scripted to fail".into()))
    }
}

/// Ground-truth classifier: parses and runs the candidate.
#[derive(Debug, Default)]
pub struct ExecutionClassifier {
    calls: AtomicUsize,
}

impl ExecutionClassifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ClassifierProvider for ExecutionClassifier {
    fn predict_pass(&self, candidate: &str, test: &TestCase) -> Result<bool, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(parse(candidate).is_ok_and(|p| run_test(&p, test).passed()))
    }
}

/// Text provider returning a fixed string, or failing when `None`.
#[derive(Debug, Default)]
pub struct ScriptedText {
    pub text: Option<String>,
    calls: AtomicUsize,
}

impl ScriptedText {
    pub fn new(text: Option<&str>) -> Self {
        ScriptedText {
            text: text.map(str::to_string),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl TextProvider for ScriptedText {
    fn explain(&self, _: &str, _: &TestCase, _: u32, _: &str) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.text
            .clone()
            .ok_or_else(|| ProviderError::Scripted("text provider scripted to fail".into()))
    }
}
