//! Provider abstraction for candidate generation, pass/fail classification
//! and explanation text, with HTTP, fixture-file and scripted
//! implementations.

mod fixture;
mod http;
mod mock;

pub use fixture::{request_digest, FixtureProvider};
pub use http::{post_json, HttpProvider};
pub use mock::{ExecutionClassifier, ScriptedClassifier, ScriptedGenerator, ScriptedText};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::TestCase;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider protocol error: {0}")]
    Protocol(String),
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error("scripted failure: {0}")]
    Scripted(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestMode {
    Generate,
    Classify,
    Explain,
}

/// Wire request shared by every provider kind. For `classify` requests
/// `student_source` carries the candidate being judged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub mode: RequestMode,
    pub student_source: String,
    pub failed_test: TestCase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Breakpoint line, for `explain` requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    /// The template text the provider may rephrase, for `explain` requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draft: Option<String>,
}

impl ProviderRequest {
    pub fn generate(student_source: &str, failed_test: &TestCase, n: usize) -> Self {
        ProviderRequest {
            mode: RequestMode::Generate,
            student_source: student_source.to_string(),
            failed_test: failed_test.clone(),
            n: Some(n),
            line: None,
            draft: None,
        }
    }

    pub fn classify(candidate_source: &str, failed_test: &TestCase) -> Self {
        ProviderRequest {
            mode: RequestMode::Classify,
            student_source: candidate_source.to_string(),
            failed_test: failed_test.clone(),
            n: None,
            line: None,
            draft: None,
        }
    }

    pub fn explain(student_source: &str, failed_test: &TestCase, line: u32, draft: &str) -> Self {
        ProviderRequest {
            mode: RequestMode::Explain,
            student_source: student_source.to_string(),
            failed_test: failed_test.clone(),
            n: None,
            line: Some(line),
            draft: Some(draft.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl ProviderResponse {
    fn into_candidates(self, n: usize) -> Result<Vec<String>, ProviderError> {
        let c = self
            .candidates
            .ok_or_else(|| ProviderError::Protocol("response lacks 'candidates'".into()))?;
        if c.len() != n {
            return Err(ProviderError::Protocol(format!(
                "expected {n} candidates, got {}",
                c.len()
            )));
        }
        Ok(c)
    }

    fn into_pass(self) -> Result<bool, ProviderError> {
        self.pass
            .ok_or_else(|| ProviderError::Protocol("response lacks 'pass'".into()))
    }

    fn into_text(self) -> Result<String, ProviderError> {
        self.text
            .ok_or_else(|| ProviderError::Protocol("response lacks 'text'".into()))
    }
}

pub trait GeneratorProvider: Sync {
    /// Returns exactly `n` candidate program texts.
    fn generate(
        &self,
        student_source: &str,
        failed_test: &TestCase,
        n: usize,
    ) -> Result<Vec<String>, ProviderError>;
}

pub trait ClassifierProvider: Sync {
    /// Predicts whether `candidate_source` passes `failed_test`.
    fn predict_pass(
        &self,
        candidate_source: &str,
        failed_test: &TestCase,
    ) -> Result<bool, ProviderError>;
}

pub trait TextProvider: Sync {
    fn explain(
        &self,
        student_source: &str,
        failed_test: &TestCase,
        line: u32,
        draft: &str,
    ) -> Result<String, ProviderError>;
}

/// Answers one wire request. Every request-level provider implements the
/// three role traits through this.
pub trait RequestHandler: Sync {
    fn handle(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

impl<T: RequestHandler> GeneratorProvider for T {
    fn generate(
        &self,
        student_source: &str,
        failed_test: &TestCase,
        n: usize,
    ) -> Result<Vec<String>, ProviderError> {
        self.handle(&ProviderRequest::generate(student_source, failed_test, n))?
            .into_candidates(n)
    }
}

impl<T: RequestHandler> ClassifierProvider for T {
    fn predict_pass(
        &self,
        candidate_source: &str,
        failed_test: &TestCase,
    ) -> Result<bool, ProviderError> {
        self.handle(&ProviderRequest::classify(candidate_source, failed_test))?
            .into_pass()
    }
}

impl<T: RequestHandler> TextProvider for T {
    fn explain(
        &self,
        student_source: &str,
        failed_test: &TestCase,
        line: u32,
        draft: &str,
    ) -> Result<String, ProviderError> {
        self.handle(&ProviderRequest::explain(
            student_source,
            failed_test,
            line,
            draft,
        ))?
        .into_text()
    }
}
