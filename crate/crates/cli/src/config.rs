use std::path::{Path, PathBuf};

use bpa_core::heuristics::HeuristicConfig;
use bpa_core::recommend::RecommenderConfig;
use bpa_core::repair::RepairConfig;
use bpa_core::retrieval::RetrievalConfig;
use serde::Deserialize;

use crate::args::Format;
use crate::error::CliError;

pub const DEFAULT_CORPUS: &str = "corpus";

/// Configuration file document. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub store_path: Option<PathBuf>,
    pub corpus_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub provider_url: Option<String>,
    pub provider_token: Option<String>,
    pub embedder_url: Option<String>,
    pub max_breakpoints: Option<usize>,
    pub h1_include_exit: Option<bool>,
    pub n_candidates: Option<usize>,
    pub similarity_threshold: Option<f64>,
    pub dimension: Option<usize>,
    pub fallback_execute: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// Provider endpoints taken from the environment.
#[derive(Debug, Clone, Default)]
pub struct EnvVars {
    pub provider_url: Option<String>,
    pub provider_token: Option<String>,
    pub embedder_url: Option<String>,
}

impl EnvVars {
    pub fn from_process() -> Self {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        EnvVars {
            provider_url: get("BPA_PROVIDER_URL"),
            provider_token: get("BPA_PROVIDER_TOKEN"),
            embedder_url: get("BPA_EMBEDDER_URL"),
        }
    }
}

/// Effective settings: defaults, then the config file, then the
/// environment, then flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub store_path: Option<PathBuf>,
    pub corpus_path: PathBuf,
    pub format: Format,
    pub provider_url: Option<String>,
    pub provider_token: Option<String>,
    pub embedder_url: Option<String>,
    pub recommender: RecommenderConfig,
    pub repair: RepairConfig,
}

impl Settings {
    pub fn resolve(file: FileConfig, env: &EnvVars, store_flag: Option<PathBuf>) -> Result<Self, CliError> {
        let mut recommender = RecommenderConfig::default();
        if let Some(n) = file.max_breakpoints {
            recommender.max_breakpoints = n;
        }
        if let Some(b) = file.h1_include_exit {
            recommender.heuristics = HeuristicConfig { h1_include_exit: b };
        }
        let defaults = RetrievalConfig::default();
        let retrieval = RetrievalConfig {
            similarity_threshold: file.similarity_threshold.unwrap_or(defaults.similarity_threshold),
            dimension: file.dimension.unwrap_or(defaults.dimension),
        };
        retrieval.validate().map_err(CliError::config)?;
        let repair = RepairConfig {
            n_candidates: file.n_candidates.unwrap_or(RepairConfig::default().n_candidates),
            retrieval,
            fallback_execute: file.fallback_execute.unwrap_or(false),
        };
        if repair.n_candidates == 0 {
            return Err(CliError::config("n_candidates must be at least 1"));
        }
        Ok(Settings {
            store_path: store_flag.or(file.store_path),
            corpus_path: file.corpus_path.unwrap_or_else(|| PathBuf::from(DEFAULT_CORPUS)),
            format: file.format.unwrap_or(Format::Json),
            provider_url: env.provider_url.clone().or(file.provider_url),
            provider_token: env.provider_token.clone().or(file.provider_token),
            embedder_url: env.embedder_url.clone().or(file.embedder_url),
            recommender,
            repair,
        })
    }

    pub fn apply_recommender_flags(&mut self, max: Option<usize>, h1: Option<bool>) {
        if let Some(n) = max {
            self.recommender.max_breakpoints = n;
        }
        if let Some(b) = h1 {
            self.recommender.heuristics.h1_include_exit = b;
        }
    }

    pub fn require_store(&self) -> Result<&Path, CliError> {
        self.store_path
            .as_deref()
            .ok_or_else(|| CliError::store("no store path given (use --store or store_path in --config)"))
    }
}
