use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::embed::{cosine, Embedding, DEFAULT_DIMENSION};
use super::RetrievalConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub entry_id: String,
    pub task_id: String,
    pub source_text: String,
    pub embedding: Embedding,
    pub passing_test_ids: BTreeSet<String>,
    /// True iff `passing_test_ids` came from actual execution.
    pub validated: bool,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate entry id '{0}'")]
    DuplicateId(String),
    #[error("embedding of '{entry_id}' is not normalized (norm {norm})")]
    Unnormalized { entry_id: String, norm: f64 },
    #[error("embedding of '{entry_id}' has dimension {found}, store uses {expected}")]
    DimensionMismatch {
        entry_id: String,
        expected: usize,
        found: usize,
    },
    #[error("corrupt store record at line {line}: {reason}")]
    CorruptStore { line: usize, reason: String },
    #[error("store file {path} not found")]
    NotFound { path: String },
    #[error("store I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// A missing file loads as an empty store.
    Create,
    /// A missing file is an error.
    Strict,
}

#[derive(Debug, Clone, Copy)]
pub struct Hit<'a> {
    pub entry: &'a StoreEntry,
    pub similarity: f64,
}

/// In-memory solution store persisted as newline-delimited JSON, one
/// entry per line in insertion order. Writers need `&mut`, so a store has
/// a single writer at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    dimension: usize,
    entries: Vec<StoreEntry>,
}

impl Default for Store {
    fn default() -> Self {
        Store::new(DEFAULT_DIMENSION)
    }
}

impl Store {
    pub fn new(dimension: usize) -> Self {
        Store {
            dimension,
            entries: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, entry_id: &str) -> Option<&StoreEntry> {
        self.entries.iter().find(|e| e.entry_id == entry_id)
    }

    fn check(&self, e: &StoreEntry) -> Result<(), StoreError> {
        if e.embedding.dimension() != self.dimension {
            return Err(StoreError::DimensionMismatch {
                entry_id: e.entry_id.clone(),
                expected: self.dimension,
                found: e.embedding.dimension(),
            });
        }
        if !e.embedding.is_normalized() {
            return Err(StoreError::Unnormalized {
                entry_id: e.entry_id.clone(),
                norm: e.embedding.norm(),
            });
        }
        if self.get(&e.entry_id).is_some() {
            return Err(StoreError::DuplicateId(e.entry_id.clone()));
        }
        Ok(())
    }

    pub fn put(&mut self, e: StoreEntry) -> Result<(), StoreError> {
        self.check(&e)?;
        self.entries.push(e);
        Ok(())
    }

    /// An id not yet used in the store, of the form `<prefix>-<n>`.
    pub fn fresh_id(&self, prefix: &str) -> String {
        let used: HashSet<&str> = self.entries.iter().map(|e| e.entry_id.as_str()).collect();
        (self.entries.len() + 1..)
            .map(|n| format!("{prefix}-{n:04}"))
            .find(|id| !used.contains(id.as_str()))
            .expect("unbounded range")
    }

    /// Best validated entry for the task that passes `failed_test_id`, if
    /// its similarity reaches the threshold. Ties go to the smallest id.
    pub fn query(
        &self,
        task_id: &str,
        failed_test_id: &str,
        q: &Embedding,
        cfg: &RetrievalConfig,
    ) -> Option<Hit<'_>> {
        let mut best: Option<Hit<'_>> = None;
        for e in &self.entries {
            if e.task_id != task_id || !e.validated || !e.passing_test_ids.contains(failed_test_id)
            {
                continue;
            }
            let Ok(sim) = cosine(&e.embedding, q) else {
                continue;
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    sim > b.similarity || (sim == b.similarity && e.entry_id < b.entry.entry_id)
                }
            };
            if better {
                best = Some(Hit {
                    entry: e,
                    similarity: sim,
                });
            }
        }
        best.filter(|h| h.similarity >= cfg.similarity_threshold)
    }

    pub fn counts_by_task(&self) -> BTreeMap<&str, (usize, usize)> {
        let mut m: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for e in &self.entries {
            let c = m.entry(e.task_id.as_str()).or_default();
            c.0 += 1;
            if e.validated {
                c.1 += 1;
            }
        }
        m
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = serde_json::to_string(e).expect("entry serializes");
            writeln!(out, "{line}").expect("write to string");
        }
        out
    }

    /// Parses NDJSON; the dimension comes from the first record, or from
    /// `dimension` for an empty document.
    pub fn from_ndjson(text: &str, dimension: usize) -> Result<Self, StoreError> {
        let mut store: Option<Store> = None;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let lineno = i + 1;
            let corrupt = |reason: String| StoreError::CorruptStore {
                line: lineno,
                reason,
            };
            if !line.ends_with('\n') {
                return Err(corrupt("record is not newline-terminated".into()));
            }
            let e: StoreEntry =
                serde_json::from_str(line.trim_end()).map_err(|err| corrupt(err.to_string()))?;
            let s = store.get_or_insert_with(|| Store::new(e.embedding.dimension()));
            s.put(e).map_err(|err| corrupt(err.to_string()))?;
        }
        Ok(store.unwrap_or_else(|| Store::new(dimension)))
    }

    pub fn load(path: &Path, mode: LoadMode, dimension: usize) -> Result<Self, StoreError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::from_ndjson(&text, dimension),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => match mode {
                LoadMode::Create => Ok(Store::new(dimension)),
                LoadMode::Strict => Err(StoreError::NotFound {
                    path: path.display().to_string(),
                }),
            },
            Err(source) => Err(StoreError::Io {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    /// Writes through a temporary sibling file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let io = |source| StoreError::Io {
            path: path.display().to_string(),
            source,
        };
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_ndjson()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }
}
