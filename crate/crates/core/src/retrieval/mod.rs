//! Solution store for retrieval: feature-hashed embeddings, cosine search
//! and NDJSON persistence.

mod embed;
mod store;

pub use embed::{
    cosine, embed, DefaultEmbedder, EmbedError, Embedder, Embedding, HttpEmbedder,
    DEFAULT_DIMENSION, NORM_TOLERANCE,
};
pub use store::{Hit, LoadMode, Store, StoreEntry, StoreError};

use serde::{Deserialize, Serialize};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    /// Minimum cosine similarity for a hit, inclusive.
    pub similarity_threshold: f64,
    pub dimension: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            dimension: DEFAULT_DIMENSION,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return Err(format!(
                "similarity_threshold {} is outside [0, 1]",
                self.similarity_threshold
            ));
        }
        if self.dimension == 0 {
            return Err("dimension must be positive".into());
        }
        Ok(())
    }
}
