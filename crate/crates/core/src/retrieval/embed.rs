use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::tokenize;
use crate::providers::{post_json, ProviderError};

pub const DEFAULT_DIMENSION: usize = 256;
/// Allowed deviation of a stored embedding's L2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-9;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("cannot embed text with no tokens")]
    EmptyText,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    pub vector: Vec<f64>,
}

impl Embedding {
    pub fn new(vector: Vec<f64>) -> Self {
        Embedding { vector }
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }

    pub fn norm(&self) -> f64 {
        self.vector.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Scales to unit length; the zero vector is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for x in &mut self.vector {
                *x /= n;
            }
        }
        self
    }
}

/// Dot product of two normalized embeddings, clamped to [-1, 1].
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, EmbedError> {
    if a.dimension() != b.dimension() {
        return Err(EmbedError::DimensionMismatch(a.dimension(), b.dimension()));
    }
    let dot: f64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Token stream of `text`: MiniLang lexemes when it lexes, whitespace
/// words otherwise.
fn tokens(text: &str) -> Vec<String> {
    match tokenize(text) {
        Ok(ts) => ts.into_iter().map(|t| t.lexeme).collect(),
        Err(_) => text.split_whitespace().map(str::to_string).collect(),
    }
}

/// Feature-hashed unigram and bigram term frequencies, L2-normalized.
pub fn embed(text: &str, dimension: usize) -> Result<Embedding, EmbedError> {
    let toks = tokens(text);
    if toks.is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let mut v = vec![0.0f64; dimension];
    let mut add = |feature: String| {
        v[(fnv1a(feature.as_bytes()) % dimension as u64) as usize] += 1.0;
    };
    for t in &toks {
        add(format!("u\u{1f}{t}"));
    }
    for w in toks.windows(2) {
        add(format!("b\u{1f}{}\u{1f}{}", w[0], w[1]));
    }
    Ok(Embedding::new(v).normalized())
}

pub trait Embedder: Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Embedding, EmbedError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefaultEmbedder {
    pub dimension: usize,
}

impl Default for DefaultEmbedder {
    fn default() -> Self {
        DefaultEmbedder {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

impl Embedder for DefaultEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        embed(text, self.dimension)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: [&'a str; 1],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// External embedder over HTTP: `{texts}` in, `{vectors}` out.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub url: String,
    pub token: Option<String>,
    pub dimension: usize,
    pub timeout: Duration,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, token: Option<String>, dimension: usize) -> Self {
        HttpEmbedder {
            url: url.into(),
            token,
            dimension,
            timeout: Duration::from_secs(30),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let resp: EmbedResponse = post_json(
            &self.url,
            self.token.as_deref(),
            self.timeout,
            &EmbedRequest { texts: [text] },
        )?;
        let v = resp.vectors.into_iter().next().ok_or_else(|| {
            ProviderError::Protocol("embedding response has no vectors".into())
        })?;
        if v.len() != self.dimension {
            return Err(EmbedError::DimensionMismatch(v.len(), self.dimension));
        }
        Ok(Embedding::new(v).normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{fix_source, STU};

    const FACT: &str = "fun fact(n) {\n  if (n <= 1) {\n    return 1;\n  }\n  return n * fact(n - 1);\n}\n";

    fn e(t: &str) -> Embedding {
        embed(t, DEFAULT_DIMENSION).unwrap()
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn deterministic_and_normalized() {
        assert_eq!(e(STU), e(STU));
        assert!(e(STU).is_normalized());
        assert!((cosine(&e(STU), &e(STU)).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn fix_is_closer_than_unrelated_program() {
        let to_fix = cosine(&e(STU), &e(&fix_source())).unwrap();
        let to_fact = cosine(&e(STU), &e(FACT)).unwrap();
        assert!(to_fix > to_fact, "{to_fix} vs {to_fact}");
        assert!(to_fix > 0.8);
        assert!(to_fact < 0.8);
    }

    #[test]
    fn matches_independent_count_model() {
        // Two tokens, one bigram: three features with count 1 each, unless
        // buckets collide.
        let v = e("a b");
        let nonzero: Vec<f64> = v.vector.iter().copied().filter(|x| *x != 0.0).collect();
        let total: f64 = nonzero.iter().map(|x| x * x).sum();
        assert!((total - 1.0).abs() < 1e-12);
        if nonzero.len() == 3 {
            for x in nonzero {
                assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(embed("  // only a comment\n", 8), Err(EmbedError::EmptyText));
        assert_eq!(embed("", 8), Err(EmbedError::EmptyText));
        let a = Embedding::new(vec![1.0, 0.0]);
        let b = Embedding::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(cosine(&a, &b), Err(EmbedError::DimensionMismatch(2, 3)));
    }

    #[test]
    fn cosine_basics() {
        let e1 = Embedding::new(vec![1.0, 0.0]);
        let e2 = Embedding::new(vec![0.0, 1.0]);
        let neg = Embedding::new(vec![-1.0, 0.0]);
        assert_eq!(cosine(&e1, &e1).unwrap(), 1.0);
        assert_eq!(cosine(&e1, &e2).unwrap(), 0.0);
        assert_eq!(cosine(&e1, &neg).unwrap(), -1.0);
    }
}
