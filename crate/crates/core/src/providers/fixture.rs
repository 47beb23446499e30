use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use super::{ProviderError, ProviderRequest, ProviderResponse, RequestHandler};

/// SHA-256 hex of the compact JSON encoding of a request.
pub fn request_digest(req: &ProviderRequest) -> String {
    let body = serde_json::to_string(req).expect("request serializes");
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Replays responses from a JSON map of request digest to response.
#[derive(Debug, Default)]
pub struct FixtureProvider {
    responses: BTreeMap<String, ProviderResponse>,
    calls: AtomicUsize,
}

impl FixtureProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, req: &ProviderRequest, resp: ProviderResponse) {
        self.responses.insert(request_digest(req), resp);
    }

    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let responses: BTreeMap<String, ProviderResponse> =
            serde_json::from_str(text).map_err(|e| ProviderError::Fixture(e.to_string()))?;
        Ok(FixtureProvider {
            responses,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.responses).expect("fixture serializes");
        s.push('\n');
        s
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl RequestHandler for FixtureProvider {
    fn handle(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let d = request_digest(req);
        self.responses
            .get(&d)
            .cloned()
            .ok_or_else(|| ProviderError::Fixture(format!("no scripted response for digest {d}")))
    }
}
