use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ProviderError, ProviderRequest, ProviderResponse, RequestHandler};

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// POSTs `body` as JSON to `url` with an optional bearer token and decodes
/// the JSON reply.
pub fn post_json<B: Serialize, R: DeserializeOwned>(
    url: &str,
    token: Option<&str>,
    timeout: Duration,
    body: &B,
) -> Result<R, ProviderError> {
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let mut req = agent.post(url);
    if let Some(t) = token {
        req = req.set("Authorization", &format!("Bearer {t}"));
    }
    let body = serde_json::to_value(body).map_err(|e| ProviderError::Protocol(e.to_string()))?;
    match req.send_json(body) {
        Ok(resp) => resp
            .into_json::<R>()
            .map_err(|e| ProviderError::Protocol(format!("undecodable response: {e}"))),
        Err(ureq::Error::Status(code, resp)) => Err(ProviderError::Transport(format!(
            "HTTP {code} from {url}: {}",
            resp.into_string().unwrap_or_default().trim()
        ))),
        Err(e) => Err(ProviderError::Transport(e.to_string())),
    }
}

/// Generic HTTP provider speaking the `{mode, student_source, failed_test,
/// n?}` protocol.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    pub url: String,
    pub token: Option<String>,
    pub timeout: Duration,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, token: Option<String>) -> Self {
        HttpProvider {
            url: url.into(),
            token,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl RequestHandler for HttpProvider {
    fn handle(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        post_json(&self.url, self.token.as_deref(), self.timeout, req)
    }
}
