//! Shared blocking HTTP plumbing for the OpenAI-compatible providers.

use std::time::Duration;

use thiserror::Error;

/// Environment variable holding the API key for remote providers.
pub const API_KEY_ENV: &str = "SERVICE_RAG_API_KEY";
/// Environment variable overriding the configured endpoint base URL.
pub const BASE_URL_ENV: &str = "SERVICE_RAG_BASE_URL";

const BACKOFF_BASE_MS: u64 = 500;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("transport failure calling {url} after {attempts} attempt(s): {source}")]
    Transport {
        url: String,
        attempts: u32,
        #[source]
        source: Box<ureq::Error>,
    },
    #[error("HTTP {status} from {url}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("invalid JSON from {url}: {message}")]
    BadBody { url: String, message: String },
}

pub fn build_agent(timeout: Duration) -> ureq::Agent {
    let cfg = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build();
    ureq::Agent::new_with_config(cfg)
}

/// Resolve the effective base URL: the `SERVICE_RAG_BASE_URL` environment
/// variable wins over the configured endpoint.
pub fn effective_base_url(configured: Option<&str>) -> Option<String> {
    match std::env::var(BASE_URL_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(v),
        _ => configured.map(|s| s.to_string()),
    }
}

pub fn api_key() -> Option<String> {
    std::env::var(API_KEY_ENV).ok().filter(|v| !v.is_empty())
}

/// POST a JSON body and parse a JSON response. Retries transport failures
/// and HTTP 5xx with exponential backoff (base 500 ms, factor 2); other
/// statuses fail immediately.
pub fn post_json(
    agent: &ureq::Agent,
    url: &str,
    api_key: &str,
    body: &serde_json::Value,
    max_retries: u32,
) -> Result<serde_json::Value, HttpError> {
    let mut attempt = 0u32;
    loop {
        let result = agent
            .post(url)
            .header("authorization", &format!("Bearer {api_key}"))
            .send_json(body);
        let retriable = match result {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                if (200..300).contains(&status) {
                    return resp.body_mut().read_json().map_err(|e| HttpError::BadBody {
                        url: url.to_string(),
                        message: e.to_string(),
                    });
                }
                let text = resp.body_mut().read_to_string().unwrap_or_default();
                let err = HttpError::Status {
                    url: url.to_string(),
                    status,
                    body: snippet(&text),
                };
                if status >= 500 {
                    Ok(err)
                } else {
                    return Err(err);
                }
            }
            Err(e) => Err(e),
        };
        let last_error = match retriable {
            Ok(status_err) => status_err,
            Err(transport) => HttpError::Transport {
                url: url.to_string(),
                attempts: attempt + 1,
                source: Box::new(transport),
            },
        };
        if attempt >= max_retries {
            return Err(last_error);
        }
        let delay = BACKOFF_BASE_MS << attempt;
        log::warn!("{last_error}; retrying in {delay} ms");
        std::thread::sleep(Duration::from_millis(delay));
        attempt += 1;
    }
}

fn snippet(s: &str) -> String {
    let trimmed = s.trim();
    if trimmed.len() <= 200 {
        trimmed.to_string()
    } else {
        let mut end = 200;
        while !trimmed.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &trimmed[..end])
    }
}
