use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, ChatResponse, LlmError};

/// Connection settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL such as `https://host/v1`; `/chat/completions` is appended
    /// unless already present.
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Total attempts per request, including the first.
    pub max_attempts: usize,
    /// Delay before the first retry; doubled for each further retry.
    pub base_delay: Duration,
    pub max_in_flight: usize,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireContent,
}

#[derive(Deserialize)]
struct WireContent {
    content: Option<String>,
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Done(Result<String, LlmError>),
    Retry(LlmError, Option<Duration>),
}

/// Blocking client with bounded exponential-backoff retries on network
/// errors, HTTP 429 and 5xx.
pub struct HttpBackend {
    id: String,
    config: HttpConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        if config.max_attempts == 0 {
            return Err(LlmError::InvalidRequest("max_attempts must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Network(e.to_string()))?;
        Ok(HttpBackend {
            id: format!("http:{}", config.endpoint),
            gate: Gate::new(config.max_in_flight),
            config,
            client,
        })
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Attempt {
        let mut builder = self.client.post(self.config.url()).json(body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(LlmError::Network(e.to_string()), None),
        };
        let status = response.status();
        let retry_after = response
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match response.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(LlmError::Network(e.to_string()), None),
        };
        if status.as_u16() == 429 {
            return Attempt::Retry(LlmError::RateLimited { attempts: 0 }, retry_after);
        }
        if !status.is_success() {
            let err = LlmError::Status {
                code: status.as_u16(),
                body: text.chars().take(500).collect(),
            };
            return if status.is_server_error() {
                Attempt::Retry(err, retry_after)
            } else {
                Attempt::Done(Err(err))
            };
        }
        Attempt::Done(parse_response(&text))
    }
}

fn parse_response(text: &str) -> Result<String, LlmError> {
    let wire: WireResponse =
        serde_json::from_str(text).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    wire.choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| LlmError::MalformedResponse("no message content in first choice".into()))
}

const MAX_RETRY_AFTER: Duration = Duration::from_secs(30);

impl ChatBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let mut messages = Vec::with_capacity(2);
        if !request.system_text().is_empty() {
            messages.push(WireMessage {
                role: "system",
                content: request.system_text(),
            });
        }
        messages.push(WireMessage {
            role: "user",
            content: request.user_text(),
        });
        let body = WireRequest {
            model: request.model_id(),
            messages,
            temperature: request.temperature(),
            max_tokens: request.max_tokens(),
        };

        let _permit = self.gate.acquire();
        let start = Instant::now();
        let mut delay = self.config.base_delay;
        let mut last = None;
        for attempt in 1..=self.config.max_attempts {
            match self.attempt(&body) {
                Attempt::Done(result) => {
                    return result.map(|text| ChatResponse {
                        text,
                        backend_id: self.id.clone(),
                        latency: start.elapsed(),
                    })
                }
                Attempt::Retry(err, hint) => {
                    log::warn!("attempt {attempt} for model {} failed: {err}", request.model_id());
                    last = Some(err);
                    if attempt < self.config.max_attempts {
                        thread::sleep(hint.map_or(delay, |h| h.min(MAX_RETRY_AFTER).max(delay)));
                        delay *= 2;
                    }
                }
            }
        }
        Err(match last {
            Some(LlmError::RateLimited { .. }) => LlmError::RateLimited {
                attempts: self.config.max_attempts,
            },
            Some(e) => e,
            None => LlmError::Network("no attempt made".into()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_joining() {
        assert_eq!(HttpConfig::new("http://h/v1").url(), "http://h/v1/chat/completions");
        assert_eq!(HttpConfig::new("http://h/v1/").url(), "http://h/v1/chat/completions");
        assert_eq!(
            HttpConfig::new("http://h/v1/chat/completions").url(),
            "http://h/v1/chat/completions"
        );
    }

    #[test]
    fn response_parsing() {
        let ok = r#"{"choices":[{"index":0,"message":{"role":"assistant","content":"phone, roommate"}}]}"#;
        assert_eq!(parse_response(ok).unwrap(), "phone, roommate");
        for bad in ["", "{}", r#"{"choices":[]}"#, r#"{"choices":[{"message":{"content":null}}]}"#] {
            assert!(matches!(parse_response(bad), Err(LlmError::MalformedResponse(_))), "{bad}");
        }
    }
}
