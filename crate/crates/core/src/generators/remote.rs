//! Blocking JSON completions client.
//!
//! Wire format, request body:
//! `{"prompt": str, "n": int, "temperature": float, "top_p": float, "max_tokens": int}`
//! plus `"model": str` when one is configured. Response body:
//! `{"choices": [{"text": str}, ...]}`. The token, when configured, is sent
//! as `Authorization: Bearer <token>`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Completion, GenerationError, GenerationRequest, Generator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    /// Environment variable holding the bearer token; no auth header when unset.
    pub token_env: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_max_ms: u64,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "http://127.0.0.1:8000/v1/completions".into(),
            token_env: Some("CODEAUG_API_TOKEN".into()),
            model: None,
            timeout_secs: 120.0,
            max_retries: 5,
            backoff_initial_ms: 500,
            backoff_max_ms: 30_000,
            max_in_flight: 4,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    prompt: &'a str,
    n: usize,
    temperature: f64,
    top_p: f64,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct WireChoice {
    text: String,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Slots {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Done(Vec<String>),
    Retry { reason: String, status: Option<(u16, String)>, wait: Option<Duration> },
}

pub struct RemoteGenerator {
    config: RemoteConfig,
    token: Option<String>,
    agent: ureq::Agent,
    slots: Slots,
    retries: AtomicUsize,
    tag: String,
}

impl std::fmt::Debug for RemoteGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteGenerator").field("config", &self.config).finish_non_exhaustive()
    }
}

impl RemoteGenerator {
    /// Reads the token from the configured environment variable.
    pub fn new(config: RemoteConfig) -> Result<Self, GenerationError> {
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| GenerationError::MissingToken(var.clone()))?),
            None => None,
        };
        Ok(Self::with_token(config, token))
    }

    pub fn with_token(config: RemoteConfig, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        let tag = format!("remote:{}", config.endpoint);
        RemoteGenerator {
            slots: Slots::new(config.max_in_flight),
            config,
            token,
            agent,
            retries: AtomicUsize::new(0),
            tag,
        }
    }

    /// Total retries performed over this client's lifetime.
    pub fn retry_count(&self) -> usize {
        self.retries.load(Ordering::Relaxed)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .config
            .backoff_initial_ms
            .saturating_mul(1u64 << attempt.min(32))
            .min(self.config.backoff_max_ms);
        Duration::from_millis(ms)
    }

    fn attempt(&self, request: &GenerationRequest) -> Result<Attempt, GenerationError> {
        let body = WireRequest {
            model: self.config.model.as_deref(),
            prompt: &request.prompt,
            n: request.num_samples,
            temperature: request.temperature,
            top_p: request.top_p,
            max_tokens: request.max_new_tokens,
        };
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Retry { reason: e.to_string(), status: None, wait: None }),
        };
        let status = resp.status().as_u16();
        if (200..300).contains(&status) {
            let parsed: WireResponse = resp.body_mut().read_json().map_err(|e| GenerationError::Schema {
                problem_id: request.problem_id.clone(),
                message: e.to_string(),
            })?;
            return Ok(Attempt::Done(parsed.choices.into_iter().map(|c| c.text).collect()));
        }
        let wait = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .and_then(|s| Duration::try_from_secs_f64(s).ok());
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        if status == 429 || status >= 500 {
            return Ok(Attempt::Retry { reason: format!("HTTP {status}"), status: Some((status, text)), wait });
        }
        Err(GenerationError::Status {
            problem_id: request.problem_id.clone(),
            status,
            attempts: 1,
            body: text,
        })
    }
}

impl Generator for RemoteGenerator {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Completion>, GenerationError> {
        request.validate()?;
        let _slot = self.slots.acquire();
        let mut attempt = 0u32;
        loop {
            match self.attempt(request) {
                Ok(Attempt::Done(texts)) => {
                    if attempt > 0 {
                        log::info!("problem `{}`: succeeded after {attempt} retr{}", request.problem_id, if attempt == 1 { "y" } else { "ies" });
                    }
                    return Ok(texts
                        .into_iter()
                        .take(request.num_samples)
                        .enumerate()
                        .map(|(sample_index, text)| Completion {
                            text,
                            sample_index,
                            generator_tag: self.tag.clone(),
                        })
                        .collect());
                }
                Ok(Attempt::Retry { reason, status, wait }) => {
                    if attempt >= self.config.max_retries {
                        let problem_id = request.problem_id.clone();
                        return Err(match status {
                            Some((status, body)) => GenerationError::Status { problem_id, status, attempts: attempt + 1, body },
                            None => GenerationError::Transport { problem_id, attempts: attempt + 1, message: reason },
                        });
                    }
                    let delay = wait.map_or_else(|| self.backoff(attempt), |w| w.min(Duration::from_millis(self.config.backoff_max_ms)));
                    log::warn!(
                        "problem `{}`: {reason}; retry {} of {} in {:?}",
                        request.problem_id,
                        attempt + 1,
                        self.config.max_retries,
                        delay
                    );
                    self.retries.fetch_add(1, Ordering::Relaxed);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(GenerationError::Status { problem_id, status, body, .. }) => {
                    return Err(GenerationError::Status { problem_id, status, attempts: attempt + 1, body });
                }
                Err(e) => return Err(e),
            }
        }
    }
}
