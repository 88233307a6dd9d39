//! Model dispatch: provider adapters, retries with backoff, response
//! validation, caching, and bounded per-vendor parallelism.
//!
//! Results funnel from worker threads to a single collector; every attempted
//! (model, prompt) pair yields exactly one [`GenerationResult`], valid or
//! not, so missing-output accounting downstream stays exact.

pub mod http;
pub mod mock;

use std::collections::HashMap;
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::PromptInstance;
use crate::store::sha256_hex;

/// Default system prompt sent with every request.
pub const DEFAULT_SYSTEM_PROMPT: &str = "You are an expert in analyzing news articles for \
their social and personal impact on various demographic groups. Describe the impact in short, \
clear, and empathetic terms. If the news does not impact the group, describe why not in a \
respectful manner. Avoid generic or vague statements.";

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication failed for vendor {vendor}: {message}")]
    Auth { vendor: String, message: String },
    #[error("no provider configured for endpoint {endpoint:?}")]
    UnknownEndpoint { endpoint: String },
    #[error("worker thread panicked")]
    WorkerPanic,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport: {message}")]
    Transport { message: String, retryable: bool },
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("auth: {0}")]
    Auth(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Recorded as unsupported (None) when a provider rejects seeding.
    pub seed: Option<i64>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            temperature: 0.2,
            top_p: 1.0,
            max_tokens: 3000,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub vendor: String,
    pub model_id: String,
    /// Provider endpoint label: `mock:<profile>` or an HTTP URL.
    pub endpoint: String,
    pub access_date: NaiveDate,
    pub decoding: DecodingParams,
    pub system_prompt: String,
    /// Wire protocol name for HTTP endpoints; inferred from the vendor when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    /// Environment variable holding the API key; protocol default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
}

impl ModelSpec {
    pub fn mock(vendor: &str, model_id: &str, profile: mock::MockProfile) -> Self {
        ModelSpec {
            vendor: vendor.to_string(),
            model_id: model_id.to_string(),
            endpoint: format!("mock:{}", profile.as_str()),
            access_date: chrono::Utc::now().date_naive(),
            decoding: DecodingParams::default(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            protocol: None,
            api_key_env: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    Empty,
    ParseFailure,
    TransportError,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationResult {
    pub prompt_id: String,
    pub model_id: String,
    pub text: String,
    pub latency_ms: u64,
    /// sha256 of the response text, always computed.
    pub response_hash: String,
    pub valid: bool,
    pub invalid_reason: Option<InvalidReason>,
    pub from_cache: bool,
}

/// Validity checks applied to every response: non-empty after trimming,
/// within the length cap, and free of non-whitespace control characters.
pub fn validate_text(text: &str, max_chars: usize) -> (bool, Option<InvalidReason>) {
    if text.trim().is_empty() {
        return (false, Some(InvalidReason::Empty));
    }
    if text.chars().count() > max_chars {
        return (false, Some(InvalidReason::ParseFailure));
    }
    let has_binary = text
        .chars()
        .any(|c| c.is_control() && c != '\n' && c != '\r' && c != '\t');
    if has_binary {
        return (false, Some(InvalidReason::ParseFailure));
    }
    (true, None)
}

pub trait Provider: Send + Sync {
    fn generate(&self, spec: &ModelSpec, prompt: &PromptInstance) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Max in-flight requests per vendor.
    pub parallelism: usize,
    /// Attempts per request before the cell is marked invalid.
    pub retry_attempts: u32,
    pub backoff_base: Duration,
    pub cache_enabled: bool,
    pub max_response_chars: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            parallelism: 4,
            retry_attempts: 3,
            backoff_base: Duration::from_millis(250),
            cache_enabled: true,
            max_response_chars: 200_000,
        }
    }
}

type CacheKey = String;

pub struct Gateway {
    config: GatewayConfig,
    cache: Mutex<HashMap<CacheKey, GenerationResult>>,
    http: http::HttpProvider,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Self {
        Gateway {
            cache: Mutex::new(HashMap::new()),
            http: http::HttpProvider::new(),
            config,
        }
    }

    fn provider_for<'a>(
        &'a self,
        spec: &ModelSpec,
        mock_seed: u64,
    ) -> Result<Box<dyn Provider + 'a>, GatewayError> {
        if let Some(profile_name) = spec.endpoint.strip_prefix("mock:") {
            let profile = mock::MockProfile::parse(profile_name).ok_or_else(|| {
                GatewayError::UnknownEndpoint {
                    endpoint: spec.endpoint.clone(),
                }
            })?;
            return Ok(Box::new(mock::MockProvider::new(profile, mock_seed)));
        }
        if spec.endpoint.starts_with("http://") || spec.endpoint.starts_with("https://") {
            return Ok(Box::new(self.http.clone()));
        }
        Err(GatewayError::UnknownEndpoint {
            endpoint: spec.endpoint.clone(),
        })
    }

    fn cache_key(spec: &ModelSpec, prompt: &PromptInstance) -> CacheKey {
        format!(
            "{}\x1f{}\x1f{}\x1f{}\x1f{}\x1f{}\x1f{}",
            spec.model_id,
            prompt.prompt_id,
            spec.decoding.temperature,
            spec.decoding.top_p,
            spec.decoding.max_tokens,
            spec.decoding.seed.map(|s| s.to_string()).unwrap_or_default(),
            prompt.repeat_index,
        )
    }

    /// Generate one response, retrying retryable failures up to the budget.
    /// Transport exhaustion produces an invalid result, never an error; only
    /// authentication failures abort the run.
    pub fn generate(
        &self,
        spec: &ModelSpec,
        prompt: &PromptInstance,
        mock_seed: u64,
    ) -> Result<GenerationResult, GatewayError> {
        let provider = self.provider_for(spec, mock_seed)?;
        self.generate_with(provider.as_ref(), spec, prompt)
    }

    /// Retry/validate/cache loop against an explicit provider.
    pub fn generate_with(
        &self,
        provider: &dyn Provider,
        spec: &ModelSpec,
        prompt: &PromptInstance,
    ) -> Result<GenerationResult, GatewayError> {
        let key = Self::cache_key(spec, prompt);
        if self.config.cache_enabled {
            if let Some(mut hit) = self.cache.lock().unwrap().get(&key).cloned() {
                hit.from_cache = true;
                return Ok(hit);
            }
        }

        let started = Instant::now();
        let mut attempt = 0u32;
        let outcome = loop {
            attempt += 1;
            match provider.generate(spec, prompt) {
                Ok(text) => break Ok(text),
                Err(ProviderError::Auth(message)) => {
                    return Err(GatewayError::Auth {
                        vendor: spec.vendor.clone(),
                        message,
                    });
                }
                Err(err) if attempt < self.config.retry_attempts => {
                    let wait = match &err {
                        ProviderError::RateLimited {
                            retry_after: Some(after),
                        } => *after,
                        _ => self.config.backoff_base * 2u32.pow(attempt - 1),
                    };
                    let retryable = match &err {
                        ProviderError::Transport { retryable, .. } => *retryable,
                        ProviderError::RateLimited { .. } => true,
                        ProviderError::Protocol(_) => false,
                        ProviderError::Auth(_) => unreachable!(),
                    };
                    if !retryable {
                        break Err(err);
                    }
                    log::debug!(
                        "retrying {}/{} after {err} (attempt {attempt})",
                        spec.model_id,
                        prompt.prompt_id
                    );
                    std::thread::sleep(wait);
                }
                Err(err) => break Err(err),
            }
        };
        let latency_ms = started.elapsed().as_millis() as u64;

        let result = match outcome {
            Ok(text) => {
                let (valid, invalid_reason) = validate_text(&text, self.config.max_response_chars);
                GenerationResult {
                    prompt_id: prompt.prompt_id.clone(),
                    model_id: spec.model_id.clone(),
                    response_hash: sha256_hex(text.as_bytes()),
                    text,
                    latency_ms,
                    valid,
                    invalid_reason,
                    from_cache: false,
                }
            }
            Err(err) => {
                log::warn!(
                    "marking {}/{} invalid after {attempt} attempts: {err}",
                    spec.model_id,
                    prompt.prompt_id
                );
                GenerationResult {
                    prompt_id: prompt.prompt_id.clone(),
                    model_id: spec.model_id.clone(),
                    response_hash: sha256_hex(b""),
                    text: String::new(),
                    latency_ms,
                    valid: false,
                    invalid_reason: Some(match err {
                        ProviderError::RateLimited { .. } | ProviderError::Transport { .. } => {
                            InvalidReason::TransportError
                        }
                        _ => InvalidReason::ParseFailure,
                    }),
                    from_cache: false,
                }
            }
        };

        if self.config.cache_enabled {
            self.cache.lock().unwrap().insert(key, result.clone());
        }
        Ok(result)
    }

    /// Dispatch every (spec, prompt) pair with bounded in-flight requests per
    /// vendor. Output is sorted by (model_id, prompt_id, repeat) so the
    /// response log is deterministic regardless of scheduling.
    pub fn run_all(
        &self,
        specs: &[ModelSpec],
        prompts: &[PromptInstance],
        mock_seed: u64,
    ) -> Result<Vec<GenerationResult>, GatewayError> {
        let mut by_vendor: HashMap<&str, Vec<&ModelSpec>> = HashMap::new();
        for spec in specs {
            by_vendor.entry(spec.vendor.as_str()).or_default().push(spec);
        }

        let (tx, rx) = mpsc::channel::<Result<GenerationResult, GatewayError>>();
        let expected = specs.len() * prompts.len();

        type WorkQueue<'a> = Mutex<std::vec::IntoIter<(&'a ModelSpec, &'a PromptInstance)>>;
        let vendor_queues: Vec<WorkQueue> = by_vendor
            .values()
            .map(|vendor_specs| {
                let work: Vec<(&ModelSpec, &PromptInstance)> = vendor_specs
                    .iter()
                    .flat_map(|spec| prompts.iter().map(move |p| (*spec, p)))
                    .collect();
                Mutex::new(work.into_iter())
            })
            .collect();

        std::thread::scope(|scope| {
            let workers = self.config.parallelism.max(1);
            for queue in &vendor_queues {
                for _ in 0..workers {
                    let tx = tx.clone();
                    scope.spawn(move || loop {
                        let next = queue.lock().unwrap().next();
                        let Some((spec, prompt)) = next else {
                            break;
                        };
                        let result = self.generate(spec, prompt, mock_seed);
                        if tx.send(result).is_err() {
                            break;
                        }
                    });
                }
            }
            drop(tx);

            let mut results = Vec::with_capacity(expected);
            for received in rx {
                results.push(received?);
            }
            results.sort_by(|a, b| {
                (&a.model_id, &a.prompt_id).cmp(&(&b.model_id, &b.prompt_id))
            });
            Ok(results)
        })
    }
}
