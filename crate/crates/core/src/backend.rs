//! Model backends: a deterministic hash mock and an HTTP wire client.
//!
//! Both produce [`PairOutputs`] for an informal/formal pair. The mock is a
//! pure function of its inputs so every downstream number is reproducible;
//! it exercises the pipeline and is no approximation of any trained model.
//! The wire client speaks a small JSON protocol to an external inference
//! service that embeds the pair in the scoring prompt layout (see
//! [`scoring_prompt`]).

use crate::fnv::fnv1a64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

pub const DEFAULT_EMBEDDING_DIM: usize = 64;
pub const MIN_EMBEDDING_DIM: usize = 8;
/// Overrides the configured endpoint when set and non-empty.
pub const ENDPOINT_ENV_VAR: &str = "ALIGN_BACKEND_URL";

/// Per-pair model outputs: one log-probability per formal token, plus the
/// final-position hidden states of the informal input and of the formal
/// output conditioned on the informal input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutputs {
    pub token_logprobs: Vec<f64>,
    pub nl_hidden: Vec<f64>,
    pub fl_hidden: Vec<f64>,
    pub model_id: String,
}

#[derive(Clone, Debug)]
pub struct BackendConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    /// Extra attempts after the first, with exponential backoff.
    pub retries: u32,
    /// Mock only.
    pub embedding_dim: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: String::new(),
            timeout_ms: 30_000,
            max_in_flight: 4,
            retries: 2,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub trait Backend {
    fn score_pair(&self, informal: &str, formal: &str) -> Result<PairOutputs, BackendError>;

    /// Scores pairs in input order; per-pair failures are positional and do
    /// not abort siblings.
    fn score_batch(
        &self,
        pairs: &[(String, String)],
    ) -> Result<Vec<Result<PairOutputs, BackendError>>, BackendError> {
        if pairs.is_empty() {
            return Err(BackendError::InvalidInput(
                "batch must contain at least one pair".to_string(),
            ));
        }
        Ok(pairs
            .iter()
            .map(|(informal, formal)| self.score_pair(informal, formal))
            .collect())
    }
}

/// The exact layout a conforming server embeds the pair in before scoring.
pub fn scoring_prompt(informal: &str, formal: &str) -> String {
    format!(
        "Statement in natural language:\n\n{informal}\n\nTranslate the statement in natural language to Lean:\n\n{formal}"
    )
}

fn hash_embedding(tokens: &[&str], dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for token in tokens {
        let h = fnv1a64(token.as_bytes());
        let idx = (h % dim as u64) as usize;
        v[idx] += if h.is_multiple_of(2) { 1.0 } else { -1.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Deterministic mock outputs: hash-bucket embeddings over whitespace
/// tokens, and `-0.05` per formal token already seen in the informal text
/// or earlier in the formal text, `-2.05` otherwise.
pub fn mock_outputs(informal: &str, formal: &str, dim: usize) -> PairOutputs {
    assert!(
        dim >= MIN_EMBEDDING_DIM,
        "mock embedding dim must be at least {MIN_EMBEDDING_DIM}"
    );
    let informal_tokens: Vec<&str> = informal.split_whitespace().collect();
    let formal_tokens: Vec<&str> = formal.split_whitespace().collect();

    let nl_hidden = hash_embedding(&informal_tokens, dim);
    let combined: Vec<&str> = informal_tokens
        .iter()
        .chain(formal_tokens.iter())
        .copied()
        .collect();
    let fl_hidden = hash_embedding(&combined, dim);

    let mut seen: HashSet<&str> = informal_tokens.iter().copied().collect();
    let mut token_logprobs = Vec::with_capacity(formal_tokens.len());
    for token in &formal_tokens {
        let penalty = if seen.contains(token) { 0.0 } else { 2.0 };
        token_logprobs.push(-0.05 - penalty);
        seen.insert(token);
    }

    PairOutputs {
        token_logprobs,
        nl_hidden,
        fl_hidden,
        model_id: format!("mock-{dim}"),
    }
}

#[derive(Clone, Debug)]
pub struct MockBackend {
    dim: usize,
}

impl MockBackend {
    pub fn new(dim: usize) -> Result<MockBackend, BackendError> {
        if dim < MIN_EMBEDDING_DIM {
            return Err(BackendError::InvalidInput(format!(
                "embedding dim must be at least {MIN_EMBEDDING_DIM}, got {dim}"
            )));
        }
        Ok(MockBackend { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend {
            dim: DEFAULT_EMBEDDING_DIM,
        }
    }
}

fn require_tokens(informal: &str, formal: &str) -> Result<(), BackendError> {
    if informal.split_whitespace().next().is_none() || formal.split_whitespace().next().is_none() {
        return Err(BackendError::InvalidInput(
            "informal and formal must each contain at least one token".to_string(),
        ));
    }
    Ok(())
}

impl Backend for MockBackend {
    fn score_pair(&self, informal: &str, formal: &str) -> Result<PairOutputs, BackendError> {
        require_tokens(informal, formal)?;
        Ok(mock_outputs(informal, formal, self.dim))
    }
}

/// Uses the environment override when present and non-empty.
pub fn resolve_endpoint(configured: &str, env_value: Option<&str>) -> String {
    match env_value {
        Some(v) if !v.is_empty() => v.to_string(),
        _ => configured.to_string(),
    }
}

#[derive(Serialize)]
struct PairScoreRequest<'a> {
    informal: &'a str,
    formal: &'a str,
    prompt_style: &'a str,
}

fn validate_outputs(outputs: &PairOutputs) -> Result<(), BackendError> {
    if outputs.token_logprobs.is_empty() {
        return Err(BackendError::Protocol(
            "response has no token log-probabilities".to_string(),
        ));
    }
    if outputs.nl_hidden.is_empty() || outputs.nl_hidden.len() != outputs.fl_hidden.len() {
        return Err(BackendError::Protocol(format!(
            "response embeddings must share one non-zero dimension, got {} and {}",
            outputs.nl_hidden.len(),
            outputs.fl_hidden.len()
        )));
    }
    let finite = outputs
        .token_logprobs
        .iter()
        .chain(&outputs.nl_hidden)
        .chain(&outputs.fl_hidden)
        .all(|x| x.is_finite());
    if !finite {
        return Err(BackendError::Protocol(
            "response contains non-finite values".to_string(),
        ));
    }
    Ok(())
}

/// Blocking HTTP client for the pair-scoring protocol. 5xx and connection
/// failures are retried with exponential backoff; 4xx and malformed bodies
/// are protocol errors and final.
pub struct WireBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    max_in_flight: usize,
    retries: u32,
}

const BACKOFF_INITIAL: Duration = Duration::from_millis(100);
const BACKOFF_CAP: Duration = Duration::from_millis(1600);

impl WireBackend {
    /// Reads [`ENDPOINT_ENV_VAR`] as an endpoint override.
    pub fn new(config: &BackendConfig) -> Result<WireBackend, BackendError> {
        let env_value = std::env::var(ENDPOINT_ENV_VAR).ok();
        Self::with_endpoint(config, resolve_endpoint(&config.endpoint, env_value.as_deref()))
    }

    fn with_endpoint(config: &BackendConfig, endpoint: String) -> Result<WireBackend, BackendError> {
        if config.timeout_ms == 0 {
            return Err(BackendError::InvalidInput(
                "timeout must be positive".to_string(),
            ));
        }
        if config.max_in_flight == 0 {
            return Err(BackendError::InvalidInput(
                "max_in_flight must be at least 1".to_string(),
            ));
        }
        if endpoint.is_empty() {
            return Err(BackendError::InvalidInput(
                "no backend endpoint configured".to_string(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(WireBackend {
            client,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            max_in_flight: config.max_in_flight,
            retries: config.retries,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Backend for WireBackend {
    fn score_pair(&self, informal: &str, formal: &str) -> Result<PairOutputs, BackendError> {
        require_tokens(informal, formal)?;
        let url = format!("{}/v1/pair_score", self.endpoint);
        let body = PairScoreRequest {
            informal,
            formal,
            prompt_style: "nl_to_lean_v1",
        };
        let mut delay = BACKOFF_INITIAL;
        let mut last_failure = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay = (delay * 2).min(BACKOFF_CAP);
            }
            let response = match self.client.post(&url).json(&body).send() {
                Ok(r) => r,
                Err(e) => {
                    last_failure = e.to_string();
                    continue;
                }
            };
            let status = response.status();
            if status.is_success() {
                let outputs: PairOutputs = response
                    .json()
                    .map_err(|e| BackendError::Protocol(format!("malformed response body: {e}")))?;
                validate_outputs(&outputs)?;
                return Ok(outputs);
            }
            if status.is_server_error() {
                last_failure = format!("server error {status}");
                continue;
            }
            let detail: String = response
                .text()
                .unwrap_or_default()
                .chars()
                .take(200)
                .collect();
            return Err(BackendError::Protocol(format!("status {status}: {detail}")));
        }
        Err(BackendError::Transport(format!(
            "{last_failure} (after {} attempts)",
            self.retries + 1
        )))
    }

    fn score_batch(
        &self,
        pairs: &[(String, String)],
    ) -> Result<Vec<Result<PairOutputs, BackendError>>, BackendError> {
        if pairs.is_empty() {
            return Err(BackendError::InvalidInput(
                "batch must contain at least one pair".to_string(),
            ));
        }
        let workers = self.max_in_flight.min(pairs.len());
        let next = AtomicUsize::new(0);
        let mut collected: Vec<(usize, Result<PairOutputs, BackendError>)> =
            Vec::with_capacity(pairs.len());
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut local = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= pairs.len() {
                                break;
                            }
                            let (informal, formal) = &pairs[i];
                            local.push((i, self.score_pair(informal, formal)));
                        }
                        local
                    })
                })
                .collect();
            for handle in handles {
                collected.extend(handle.join().expect("scoring worker panicked"));
            }
        });
        collected.sort_by_key(|(i, _)| *i);
        Ok(collected.into_iter().map(|(_, r)| r).collect())
    }
}
