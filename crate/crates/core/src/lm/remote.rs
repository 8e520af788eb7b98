//! Client side of the bridge wire protocol: JSON over HTTP.
//!
//! | endpoint          | request                               | response                                   |
//! |-------------------|---------------------------------------|--------------------------------------------|
//! | `GET /v1/info`    |                                       | `{model_name, vocab_size, eos_id}`         |
//! | `POST /v1/logprobs` | `{context}`                         | `{symbols, logprobs, eos_logprob}` (ln)    |
//! | `POST /v1/sample` | `{context, n, max_tokens, seed}`      | `{continuations}`                          |
//! | `POST /v1/embed`  | `{items}`                             | `{vectors}`                                |
//! | `POST /v1/tokenize` | `{text, leading_space}`             | `{tokens}`                                 |
//!
//! `/v1/tokenize` is an optional extension used to map dataset words onto the
//! model's subword vocabulary. An empty `/v1/embed` item stands for the
//! end-of-string representation.

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Alphabet, LanguageModel, LmError, NextSymbolDistribution, Outcome, Sym, TokenString};
use crate::representation::{RepError, RepresentationProvider};

/// Tolerance for remote distributions before renormalization; models served
/// in reduced precision rarely sum to one within `1e-9`.
pub const REMOTE_NORMALIZATION_TOLERANCE: f64 = 1e-4;

pub mod protocol {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct InfoResponse {
        pub model_name: String,
        pub vocab_size: usize,
        pub eos_id: i64,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct LogprobsRequest {
        pub context: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct LogprobsResponse {
        pub symbols: Vec<String>,
        pub logprobs: Vec<f64>,
        pub eos_logprob: f64,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct SampleRequest {
        pub context: Vec<String>,
        pub n: usize,
        pub max_tokens: usize,
        pub seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub temperature: Option<f64>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct SampleResponse {
        pub continuations: Vec<Vec<String>>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct EmbedRequest {
        pub items: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct EmbedResponse {
        pub vectors: Vec<Vec<f64>>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct TokenizeRequest {
        pub text: String,
        pub leading_space: bool,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct TokenizeResponse {
        pub tokens: Vec<String>,
    }
}

use protocol::*;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout_s: f64,
    pub max_in_flight: usize,
    pub retries: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout_s: 60.0,
            max_in_flight: 8,
            retries: 3,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

impl Gate {
    fn new(max: usize) -> Self {
        Self {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            max: max.max(1),
        }
    }

    fn enter(&self) -> GateGuard<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// Raw HTTP access to a bridge; shared by the backend and the embedder.
#[derive(Debug)]
pub struct BridgeClient {
    config: RemoteConfig,
    http: reqwest::blocking::Client,
    gate: Gate,
}

impl BridgeClient {
    pub fn new(config: RemoteConfig) -> Result<Self, LmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_s.max(0.001)))
            .build()
            .map_err(|e| LmError::Transport {
                endpoint: config.endpoint.clone(),
                message: e.to_string(),
            })?;
        Ok(Self {
            gate: Gate::new(config.max_in_flight),
            config,
            http,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    fn transport(&self, path: &str, message: impl ToString) -> LmError {
        LmError::Transport {
            endpoint: self.url(path),
            message: message.to_string(),
        }
    }

    fn validation(&self, path: &str, message: impl ToString) -> LmError {
        LmError::Validation {
            endpoint: self.url(path),
            message: message.to_string(),
        }
    }

    /// Sends one request, retrying transport failures and 5xx answers. Every
    /// protocol request is idempotent, so retries are safe.
    fn call<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: Option<&B>) -> Result<R, LmError> {
        let _slot = self.gate.enter();
        let attempts = self.config.retries + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 * attempt as u64));
            }
            let request = match body {
                Some(b) => self.http.post(self.url(path)).json(b),
                None => self.http.get(self.url(path)),
            };
            let response = match request.send() {
                Ok(r) => r,
                Err(e) => {
                    last = Some(self.transport(path, e));
                    continue;
                }
            };
            let status = response.status();
            if status.is_server_error() {
                last = Some(self.transport(path, format!("HTTP {status}")));
                continue;
            }
            if !status.is_success() {
                let text = response.text().unwrap_or_default();
                return Err(self.validation(path, format!("HTTP {status}: {text}")));
            }
            let bytes = response.bytes().map_err(|e| self.transport(path, e))?;
            return serde_json::from_slice(&bytes).map_err(|e| self.validation(path, e));
        }
        Err(last.unwrap_or_else(|| self.transport(path, "no attempt made")))
    }

    pub fn info(&self) -> Result<InfoResponse, LmError> {
        self.call::<(), _>("/v1/info", None)
    }

    pub fn logprobs(&self, context: Vec<String>) -> Result<LogprobsResponse, LmError> {
        let resp: LogprobsResponse = self.call("/v1/logprobs", Some(&LogprobsRequest { context }))?;
        if resp.symbols.len() != resp.logprobs.len() {
            return Err(self.validation(
                "/v1/logprobs",
                format!("{} symbols but {} logprobs", resp.symbols.len(), resp.logprobs.len()),
            ));
        }
        if let Some(bad) = resp.logprobs.iter().chain([&resp.eos_logprob]).find(|x| !x.is_finite()) {
            return Err(self.validation("/v1/logprobs", format!("non-finite logprob {bad}")));
        }
        Ok(resp)
    }

    pub fn sample(&self, request: &SampleRequest) -> Result<SampleResponse, LmError> {
        let resp: SampleResponse = self.call("/v1/sample", Some(request))?;
        if resp.continuations.len() != request.n {
            return Err(self.validation(
                "/v1/sample",
                format!("asked for {} continuations, got {}", request.n, resp.continuations.len()),
            ));
        }
        if let Some(c) = resp.continuations.iter().find(|c| c.len() > request.max_tokens) {
            return Err(self.validation(
                "/v1/sample",
                format!("continuation of {} tokens exceeds max_tokens {}", c.len(), request.max_tokens),
            ));
        }
        Ok(resp)
    }

    pub fn embed(&self, items: Vec<String>) -> Result<EmbedResponse, LmError> {
        let n = items.len();
        let resp: EmbedResponse = self.call("/v1/embed", Some(&EmbedRequest { items }))?;
        if resp.vectors.len() != n {
            return Err(self.validation("/v1/embed", format!("{n} items but {} vectors", resp.vectors.len())));
        }
        if let Some(first) = resp.vectors.first() {
            if resp.vectors.iter().any(|v| v.len() != first.len()) {
                return Err(self.validation("/v1/embed", "ragged vectors"));
            }
        }
        if resp.vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(self.validation("/v1/embed", "non-finite vector entry"));
        }
        Ok(resp)
    }

    pub fn tokenize(&self, text: &str, leading_space: bool) -> Result<TokenizeResponse, LmError> {
        self.call(
            "/v1/tokenize",
            Some(&TokenizeRequest {
                text: text.to_string(),
                leading_space,
            }),
        )
    }
}

/// Language model served by a bridge process.
///
/// The alphabet is fixed at connection time from the symbol list the bridge
/// returns for the empty context; later responses must use the same symbols.
#[derive(Debug)]
pub struct RemoteBackend {
    client: Arc<BridgeClient>,
    info: InfoResponse,
    alphabet: Alphabet,
}

impl RemoteBackend {
    pub fn connect(config: RemoteConfig) -> Result<Self, LmError> {
        let client = Arc::new(BridgeClient::new(config)?);
        let info = client.info()?;
        let first = client.logprobs(Vec::new())?;
        let mut marker = Alphabet::DEFAULT_EOS.to_string();
        while first.symbols.contains(&marker) {
            marker.push('_');
        }
        let alphabet = Alphabet::new(first.symbols, marker).map_err(|e| LmError::Validation {
            endpoint: client.url("/v1/logprobs"),
            message: e.to_string(),
        })?;
        Ok(Self { client, info, alphabet })
    }

    pub fn info(&self) -> &InfoResponse {
        &self.info
    }

    pub fn client(&self) -> Arc<BridgeClient> {
        Arc::clone(&self.client)
    }

    fn strings(&self, s: &[Sym]) -> Result<Vec<String>, LmError> {
        self.alphabet.check(s)?;
        Ok(self.alphabet.decode(s).into_iter().map(str::to_string).collect())
    }

    fn distribution_from(&self, resp: LogprobsResponse) -> Result<NextSymbolDistribution, LmError> {
        let invalid = |m: String| LmError::Validation {
            endpoint: self.client.url("/v1/logprobs"),
            message: m,
        };
        if resp.symbols.len() != self.alphabet.len() {
            return Err(invalid(format!(
                "vocabulary changed size from {} to {}",
                self.alphabet.len(),
                resp.symbols.len()
            )));
        }
        let logprobs = if resp.symbols.as_slice() == self.alphabet.symbols() {
            resp.logprobs
        } else {
            let mut ordered = vec![f64::NEG_INFINITY; self.alphabet.len()];
            for (s, lp) in resp.symbols.iter().zip(resp.logprobs) {
                let sym = self
                    .alphabet
                    .lookup(s)
                    .ok_or_else(|| invalid(format!("unknown symbol {s:?}")))?;
                ordered[sym.index()] = lp;
            }
            ordered
        };
        NextSymbolDistribution::from_logprobs(&logprobs, resp.eos_logprob, REMOTE_NORMALIZATION_TOLERANCE)
            .map_err(|e| invalid(e.to_string()))
    }
}

impl LanguageModel for RemoteBackend {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn next_distribution(&self, context: &[Sym]) -> Result<NextSymbolDistribution, LmError> {
        let resp = self.client.logprobs(self.strings(context)?)?;
        self.distribution_from(resp)
    }

    fn sample_batch(
        &self,
        context: &[Sym],
        n: usize,
        max_len: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<TokenString>, LmError> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let request = SampleRequest {
            context: self.strings(context)?,
            n,
            max_tokens: max_len,
            seed: rng.next_u64(),
            temperature: None,
        };
        let resp = self.client.sample(&request)?;
        resp.continuations
            .into_iter()
            .map(|c| {
                self.alphabet.encode(&c).map_err(|e| LmError::Validation {
                    endpoint: self.client.url("/v1/sample"),
                    message: e.to_string(),
                })
            })
            .collect()
    }

    fn tokenize(&self, text: &str, leading_space: bool) -> Result<TokenString, LmError> {
        let resp = self.client.tokenize(text, leading_space)?;
        self.alphabet.encode(&resp.tokens).map_err(|e| LmError::Validation {
            endpoint: self.client.url("/v1/tokenize"),
            message: e.to_string(),
        })
    }

    fn identity(&self) -> String {
        format!(
            "remote(model={}, vocab={}, endpoint={})",
            self.info.model_name,
            self.info.vocab_size,
            self.client.endpoint()
        )
    }
}

/// Token vectors fetched on demand through `/v1/embed` and cached.
#[derive(Debug)]
pub struct RemoteEmbedder {
    client: Arc<BridgeClient>,
    alphabet: Alphabet,
    dim: usize,
    cache: Mutex<HashMap<Outcome, Arc<[f64]>>>,
}

impl RemoteEmbedder {
    pub fn new(backend: &RemoteBackend) -> Result<Self, LmError> {
        let client = backend.client();
        let probe = client.embed(vec![String::new()])?;
        let eos: Arc<[f64]> = probe.vectors[0].clone().into();
        let mut cache = HashMap::new();
        let dim = eos.len();
        cache.insert(Outcome::Eos, eos);
        Ok(Self {
            client,
            alphabet: backend.alphabet().clone(),
            dim,
            cache: Mutex::new(cache),
        })
    }
}

impl RepresentationProvider for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, outcome: Outcome) -> Result<Arc<[f64]>, RepError> {
        if let Some(v) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&outcome) {
            return Ok(Arc::clone(v));
        }
        let item = self.alphabet.outcome_name(outcome).to_string();
        let resp = self
            .client
            .embed(vec![item])
            .map_err(|e| RepError::Provider(e.to_string()))?;
        let v: Arc<[f64]> = resp.vectors[0].clone().into();
        if v.len() != self.dim {
            return Err(RepError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(outcome, Arc::clone(&v));
        Ok(v)
    }
}
