//! Conformance checks for any server speaking the bridge wire protocol.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::remote::protocol::SampleRequest;
use super::remote::{BridgeClient, RemoteConfig};
use super::LmError;

/// Tolerance on `Σ exp(logprob)` over the vocabulary plus EOS.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub checks: Vec<Check>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

/// One recorded exchange: the request that was sent and the body that came back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldenExchange {
    pub method: String,
    pub path: String,
    #[serde(default)]
    pub request: Option<Value>,
    pub response: Value,
}

/// Serializes with sorted object keys and no insignificant whitespace.
pub fn canonical_json(v: &Value) -> String {
    // serde_json's default map is a BTreeMap, so keys come out sorted
    let normalized: Value = serde_json::from_str(&v.to_string()).unwrap_or(Value::Null);
    normalized.to_string()
}

fn err_string(e: LmError) -> String {
    e.to_string()
}

/// Runs the protocol checks against a live server.
pub fn check_bridge(config: RemoteConfig, seed: u64) -> Result<ConformanceReport, LmError> {
    let client = BridgeClient::new(config)?;
    let mut report = ConformanceReport::default();

    let info = client.info();
    report.record(
        "info",
        info.as_ref()
            .map(|i| format!("model {} with {} symbols", i.model_name, i.vocab_size))
            .map_err(|e| e.to_string()),
    );

    let first = client.logprobs(Vec::new());
    let first_symbol = first.as_ref().ok().and_then(|r| r.symbols.first().cloned());
    let mut contexts = vec![Vec::new()];
    if let Some(s) = &first_symbol {
        contexts.push(vec![s.clone()]);
    }
    for context in contexts {
        let label = format!("logprobs normalization (context of {} tokens)", context.len());
        let outcome = client.logprobs(context).map_err(err_string).and_then(|r| {
            let total: f64 = r.logprobs.iter().map(|lp| lp.exp()).sum::<f64>() + r.eos_logprob.exp();
            if (total - 1.0).abs() <= NORMALIZATION_TOLERANCE {
                Ok(format!("mass {total}"))
            } else {
                Err(format!("mass {total} outside 1 ± {NORMALIZATION_TOLERANCE}"))
            }
        });
        report.record(&label, outcome);
    }

    if let Ok(info) = &info {
        let outcome = first.as_ref().map_err(|e| e.to_string()).and_then(|r| {
            if r.symbols.len() == info.vocab_size {
                Ok(format!("{} symbols", r.symbols.len()))
            } else {
                Err(format!("info reports {} symbols, logprobs returned {}", info.vocab_size, r.symbols.len()))
            }
        });
        report.record("vocabulary size", outcome);
    }

    let request = SampleRequest {
        context: Vec::new(),
        n: 4,
        max_tokens: 5,
        seed,
        temperature: None,
    };
    let outcome = client
        .sample(&request)
        .and_then(|a| client.sample(&request).map(|b| (a, b)))
        .map_err(err_string)
        .and_then(|(a, b)| {
            if a == b {
                Ok(format!("{} continuations reproduced", a.continuations.len()))
            } else {
                Err("same seed produced different continuations".to_string())
            }
        });
    report.record("seeded sampling determinism", outcome);

    if let Ok(vocab) = &first {
        let outcome = client.sample(&request).map_err(err_string).and_then(|s| {
            match s.continuations.iter().flatten().find(|t| !vocab.symbols.contains(t)) {
                Some(t) => Err(format!("sampled token {t:?} is not in the vocabulary")),
                None => Ok("all sampled tokens in vocabulary".to_string()),
            }
        });
        report.record("sampled tokens in vocabulary", outcome);
    }

    let items: Vec<String> = first_symbol.into_iter().chain([String::new()]).collect();
    let outcome = client.embed(items).map_err(err_string).map(|r| {
        format!(
            "{} vectors of dimension {}",
            r.vectors.len(),
            r.vectors.first().map_or(0, Vec::len)
        )
    });
    report.record("embedding shape", outcome);

    Ok(report)
}

/// Replays every `*.json` golden exchange in `dir` and compares canonicalized bodies.
pub fn replay_golden(config: RemoteConfig, dir: &Path) -> Result<ConformanceReport, LmError> {
    let io = |source| LmError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let client = reqwest::blocking::Client::builder()
        .timeout(std::time::Duration::from_secs_f64(config.timeout_s.max(0.001)))
        .build()
        .map_err(|e| LmError::Transport {
            endpoint: config.endpoint.clone(),
            message: e.to_string(),
        })?;
    let base = config.endpoint.trim_end_matches('/');
    let mut report = ConformanceReport::default();
    for path in paths {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let outcome = (|| -> Result<String, String> {
            let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
            let golden: GoldenExchange = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let url = format!("{base}{}", golden.path);
            let req = match golden.method.to_ascii_uppercase().as_str() {
                "GET" => client.get(&url),
                "POST" => client.post(&url).json(&golden.request.clone().unwrap_or(Value::Null)),
                m => return Err(format!("unsupported method {m}")),
            };
            let body: Value = req
                .send()
                .and_then(|r| r.error_for_status())
                .and_then(|r| r.json())
                .map_err(|e| e.to_string())?;
            let (got, want) = (canonical_json(&body), canonical_json(&golden.response));
            if got == want {
                Ok(format!("{} {} matches", golden.method, golden.path))
            } else {
                Err(format!("{} {}: expected {want}, got {got}", golden.method, golden.path))
            }
        })();
        report.record(&name, outcome);
    }
    Ok(report)
}
