//! Run configuration (TOML) and run manifests (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::measures::{GsModel, DEFAULT_EPSILON};

pub const MAX_SAMPLES: usize = 1 << 20;
pub const MAX_LEN: usize = 1024;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Native,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(BackendKind::Native),
            "remote" => Ok(BackendKind::Remote),
            other => Err(format!("unknown backend {other:?} (expected native or remote)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Training corpus for the native n-gram model, one sentence per line.
    pub corpus: Option<PathBuf>,
    pub order: usize,
    pub pseudocount: f64,
    /// Bridge endpoint for the remote backend.
    pub url: Option<String>,
    pub timeout_s: f64,
    pub max_in_flight: usize,
    pub retries: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Native,
            corpus: None,
            order: 2,
            pseudocount: 1.0,
            url: None,
            timeout_s: 60.0,
            max_in_flight: 8,
            retries: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dataset: Option<PathBuf>,
    pub frequencies: Option<PathBuf>,
    /// Embedding TSV, or absent to use the remote backend's `/v1/embed`.
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceConfig {
    pub grid: Vec<usize>,
    pub resamples: usize,
    pub measures: Vec<String>,
    /// Use only the first this many stimuli.
    pub max_items: Option<usize>,
    pub runtime_lengths: Vec<usize>,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self {
            grid: (2..=9).map(|j| 1usize << j).collect(),
            resamples: 1000,
            measures: ["information_value", "exp_next_info_value", "entropy", "exp_info_value"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            max_items: None,
            runtime_lengths: vec![5, 10, 15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Measurement columns to predict.
    pub responses: Vec<String>,
    /// Measures to test; defaults to the run's measure list.
    pub targets: Vec<String>,
    pub folds: usize,
    pub seeds: usize,
    /// Spillover lags for reading-time responses (`rt_*`); other responses use none.
    pub reading_time_lags: usize,
    pub grouped: bool,
    pub permutation_resamples: usize,
    /// Also compare anticipatory measures against the combined baseline.
    pub combined: bool,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            responses: Vec::new(),
            targets: Vec::new(),
            folds: 10,
            seeds: 100,
            reading_time_lags: 2,
            grouped: false,
            permutation_resamples: 10_000,
            combined: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Monte Carlo sample size `N`.
    pub samples: usize,
    /// Maximum sampled continuation length `L` in tokens.
    pub max_len: usize,
    pub epsilon: f64,
    pub measures: Vec<String>,
    /// Also estimate closed-form measures by sampling (stored as `<name>_mc`).
    pub mc_also: bool,
    /// Draw a separate sample batch for each measure instead of sharing one.
    pub independent_batches: bool,
    /// Largest `|Σ| + 1` for exact next-symbol information value.
    pub exact_outcome_bound: usize,
    pub jobs: Option<usize>,
    pub output_dir: PathBuf,
    pub backend: BackendConfig,
    pub data: DataConfig,
    pub variance: VarianceConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 512,
            max_len: 5,
            epsilon: DEFAULT_EPSILON,
            measures: crate::measures::CATALOG.iter().map(|s| s.to_string()).collect(),
            mc_also: false,
            independent_batches: false,
            exact_outcome_bound: crate::estimator::DEFAULT_EXACT_OUTCOME_BOUND,
            jobs: None,
            output_dir: PathBuf::from("out"),
            backend: BackendConfig::default(),
            data: DataConfig::default(),
            variance: VarianceConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

impl RunConfig {
    /// Checks ranges, measure names and backend settings.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=MAX_SAMPLES).contains(&self.samples) {
            return Err(invalid("samples", format!("must be in [1, {MAX_SAMPLES}], got {}", self.samples)));
        }
        if self.max_len > MAX_LEN {
            return Err(invalid("max_len", format!("must be in [0, {MAX_LEN}], got {}", self.max_len)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        for (key, names) in [
            ("measures", &self.measures),
            ("variance.measures", &self.variance.measures),
            ("evaluate.targets", &self.evaluate.targets),
        ] {
            for name in names {
                GsModel::from_name(name, self.epsilon).map_err(|e| invalid(key, e.to_string()))?;
            }
        }
        if self.jobs == Some(0) {
            return Err(invalid("jobs", "must be at least 1"));
        }
        if self.variance.grid.iter().any(|&n| n == 0 || n > MAX_SAMPLES) {
            return Err(invalid("variance.grid", format!("sizes must be in [1, {MAX_SAMPLES}]")));
        }
        if self.variance.runtime_lengths.iter().any(|&l| l > MAX_LEN) {
            return Err(invalid("variance.runtime_lengths", format!("lengths must be in [0, {MAX_LEN}]")));
        }
        if self.variance.resamples == 0 {
            return Err(invalid("variance.resamples", "must be at least 1"));
        }
        if self.evaluate.folds < 2 {
            return Err(invalid("evaluate.folds", "must be at least 2"));
        }
        if self.evaluate.seeds == 0 {
            return Err(invalid("evaluate.seeds", "must be at least 1"));
        }
        let b = &self.backend;
        match b.kind {
            BackendKind::Native => {
                if b.order == 0 {
                    return Err(invalid("backend.order", "must be at least 1"));
                }
                if !(b.pseudocount > 0.0 && b.pseudocount.is_finite()) {
                    return Err(invalid("backend.pseudocount", "must be positive"));
                }
            }
            BackendKind::Remote => {
                if b.url.as_deref().is_none_or(str::is_empty) {
                    return Err(invalid("backend.url", "required for the remote backend"));
                }
                if b.max_in_flight == 0 {
                    return Err(invalid("backend.max_in_flight", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Checks that every referenced input file exists.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let checks = [
            ("backend.corpus", self.backend.corpus.as_ref()),
            ("data.dataset", self.data.dataset.as_ref()),
            ("data.frequencies", self.data.frequencies.as_ref()),
            ("data.embeddings", self.data.embeddings.as_ref()),
        ];
        for (key, path) in checks {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(invalid(key, format!("{} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            self.backend.corpus.as_mut(),
            self.data.dataset.as_mut(),
            self.data.frequencies.as_mut(),
            self.data.embeddings.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    /// Hex SHA-256 of the canonical JSON form. The thread count is left out
    /// since results do not depend on it.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.jobs = None;
        let value = serde_json::to_value(&c).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    /// [`RunConfig::hash`] with the seed zeroed.
    pub fn hash_except_seed(&self) -> String {
        let mut c = self.clone();
        c.seed = 0;
        c.hash()
    }
}

/// Parses and validates a config document; relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path, origin: &str) -> Result<RunConfig, ConfigError> {
    let mut config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    config.resolve_paths(base);
    config.validate()?;
    Ok(config)
}

/// Reads, validates and checks the input paths of a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let config = parse_config(&text, base, &path.display().to_string())?;
    config.check_paths()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub config_hash_except_seed: String,
    pub seed: u64,
    pub backend: String,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<PathBuf>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(config: &RunConfig, backend: impl Into<String>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            config_hash_except_seed: config.hash_except_seed(),
            seed: config.seed,
            backend: backend.into(),
            stages: Vec::new(),
            outputs: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn stage(&mut self, name: impl Into<String>, wall_time_s: f64) {
        self.stages.push(StageTiming {
            stage: name.into(),
            wall_time_s,
        });
    }
}

/// Writes `manifest` as pretty JSON to `path`, creating parent directories.
pub fn write_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    let path = path.as_ref();
    let io = |source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(io)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(text, Path::new("/base"), "test.toml")
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!((c.samples, c.max_len, c.epsilon), (512, 5, 1e-4));
        assert_eq!(c.output_dir, PathBuf::from("/base/out"));
        assert_eq!(c.variance.grid.first(), Some(&4));
        assert_eq!(c.variance.grid.last(), Some(&512));
    }

    #[test]
    fn rejects_bad_values_and_unknown_keys() {
        let err = parse("samples = 0").unwrap_err();
        assert!(err.to_string().starts_with("samples:"), "{err}");
        let err = parse("warp_mode = \"x\"").unwrap_err();
        assert!(err.to_string().contains("warp_mode"), "{err}");
        let err = parse("[backend]\nwarp_mode = 1").unwrap_err();
        assert!(err.to_string().contains("warp_mode"), "{err}");
        assert!(parse("max_len = 1025").is_err());
        assert!(parse("epsilon = 0.0").is_err());
        assert!(parse("measures = [\"nope\"]").is_err());
        assert!(parse("[backend]\nkind = \"remote\"").is_err());
        assert!(parse("[backend]\nkind = \"remote\"\nurl = \"http://localhost:1\"").is_ok());
    }

    #[test]
    fn relative_paths_and_existence() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("corpus.txt"), "a b\n").unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "[backend]\ncorpus = \"corpus.txt\"\n").unwrap();
        let c = load_config(&cfg).unwrap();
        assert_eq!(c.backend.corpus.as_deref(), Some(dir.path().join("corpus.txt").as_path()));
        std::fs::write(&cfg, "[data]\ndataset = \"missing.tsv\"\n").unwrap();
        let err = load_config(&cfg).unwrap_err();
        assert!(err.to_string().starts_with("data.dataset"), "{err}");
    }

    #[test]
    fn hashes_and_manifest_round_trip() {
        let a = parse("seed = 1").unwrap();
        let b = parse("seed = 1").unwrap();
        let c = parse("seed = 2").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash_except_seed(), c.hash_except_seed());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/manifest.json");
        let mut m = Manifest::new(&a, "ngram(order=2)");
        m.stage("estimate", 1.5);
        m.outputs.push(PathBuf::from("estimates.tsv"));
        write_manifest(&m, &path).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), m);
        let mc = Manifest::new(&c, "ngram(order=2)");
        assert_ne!(mc, Manifest::new(&a, "ngram(order=2)"));
        assert_eq!(mc.config_hash_except_seed, m.config_hash_except_seed);
    }
}
