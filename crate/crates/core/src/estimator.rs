//! Per-stimulus estimation of generalized surprisal: Monte Carlo over
//! ancestral samples, closed forms where the scoring function allows them,
//! and aggregation of token-level estimates into word-level ones.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lm::{log_prefix_probability, prefix_probability, LanguageModel, LmError, Outcome, Sym, TokenString};
use crate::measures::{GsModel, MeasureError, ScoreContext, Scorer, ScoringKind, Warping};
use crate::representation::{cosine_distance, RepresentationProvider};

/// Largest `|Σ| + 1` for which the next-symbol information value is summed
/// exactly over all outcome pairs.
pub const DEFAULT_EXACT_OUTCOME_BOUND: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum EstimatorError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("{0} has no closed form")]
    Unsupported(String),
    #[error("{0} is anticipatory and is not aggregated over target tokens")]
    AnticipatoryAggregation(String),
    #[error("nothing to aggregate")]
    EmptyAggregation,
    #[error("scoring sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: MeasureError,
    },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Lm(#[from] LmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "mc" => Ok(Mode::Mc),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub mode: Mode,
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub seed: Option<u64>,
    pub wall_time: f64,
}

/// Stream id for the sample batch of one context: FNV-1a over the symbol ids
/// and an optional salt, finished with a splitmix64 round.
pub fn stream_id(context: &[Sym], salt: &str) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(&(context.len() as u64).to_le_bytes());
    for s in context {
        feed(&s.0.to_le_bytes());
    }
    feed(salt.as_bytes());
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for the batch drawn after `context` under `seed`.
pub fn batch_rng(seed: u64, context: &[Sym], salt: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(context, salt));
    rng
}

/// `n` ancestral samples after `context`, each cut off at `max_len` symbols.
/// Equal `(context, n, max_len, seed)` always give the same batch.
pub fn simulate_batch<M: LanguageModel + ?Sized>(
    backend: &M,
    context: &[Sym],
    n: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<TokenString>, EstimatorError> {
    simulate_batch_salted(backend, context, n, max_len, seed, "")
}

/// [`simulate_batch`] on a separate stream selected by `salt`, for callers
/// that want independent batches per measure.
pub fn simulate_batch_salted<M: LanguageModel + ?Sized>(
    backend: &M,
    context: &[Sym],
    n: usize,
    max_len: usize,
    seed: u64,
    salt: &str,
) -> Result<Vec<TokenString>, EstimatorError> {
    if n == 0 {
        return Err(EstimatorError::EmptySample);
    }
    let mut rng = batch_rng(seed, context, salt);
    Ok(backend.sample_batch(context, n, max_len, &mut rng)?)
}

/// Sample batches keyed by context, so that every measure scored after the
/// same context reuses one batch.
#[derive(Debug, Clone)]
pub struct BatchCache {
    n: usize,
    max_len: usize,
    seed: u64,
    salt: String,
    batches: HashMap<Vec<Sym>, Vec<TokenString>>,
}

impl BatchCache {
    pub fn new(n: usize, max_len: usize, seed: u64) -> Self {
        Self::salted(n, max_len, seed, "")
    }

    pub fn salted(n: usize, max_len: usize, seed: u64, salt: impl Into<String>) -> Self {
        Self {
            n,
            max_len,
            seed,
            salt: salt.into(),
            batches: HashMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get<M: LanguageModel + ?Sized>(&mut self, backend: &M, context: &[Sym]) -> Result<&[TokenString], EstimatorError> {
        if !self.batches.contains_key(context) {
            let batch = simulate_batch_salted(backend, context, self.n, self.max_len, self.seed, &self.salt)?;
            self.batches.insert(context.to_vec(), batch);
        }
        Ok(&self.batches[context])
    }
}

/// Combines per-token estimates of a multi-token word: products for the
/// probability family, sums otherwise.
pub fn aggregate_word(model: &GsModel, token_estimates: &[f64]) -> Result<f64, EstimatorError> {
    if model.anticipatory {
        return Err(EstimatorError::AnticipatoryAggregation(model.name.clone()));
    }
    if token_estimates.is_empty() {
        return Err(EstimatorError::EmptyAggregation);
    }
    Ok(if model.aggregates_by_product() {
        token_estimates.iter().product()
    } else {
        token_estimates.iter().sum()
    })
}

pub struct Estimator<'a> {
    backend: &'a dyn LanguageModel,
    rep: Option<&'a dyn RepresentationProvider>,
    exact_outcome_bound: usize,
}

impl<'a> Estimator<'a> {
    pub fn new(backend: &'a dyn LanguageModel, rep: Option<&'a dyn RepresentationProvider>) -> Self {
        Self {
            backend,
            rep,
            exact_outcome_bound: DEFAULT_EXACT_OUTCOME_BOUND,
        }
    }

    pub fn with_exact_outcome_bound(mut self, bound: usize) -> Self {
        self.exact_outcome_bound = bound;
        self
    }

    pub fn backend(&self) -> &'a dyn LanguageModel {
        self.backend
    }

    /// Whether [`Estimator::estimate_exact`] supports `model` on this backend.
    pub fn supports_exact(&self, model: &GsModel) -> bool {
        model.closed_form
            || (model.scoring == ScoringKind::NextSymInfoValue
                && self.rep.is_some()
                && self.backend.alphabet().len() < self.exact_outcome_bound)
    }

    /// Per-sample scores of `batch` for `model`. `max_len` is the truncation
    /// the batch was drawn under.
    pub fn mc_scores(
        &self,
        model: &GsModel,
        w: &[Sym],
        c: &[Sym],
        batch: &[TokenString],
        max_len: usize,
    ) -> Result<Vec<f64>, EstimatorError> {
        let ctx = ScoreContext {
            backend: self.backend,
            rep: self.rep,
            context: c,
            inner_batch: Some(batch),
            max_len: Some(max_len),
        };
        let scorer = Scorer::new(model.scoring, ctx, w)?;
        batch
            .iter()
            .enumerate()
            .map(|(index, v)| scorer.score(v, Some(index)).map_err(|source| EstimatorError::Sample { index, source }))
            .collect()
    }

    /// Monte Carlo estimate from an already simulated batch.
    pub fn estimate_from_batch(
        &self,
        model: &GsModel,
        w: &[Sym],
        c: &[Sym],
        batch: &[TokenString],
        max_len: usize,
        seed: u64,
    ) -> Result<Estimate, EstimatorError> {
        let start = Instant::now();
        if batch.is_empty() {
            return Err(EstimatorError::EmptySample);
        }
        let scores = self.mc_scores(model, w, c, batch, max_len)?;
        let value = model.warping.apply(mean(&scores));
        Ok(Estimate {
            value,
            mode: Mode::Mc,
            n: Some(batch.len()),
            l: Some(max_len),
            seed: Some(seed),
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    /// `f((1/N) Σ g(v⁽ⁿ⁾, w, c))` over `n` fresh samples.
    pub fn estimate_mc(
        &self,
        model: &GsModel,
        w: &[Sym],
        c: &[Sym],
        n: usize,
        max_len: usize,
        seed: u64,
    ) -> Result<Estimate, EstimatorError> {
        let start = Instant::now();
        let batch = simulate_batch(self.backend, c, n, max_len, seed)?;
        let mut est = self.estimate_from_batch(model, w, c, &batch, max_len, seed)?;
        est.wall_time = start.elapsed().as_secs_f64();
        Ok(est)
    }

    /// Closed-form value; logarithmic warpings are applied without epsilon.
    pub fn estimate_exact(&self, model: &GsModel, w: &[Sym], c: &[Sym]) -> Result<Estimate, EstimatorError> {
        let start = Instant::now();
        let value = self.exact_value(model, w, c)?;
        Ok(Estimate {
            value,
            mode: Mode::Exact,
            n: None,
            l: None,
            seed: None,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    /// Exact estimate of a word given as tokens, computed token by token with
    /// the growing context and then aggregated.
    pub fn estimate_word_exact(&self, model: &GsModel, w: &[Sym], c: &[Sym]) -> Result<Estimate, EstimatorError> {
        let start = Instant::now();
        let value = if model.anticipatory || w.len() <= 1 {
            self.exact_value(model, w, c)?
        } else {
            let mut ctx = c.to_vec();
            let mut parts = Vec::with_capacity(w.len());
            for &tok in w {
                parts.push(self.exact_value(model, &[tok], &ctx)?);
                ctx.push(tok);
            }
            aggregate_word(model, &parts)?
        };
        Ok(Estimate {
            value,
            mode: Mode::Exact,
            n: None,
            l: None,
            seed: None,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    /// Monte Carlo counterpart of [`Estimator::estimate_word_exact`], drawing
    /// batches from `batches`. Anticipatory measures use the context before
    /// the word.
    pub fn estimate_word_mc(
        &self,
        model: &GsModel,
        w: &[Sym],
        c: &[Sym],
        batches: &mut BatchCache,
    ) -> Result<Estimate, EstimatorError> {
        let start = Instant::now();
        let (max_len, seed) = (batches.max_len(), batches.seed());
        let value = if model.anticipatory || w.len() <= 1 {
            let batch = batches.get(self.backend, c)?;
            self.estimate_from_batch(model, w, c, batch, max_len, seed)?.value
        } else {
            let mut ctx = c.to_vec();
            let mut parts = Vec::with_capacity(w.len());
            for &tok in w {
                let batch = batches.get(self.backend, &ctx)?;
                parts.push(self.estimate_from_batch(model, &[tok], &ctx, batch, max_len, seed)?.value);
                ctx.push(tok);
            }
            aggregate_word(model, &parts)?
        };
        Ok(Estimate {
            value,
            mode: Mode::Mc,
            n: Some(batches.n()),
            l: Some(max_len),
            seed: Some(seed),
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    fn exact_value(&self, model: &GsModel, w: &[Sym], c: &[Sym]) -> Result<f64, EstimatorError> {
        let unsupported = || EstimatorError::Unsupported(model.name.clone());
        let from_log = |log_mean: f64| match model.warping {
            Warping::Identity => log_mean.exp(),
            Warping::NegLog { .. } => -log_mean,
            Warping::Log { .. } => log_mean,
        };
        match model.scoring {
            ScoringKind::Indicator => Ok(from_log(log_prefix_probability(self.backend, w, c)?)),
            ScoringKind::Pmi => {
                let log_pc = prefix_probability(self.backend, c, &[])?.ln();
                let log_first = log_prefix_probability(self.backend, &w[..w.len().min(1)], c)?;
                Ok(from_log(log_pc + log_first))
            }
            ScoringKind::NextSymSurprisal => {
                let dist = self.backend.next_distribution(c)?;
                let h: f64 = dist.outcomes().filter(|&(_, p)| p > 0.0).map(|(_, p)| -p * p.ln()).sum();
                Ok(model.warping.apply_exact(h))
            }
            ScoringKind::NextSymProbability => {
                let dist = self.backend.next_distribution(c)?;
                let s: f64 = dist.outcomes().map(|(_, p)| p * p).sum();
                Ok(model.warping.apply_exact(s))
            }
            ScoringKind::NextSymInfoValue if self.supports_exact(model) => {
                let rep = self.rep.ok_or_else(unsupported)?;
                let dist = self.backend.next_distribution(c)?;
                let support: Vec<(Outcome, f64)> = dist.outcomes().filter(|&(_, p)| p > 0.0).collect();
                let vectors = support
                    .iter()
                    .map(|&(o, _)| rep.vector(o))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(MeasureError::from)?;
                let mut total = 0.0;
                for (i, &(_, pi)) in support.iter().enumerate() {
                    let mut inner = 0.0;
                    for (j, &(_, pj)) in support.iter().enumerate() {
                        if i != j {
                            inner += pj * cosine_distance(&vectors[i], &vectors[j]).map_err(MeasureError::from)?;
                        }
                    }
                    total += pi * inner;
                }
                Ok(model.warping.apply_exact(total))
            }
            _ => Err(unsupported()),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One row of the estimates cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub item_id: String,
    pub measure: String,
    pub mode: Mode,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub seed: Option<u64>,
    pub value: f64,
    pub wall_time_s: f64,
}

pub type CacheKey = (String, String, Mode, Option<usize>, Option<usize>, Option<u64>);

impl CacheRecord {
    pub fn new(item_id: impl Into<String>, measure: impl Into<String>, est: &Estimate) -> Self {
        Self {
            item_id: item_id.into(),
            measure: measure.into(),
            mode: est.mode,
            n: est.n,
            l: est.l,
            seed: est.seed,
            value: est.value,
            wall_time_s: est.wall_time,
        }
    }

    pub fn key(&self) -> CacheKey {
        (
            self.item_id.clone(),
            self.measure.clone(),
            self.mode,
            self.n,
            self.l,
            self.seed,
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed cache {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Append-only TSV of estimates keyed by `(item_id, measure, mode, N, L, seed)`.
pub struct EstimateCache {
    path: PathBuf,
    records: Vec<CacheRecord>,
    keys: HashSet<CacheKey>,
}

impl EstimateCache {
    /// Opens the cache at `path`, reading any rows already present.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let mut cache = Self {
            path: path.clone(),
            records: Vec::new(),
            keys: HashSet::new(),
        };
        if path.exists() {
            let parse = |source| CacheError::Parse {
                path: path.clone(),
                source,
            };
            let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').from_path(&path).map_err(parse)?;
            for row in reader.deserialize() {
                let rec: CacheRecord = row.map_err(parse)?;
                if cache.keys.insert(rec.key()) {
                    cache.records.push(rec);
                }
            }
        }
        Ok(cache)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[CacheRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.keys.contains(key)
    }

    /// Appends rows whose keys are new and flushes them to disk. Returns the
    /// number of rows written.
    pub fn append(&mut self, rows: impl IntoIterator<Item = CacheRecord>) -> Result<usize, CacheError> {
        let io = |source| CacheError::Io {
            path: self.path.clone(),
            source,
        };
        let fresh: Vec<CacheRecord> = rows.into_iter().filter(|r| !self.keys.contains(&r.key())).collect();
        if fresh.is_empty() {
            return Ok(0);
        }
        let needs_header = std::fs::metadata(&self.path).map(|m| m.len() == 0).unwrap_or(true);
        let file: File = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        let mut writer = csv::WriterBuilder::new()
            .delimiter(b'\t')
            .has_headers(needs_header)
            .from_writer(BufWriter::new(file));
        let mut written = 0;
        for rec in fresh {
            if !self.keys.insert(rec.key()) {
                continue;
            }
            writer.serialize(&rec).map_err(|source| CacheError::Parse {
                path: self.path.clone(),
                source,
            })?;
            self.records.push(rec);
            written += 1;
        }
        writer
            .into_inner()
            .map_err(|e| io(e.into_error()))?
            .flush()
            .map_err(io)?;
        Ok(written)
    }
}
