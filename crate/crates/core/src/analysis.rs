//! Estimator diagnostics: bootstrap variability, agreement between
//! resamples, runtime profiles and correlation matrices between measures.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{simulate_batch, stream_id, Estimator, EstimatorError};
use crate::lm::TokenString;
use crate::measures::{GsModel, Warping};

/// Means closer to zero than this make a coefficient of variation undefined.
pub const MEAN_FLOOR: f64 = 1e-9;

const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("inputs have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("zero variance")]
    ZeroVariance,
}

/// `b` bootstrap means of `scores`, each resampled with replacement to the
/// original size and then warped.
pub fn bootstrap_scores<R: Rng + ?Sized>(scores: &[f64], b: usize, warping: Warping, rng: &mut R) -> Vec<f64> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    (0..b)
        .map(|_| {
            let mut total = 0.0;
            for _ in 0..n {
                total += scores[rng.random_range(0..n)];
            }
            warping.apply(total / n as f64)
        })
        .collect()
}

/// [`bootstrap_scores`] on a generator seeded from `seed`.
pub fn bootstrap_scores_seeded(scores: &[f64], b: usize, warping: Warping, seed: u64) -> Vec<f64> {
    bootstrap_scores(scores, b, warping, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (denominator `n − 1`).
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// `sd / |mean|`, or `None` when the mean is within [`MEAN_FLOOR`] of zero.
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let m = mean(values);
    if m.abs() < MEAN_FLOOR {
        return None;
    }
    Some(sample_sd(values) / m.abs())
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AnalysisError::TooShort { needed: 3, got: x.len() });
    }
    Ok(())
}

fn product_moment(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(x, y)?;
    product_moment(x, y)
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pair(x, y)?;
    product_moment(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub method: CorrelationMethod,
    pub names: Vec<String>,
    /// Row-major; `None` where a column has zero variance.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn compute(method: CorrelationMethod, names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self, AnalysisError> {
        if names.len() != columns.len() {
            return Err(AnalysisError::LengthMismatch(names.len(), columns.len()));
        }
        let f = match method {
            CorrelationMethod::Pearson => pearson,
            CorrelationMethod::Spearman => spearman,
        };
        let k = columns.len();
        let mut values = vec![vec![None; k]; k];
        for i in 0..k {
            for j in i..k {
                let r = match f(&columns[i], &columns[j]) {
                    Ok(r) => Some(if i == j { 1.0 } else { r }),
                    Err(AnalysisError::ZeroVariance) => None,
                    Err(e) => return Err(e),
                };
                values[i][j] = r;
                values[j][i] = r;
            }
        }
        Ok(Self { method, names, values })
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    /// Tab-separated with a header row of names.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("measure");
        for n in &self.names {
            out.push('\t');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                out.push('\t');
                if let Some(v) = v {
                    out.push_str(&format!("{v:.6}"));
                } else {
                    out.push_str("NA");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Summary of the Pearson correlations between all pairs of resample columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleCorrelation {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pairs: usize,
    /// Pairs left out because a column had zero variance.
    pub flagged: usize,
}

/// Correlations between every unordered pair of columns of an `M × B`
/// matrix (rows are stimuli, columns resamples).
pub fn resample_correlation(rows: &[Vec<f64>]) -> Result<ResampleCorrelation, AnalysisError> {
    let m = rows.len();
    if m < 3 {
        return Err(AnalysisError::TooShort { needed: 3, got: m });
    }
    let b = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != b) {
        return Err(AnalysisError::LengthMismatch(b, r.len()));
    }
    if b < 2 {
        return Err(AnalysisError::TooShort { needed: 2, got: b });
    }
    // standardize columns once; r_jk is then a scaled dot product
    let columns: Vec<Option<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let mu = mean(&col);
            let ss: f64 = col.iter().map(|x| (x - mu).powi(2)).sum();
            (ss > 0.0).then(|| {
                let s = ss.sqrt();
                col.iter().map(|x| (x - mu) / s).collect()
            })
        })
        .collect();
    let (sum, sum_sq, count, flagged) = (0..b)
        .into_par_iter()
        .map(|j| {
            let mut acc = (0.0, 0.0, 0usize, 0usize);
            for k in (j + 1)..b {
                match (&columns[j], &columns[k]) {
                    (Some(x), Some(y)) => {
                        let r = x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>().clamp(-1.0, 1.0);
                        acc.0 += r;
                        acc.1 += r * r;
                        acc.2 += 1;
                    }
                    _ => acc.3 += 1,
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0, 0, 0), |a, x| (a.0 + x.0, a.1 + x.1, a.2 + x.2, a.3 + x.3));
    if count == 0 {
        return Err(AnalysisError::ZeroVariance);
    }
    let mu = sum / count as f64;
    let var = if count > 1 {
        ((sum_sq - count as f64 * mu * mu) / (count - 1) as f64).max(0.0)
    } else {
        0.0
    };
    let half = Z_975 * (var / count as f64).sqrt();
    Ok(ResampleCorrelation {
        mean: mu,
        ci_low: mu - half,
        ci_high: mu + half,
        pairs: count,
        flagged,
    })
}

/// Normal-approximation 95% interval for the mean of `xs`.
pub fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let m = mean(xs);
    let half = Z_975 * sample_sd(xs) / (xs.len() as f64).sqrt();
    (m, m - half, m + half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusVariability {
    pub item_id: String,
    pub mean: f64,
    pub sd: f64,
    pub cv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub measure: String,
    pub b: usize,
    pub n: usize,
    pub l: usize,
    pub seed: u64,
    pub stimuli: Vec<StimulusVariability>,
    pub mean_cv: f64,
    pub cv_ci_low: f64,
    pub cv_ci_high: f64,
    /// Stimuli whose mean was too close to zero for a coefficient of variation.
    pub excluded: usize,
    pub resample_correlation: Option<ResampleCorrelation>,
    /// Average wall-clock seconds per stimulus for sampling and scoring.
    pub seconds_per_stimulus: f64,
}

/// Generator for the bootstrap of one stimulus.
pub fn bootstrap_rng(seed: u64, item_id: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(&[], &format!("bootstrap\u{1f}{item_id}")));
    rng
}

/// Builds the report for one measure from per-stimulus score vectors.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_report(
    measure: &str,
    warping: Warping,
    item_ids: &[String],
    scores: &[Vec<f64>],
    b: usize,
    n: usize,
    l: usize,
    seed: u64,
) -> BootstrapReport {
    let resampled: Vec<Vec<f64>> = item_ids
        .par_iter()
        .zip(scores)
        .map(|(id, s)| bootstrap_scores(s, b, warping, &mut bootstrap_rng(seed, id)))
        .collect();
    let stimuli: Vec<StimulusVariability> = item_ids
        .iter()
        .zip(&resampled)
        .map(|(id, r)| StimulusVariability {
            item_id: id.clone(),
            mean: if r.is_empty() { f64::NAN } else { mean(r) },
            sd: sample_sd(r),
            cv: coefficient_of_variation(r),
        })
        .collect();
    let cvs: Vec<f64> = stimuli.iter().filter_map(|s| s.cv).collect();
    let (mean_cv, cv_ci_low, cv_ci_high) = mean_ci(&cvs);
    BootstrapReport {
        measure: measure.to_string(),
        b,
        n,
        l,
        seed,
        excluded: stimuli.len() - cvs.len(),
        stimuli,
        mean_cv,
        cv_ci_low,
        cv_ci_high,
        resample_correlation: resample_correlation(&resampled).ok(),
        seconds_per_stimulus: f64::NAN,
    }
}

/// A stimulus reduced to what estimation needs.
#[derive(Debug, Clone)]
pub struct Item {
    pub id: String,
    pub context: TokenString,
    pub target: TokenString,
}

/// For each `N` in `grid` and each model: simulate one batch per stimulus,
/// score it, bootstrap it `b` times and summarize.
pub fn variance_analysis(
    estimator: &Estimator<'_>,
    models: &[GsModel],
    items: &[Item],
    grid: &[usize],
    max_len: usize,
    b: usize,
    seed: u64,
) -> Result<Vec<BootstrapReport>, EstimatorError> {
    let ids: Vec<String> = items.iter().map(|i| i.id.clone()).collect();
    let mut reports = Vec::new();
    for &n in grid {
        // per item: (scores per model, seconds per model)
        let per_item: Vec<(Vec<Vec<f64>>, Vec<f64>)> = items
            .par_iter()
            .map(|item| {
                let t0 = Instant::now();
                let batch = simulate_batch(estimator.backend(), &item.context, n, max_len, seed)?;
                let sampling = t0.elapsed().as_secs_f64();
                let mut scores = Vec::with_capacity(models.len());
                let mut times = Vec::with_capacity(models.len());
                for model in models {
                    let t = Instant::now();
                    scores.push(estimator.mc_scores(model, &item.target, &item.context, &batch, max_len)?);
                    times.push(sampling + t.elapsed().as_secs_f64());
                }
                Ok((scores, times))
            })
            .collect::<Result<_, EstimatorError>>()?;
        for (k, model) in models.iter().enumerate() {
            let scores: Vec<Vec<f64>> = per_item.iter().map(|(s, _)| s[k].clone()).collect();
            let mut report = bootstrap_report(&model.name, model.warping, &ids, &scores, b, n, max_len, seed);
            report.seconds_per_stimulus = per_item.iter().map(|(_, t)| t[k]).sum::<f64>() / items.len().max(1) as f64;
            reports.push(report);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCell {
    pub measure: String,
    pub mode: crate::estimator::Mode,
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub seconds_per_stimulus: f64,
}

/// Wall-clock seconds per stimulus for every sampling model over the
/// `N × L` grid, plus one row per model with a closed form.
pub fn profile_runtime(
    estimator: &Estimator<'_>,
    models: &[GsModel],
    items: &[Item],
    n_grid: &[usize],
    l_grid: &[usize],
    seed: u64,
) -> Result<Vec<RuntimeCell>, EstimatorError> {
    let per_item = |total: f64| total / items.len().max(1) as f64;
    let mut cells = Vec::new();
    for model in models.iter().filter(|m| estimator.supports_exact(m)) {
        let t = Instant::now();
        for item in items {
            estimator.estimate_exact(model, &item.target, &item.context)?;
        }
        cells.push(RuntimeCell {
            measure: model.name.clone(),
            mode: crate::estimator::Mode::Exact,
            n: None,
            l: None,
            seconds_per_stimulus: per_item(t.elapsed().as_secs_f64()),
        });
    }
    for model in models.iter().filter(|m| !m.closed_form) {
        for &l in l_grid {
            for &n in n_grid {
                let t = Instant::now();
                for item in items {
                    estimator.estimate_mc(model, &item.target, &item.context, n, l, seed)?;
                }
                cells.push(RuntimeCell {
                    measure: model.name.clone(),
                    mode: crate::estimator::Mode::Mc,
                    n: Some(n),
                    l: Some(l),
                    seconds_per_stimulus: per_item(t.elapsed().as_secs_f64()),
                });
            }
        }
    }
    Ok(cells)
}
