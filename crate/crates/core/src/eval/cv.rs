use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Stimulus, BASELINE_PREDICTORS};
use super::design::{build_design, Design, PredictorValues};
use super::ols::{ols_fit, r2_out_of_sample};
use super::EvalError;
use crate::estimator::stream_id;

/// A baseline-versus-target regression comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSpec {
    pub response: String,
    pub baseline_predictors: Vec<String>,
    pub target_predictors: Vec<String>,
    /// Baseline predictors left out of the target regressor, for comparisons
    /// that substitute one predictor for another.
    pub replaced: Vec<String>,
    pub spillover_lags: usize,
    pub folds: usize,
    pub seeds: usize,
    pub seed: u64,
    /// Keep all words of a sentence in the same fold.
    pub grouped: bool,
    pub permutation_resamples: usize,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        Self {
            response: String::new(),
            baseline_predictors: BASELINE_PREDICTORS.iter().map(|s| s.to_string()).collect(),
            target_predictors: Vec::new(),
            replaced: Vec::new(),
            spillover_lags: 0,
            folds: 10,
            seeds: 100,
            seed: 0,
            grouped: false,
            permutation_resamples: 10_000,
        }
    }
}

impl RegressionSpec {
    /// Default baseline against `target_predictors` added to it.
    pub fn new(response: impl Into<String>, target_predictors: Vec<String>) -> Self {
        Self {
            response: response.into(),
            target_predictors,
            ..Self::default()
        }
    }

    /// Baseline predictors followed by target predictors not already listed.
    pub fn all_predictors(&self) -> Vec<String> {
        let mut out = self.baseline_predictors.clone();
        for p in &self.target_predictors {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }

    pub fn target_regressor(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .baseline_predictors
            .iter()
            .filter(|p| !self.replaced.contains(p))
            .cloned()
            .collect();
        for p in &self.target_predictors {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub response: String,
    pub baseline_predictors: Vec<String>,
    pub target_predictors: Vec<String>,
    pub replaced: Vec<String>,
    /// One value per (seed, fold), seed-major.
    pub delta_r2: Vec<f64>,
    pub r2_baseline: Vec<f64>,
    pub r2_target: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub n_rows: usize,
    pub dropped: usize,
    pub rank_deficient_fits: usize,
}

fn fold_key(seed: u64, key: &str) -> u64 {
    stream_id(&[], &format!("{seed}\u{1f}{key}"))
}

/// Fold of every row: distinct keys are ordered by a hash of `(seed, key)`
/// and dealt round-robin into `folds` folds.
pub fn fold_assignment(keys: &[String], folds: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let mut distinct: Vec<&str> = keys.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if folds < 2 || distinct.len() < folds {
        return Err(EvalError::DegenerateFolds {
            rows: distinct.len(),
            folds,
        });
    }
    let mut order: Vec<(u64, &str)> = distinct.iter().map(|k| (fold_key(seed, k), *k)).collect();
    order.sort_unstable();
    let fold_of: std::collections::HashMap<&str, usize> =
        order.iter().enumerate().map(|(rank, (_, k))| (*k, rank % folds)).collect();
    Ok(keys.iter().map(|k| fold_of[k.as_str()]).collect())
}

struct Cell {
    base: f64,
    target: f64,
    deficient: usize,
}

fn fit_and_score(
    design: &Design,
    train: &[usize],
    test: &[usize],
    cols: &[usize],
) -> (f64, bool) {
    let sub = |rows: &[usize]| -> (DMatrix<f64>, DVector<f64>) {
        let x = design.x.select_rows(rows.iter()).select_columns(cols.iter());
        let y = design.y.select_rows(rows.iter());
        (x, y)
    };
    let (xtr, ytr) = sub(train);
    let (xte, yte) = sub(test);
    let fit = ols_fit(&xtr, &ytr);
    (r2_out_of_sample(&fit, &xte, &yte), fit.rank_deficient)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Cross-validated ΔR² of the target regressor over the baseline regressor,
/// repeated over `spec.seeds` fold assignments.
pub fn delta_r2_cv(spec: &RegressionSpec, stimuli: &[Stimulus], estimates: &PredictorValues) -> Result<EvalReport, EvalError> {
    if spec.seeds == 0 {
        return Err(EvalError::Invalid("at least one seed is required".into()));
    }
    let design = build_design(spec, stimuli, estimates)?;
    let base_cols = design.select(&spec.baseline_predictors);
    let target_cols = design.select(&spec.target_regressor());
    let keys = if spec.grouped { &design.sentence_ids } else { &design.item_ids };
    let assignments: Vec<Vec<usize>> = (0..spec.seeds as u64)
        .map(|s| fold_assignment(keys, spec.folds, spec.seed.wrapping_add(s)))
        .collect::<Result<_, _>>()?;

    let cells: Vec<(usize, usize)> = (0..spec.seeds).flat_map(|s| (0..spec.folds).map(move |f| (s, f))).collect();
    let results: Vec<Cell> = cells
        .par_iter()
        .map(|&(s, f)| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..design.n_rows()).partition(|&i| assignments[s][i] == f);
            let (base, d1) = fit_and_score(&design, &train, &test, &base_cols);
            let (target, d2) = fit_and_score(&design, &train, &test, &target_cols);
            Cell {
                base,
                target,
                deficient: d1 as usize + d2 as usize,
            }
        })
        .collect();

    let r2_baseline: Vec<f64> = results.iter().map(|c| c.base).collect();
    let r2_target: Vec<f64> = results.iter().map(|c| c.target).collect();
    let delta_r2: Vec<f64> = results.iter().map(|c| c.target - c.base).collect();
    let mut sorted = delta_r2.clone();
    sorted.sort_by(f64::total_cmp);
    let pairs: Vec<(f64, f64)> = r2_baseline.iter().copied().zip(r2_target.iter().copied()).collect();
    let p_value = permutation_test(&pairs, spec.permutation_resamples, spec.seed)?;
    Ok(EvalReport {
        response: spec.response.clone(),
        baseline_predictors: spec.baseline_predictors.clone(),
        target_predictors: spec.target_predictors.clone(),
        replaced: spec.replaced.clone(),
        mean: delta_r2.iter().sum::<f64>() / delta_r2.len() as f64,
        ci_low: percentile(&sorted, 0.025),
        ci_high: percentile(&sorted, 0.975),
        delta_r2,
        r2_baseline,
        r2_target,
        p_value,
        n_rows: design.n_rows(),
        dropped: design.dropped,
        rank_deficient_fits: results.iter().map(|c| c.deficient).sum(),
    })
}

/// One-sided paired sign-flip permutation test of `mean(target − baseline) > 0`.
/// Returns `(k + 1) / (resamples + 1)` where `k` counts resampled statistics
/// at least as large as the observed one.
pub fn permutation_test(pairs: &[(f64, f64)], resamples: usize, seed: u64) -> Result<f64, EvalError> {
    if pairs.len() < 2 {
        return Err(EvalError::Invalid(format!(
            "permutation test needs at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(b, t)| t - b).collect();
    let n = diffs.len() as f64;
    let observed = diffs.iter().sum::<f64>() / n;
    // ties with the observed statistic count as extreme despite rounding
    let bar = observed - 1e-14 * observed.abs().max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extreme = 0usize;
    for _ in 0..resamples {
        let mut total = 0.0;
        for &d in &diffs {
            total += if rng.random::<bool>() { d } else { -d };
        }
        if total / n >= bar {
            extreme += 1;
        }
    }
    Ok((extreme + 1) as f64 / (resamples + 1) as f64)
}
