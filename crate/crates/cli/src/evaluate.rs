//! Cross-validated predictive power of cached measures for each response.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use gensurp_core::config::{write_manifest, Manifest, RunConfig};
use gensurp_core::eval::{delta_r2_cv, PredictorValues};
use gensurp_core::{EvalReport, GsModel, RegressionSpec, Stimulus};
use serde::{Deserialize, Serialize};

use crate::error::{Failure, Result};
use crate::estimates;
use crate::setup;
use crate::GlobalArgs;

/// Predictors added to the default baseline for the combined comparisons.
const COMBINED_EXTRA: [&str; 2] = ["surprisal", "exp_next_surprisal"];
const COMBINED_REPLACED: &str = "exp_next_surprisal";

#[derive(Debug, Serialize, Deserialize)]
pub struct Comparison {
    /// `single` (target added to the default baseline) or `combined`.
    pub comparison: String,
    pub target: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub kind: String,
    pub comparisons: Vec<Comparison>,
}

fn base_spec(config: &RunConfig, response: &str, target: &str) -> RegressionSpec {
    let e = &config.evaluate;
    RegressionSpec {
        folds: e.folds,
        seeds: e.seeds,
        seed: config.seed,
        grouped: e.grouped,
        permutation_resamples: e.permutation_resamples,
        spillover_lags: if response.starts_with("rt") { e.reading_time_lags } else { 0 },
        ..RegressionSpec::new(response, vec![target.to_string()])
    }
}

/// Response columns: the configured list, or every measurement in the dataset.
fn responses(config: &RunConfig, stimuli: &[Stimulus]) -> Result<Vec<String>> {
    let present: BTreeSet<&String> = stimuli.iter().flat_map(|s| s.measurements.keys()).collect();
    if config.evaluate.responses.is_empty() {
        if present.is_empty() {
            return Err(Failure::data("the dataset has no measurement columns to evaluate against"));
        }
        return Ok(present.into_iter().cloned().collect());
    }
    for r in &config.evaluate.responses {
        if !present.contains(r) {
            return Err(Failure::data(format!("evaluate.responses: dataset has no column {r}")));
        }
    }
    Ok(config.evaluate.responses.clone())
}

pub fn run(global: &GlobalArgs) -> Result<()> {
    let start = Instant::now();
    let config = setup::config(global)?;
    let stimuli = setup::stimuli(&config)?;
    let (cache, cache_path) = estimates::open_cache(&config)?;
    let table = estimates::table(&cache, &config);
    let targets = if config.evaluate.targets.is_empty() {
        config.measures.clone()
    } else {
        config.evaluate.targets.clone()
    };
    let responses = responses(&config, &stimuli)?;

    let combined_targets: Vec<String> = if config.evaluate.combined {
        targets
            .iter()
            .filter(|t| t.as_str() != COMBINED_REPLACED)
            .filter(|t| GsModel::from_name(t, config.epsilon).is_ok_and(|m| m.anticipatory))
            .cloned()
            .collect()
    } else {
        Vec::new()
    };
    let mut needed = targets.clone();
    if !combined_targets.is_empty() {
        needed.extend(COMBINED_EXTRA.iter().map(|s| s.to_string()));
        needed.sort();
        needed.dedup();
    }
    let ids: BTreeSet<String> = stimuli.iter().map(|s| s.item_id.clone()).collect();
    estimates::require_complete(&table, &needed, &ids, &cache_path)?;

    let mut values: PredictorValues = HashMap::new();
    for column in &needed {
        for (item, v) in &table[column] {
            values.entry(item.clone()).or_default().insert(column.clone(), *v);
        }
    }

    let mut comparisons = Vec::new();
    for response in &responses {
        for target in &targets {
            let spec = base_spec(&config, response, target);
            let report = delta_r2_cv(&spec, &stimuli, &values)
                .map_err(|e| Failure::from(e).context(format!("{response} ~ {target}")))?;
            comparisons.push(Comparison {
                comparison: "single".into(),
                target: target.clone(),
                report,
            });
        }
        for target in &combined_targets {
            let mut spec = base_spec(&config, response, target);
            spec.baseline_predictors.extend(COMBINED_EXTRA.iter().map(|s| s.to_string()));
            spec.replaced = vec![COMBINED_REPLACED.to_string()];
            let report = delta_r2_cv(&spec, &stimuli, &values)
                .map_err(|e| Failure::from(e).context(format!("{response} ~ combined {target}")))?;
            comparisons.push(Comparison {
                comparison: "combined".into(),
                target: target.clone(),
                report,
            });
        }
    }

    let deficient: usize = comparisons.iter().map(|c| c.report.rank_deficient_fits).sum();
    if deficient > 0 {
        log::warn!("{deficient} rank-deficient fits used minimum-norm solutions (a predictor is constant or collinear)");
    }

    let out = setup::output_dir(&config)?;
    let json_path = out.join("evaluation.json");
    let tsv_path = out.join("evaluation.tsv");
    let n = comparisons.len();
    setup::write_text(&tsv_path, &summary_tsv(&comparisons))?;
    setup::write_json(
        &json_path,
        &EvaluationFile {
            kind: "evaluation".into(),
            comparisons,
        },
    )?;
    let mut manifest = Manifest::new(&config, "none (read from the estimates cache)");
    manifest.stage("evaluate", start.elapsed().as_secs_f64());
    manifest.outputs = vec![json_path.clone(), tsv_path.clone()];
    write_manifest(&manifest, out.join("manifest.evaluate.json"))?;
    println!("{} comparisons; wrote {} and {}", n, json_path.display(), tsv_path.display());
    Ok(())
}

fn summary_tsv(comparisons: &[Comparison]) -> String {
    let mut out = String::from("response\tcomparison\ttarget\tmean_delta_r2\tci_low\tci_high\tp_value\tn_rows\tdropped\n");
    for c in comparisons {
        let r = &c.report;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.response, c.comparison, c.target, r.mean, r.ci_low, r.ci_high, r.p_value, r.n_rows, r.dropped
        ));
    }
    out
}
