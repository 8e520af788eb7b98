//! Correlations among cached measures, computed without a backend.

use std::collections::BTreeSet;
use std::time::Instant;

use gensurp_core::analysis::{pearson, spearman};
use gensurp_core::config::{write_manifest, Manifest};
use gensurp_core::{CorrelationMatrix, CorrelationMethod};
use serde::Serialize;

use crate::error::Result;
use crate::estimates::{self, mc_column};
use crate::setup;
use crate::GlobalArgs;

#[derive(Serialize)]
struct ExactVsMc {
    measure: String,
    pearson: Option<f64>,
    spearman: Option<f64>,
    stimuli: usize,
}

#[derive(Serialize)]
struct Correlations {
    stimuli: usize,
    pearson: CorrelationMatrix,
    spearman: CorrelationMatrix,
    exact_vs_mc: Vec<ExactVsMc>,
}

pub fn run(global: &GlobalArgs) -> Result<()> {
    let start = Instant::now();
    let config = setup::config(global)?;
    let (cache, cache_path) = estimates::open_cache(&config)?;
    let table = estimates::table(&cache, &config);
    let items: BTreeSet<String> = match &config.data.dataset {
        Some(_) => setup::stimuli(&config)?.into_iter().map(|s| s.item_id).collect(),
        None => config
            .measures
            .iter()
            .filter_map(|m| table.get(m))
            .flat_map(|v| v.keys().cloned())
            .collect(),
    };
    estimates::require_complete(&table, &config.measures, &items, &cache_path)?;

    let column = |name: &str| -> Vec<f64> { items.iter().map(|i| table[name][i]).collect() };
    let columns: Vec<Vec<f64>> = config.measures.iter().map(|m| column(m)).collect();
    let pearson_matrix = CorrelationMatrix::compute(CorrelationMethod::Pearson, config.measures.clone(), &columns)?;
    let spearman_matrix = CorrelationMatrix::compute(CorrelationMethod::Spearman, config.measures.clone(), &columns)?;

    // closed-form measures that were also sampled
    let mut exact_vs_mc = Vec::new();
    for m in &config.measures {
        let Some(sampled) = table.get(&mc_column(m)) else {
            continue;
        };
        let paired: Vec<(f64, f64)> = items
            .iter()
            .filter_map(|i| Some((*table[m].get(i)?, *sampled.get(i)?)))
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = paired.iter().copied().unzip();
        exact_vs_mc.push(ExactVsMc {
            measure: m.clone(),
            pearson: pearson(&x, &y).ok(),
            spearman: spearman(&x, &y).ok(),
            stimuli: paired.len(),
        });
    }

    let out = setup::output_dir(&config)?;
    let pearson_path = out.join("correlations.pearson.tsv");
    let spearman_path = out.join("correlations.spearman.tsv");
    let json_path = out.join("correlations.json");
    setup::write_text(&pearson_path, &pearson_matrix.to_tsv())?;
    setup::write_text(&spearman_path, &spearman_matrix.to_tsv())?;
    setup::write_json(
        &json_path,
        &Correlations {
            stimuli: items.len(),
            pearson: pearson_matrix,
            spearman: spearman_matrix,
            exact_vs_mc,
        },
    )?;

    let mut manifest = Manifest::new(&config, "none (read from the estimates cache)");
    manifest.stage("correlate", start.elapsed().as_secs_f64());
    manifest.outputs = vec![pearson_path, spearman_path, json_path.clone()];
    write_manifest(&manifest, out.join("manifest.correlate.json"))?;
    println!("{} measures over {} stimuli; {}", config.measures.len(), items.len(), json_path.display());
    Ok(())
}
