//! The estimate command and lookups into the estimates cache.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::time::Instant;

use gensurp_core::config::{write_manifest, Manifest, RunConfig};
use gensurp_core::estimator::{CacheKey, CacheRecord};
use gensurp_core::{BatchCache, EstimateCache, GsModel, Mode};
use rayon::prelude::*;

use crate::error::{Failure, Result};
use crate::setup::{self, Workspace};
use crate::GlobalArgs;

pub const CACHE_FILE: &str = "estimates.tsv";
const CHUNK: usize = 64;

/// Column name for the sampled estimate of a closed-form measure.
pub fn mc_column(name: &str) -> String {
    format!("{name}_mc")
}

struct Job {
    model: GsModel,
    column: String,
    exact: bool,
}

impl Job {
    fn key(&self, item: &str, config: &RunConfig) -> CacheKey {
        if self.exact {
            (item.to_string(), self.column.clone(), Mode::Exact, None, None, None)
        } else {
            (
                item.to_string(),
                self.column.clone(),
                Mode::Mc,
                Some(config.samples),
                Some(config.max_len),
                Some(config.seed),
            )
        }
    }
}

pub fn run(global: &GlobalArgs) -> Result<()> {
    let start = Instant::now();
    let config = setup::config(global)?;
    let out = setup::output_dir(&config)?;
    let models = setup::models(&config.measures, config.epsilon)?;
    let stimuli = setup::stimuli(&config)?;
    let ws = Workspace::open(&config)?;
    ws.check_measures(&models)?;
    let items = ws.items(&stimuli)?;
    let est = ws.estimator();
    let mut manifest = Manifest::new(&config, ws.backend.identity());
    manifest.stage("load", start.elapsed().as_secs_f64());

    let mut jobs = Vec::new();
    for model in models {
        if est.supports_exact(&model) {
            if config.mc_also {
                jobs.push(Job {
                    model: model.clone(),
                    column: mc_column(&model.name),
                    exact: false,
                });
            }
            jobs.push(Job {
                column: model.name.clone(),
                model,
                exact: true,
            });
        } else {
            jobs.push(Job {
                column: model.name.clone(),
                model,
                exact: false,
            });
        }
    }

    let stage = Instant::now();
    let cache_path = out.join(CACHE_FILE);
    let mut cache = EstimateCache::open(&cache_path)?;
    let before = cache.len();
    let (n, l, seed) = (config.samples, config.max_len, config.seed);
    for chunk in items.chunks(CHUNK) {
        // rows computed before a failure are still cached
        let results: Vec<(Vec<CacheRecord>, Option<Failure>)> = chunk
            .par_iter()
            .map(|item| {
                let mut shared = BatchCache::new(n, l, seed);
                let mut rows = Vec::new();
                for job in jobs.iter().filter(|j| !cache.contains(&j.key(&item.id, &config))) {
                    let estimate = if job.exact {
                        est.estimate_word_exact(&job.model, &item.target, &item.context)
                    } else if config.independent_batches {
                        let mut own = BatchCache::salted(n, l, seed, job.column.as_str());
                        est.estimate_word_mc(&job.model, &item.target, &item.context, &mut own)
                    } else {
                        est.estimate_word_mc(&job.model, &item.target, &item.context, &mut shared)
                    };
                    match estimate {
                        Ok(e) => rows.push(CacheRecord::new(&item.id, &job.column, &e)),
                        Err(e) => {
                            let failure = Failure::from(e).context(format!("{} on stimulus {}", job.column, item.id));
                            return (rows, Some(failure));
                        }
                    }
                }
                (rows, None)
            })
            .collect();
        let mut first_error = None;
        let mut good = Vec::new();
        for (rows, failure) in results {
            good.extend(rows);
            if first_error.is_none() {
                first_error = failure;
            }
        }
        cache.append(good)?;
        if let Some(e) = first_error {
            return Err(e);
        }
    }
    let computed = cache.len() - before;
    manifest.stage("estimate", stage.elapsed().as_secs_f64());
    manifest.outputs.push(cache_path.clone());
    write_manifest(&manifest, out.join("manifest.estimate.json"))?;
    println!(
        "{computed} estimates computed, {} reused; cache {}",
        items.len() * jobs.len() - computed,
        cache_path.display()
    );
    Ok(())
}

/// Cached values for the run's `(N, L, seed)`, by column and item. Exact
/// rows take precedence over sampled rows of the same column.
pub fn table(cache: &EstimateCache, config: &RunConfig) -> BTreeMap<String, HashMap<String, f64>> {
    let mut exact: BTreeMap<String, HashMap<String, f64>> = BTreeMap::new();
    let mut mc: BTreeMap<String, HashMap<String, f64>> = BTreeMap::new();
    let wanted = (Some(config.samples), Some(config.max_len), Some(config.seed));
    for r in cache.records() {
        match r.mode {
            Mode::Exact => {
                exact.entry(r.measure.clone()).or_default().insert(r.item_id.clone(), r.value);
            }
            Mode::Mc if (r.n, r.l, r.seed) == wanted => {
                mc.entry(r.measure.clone()).or_default().insert(r.item_id.clone(), r.value);
            }
            Mode::Mc => {}
        }
    }
    for (column, values) in exact {
        mc.entry(column).or_default().extend(values);
    }
    mc
}

pub fn open_cache(config: &RunConfig) -> Result<(EstimateCache, std::path::PathBuf)> {
    let path = config.output_dir.join(CACHE_FILE);
    if !path.exists() {
        return Err(Failure::data(format!("{} does not exist; run `gensurp estimate` first", path.display())));
    }
    Ok((EstimateCache::open(&path)?, path))
}

/// Errors listing every column that lacks a value for some item.
pub fn require_complete(
    table: &BTreeMap<String, HashMap<String, f64>>,
    columns: &[String],
    items: &BTreeSet<String>,
    cache: &Path,
) -> Result<()> {
    let mut gaps = Vec::new();
    for c in columns {
        let missing: Vec<&String> = match table.get(c) {
            Some(values) => items.iter().filter(|i| !values.contains_key(*i)).collect(),
            None => items.iter().collect(),
        };
        if !missing.is_empty() {
            let shown: Vec<&str> = missing.iter().take(5).map(|s| s.as_str()).collect();
            let more = if missing.len() > 5 { ", …" } else { "" };
            gaps.push(format!("{c}: {} missing ({}{more})", missing.len(), shown.join(", ")));
        }
    }
    if gaps.is_empty() {
        Ok(())
    } else {
        Err(Failure::data(format!(
            "incomplete estimates in {} for the configured N, L and seed:\n  {}",
            cache.display(),
            gaps.join("\n  ")
        )))
    }
}
