//! Sampling variability of the estimators over the configured grid of
//! sample sizes, with a runtime profile.

use std::time::Instant;

use gensurp_core::analysis::{profile_runtime, variance_analysis, RuntimeCell};
use gensurp_core::config::{write_manifest, Manifest};
use gensurp_core::BootstrapReport;
use serde::Serialize;

use crate::error::Result;
use crate::plot;
use crate::setup::{self, Workspace};
use crate::GlobalArgs;

#[derive(Serialize)]
struct VarianceFile {
    kind: &'static str,
    reports: Vec<BootstrapReport>,
    runtime: Vec<RuntimeCell>,
}

pub fn run(global: &GlobalArgs, skip_runtime: bool) -> Result<()> {
    let start = Instant::now();
    let config = setup::config(global)?;
    let v = &config.variance;
    let models = setup::models(&v.measures, config.epsilon)?;
    let mut stimuli = setup::stimuli(&config)?;
    if let Some(max) = v.max_items {
        stimuli.truncate(max);
    }
    let ws = Workspace::open(&config)?;
    ws.check_measures(&models)?;
    let items = ws.items(&stimuli)?;
    let est = ws.estimator();
    let mut manifest = Manifest::new(&config, ws.backend.identity());
    manifest.stage("load", start.elapsed().as_secs_f64());

    let t = Instant::now();
    let reports = variance_analysis(&est, &models, &items, &v.grid, config.max_len, v.resamples, config.seed)?;
    manifest.stage("bootstrap", t.elapsed().as_secs_f64());
    let runtime = if skip_runtime {
        Vec::new()
    } else {
        let t = Instant::now();
        let lengths = if v.runtime_lengths.is_empty() {
            vec![config.max_len]
        } else {
            v.runtime_lengths.clone()
        };
        let cells = profile_runtime(&est, &models, &items, &v.grid, &lengths, config.seed)?;
        manifest.stage("runtime", t.elapsed().as_secs_f64());
        cells
    };

    let out = setup::output_dir(&config)?;
    let path = out.join("variance.json");
    let file = VarianceFile {
        kind: "variance",
        reports,
        runtime,
    };
    setup::write_json(&path, &file)?;
    for r in &file.reports {
        let rc = r
            .resample_correlation
            .as_ref()
            .map_or("n/a".to_string(), |c| format!("{:.4}", c.mean));
        println!("{:<22} N={:<6} mean CV {:.4}  resample r {rc}", r.measure, r.n, r.mean_cv);
    }

    let report: serde_json::Value = serde_json::to_value(&file).expect("reports serialize");
    let data = plot::variance_plot(&report, &path)?;
    let (plot_json, svg) = plot::write_plot(&data, &out, "variance")?;
    manifest.outputs = vec![path.clone(), plot_json, svg];
    write_manifest(&manifest, out.join("manifest.variance.json"))?;
    println!("wrote {}", path.display());
    Ok(())
}
