//! Writes a synthetic workload (corpus, stimuli, frequencies, embeddings
//! and a config) that the other commands can run on.

use std::path::Path;

use gensurp_core::testbed::{Testbed, TestbedSpec};
use gensurp_core::{Estimator, GsModel, DEFAULT_EPSILON};

use crate::error::{Failure, Result};
use crate::setup::write_text;

pub struct Options {
    pub stimuli: usize,
    pub train_sentences: usize,
    pub vocab: usize,
    pub seed: u64,
    pub noise_sd: f64,
}

const CONFIG: &str = r#"seed = 0
samples = 256
max_len = 5
mc_also = true
output_dir = "out"

[backend]
kind = "native"
corpus = "corpus.txt"
order = {order}
pseudocount = {pseudocount}

[data]
dataset = "dataset.tsv"
frequencies = "frequencies.tsv"
embeddings = "embeddings.tsv"

[variance]
grid = [4, 16, 64, 256]
resamples = 200
max_items = 60
runtime_lengths = [5]

[evaluate]
folds = 10
seeds = 20
permutation_resamples = 2000
"#;

pub fn run(dir: &Path, opts: &Options) -> Result<()> {
    let spec = TestbedSpec {
        stimuli: opts.stimuli,
        train_sentences: opts.train_sentences,
        vocab: opts.vocab,
        seed: opts.seed,
        ..TestbedSpec::default()
    };
    let (order, pseudocount) = (spec.order, spec.pseudocount);
    let mut bed = Testbed::build(spec)?;

    // a reading-time-like response driven by surprisal, and one that is pure noise
    let surprisal = GsModel::from_name("surprisal", DEFAULT_EPSILON).expect("catalog measure");
    let est = Estimator::new(&bed.model, None);
    let values: Vec<f64> = bed
        .items()
        .iter()
        .map(|i| est.estimate_exact(&surprisal, &i.target, &i.context).map(|e| e.value))
        .collect::<std::result::Result<_, _>>()?;
    bed.add_response("rt_self_paced", opts.noise_sd, opts.seed ^ 1, |i| 250.0 + 20.0 * values[i]);
    bed.add_response("null_response", 1.0, opts.seed ^ 2, |_| 0.0);

    std::fs::create_dir_all(dir).map_err(|e| Failure::data(format!("creating {}: {e}", dir.display())))?;
    write_text(&dir.join("corpus.txt"), &bed.corpus_text())?;
    write_text(&dir.join("dataset.tsv"), &bed.dataset_text())?;
    write_text(&dir.join("frequencies.tsv"), &bed.frequencies_text())?;
    write_text(&dir.join("embeddings.tsv"), &bed.embeddings_text())?;
    let config = CONFIG
        .replace("{order}", &order.to_string())
        .replace("{pseudocount}", &pseudocount.to_string());
    write_text(&dir.join("config.toml"), &config)?;
    println!(
        "testbed with {} stimuli and {} training sentences in {}",
        bed.stimuli.len(),
        bed.corpus.len(),
        dir.display()
    );
    Ok(())
}
