//! A self-contained synthetic workload: a heterogeneous Markov chain over a
//! small vocabulary generates a training corpus and held-out sentences, a
//! smoothed n-gram model of the chain's order is trained on the corpus, and every non-initial word
//! of a held-out sentence becomes a stimulus whose context is the sentence
//! prefix. Word embeddings are clustered Gaussian vectors.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};

use crate::analysis::Item;
use crate::eval::Stimulus;
use crate::lm::{Alphabet, LanguageModel, LmError, NGramBackend};
use crate::representation::EmbeddingTable;

#[derive(Debug, Clone)]
pub struct TestbedSpec {
    pub vocab: usize,
    pub train_sentences: usize,
    /// Stimuli to produce (rounded up to whole sentences).
    pub stimuli: usize,
    pub max_sentence_len: usize,
    pub order: usize,
    pub pseudocount: f64,
    /// log10 range of the per-state Dirichlet concentration.
    pub concentration_log10: (f64, f64),
    pub dim: usize,
    pub clusters: usize,
    pub seed: u64,
}

impl Default for TestbedSpec {
    fn default() -> Self {
        Self {
            vocab: 40,
            train_sentences: 5000,
            stimuli: 200,
            max_sentence_len: 14,
            order: 2,
            pseudocount: 0.05,
            concentration_log10: (-4.0, 1.5),
            dim: 64,
            clusters: 8,
            seed: 2024,
        }
    }
}

pub struct Testbed {
    pub spec: TestbedSpec,
    pub corpus: Vec<Vec<String>>,
    pub model: NGramBackend,
    pub embeddings: EmbeddingTable,
    pub stimuli: Vec<Stimulus>,
}

/// Ground-truth chain over the last `order − 1` words, matching the model's
/// window. Rows are drawn lazily from a generator seeded by the state, so the
/// chain does not depend on the order in which states are visited.
struct Chain {
    window: usize,
    vocab: usize,
    concentration: (f64, f64),
    seed: u64,
    rows: HashMap<Vec<usize>, (Vec<f64>, f64)>,
}

impl Chain {
    fn new(spec: &TestbedSpec) -> Chain {
        Chain {
            window: spec.order.saturating_sub(1),
            vocab: spec.vocab,
            concentration: spec.concentration_log10,
            seed: spec.seed,
            rows: HashMap::new(),
        }
    }

    fn row(&mut self, state: &[usize]) -> &(Vec<f64>, f64) {
        let (vocab, concentration, seed) = (self.vocab, self.concentration, self.seed);
        self.rows.entry(state.to_vec()).or_insert_with(|| {
            let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
            for &s in state {
                h = (h ^ (s as u64 + 1)).wrapping_mul(0x0100_0000_01b3);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(h);
            // concentration spans near-deterministic to near-uniform rows
            let alpha = 10f64.powf(rng.random_range(concentration.0..concentration.1));
            let gamma = Gamma::new(alpha, 1.0).expect("valid gamma");
            let mut row: Vec<f64> = (0..vocab).map(|_| gamma.sample(&mut rng).max(1e-300)).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            let stop_dist = Beta::<f64>::new(1.5, 7.0).expect("valid beta");
            let stop = if state.is_empty() {
                0.0
            } else {
                Distribution::<f64>::sample(&stop_dist, &mut rng).max(0.02)
            };
            (row, stop)
        })
    }

    fn sentence(&mut self, names: &[String], max_len: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let mut words: Vec<usize> = Vec::new();
        while words.len() < max_len {
            let state = words[words.len().saturating_sub(self.window)..].to_vec();
            let (row, stop) = self.row(&state);
            if rng.random::<f64>() < *stop {
                break;
            }
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = row.len() - 1;
            for (i, p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            words.push(pick);
        }
        words.into_iter().map(|w| names[w].clone()).collect()
    }
}

impl Testbed {
    pub fn build(spec: TestbedSpec) -> Result<Self, LmError> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let names: Vec<String> = (0..spec.vocab).map(|i| format!("w{i:02}")).collect();
        let mut chain = Chain::new(&spec);
        let corpus: Vec<Vec<String>> = (0..spec.train_sentences)
            .map(|_| chain.sentence(&names, spec.max_sentence_len, &mut rng))
            .filter(|s| !s.is_empty())
            .collect();
        let alphabet = Alphabet::new(names.iter().cloned(), Alphabet::DEFAULT_EOS)?;
        let model = NGramBackend::train_with_alphabet(alphabet, &corpus, spec.order, spec.pseudocount)?;

        let counts = word_counts(&corpus);
        let mut stimuli = Vec::new();
        let mut sentence = 0;
        while stimuli.len() < spec.stimuli {
            let words = chain.sentence(&names, spec.max_sentence_len, &mut rng);
            // held-out sentences stay within the training vocabulary so that
            // a model retrained from the corpus text covers every stimulus
            if words.len() < 2 || words.iter().any(|w| !counts.contains_key(w)) {
                continue;
            }
            for i in 1..words.len() {
                stimuli.push(Stimulus::new(
                    format!("s{sentence:03}w{i:02}"),
                    format!("s{sentence:03}"),
                    i,
                    words[..i].join(" "),
                    words[i].clone(),
                    0.0,
                ));
            }
            sentence += 1;
        }
        let total: f64 = counts.values().map(|&c| c as f64).sum();
        for s in &mut stimuli {
            s.frequency = counts.get(&s.target).map_or(0.0, |&c| c as f64 * 1e6 / total);
        }

        let embeddings = clustered_embeddings(&names, &spec, &mut rng);
        Ok(Self {
            spec,
            corpus,
            model,
            embeddings,
            stimuli,
        })
    }

    /// Stimuli encoded against the model's alphabet.
    pub fn items(&self) -> Vec<Item> {
        self.stimuli
            .iter()
            .map(|s| Item {
                id: s.item_id.clone(),
                context: self.model.tokenize(&s.context, false).expect("testbed words are in the alphabet"),
                target: self.model.tokenize(&s.target, true).expect("testbed words are in the alphabet"),
            })
            .collect()
    }

    /// Word frequencies per million over the training corpus.
    pub fn frequencies(&self) -> Vec<(String, f64)> {
        let counts = word_counts(&self.corpus);
        let total: f64 = counts.values().map(|&c| c as f64).sum();
        let mut out: Vec<(String, f64)> = counts.into_iter().map(|(w, c)| (w, c as f64 * 1e6 / total)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Adds measurement `name` as `f(stimulus index) + noise_sd · z`.
    pub fn add_response(&mut self, name: &str, noise_sd: f64, seed: u64, f: impl Fn(usize) -> f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("valid normal");
        for (i, s) in self.stimuli.iter_mut().enumerate() {
            let v = f(i) + noise.sample(&mut rng);
            s.measurements.insert(name.to_string(), Some(v));
        }
    }

    pub fn corpus_text(&self) -> String {
        let mut out = String::new();
        for s in &self.corpus {
            out.push_str(&s.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn embeddings_text(&self) -> String {
        let mut out = format!("#dim {}\n", self.spec.dim);
        let mut tokens: Vec<&String> = self.model.alphabet().symbols().iter().collect();
        tokens.sort();
        for t in tokens {
            if let Some(v) = self.embeddings.get(t) {
                let cells: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                out.push_str(&format!("{t}\t{}\n", cells.join(" ")));
            }
        }
        out
    }

    /// The stimulus TSV with every measurement column present on any stimulus.
    pub fn dataset_text(&self) -> String {
        let mut names: Vec<&String> = self.stimuli.iter().flat_map(|s| s.measurements.keys()).collect();
        names.sort();
        names.dedup();
        let mut out = String::from("item_id\tsentence_id\tword_index\tcontext\ttarget");
        for n in &names {
            out.push('\t');
            out.push_str(n);
        }
        out.push('\n');
        for s in &self.stimuli {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}",
                s.item_id, s.sentence_id, s.word_index, s.context, s.target
            ));
            for n in &names {
                out.push('\t');
                if let Some(v) = s.measurement(n) {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn frequencies_text(&self) -> String {
        let mut out = String::from("word\tcount_per_million\n");
        for (w, f) in self.frequencies() {
            out.push_str(&format!("{w}\t{f}\n"));
        }
        out
    }
}

fn word_counts(corpus: &[Vec<String>]) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for w in corpus.iter().flatten() {
        *counts.entry(w.clone()).or_insert(0) += 1;
    }
    counts
}

/// Gaussian vectors around `clusters` centers.
fn clustered_embeddings(names: &[String], spec: &TestbedSpec, rng: &mut ChaCha8Rng) -> EmbeddingTable {
    let dim = spec.dim;
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let centers: Vec<Vec<f64>> = (0..spec.clusters.max(1))
        .map(|_| (0..dim).map(|_| normal.sample(rng)).collect())
        .collect();
    let vectors: HashMap<String, Vec<f64>> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let c = &centers[i % centers.len()];
            let v = c.iter().map(|x| x + 0.6 * normal.sample(rng)).collect();
            (n.clone(), v)
        })
        .collect();
    EmbeddingTable::new(dim, vectors, None).expect("gaussian vectors are nonzero")
}
