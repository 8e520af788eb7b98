use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Alphabet, LanguageModel, LmError, NextSymbolDistribution, Outcome, Sym};

/// Counts observed after one history window, sparse and sorted by outcome slot.
#[derive(Debug, Clone, Default)]
struct Row {
    counts: Vec<(u32, u32)>,
    total: u64,
}

impl Row {
    fn count(&self, slot: u32) -> u32 {
        self.counts
            .binary_search_by_key(&slot, |&(s, _)| s)
            .map_or(0, |i| self.counts[i].1)
    }
}

/// Additively smoothed n-gram model over whitespace tokens.
///
/// `p(u | h) = (count(h, u) + k) / (count(h) + k·(|Σ| + 1))` where `h` is the
/// last `order − 1` symbols of the context (fewer at the start of a string)
/// and EOS is one of the `|Σ| + 1` outcomes.
#[derive(Debug, Clone)]
pub struct NGramBackend {
    order: usize,
    pseudocount: f64,
    alphabet: Alphabet,
    rows: HashMap<Vec<Sym>, Row>,
    fingerprint: String,
}

impl NGramBackend {
    /// Trains on `corpus`, taking the alphabet to be the sorted set of observed tokens.
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], order: usize, pseudocount: f64) -> Result<Self, LmError> {
        let vocab: BTreeSet<&str> = corpus.iter().flatten().map(AsRef::as_ref).collect();
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let alphabet = Alphabet::new(vocab, Alphabet::DEFAULT_EOS)?;
        Self::train_with_alphabet(alphabet, corpus, order, pseudocount)
    }

    pub fn train_with_alphabet<S: AsRef<str>>(
        alphabet: Alphabet,
        corpus: &[Vec<S>],
        order: usize,
        pseudocount: f64,
    ) -> Result<Self, LmError> {
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        if order < 1 {
            return Err(LmError::InvalidOrder(order));
        }
        if !(pseudocount > 0.0 && pseudocount.is_finite()) {
            return Err(LmError::InvalidPseudocount(pseudocount));
        }
        let eos_slot = alphabet.len() as u32;
        let mut dense: HashMap<Vec<Sym>, HashMap<u32, u32>> = HashMap::new();
        let mut hasher = Sha256::new();
        for line in corpus {
            let encoded = alphabet.encode(line.iter().map(AsRef::as_ref))?;
            for s in encoded.iter() {
                hasher.update(s.0.to_le_bytes());
            }
            hasher.update([0xff; 4]);
            for i in 0..=encoded.len() {
                let window = encoded[i.saturating_sub(order - 1)..i].to_vec();
                let slot = encoded.get(i).map_or(eos_slot, |s| s.0);
                *dense.entry(window).or_default().entry(slot).or_default() += 1;
            }
        }
        let rows = dense
            .into_iter()
            .map(|(window, counts)| {
                let mut counts: Vec<(u32, u32)> = counts.into_iter().collect();
                counts.sort_unstable();
                let total = counts.iter().map(|&(_, c)| c as u64).sum();
                (window, Row { counts, total })
            })
            .collect();
        let fingerprint = hex::encode(&hasher.finalize()[..8]);
        Ok(Self {
            order,
            pseudocount,
            alphabet,
            rows,
            fingerprint,
        })
    }

    /// Reads a UTF-8 corpus with one whitespace-tokenized sentence per line.
    /// Blank lines are skipped.
    pub fn from_corpus_file(path: impl AsRef<Path>, order: usize, pseudocount: f64) -> Result<Self, LmError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| LmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let corpus = read_corpus(&text);
        Self::train(&corpus, order, pseudocount)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn pseudocount(&self) -> f64 {
        self.pseudocount
    }

    fn window<'a>(&self, context: &'a [Sym]) -> &'a [Sym] {
        &context[context.len().saturating_sub(self.order - 1)..]
    }

    fn denominator(&self, row: Option<&Row>) -> f64 {
        let total = row.map_or(0, |r| r.total) as f64;
        total + self.pseudocount * (self.alphabet.len() + 1) as f64
    }
}

/// Splits corpus text into whitespace-tokenized lines, skipping blank ones.
pub fn read_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|l| !l.is_empty())
        .collect()
}

impl LanguageModel for NGramBackend {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn next_distribution(&self, context: &[Sym]) -> Result<NextSymbolDistribution, LmError> {
        self.alphabet.check(context)?;
        let row = self.rows.get(self.window(context));
        let denom = self.denominator(row);
        let base = self.pseudocount / denom;
        let mut probs = vec![base; self.alphabet.len() + 1];
        if let Some(row) = row {
            for &(slot, c) in &row.counts {
                probs[slot as usize] = (c as f64 + self.pseudocount) / denom;
            }
        }
        let eos = probs.pop().unwrap_or_default();
        NextSymbolDistribution::new(probs, eos)
    }

    fn conditional(&self, context: &[Sym], outcome: Outcome) -> Result<f64, LmError> {
        self.alphabet.check(context)?;
        let row = self.rows.get(self.window(context));
        let slot = match outcome {
            Outcome::Symbol(s) => {
                self.alphabet.check(&[s])?;
                s.0
            }
            Outcome::Eos => self.alphabet.len() as u32,
        };
        let count = row.map_or(0, |r| r.count(slot));
        Ok((count as f64 + self.pseudocount) / self.denominator(row))
    }

    fn identity(&self) -> String {
        format!(
            "ngram(order={}, pseudocount={}, vocab={}, corpus={})",
            self.order,
            self.pseudocount,
            self.alphabet.len(),
            self.fingerprint
        )
    }
}
