//! Language-model capability contract and the string-level quantities built on it.
//!
//! A backend only has to answer one question: the next-symbol distribution
//! over `Σ ∪ {EOS}` given a context. Prefix probabilities, string
//! probabilities, ancestral samples and exhaustive enumerations are all
//! derived from that answer by the free functions in this module.

mod alphabet;
pub mod conformance;
mod distribution;
pub mod fixtures;
mod ngram;
pub mod remote;

use std::collections::BTreeMap;

use rand::{Rng, RngCore};

pub use alphabet::{Alphabet, Outcome, Sym, TokenString};
pub use distribution::NextSymbolDistribution;
pub use ngram::{read_corpus, NGramBackend};
pub use remote::{RemoteBackend, RemoteConfig};

/// Upper bound on the number of strings [`enumerate_distribution`] will visit.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(String),
    #[error("end-of-string marker {0:?} collides with an alphabet symbol")]
    EosInAlphabet(String),
    #[error("token {0:?} is not in the alphabet")]
    UnknownToken(String),
    #[error("symbol id {0} is out of range for an alphabet of {1} symbols")]
    SymbolOutOfRange(u32, usize),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("pseudocount must be positive and finite, got {0}")]
    InvalidPseudocount(f64),
    #[error("invalid next-symbol distribution: {0}")]
    InvalidDistribution(String),
    #[error("enumerating {count} strings exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u64 },
    #[error("transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("invalid payload from {endpoint}: {message}")]
    Validation { endpoint: String, message: String },
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LmError {
    /// True for failures of the remote link itself (as opposed to bad input or
    /// a well-delivered but invalid payload).
    pub fn is_transport(&self) -> bool {
        matches!(self, LmError::Transport { .. })
    }
}

/// A language model queried one context at a time.
///
/// Implementations must be immutable after construction; every method takes
/// `&self` and may be called concurrently.
pub trait LanguageModel: Send + Sync {
    fn alphabet(&self) -> &Alphabet;

    fn next_distribution(&self, context: &[Sym]) -> Result<NextSymbolDistribution, LmError>;

    /// Probability of a single outcome after `context`.
    fn conditional(&self, context: &[Sym], outcome: Outcome) -> Result<f64, LmError> {
        Ok(self.next_distribution(context)?.prob(outcome))
    }

    /// Draws `n` continuations of `context`, each stopped at EOS or after
    /// `max_len` symbols.
    fn sample_batch(
        &self,
        context: &[Sym],
        n: usize,
        max_len: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<TokenString>, LmError> {
        (0..n)
            .map(|_| ancestral_sample(self, context, max_len, rng))
            .collect()
    }

    /// Splits raw text into symbols of this model's alphabet.
    ///
    /// `leading_space` marks text that follows other text, which matters for
    /// subword vocabularies; whitespace-tokenized backends ignore it.
    fn tokenize(&self, text: &str, leading_space: bool) -> Result<TokenString, LmError> {
        let _ = leading_space;
        self.alphabet().encode(text.split_whitespace())
    }

    /// Short human-readable description, recorded in run manifests.
    fn identity(&self) -> String;
}

fn extended(context: &[Sym], w: &[Sym]) -> Vec<Sym> {
    let mut buf = Vec::with_capacity(context.len() + w.len() + 1);
    buf.extend_from_slice(context);
    buf.extend_from_slice(w);
    buf
}

/// `ln π(w | c)`, accumulated token by token.
pub fn log_prefix_probability<M: LanguageModel + ?Sized>(
    backend: &M,
    w: &[Sym],
    context: &[Sym],
) -> Result<f64, LmError> {
    let mut buf = extended(context, &[]);
    let mut total = 0.0;
    for &sym in w {
        total += backend.conditional(&buf, Outcome::Symbol(sym))?.ln();
        buf.push(sym);
    }
    Ok(total)
}

/// Probability that a continuation of `context` starts with `w`.
pub fn prefix_probability<M: LanguageModel + ?Sized>(
    backend: &M,
    w: &[Sym],
    context: &[Sym],
) -> Result<f64, LmError> {
    let mut buf = extended(context, &[]);
    let mut total = 1.0;
    for &sym in w {
        total *= backend.conditional(&buf, Outcome::Symbol(sym))?;
        buf.push(sym);
    }
    Ok(total)
}

/// Probability that the continuation of `context` is exactly `v`.
pub fn string_probability<M: LanguageModel + ?Sized>(
    backend: &M,
    v: &[Sym],
    context: &[Sym],
) -> Result<f64, LmError> {
    let prefix = prefix_probability(backend, v, context)?;
    let stop = backend.conditional(&extended(context, v), Outcome::Eos)?;
    Ok(prefix * stop)
}

/// `ln p(v | c)`; the log-space counterpart of [`string_probability`].
pub fn log_string_probability<M: LanguageModel + ?Sized>(
    backend: &M,
    v: &[Sym],
    context: &[Sym],
) -> Result<f64, LmError> {
    let prefix = log_prefix_probability(backend, v, context)?;
    let stop = backend.conditional(&extended(context, v), Outcome::Eos)?;
    Ok(prefix + stop.ln())
}

/// Ancestral sampling: draw symbols until EOS or until `max_len` symbols have
/// been produced. EOS itself is never part of the result.
pub fn ancestral_sample<M: LanguageModel + ?Sized>(
    backend: &M,
    context: &[Sym],
    max_len: usize,
    rng: &mut dyn RngCore,
) -> Result<TokenString, LmError> {
    let mut buf = extended(context, &[]);
    let start = buf.len();
    while buf.len() - start < max_len {
        let dist = backend.next_distribution(&buf)?;
        match dist.draw(rng.random::<f64>()) {
            Outcome::Eos => break,
            Outcome::Symbol(sym) => buf.push(sym),
        }
    }
    Ok(TokenString::from(buf.split_off(start)))
}

/// Single ancestral sample through the backend's own batch sampler.
pub fn sample<M: LanguageModel + ?Sized>(
    backend: &M,
    context: &[Sym],
    max_len: usize,
    rng: &mut dyn RngCore,
) -> Result<TokenString, LmError> {
    let mut batch = backend.sample_batch(context, 1, max_len, rng)?;
    Ok(batch.pop().unwrap_or_default())
}

/// Exact probabilities of every string up to a length bound.
#[derive(Debug, Clone, Default)]
pub struct Enumeration {
    pub probs: BTreeMap<TokenString, f64>,
    pub total_mass: f64,
}

fn check_enumeration_size(alphabet_len: usize, max_len: usize) -> Result<(), LmError> {
    let mut count: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=max_len {
        count = count.saturating_add(level);
        if count > ENUMERATION_LIMIT as u128 {
            return Err(LmError::EnumerationTooLarge {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
        level = level.saturating_mul(alphabet_len as u128);
    }
    Ok(())
}

/// Brute-force `p(v | c)` for every `v` with `|v| <= max_len`.
///
/// The reported mass is below one by exactly the probability of continuing
/// past `max_len` symbols.
pub fn enumerate_distribution<M: LanguageModel + ?Sized>(
    backend: &M,
    context: &[Sym],
    max_len: usize,
) -> Result<Enumeration, LmError> {
    enumerate(backend, context, max_len, false)
}

/// The distribution that [`ancestral_sample`] actually draws from under
/// truncation: strings shorter than `max_len` carry their string probability,
/// strings of length `max_len` carry their prefix probability. Total mass is
/// one up to rounding.
pub fn truncated_distribution<M: LanguageModel + ?Sized>(
    backend: &M,
    context: &[Sym],
    max_len: usize,
) -> Result<Enumeration, LmError> {
    enumerate(backend, context, max_len, true)
}

fn enumerate<M: LanguageModel + ?Sized>(
    backend: &M,
    context: &[Sym],
    max_len: usize,
    truncate: bool,
) -> Result<Enumeration, LmError> {
    check_enumeration_size(backend.alphabet().len(), max_len)?;
    let mut out = Enumeration::default();
    let mut buf = extended(context, &[]);
    let start = buf.len();
    walk(backend, &mut buf, start, max_len, 1.0, truncate, &mut out)?;
    out.total_mass = out.probs.values().sum();
    Ok(out)
}

fn walk<M: LanguageModel + ?Sized>(
    backend: &M,
    buf: &mut Vec<Sym>,
    start: usize,
    max_len: usize,
    prefix: f64,
    truncate: bool,
    out: &mut Enumeration,
) -> Result<(), LmError> {
    let depth = buf.len() - start;
    if depth == max_len && truncate {
        out.probs.insert(TokenString::from(&buf[start..]), prefix);
        return Ok(());
    }
    let dist = backend.next_distribution(buf)?;
    out.probs
        .insert(TokenString::from(&buf[start..]), prefix * dist.eos());
    if depth == max_len {
        return Ok(());
    }
    for (i, &p) in dist.symbol_probs().iter().enumerate() {
        buf.push(Sym(i as u32));
        walk(backend, buf, start, max_len, prefix * p, truncate, out)?;
        buf.pop();
    }
    Ok(())
}
