//! Small hand-specified language models with known closed forms.

use super::{Alphabet, LanguageModel, LmError, NextSymbolDistribution, Sym};

/// Same next-symbol distribution after every context.
#[derive(Debug, Clone)]
pub struct Memoryless {
    alphabet: Alphabet,
    dist: NextSymbolDistribution,
}

impl Memoryless {
    pub fn new<S: AsRef<str>>(symbols: &[S], probs: &[f64], eos: f64) -> Result<Self, LmError> {
        let alphabet = Alphabet::new(symbols.iter().map(|s| s.as_ref().to_string()), Alphabet::DEFAULT_EOS)?;
        let dist = NextSymbolDistribution::new(probs.to_vec(), eos)?;
        if probs.len() != alphabet.len() {
            return Err(LmError::InvalidDistribution(format!(
                "{} probabilities for {} symbols",
                probs.len(),
                alphabet.len()
            )));
        }
        Ok(Self { alphabet, dist })
    }

    /// `p(a) = 0.5, p(b) = 0.3, p(EOS) = 0.2` after every context.
    pub fn toy() -> Self {
        Self::new(&["a", "b"], &[0.5, 0.3], 0.2).expect("valid fixture")
    }

    /// Uniform over the symbols, with `eos` reserved for stopping.
    pub fn uniform<S: AsRef<str>>(symbols: &[S], eos: f64) -> Self {
        let p = (1.0 - eos) / symbols.len() as f64;
        Self::new(symbols, &vec![p; symbols.len()], eos).expect("valid fixture")
    }
}

impl LanguageModel for Memoryless {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn next_distribution(&self, context: &[Sym]) -> Result<NextSymbolDistribution, LmError> {
        self.alphabet.check(context)?;
        Ok(self.dist.clone())
    }

    fn identity(&self) -> String {
        format!("memoryless(vocab={})", self.alphabet.len())
    }
}

/// Emits `script[|c|]` with probability one after a context `c`, and EOS once
/// the script is exhausted. From the empty context it generates exactly the script.
#[derive(Debug, Clone)]
pub struct Deterministic {
    alphabet: Alphabet,
    script: Vec<Sym>,
}

impl Deterministic {
    pub fn new(alphabet: Alphabet, script: Vec<Sym>) -> Result<Self, LmError> {
        alphabet.check(&script)?;
        Ok(Self { alphabet, script })
    }

    pub fn from_script(symbols: &[&str], script: &[&str]) -> Self {
        let alphabet = Alphabet::new(symbols.iter().copied(), Alphabet::DEFAULT_EOS).expect("valid fixture");
        let script = alphabet.encode(script).expect("script over alphabet").into_inner();
        Self { alphabet, script }
    }
}

impl LanguageModel for Deterministic {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn next_distribution(&self, context: &[Sym]) -> Result<NextSymbolDistribution, LmError> {
        self.alphabet.check(context)?;
        let mut probs = vec![0.0; self.alphabet.len()];
        match self.script.get(context.len()) {
            Some(sym) => {
                probs[sym.index()] = 1.0;
                NextSymbolDistribution::new(probs, 0.0)
            }
            None => NextSymbolDistribution::new(probs, 1.0),
        }
    }

    fn identity(&self) -> String {
        format!("deterministic(len={})", self.script.len())
    }
}
