use super::{LmError, Outcome, Sym};

/// Tolerance on the total mass of a next-symbol distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Probabilities over `Σ ∪ {EOS}` conditioned on some context.
#[derive(Clone, Debug, PartialEq)]
pub struct NextSymbolDistribution {
    symbols: Vec<f64>,
    eos: f64,
}

impl NextSymbolDistribution {
    pub fn new(symbols: Vec<f64>, eos: f64) -> Result<Self, LmError> {
        let bad = |m: String| Err(LmError::InvalidDistribution(m));
        if let Some((i, p)) = symbols
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return bad(format!("probability of symbol {i} is {p}"));
        }
        if !eos.is_finite() || eos < 0.0 {
            return bad(format!("EOS probability is {eos}"));
        }
        let total: f64 = symbols.iter().sum::<f64>() + eos;
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return bad(format!("probabilities sum to {total}"));
        }
        Ok(Self { symbols, eos })
    }

    /// Builds a distribution from natural-log probabilities that are only
    /// required to sum to one within `tolerance`; the result is renormalized.
    pub fn from_logprobs(logprobs: &[f64], eos_logprob: f64, tolerance: f64) -> Result<Self, LmError> {
        if let Some((i, lp)) = logprobs.iter().enumerate().find(|(_, lp)| lp.is_nan() || **lp == f64::INFINITY) {
            return Err(LmError::InvalidDistribution(format!(
                "log-probability of symbol {i} is {lp}"
            )));
        }
        if eos_logprob.is_nan() || eos_logprob == f64::INFINITY {
            return Err(LmError::InvalidDistribution(format!(
                "EOS log-probability is {eos_logprob}"
            )));
        }
        let mut probs: Vec<f64> = logprobs.iter().map(|lp| lp.exp()).collect();
        let mut eos = eos_logprob.exp();
        let total: f64 = probs.iter().sum::<f64>() + eos;
        if (total - 1.0).abs() > tolerance {
            return Err(LmError::InvalidDistribution(format!(
                "probabilities sum to {total}, outside tolerance {tolerance}"
            )));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        eos /= total;
        Self::new(probs, eos)
    }

    pub fn symbol_probs(&self) -> &[f64] {
        &self.symbols
    }

    pub fn eos(&self) -> f64 {
        self.eos
    }

    pub fn prob(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Symbol(s) => self.symbols[s.index()],
            Outcome::Eos => self.eos,
        }
    }

    /// Every outcome with its probability, EOS first.
    pub fn outcomes(&self) -> impl Iterator<Item = (Outcome, f64)> + '_ {
        std::iter::once((Outcome::Eos, self.eos)).chain(
            self.symbols
                .iter()
                .enumerate()
                .map(|(i, &p)| (Outcome::Symbol(Sym(i as u32)), p)),
        )
    }

    /// Inverse-CDF lookup for `u ∈ [0, 1)`, walking EOS first and then the
    /// symbols in alphabet order.
    pub fn draw(&self, u: f64) -> Outcome {
        let mut acc = 0.0;
        let mut last_positive = Outcome::Eos;
        for (outcome, p) in self.outcomes() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last_positive = outcome;
            if u < acc {
                return outcome;
            }
        }
        // rounding left u just above the accumulated mass
        last_positive
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid() {
        assert!(NextSymbolDistribution::new(vec![0.5, 0.6], 0.0).is_err());
        assert!(NextSymbolDistribution::new(vec![-0.1, 0.6], 0.5).is_err());
        assert!(NextSymbolDistribution::new(vec![f64::NAN], 1.0).is_err());
        assert!(NextSymbolDistribution::new(vec![0.5, 0.3], 0.2).is_ok());
    }

    #[test]
    fn draw_walks_eos_first() {
        let d = NextSymbolDistribution::new(vec![0.5, 0.3], 0.2).unwrap();
        assert_eq!(d.draw(0.0), Outcome::Eos);
        assert_eq!(d.draw(0.19), Outcome::Eos);
        assert_eq!(d.draw(0.2), Outcome::Symbol(Sym(0)));
        assert_eq!(d.draw(0.75), Outcome::Symbol(Sym(1)));
        assert_eq!(d.draw(0.9999999999999999), Outcome::Symbol(Sym(1)));
    }

    #[test]
    fn zero_mass_outcomes_are_never_drawn() {
        let d = NextSymbolDistribution::new(vec![1.0, 0.0], 0.0).unwrap();
        for u in [0.0, 0.5, 0.999] {
            assert_eq!(d.draw(u), Outcome::Symbol(Sym(0)));
        }
    }

    #[test]
    fn logprobs_are_renormalized() {
        let d = NextSymbolDistribution::from_logprobs(&[0.5f64.ln(), 0.30001f64.ln()], 0.2f64.ln(), 1e-4)
            .unwrap();
        let total: f64 = d.symbol_probs().iter().sum::<f64>() + d.eos();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(NextSymbolDistribution::from_logprobs(&[0.9f64.ln()], 0.2f64.ln(), 1e-4).is_err());
    }
}
