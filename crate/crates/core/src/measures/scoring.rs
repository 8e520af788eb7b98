use std::collections::HashMap;
use std::sync::Mutex;

use super::{MeasureError, ScoringKind};
use crate::lm::{
    log_prefix_probability, log_string_probability, prefix_probability, LanguageModel, NextSymbolDistribution,
    Outcome, Sym, TokenString,
};
use crate::representation::{activations, cosine_distance, represent, unit, RepresentationProvider};

/// `1{w ⪯ v}`.
pub fn score_indicator(v: &[Sym], w: &[Sym]) -> f64 {
    if v.starts_with(w) {
        1.0
    } else {
        0.0
    }
}

/// Cosine distance between the mean-pooled representations of `v` and `w`.
pub fn score_info_value<P: RepresentationProvider + ?Sized>(v: &[Sym], w: &[Sym], rep: &P) -> Result<f64, MeasureError> {
    Ok(cosine_distance(&represent(rep, v)?, &represent(rep, w)?)?)
}

fn first_prob(v: &[Sym], dist: &NextSymbolDistribution) -> f64 {
    dist.prob(Outcome::first_of(v))
}

/// `−ln π(v₁ | c)`, or `−ln p(ε | c)` for the empty continuation.
pub fn score_next_symbol_surprisal(v: &[Sym], dist: &NextSymbolDistribution) -> f64 {
    -first_prob(v, dist).max(f64::MIN_POSITIVE).ln()
}

/// `π(v₁ | c)`, or `p(ε | c)` for the empty continuation.
pub fn score_next_symbol_probability(v: &[Sym], dist: &NextSymbolDistribution) -> f64 {
    first_prob(v, dist)
}

fn first_symbol_info<P: RepresentationProvider + ?Sized>(
    first: Outcome,
    dist: &NextSymbolDistribution,
    rep: &P,
) -> Result<f64, MeasureError> {
    let anchor = rep.vector(first)?;
    let mut total = 0.0;
    for (u, p) in dist.outcomes() {
        if p == 0.0 {
            continue;
        }
        total += p * cosine_distance(&anchor, &rep.vector(u)?)?;
    }
    Ok(total)
}

/// `Σ_u π̃(u | c) · d(v₁, u)` over `Σ ∪ {EOS}`, with the EOS vector standing in
/// for the empty string on either side.
pub fn score_next_symbol_info_value<P: RepresentationProvider + ?Sized>(
    v: &[Sym],
    dist: &NextSymbolDistribution,
    rep: &P,
) -> Result<f64, MeasureError> {
    first_symbol_info(Outcome::first_of(v), dist, rep)
}

/// `−ln p(v | c)`.
pub fn score_entropy<M: LanguageModel + ?Sized>(backend: &M, v: &[Sym], context: &[Sym]) -> Result<f64, MeasureError> {
    let lp = log_string_probability(backend, v, context)?;
    if lp == f64::NEG_INFINITY {
        return Err(MeasureError::ZeroProbability);
    }
    Ok(-lp)
}

/// `−ln π(v | c)`: the score of a continuation cut off at the length bound,
/// which carries no EOS factor.
pub fn score_entropy_truncated<M: LanguageModel + ?Sized>(
    backend: &M,
    v: &[Sym],
    context: &[Sym],
) -> Result<f64, MeasureError> {
    let lp = log_prefix_probability(backend, v, context)?;
    if lp == f64::NEG_INFINITY {
        return Err(MeasureError::ZeroProbability);
    }
    Ok(-lp)
}

/// Mean distance from `v` to the batch, skipping position `index` when `v`
/// is itself a member of the batch. Computes every pair directly.
pub fn score_expected_info_value<P: RepresentationProvider + ?Sized>(
    v: &[Sym],
    index: Option<usize>,
    batch: &[TokenString],
    rep: &P,
) -> Result<f64, MeasureError> {
    let rv = represent(rep, v)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (j, other) in batch.iter().enumerate() {
        if Some(j) == index {
            continue;
        }
        total += cosine_distance(&rv, &represent(rep, other)?)?;
        count += 1;
    }
    if count == 0 {
        return Err(MeasureError::EmptyBatch);
    }
    Ok(total / count as f64)
}

/// `p(c) · 1{w₁ ⪯ v}`; an empty target gates nothing.
pub fn score_pmi(v: &[Sym], w: &[Sym], context_prob: f64) -> f64 {
    context_prob * score_indicator(v, &w[..w.len().min(1)])
}

/// Similarity in `[0, 1]` from a cosine distance in `[0, 2]`.
pub fn similarity_from_distance(d: f64) -> f64 {
    (1.0 - d / 2.0).clamp(0.0, 1.0)
}

pub fn score_similarity_adjusted<P: RepresentationProvider + ?Sized>(
    v: &[Sym],
    w: &[Sym],
    rep: &P,
) -> Result<f64, MeasureError> {
    Ok(similarity_from_distance(score_info_value(v, w, rep)?))
}

fn activation_shift<P: RepresentationProvider + ?Sized>(w: &[Sym], context: &[Sym], rep: &P) -> Result<f64, MeasureError> {
    let last = *context.last().ok_or(MeasureError::EmptyContext)?;
    let first = *w.first().ok_or(MeasureError::EmptyTarget)?;
    let a = activations(rep, first)?;
    let b = activations(rep, last)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum())
}

/// `1{w₁ ⪯ v} · Σᵢ |aᵢ(w₁) − aᵢ(c_last)|` with logistic activations of embeddings.
pub fn score_semantic_update<P: RepresentationProvider + ?Sized>(
    v: &[Sym],
    w: &[Sym],
    context: &[Sym],
    rep: &P,
) -> Result<f64, MeasureError> {
    let shift = activation_shift(w, context, rep)?;
    Ok(score_indicator(v, &w[..1]) * shift)
}

/// Everything a scorer may consult besides the continuation and the target.
#[derive(Clone, Copy)]
pub struct ScoreContext<'a> {
    pub backend: &'a dyn LanguageModel,
    pub rep: Option<&'a dyn RepresentationProvider>,
    pub context: &'a [Sym],
    /// Sample batch for nested expectations.
    pub inner_batch: Option<&'a [TokenString]>,
    /// Length bound the scored continuations were drawn under; continuations
    /// of exactly this length were cut off rather than stopped.
    pub max_len: Option<usize>,
}

enum Prepared {
    Indicator,
    Distance(Vec<f64>),
    Similarity(Vec<f64>),
    NextSym(NextSymbolDistribution),
    FirstSymbolInfo {
        dist: NextSymbolDistribution,
        memo: Mutex<HashMap<Outcome, f64>>,
    },
    Entropy,
    Pairwise {
        units: Vec<Vec<f64>>,
        sum: Vec<f64>,
    },
    Pmi(f64),
    Gate(f64),
}

/// A scoring function bound to one context and target, with per-context work
/// done up front. Anticipatory scorers never see the target.
pub struct Scorer<'a> {
    kind: ScoringKind,
    ctx: ScoreContext<'a>,
    target: Vec<Sym>,
    prepared: Prepared,
}

impl<'a> Scorer<'a> {
    pub fn new(kind: ScoringKind, ctx: ScoreContext<'a>, target: &[Sym]) -> Result<Self, MeasureError> {
        let name = kind_name(kind);
        let rep = || ctx.rep.ok_or(MeasureError::MissingRepresentation(name));
        let target = if kind.is_anticipatory() { Vec::new() } else { target.to_vec() };
        let prepared = match kind {
            ScoringKind::Indicator => Prepared::Indicator,
            ScoringKind::InfoValue => Prepared::Distance(represent(rep()?, &target)?),
            ScoringKind::SimilarityAdjusted => Prepared::Similarity(represent(rep()?, &target)?),
            ScoringKind::NextSymSurprisal | ScoringKind::NextSymProbability => {
                Prepared::NextSym(ctx.backend.next_distribution(ctx.context)?)
            }
            ScoringKind::NextSymInfoValue => {
                rep()?;
                Prepared::FirstSymbolInfo {
                    dist: ctx.backend.next_distribution(ctx.context)?,
                    memo: Mutex::new(HashMap::new()),
                }
            }
            ScoringKind::Entropy => Prepared::Entropy,
            ScoringKind::ExpectedInfoValue => {
                let rep = rep()?;
                let batch = ctx.inner_batch.ok_or(MeasureError::MissingBatch(name))?;
                if batch.is_empty() {
                    return Err(MeasureError::EmptyBatch);
                }
                let units = batch
                    .iter()
                    .map(|s| Ok(unit(&represent(rep, s)?)?))
                    .collect::<Result<Vec<_>, MeasureError>>()?;
                let mut sum = vec![0.0; rep.dim()];
                for u in &units {
                    sum.iter_mut().zip(u).for_each(|(s, x)| *s += x);
                }
                Prepared::Pairwise { units, sum }
            }
            ScoringKind::Pmi => Prepared::Pmi(prefix_probability(ctx.backend, ctx.context, &[])?),
            ScoringKind::SemanticUpdate => Prepared::Gate(activation_shift(&target, ctx.context, rep()?)?),
        };
        Ok(Self {
            kind,
            ctx,
            target,
            prepared,
        })
    }

    pub fn kind(&self) -> ScoringKind {
        self.kind
    }

    /// Scores continuation `v`; `batch_index` is its position in the inner
    /// batch when it was drawn from that batch.
    pub fn score(&self, v: &[Sym], batch_index: Option<usize>) -> Result<f64, MeasureError> {
        let rep = || self.ctx.rep.ok_or(MeasureError::MissingRepresentation(kind_name(self.kind)));
        match &self.prepared {
            Prepared::Indicator => Ok(score_indicator(v, &self.target)),
            Prepared::Distance(w) => Ok(cosine_distance(&represent(rep()?, v)?, w)?),
            Prepared::Similarity(w) => Ok(similarity_from_distance(cosine_distance(&represent(rep()?, v)?, w)?)),
            Prepared::NextSym(dist) => Ok(match self.kind {
                ScoringKind::NextSymSurprisal => score_next_symbol_surprisal(v, dist),
                _ => score_next_symbol_probability(v, dist),
            }),
            Prepared::FirstSymbolInfo { dist, memo } => {
                let first = Outcome::first_of(v);
                if let Some(&x) = memo.lock().unwrap_or_else(|e| e.into_inner()).get(&first) {
                    return Ok(x);
                }
                let x = first_symbol_info(first, dist, rep()?)?;
                memo.lock().unwrap_or_else(|e| e.into_inner()).insert(first, x);
                Ok(x)
            }
            Prepared::Entropy => {
                if self.ctx.max_len == Some(v.len()) {
                    score_entropy_truncated(self.ctx.backend, v, self.ctx.context)
                } else {
                    score_entropy(self.ctx.backend, v, self.ctx.context)
                }
            }
            Prepared::Pairwise { units, sum } => {
                // Σ_{j≠i} (1 − ûᵢ·ûⱼ) / (n − 1) = 1 − ûᵢ·(S − ûᵢ) / (n − 1)
                let n = units.len();
                let (u, others, count) = match batch_index {
                    Some(i) => {
                        let ui = units.get(i).ok_or(MeasureError::EmptyBatch)?;
                        let rest: Vec<f64> = sum.iter().zip(ui).map(|(s, x)| s - x).collect();
                        (ui.clone(), rest, n - 1)
                    }
                    None => (unit(&represent(rep()?, v)?)?, sum.clone(), n),
                };
                if count == 0 {
                    return Err(MeasureError::EmptyBatch);
                }
                let dot: f64 = u.iter().zip(&others).map(|(a, b)| a * b).sum();
                Ok((1.0 - dot / count as f64).clamp(0.0, 2.0))
            }
            Prepared::Pmi(pc) => Ok(score_pmi(v, &self.target, *pc)),
            Prepared::Gate(shift) => Ok(score_indicator(v, &self.target[..1]) * shift),
        }
    }
}

fn kind_name(kind: ScoringKind) -> &'static str {
    match kind {
        ScoringKind::Indicator => "indicator",
        ScoringKind::InfoValue => "info_value",
        ScoringKind::NextSymSurprisal => "next_sym_surprisal",
        ScoringKind::NextSymProbability => "next_sym_probability",
        ScoringKind::NextSymInfoValue => "next_sym_info_value",
        ScoringKind::Entropy => "entropy",
        ScoringKind::ExpectedInfoValue => "expected_info_value",
        ScoringKind::Pmi => "pmi",
        ScoringKind::SimilarityAdjusted => "similarity_adjusted",
        ScoringKind::SemanticUpdate => "semantic_update",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::fixtures::{Deterministic, Memoryless};
    use crate::lm::Alphabet;
    use crate::representation::{BoundEmbeddings, EmbeddingTable};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const D_AB_A: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

    fn orthonormal(alphabet: &Alphabet) -> BoundEmbeddings {
        let mut v = HashMap::new();
        v.insert("a".to_string(), vec![1.0, 0.0, 0.0]);
        v.insert("b".to_string(), vec![0.0, 1.0, 0.0]);
        EmbeddingTable::new(3, v, Some(vec![0.0, 0.0, 1.0])).unwrap().bind(alphabet)
    }

    fn s(lm: &dyn LanguageModel, text: &str) -> TokenString {
        lm.alphabet().encode(text.chars().map(|c| c.to_string())).unwrap()
    }

    #[test]
    fn indicator_examples() {
        let lm = Memoryless::toy();
        assert_eq!(score_indicator(&s(&lm, "abb"), &s(&lm, "a")), 1.0);
        assert_eq!(score_indicator(&s(&lm, "ba"), &s(&lm, "a")), 0.0);
        assert_eq!(score_indicator(&s(&lm, "ba"), &[]), 1.0);
    }

    #[test]
    fn info_value_examples() {
        let lm = Memoryless::toy();
        let rep = orthonormal(lm.alphabet());
        assert_abs_diff_eq!(score_info_value(&s(&lm, "ab"), &s(&lm, "a"), &rep).unwrap(), D_AB_A, epsilon = 1e-12);
        assert_abs_diff_eq!(score_info_value(&s(&lm, "ab"), &s(&lm, "ab"), &rep).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(score_info_value(&s(&lm, "b"), &s(&lm, "a"), &rep).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn next_symbol_examples() {
        let lm = Memoryless::toy();
        let rep = orthonormal(lm.alphabet());
        let d = lm.next_distribution(&[]).unwrap();
        assert_abs_diff_eq!(score_next_symbol_surprisal(&s(&lm, "ab"), &d), 0.5f64.ln().abs(), epsilon = 1e-15);
        assert_abs_diff_eq!(score_next_symbol_surprisal(&[], &d), -(0.2f64.ln()), epsilon = 1e-15);
        assert_abs_diff_eq!(score_next_symbol_probability(&s(&lm, "ba"), &d), 0.3);
        assert_abs_diff_eq!(score_next_symbol_probability(&[], &d), 0.2);
        assert_abs_diff_eq!(score_next_symbol_info_value(&s(&lm, "ab"), &d, &rep).unwrap(), 0.5, epsilon = 1e-12);

        let det = Deterministic::from_script(&["a", "b"], &["a"]);
        let dd = det.next_distribution(&[]).unwrap();
        let drep = orthonormal(det.alphabet());
        assert_eq!(score_next_symbol_surprisal(&s(&det, "a"), &dd), 0.0);
        assert_eq!(score_next_symbol_probability(&s(&det, "a"), &dd), 1.0);
        assert_eq!(score_next_symbol_info_value(&s(&det, "a"), &dd, &drep).unwrap(), 0.0);
    }

    #[test]
    fn entropy_examples() {
        let lm = Memoryless::toy();
        assert_abs_diff_eq!(score_entropy(&lm, &s(&lm, "a"), &[]).unwrap(), -(0.1f64.ln()), epsilon = 1e-12);
        let det = Deterministic::from_script(&["a", "b"], &["a", "b"]);
        assert_eq!(score_entropy(&det, &s(&det, "ab"), &[]).unwrap(), 0.0);
        assert!(matches!(score_entropy(&det, &s(&det, "b"), &[]), Err(MeasureError::ZeroProbability)));
    }

    #[test]
    fn expected_info_value_examples() {
        let lm = Memoryless::toy();
        let rep = orthonormal(lm.alphabet());
        let batch = vec![s(&lm, "a"), s(&lm, "b")];
        assert_abs_diff_eq!(
            score_expected_info_value(&batch[0], Some(0), &batch, &rep).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let same = vec![s(&lm, "ab"); 4];
        assert_abs_diff_eq!(score_expected_info_value(&same[0], Some(0), &same, &rep).unwrap(), 0.0, epsilon = 1e-12);
        let batch = vec![s(&lm, "a"), s(&lm, "b"), s(&lm, "ab")];
        assert_abs_diff_eq!(
            score_expected_info_value(&batch[2], Some(2), &batch, &rep).unwrap(),
            D_AB_A,
            epsilon = 1e-12
        );
        let single = vec![s(&lm, "a")];
        assert!(matches!(
            score_expected_info_value(&single[0], Some(0), &single, &rep),
            Err(MeasureError::EmptyBatch)
        ));
    }

    #[test]
    fn pmi_examples() {
        let lm = Memoryless::toy();
        let pc = prefix_probability(&lm, &s(&lm, "a"), &[]).unwrap();
        let g = score_pmi(&s(&lm, "ba"), &s(&lm, "b"), pc);
        assert_abs_diff_eq!(g, 0.5);
        assert_eq!(score_pmi(&s(&lm, "ab"), &s(&lm, "b"), pc), 0.0);
        assert_eq!(score_pmi(&s(&lm, "ab"), &s(&lm, "a"), 1.0), 1.0);
    }

    #[test]
    fn similarity_examples() {
        let lm = Memoryless::toy();
        let rep = orthonormal(lm.alphabet());
        let z = score_similarity_adjusted(&s(&lm, "ab"), &s(&lm, "a"), &rep).unwrap();
        assert_abs_diff_eq!(z, 1.0 - D_AB_A / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(-(z.ln()), 0.1584, epsilon = 1e-4);
        assert_abs_diff_eq!(similarity_from_distance(2.0), 0.0);
        assert_abs_diff_eq!(score_similarity_adjusted(&s(&lm, "a"), &s(&lm, "a"), &rep).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn semantic_update_examples() {
        let lm = Memoryless::toy();
        let rep = orthonormal(lm.alphabet());
        let logistic1 = 1.0 / (1.0 + (-1.0f64).exp());
        let expected = 2.0 * (logistic1 - 0.5);
        let g = score_semantic_update(&s(&lm, "ab"), &s(&lm, "a"), &s(&lm, "ab"), &rep).unwrap();
        assert_abs_diff_eq!(g, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(g, 0.4621, epsilon = 1e-4);
        assert_eq!(score_semantic_update(&s(&lm, "b"), &s(&lm, "a"), &s(&lm, "b"), &rep).unwrap(), 0.0);
        assert_eq!(score_semantic_update(&s(&lm, "a"), &s(&lm, "a"), &s(&lm, "a"), &rep).unwrap(), 0.0);
        assert!(matches!(
            score_semantic_update(&s(&lm, "a"), &s(&lm, "a"), &[], &rep),
            Err(MeasureError::EmptyContext)
        ));
    }

    #[test]
    fn pairwise_identity_matches_direct_sum() {
        let lm = Memoryless::toy();
        let rep = orthonormal(lm.alphabet());
        let batch: Vec<TokenString> = ["a", "ab", "bba", "", "b", "aab"].iter().map(|t| s(&lm, t)).collect();
        let ctx = ScoreContext {
            backend: &lm,
            rep: Some(&rep),
            context: &[],
            inner_batch: Some(&batch),
            max_len: None,
        };
        let scorer = Scorer::new(ScoringKind::ExpectedInfoValue, ctx, &[]).unwrap();
        for (i, v) in batch.iter().enumerate() {
            let fast = scorer.score(v, Some(i)).unwrap();
            let slow = score_expected_info_value(v, Some(i), &batch, &rep).unwrap();
            assert_abs_diff_eq!(fast, slow, epsilon = 1e-12);
        }
        let outside = s(&lm, "abab");
        assert_abs_diff_eq!(
            scorer.score(&outside, None).unwrap(),
            score_expected_info_value(&outside, None, &batch, &rep).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn scorer_agrees_with_free_functions() {
        let lm = Memoryless::toy();
        let rep = orthonormal(lm.alphabet());
        let c = s(&lm, "ab");
        let w = s(&lm, "a");
        let ctx = ScoreContext {
            backend: &lm,
            rep: Some(&rep),
            context: &c,
            inner_batch: None,
            max_len: Some(3),
        };
        let dist = lm.next_distribution(&c).unwrap();
        for v in ["", "a", "ab", "bab", "ba"].iter().map(|t| s(&lm, t)) {
            let check = |kind, expected: f64| {
                let got = Scorer::new(kind, ctx, &w).unwrap().score(&v, None).unwrap();
                assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
            };
            check(ScoringKind::Indicator, score_indicator(&v, &w));
            check(ScoringKind::InfoValue, score_info_value(&v, &w, &rep).unwrap());
            check(ScoringKind::NextSymSurprisal, score_next_symbol_surprisal(&v, &dist));
            check(ScoringKind::NextSymProbability, score_next_symbol_probability(&v, &dist));
            check(ScoringKind::NextSymInfoValue, score_next_symbol_info_value(&v, &dist, &rep).unwrap());
            let entropy = if v.len() == 3 {
                score_entropy_truncated(&lm, &v, &c).unwrap()
            } else {
                score_entropy(&lm, &v, &c).unwrap()
            };
            check(ScoringKind::Entropy, entropy);
            check(ScoringKind::Pmi, score_pmi(&v, &w, 0.15));
            check(ScoringKind::SimilarityAdjusted, score_similarity_adjusted(&v, &w, &rep).unwrap());
            check(ScoringKind::SemanticUpdate, score_semantic_update(&v, &w, &c, &rep).unwrap());
        }
    }

    fn arb_string() -> impl Strategy<Value = Vec<u32>> {
        prop::collection::vec(0u32..2, 0..6)
    }

    proptest! {
        #[test]
        fn anticipatory_scorers_ignore_target(v in arb_string(), w1 in arb_string(), w2 in arb_string(), c in arb_string()) {
            let lm = Memoryless::toy();
            let rep = orthonormal(lm.alphabet());
            let to = |x: Vec<u32>| TokenString(x.into_iter().map(Sym).collect());
            let (v, w1, w2, c) = (to(v), to(w1), to(w2), to(c));
            let batch = vec![v.clone(), to(vec![0, 1]), to(vec![])];
            let ctx = ScoreContext { backend: &lm, rep: Some(&rep), context: &c, inner_batch: Some(&batch), max_len: Some(6) };
            for kind in [ScoringKind::NextSymSurprisal, ScoringKind::NextSymProbability, ScoringKind::NextSymInfoValue,
                         ScoringKind::Entropy, ScoringKind::ExpectedInfoValue] {
                let a = Scorer::new(kind, ctx, &w1).unwrap().score(&v, Some(0)).unwrap();
                let b = Scorer::new(kind, ctx, &w2).unwrap().score(&v, Some(0)).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn indicator_gate_properties(v in arb_string(), w in arb_string()) {
            let to = |x: Vec<u32>| x.into_iter().map(Sym).collect::<Vec<_>>();
            let (v, w) = (to(v), to(w));
            prop_assert_eq!(score_indicator(&v, &w), score_indicator(&v, &w) * score_indicator(&w, &w));
            prop_assert_eq!(score_indicator(&v, &[]), 1.0);
        }

        #[test]
        fn distance_scores_are_symmetric_and_bounded(v in arb_string(), w in arb_string()) {
            let lm = Memoryless::toy();
            let rep = orthonormal(lm.alphabet());
            let to = |x: Vec<u32>| x.into_iter().map(Sym).collect::<Vec<_>>();
            let (v, w) = (to(v), to(w));
            let d = score_info_value(&v, &w, &rep).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert_eq!(d, score_info_value(&w, &v, &rep).unwrap());
            prop_assert!(score_info_value(&v, &v, &rep).unwrap() < 1e-12);
            let z = score_similarity_adjusted(&v, &w, &rep).unwrap();
            prop_assert!((0.0..=1.0).contains(&z));
            let dist = lm.next_distribution(&[]).unwrap();
            let p = score_next_symbol_probability(&v, &dist);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
