//! Generalized surprisal models: a warping function applied to the expected
//! value of a per-continuation scoring function.
//!
//! The catalog is addressable by stable names used by the CLI and cache files.

mod scoring;

use serde::{Deserialize, Serialize};

pub use scoring::{
    score_entropy, score_entropy_truncated, score_expected_info_value, score_indicator, score_info_value,
    score_next_symbol_info_value, score_next_symbol_probability, score_next_symbol_surprisal, score_pmi,
    score_semantic_update, score_similarity_adjusted, similarity_from_distance, ScoreContext, Scorer,
};

/// Constant added before taking logarithms of an expected score.
pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error("unknown measure {0:?}")]
    Unknown(String),
    #[error("measure {0} needs a representation provider")]
    MissingRepresentation(&'static str),
    #[error("measure {0} needs an inner sample batch")]
    MissingBatch(&'static str),
    #[error("inner batch has no element other than the scored one")]
    EmptyBatch,
    #[error("semantic update needs a non-empty context")]
    EmptyContext,
    #[error("semantic update needs a non-empty target")]
    EmptyTarget,
    #[error("zero probability on the exact path")]
    ZeroProbability,
    #[error(transparent)]
    Lm(#[from] crate::lm::LmError),
    #[error(transparent)]
    Representation(#[from] crate::representation::RepError),
}

/// Transformation applied to the expected score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warping {
    Identity,
    /// `−ln(x + ε)`
    NegLog { epsilon: f64 },
    /// `ln(x + ε)`
    Log { epsilon: f64 },
}

impl Warping {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Warping::Identity => x,
            Warping::NegLog { epsilon } => -(x + epsilon).ln(),
            Warping::Log { epsilon } => (x + epsilon).ln(),
        }
    }

    /// The warping without its stabilizing constant, used by closed forms.
    pub fn apply_exact(&self, x: f64) -> f64 {
        match *self {
            Warping::Identity => x,
            Warping::NegLog { .. } => -x.ln(),
            Warping::Log { .. } => x.ln(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Warping::Identity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringKind {
    Indicator,
    InfoValue,
    NextSymSurprisal,
    NextSymProbability,
    NextSymInfoValue,
    Entropy,
    ExpectedInfoValue,
    Pmi,
    SimilarityAdjusted,
    SemanticUpdate,
}

impl ScoringKind {
    /// Scorers that never look at the target.
    pub fn is_anticipatory(self) -> bool {
        matches!(
            self,
            ScoringKind::NextSymSurprisal
                | ScoringKind::NextSymProbability
                | ScoringKind::NextSymInfoValue
                | ScoringKind::Entropy
                | ScoringKind::ExpectedInfoValue
        )
    }

    /// Expectations computable from next-symbol distributions alone.
    pub fn has_closed_form(self) -> bool {
        matches!(
            self,
            ScoringKind::Indicator
                | ScoringKind::NextSymSurprisal
                | ScoringKind::NextSymProbability
                | ScoringKind::Pmi
        )
    }

    pub fn needs_representation(self) -> bool {
        matches!(
            self,
            ScoringKind::InfoValue
                | ScoringKind::NextSymInfoValue
                | ScoringKind::ExpectedInfoValue
                | ScoringKind::SimilarityAdjusted
                | ScoringKind::SemanticUpdate
        )
    }
}

/// A (warping, scoring) pair with its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsModel {
    pub name: String,
    pub warping: Warping,
    pub scoring: ScoringKind,
    pub anticipatory: bool,
    pub closed_form: bool,
}

pub const CATALOG: [&str; 11] = [
    "surprisal",
    "probability",
    "information_value",
    "exp_next_surprisal",
    "exp_next_probability",
    "exp_next_info_value",
    "entropy",
    "exp_info_value",
    "pmi",
    "sim_adjusted_surprisal",
    "semantic_update",
];

impl GsModel {
    pub fn new(name: impl Into<String>, warping: Warping, scoring: ScoringKind) -> Self {
        Self {
            name: name.into(),
            warping,
            anticipatory: scoring.is_anticipatory(),
            closed_form: scoring.has_closed_form(),
            scoring,
        }
    }

    /// Looks up a catalog entry; `epsilon` feeds the logarithmic warpings.
    pub fn from_name(name: &str, epsilon: f64) -> Result<Self, MeasureError> {
        use ScoringKind::*;
        let neglog = Warping::NegLog { epsilon };
        let (warping, scoring) = match name {
            "surprisal" => (neglog, Indicator),
            "probability" => (Warping::Identity, Indicator),
            "information_value" => (Warping::Identity, InfoValue),
            "exp_next_surprisal" => (Warping::Identity, NextSymSurprisal),
            "exp_next_probability" => (Warping::Identity, NextSymProbability),
            "exp_next_info_value" => (Warping::Identity, NextSymInfoValue),
            "entropy" => (Warping::Identity, Entropy),
            "exp_info_value" => (Warping::Identity, ExpectedInfoValue),
            "pmi" => (Warping::Log { epsilon }, Pmi),
            "sim_adjusted_surprisal" => (neglog, SimilarityAdjusted),
            "semantic_update" => (Warping::Identity, SemanticUpdate),
            other => return Err(MeasureError::Unknown(other.to_string())),
        };
        Ok(Self::new(name, warping, scoring))
    }

    pub fn catalog(epsilon: f64) -> Vec<GsModel> {
        CATALOG
            .iter()
            .map(|n| Self::from_name(n, epsilon).expect("catalog names resolve"))
            .collect()
    }

    /// Multi-token targets multiply for the probability family and sum otherwise.
    pub fn aggregates_by_product(&self) -> bool {
        self.warping.is_identity() && self.scoring == ScoringKind::Indicator
    }
}

pub fn is_anticipatory(model: &GsModel) -> bool {
    model.anticipatory
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let m = |n| GsModel::from_name(n, DEFAULT_EPSILON).unwrap();
        assert!(is_anticipatory(&m("entropy")));
        assert!(!is_anticipatory(&m("surprisal")));
        assert!(is_anticipatory(&m("exp_info_value")));
        for model in GsModel::catalog(DEFAULT_EPSILON) {
            let expected = matches!(
                model.name.as_str(),
                "exp_next_surprisal" | "exp_next_probability" | "exp_next_info_value" | "entropy" | "exp_info_value"
            );
            assert_eq!(model.anticipatory, expected, "{}", model.name);
            let closed = matches!(
                model.name.as_str(),
                "surprisal" | "probability" | "exp_next_surprisal" | "exp_next_probability" | "pmi"
            );
            assert_eq!(model.closed_form, closed, "{}", model.name);
        }
        assert!(matches!(GsModel::from_name("warp", 1e-4), Err(MeasureError::Unknown(_))));
    }

    #[test]
    fn warpings() {
        assert_eq!(Warping::Identity.apply(0.3), 0.3);
        let w = Warping::NegLog { epsilon: 1e-4 };
        assert!(w.apply(0.0).is_finite());
        assert_eq!(w.apply(0.5), -(0.5f64 + 1e-4).ln());
        assert_eq!(w.apply_exact(0.5), -(0.5f64).ln());
    }
}
