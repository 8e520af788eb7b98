//! Generalized surprisal: measures of how a language model's predictions
//! relate to an observed continuation, estimated in closed form or by Monte
//! Carlo simulation, with tooling for estimator-variance analysis and
//! psycholinguistic predictive-power evaluation.

pub mod analysis;
pub mod config;
pub mod estimator;
pub mod eval;
pub mod lm;
pub mod measures;
pub mod representation;
pub mod testbed;

pub use analysis::{BootstrapReport, CorrelationMatrix, CorrelationMethod, Item};
pub use config::{load_config, RunConfig};
pub use estimator::{aggregate_word, simulate_batch, BatchCache, Estimate, EstimateCache, Estimator, EstimatorError, Mode};
pub use eval::{EvalReport, RegressionSpec, Stimulus};
pub use lm::{
    read_corpus, Alphabet, LanguageModel, LmError, NGramBackend, NextSymbolDistribution, Outcome, RemoteBackend,
    RemoteConfig, Sym, TokenString,
};
pub use measures::{GsModel, MeasureError, ScoringKind, Warping, DEFAULT_EPSILON};
pub use representation::{BoundEmbeddings, EmbeddingTable, RepresentationProvider};
