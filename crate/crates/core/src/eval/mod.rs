//! Predictive-power evaluation: datasets of stimuli with human measurements,
//! regression designs over baseline and target predictors, ordinary least
//! squares, cross-validated ΔR² and paired permutation tests.

mod cv;
mod dataset;
mod design;
mod ols;

pub use cv::{delta_r2_cv, fold_assignment, permutation_test, EvalReport, RegressionSpec};
pub use dataset::{
    laplace_cloze, load_dataset, load_frequencies, parse_dataset, parse_frequencies, Frequencies, Stimulus,
    BASELINE_PREDICTORS, OOV_FREQUENCY_PER_MILLION,
};
pub use design::{build_design, Design, PredictorValues};
pub use ols::{ols_fit, r2, r2_out_of_sample, OlsFit};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}, line {line}: {message}")]
    Row { path: String, line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no rows left after dropping incomplete ones ({dropped} dropped)")]
    EmptyDesign { dropped: usize },
    #[error("{rows} rows cannot be split into {folds} folds")]
    DegenerateFolds { rows: usize, folds: usize },
    #[error("{0}")]
    Invalid(String),
}
