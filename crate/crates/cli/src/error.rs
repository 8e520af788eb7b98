use std::fmt;

use gensurp_core::analysis::AnalysisError;
use gensurp_core::config::ConfigError;
use gensurp_core::estimator::CacheError;
use gensurp_core::eval::EvalError;
use gensurp_core::representation::RepError;
use gensurp_core::{EstimatorError, LmError, MeasureError};

/// Failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Backend,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Data,
            message: message.into(),
        }
    }

    pub fn backend(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Backend,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Backend => 4,
        }
    }

    /// Prefixes the message with what was being done.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type Result<T> = std::result::Result<T, Failure>;

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<LmError> for Failure {
    fn from(e: LmError) -> Self {
        match e {
            LmError::Transport { .. } | LmError::Validation { .. } => Failure::backend(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

impl From<EstimatorError> for Failure {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Lm(inner) => inner.into(),
            EstimatorError::Sample { source: MeasureError::Lm(inner), .. } | EstimatorError::Measure(MeasureError::Lm(inner)) => {
                inner.into()
            }
            other => Failure::data(other.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<CacheError> for Failure {
    fn from(e: CacheError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<RepError> for Failure {
    fn from(e: RepError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}
