use thiserror::Error;

/// Errors produced by operators, solvers and the experiment harness.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operation not supported for {0} operators")]
    UnsupportedVariant(&'static str),

    #[error("operator is rank deficient (singular value ratio {ratio:e})")]
    DegenerateOperator { ratio: f64 },

    #[error("measurements are inconsistent with the operator (relative residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("ill-conditioned linear system (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("no sampling pattern with the requested coverage after {attempts} attempts")]
    CoverageInfeasible { attempts: usize },

    #[error("operator generation failed after {attempts} attempts")]
    RetriesExhausted { attempts: usize },

    #[error("solver failed at iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Solver {
            iteration,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
