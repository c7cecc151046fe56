use alloc::boxed::Box;

/// Pipeline stage of [`crate::learn::learn_gbn`], used to annotate errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Covariance,
    Precision,
    Order,
    Structure,
}

impl core::fmt::Display for Stage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Stage::Covariance => "empirical covariance",
            Stage::Precision => "precision estimation",
            Stage::Order => "order learning",
            Stage::Structure => "parent regression",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular")]
    Singular,

    #[error("invalid graph: {0}")]
    InvalidGraph(&'static str),
    #[error("model is singular: I - B is not invertible")]
    SingularModel,
    #[error("node {0} has children and cannot be removed")]
    NotTerminal(usize),
    #[error("operation requires equal noise variances")]
    UnequalVariance,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no model passed the precision screen after {attempts} attempts")]
    ScreeningExhausted { attempts: usize },

    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("linear program solution violates its constraints by {0:e}")]
    Inaccurate(f64),
    #[error("precision column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("support of node {node} is singular (pivot {pivot})")]
    SingularSupport { node: usize, pivot: usize },
    #[error("non-positive precision pivot {value:e} when removing node {node}")]
    NonpositivePivot { node: usize, value: f64 },
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps `self` with the stage it occurred in.
    pub fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
