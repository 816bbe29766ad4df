//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors raised while building graphs or running message passing.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("variable `{var}` appears more than once in the scope of factor `{factor}`")]
    DuplicateScopeVariable { factor: String, var: String },
    #[error("factor `{0}` has an empty scope")]
    EmptyScope(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable `{0}` is not connected to any factor")]
    IsolatedVariable(String),
    #[error("continuous variable `{var}` is attached to BP factor `{factor}`")]
    ContinuousInBp { var: String, factor: String },
    #[error("factor `{0}` uses a custom kernel and must belong to the BP part")]
    KernelInMeanField(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("table with {states} joint states exceeds the limit of {limit}")]
    TooManyStates { states: usize, limit: usize },
    #[error("cannot normalize an all-zero table or message ({0})")]
    AllZero(String),
    #[error("contradiction: {0}")]
    Contradiction(String),
    #[error("factor `{0}` has a zero inside the support of a mean-field expectation")]
    HardConstraintInMeanField(String),
    #[error("matrix is not Hermitian positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("the BP subgraph contains a cycle through {0}")]
    Cycle(String),
    #[error("preconditions for the exact schedule are not met: {0}")]
    NotApplicable(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
