use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps variants onto distinct exit codes, so keep the taxonomy
/// coarse: usage problems, schema/validation problems, budget exceedances and
/// numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("enumeration budget exceeded: {needed} tree leaves, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("prefix has zero probability under every component")]
    UnreachablePrefix,

    #[error(
        "no feasible (model, policy) pair at iteration {iteration}: \
         decoding-error ceiling {eps_s} is unsatisfiable over the candidate set"
    )]
    Infeasible { iteration: usize, eps_s: f64 },

    #[error("unsupported policy form for exact evaluation: {0}")]
    UnsupportedPolicy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
