use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("no case covers dependence kind `{kind}` in setting `{setting}`")]
    UnsupportedCombination { kind: String, setting: String },

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("invalid process specification: {0}")]
    InvalidSpec(String),

    #[error("empty sample")]
    EmptySample,

    #[error("too many degenerate replications at n = {n}: {excluded} of {total}")]
    TooManyExclusions {
        n: usize,
        excluded: usize,
        total: usize,
    },

    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),

    #[error("every grid point was degenerate")]
    AllExcluded,

    #[error("state space too large for enumeration: {0} outcomes")]
    StateSpaceTooLarge(u128),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
