use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular")]
    Singular,
    #[error("Gram matrix is not symmetric")]
    NotSymmetric,
    #[error("Gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("lattice is not even")]
    NotEven,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not an isometry of the lattice")]
    NotIsometry,
    #[error("(1-g)L* ⊂ L fails")]
    DualNotContained,
    #[error("arithmetic overflow: {0}")]
    Overflow(&'static str),
    #[error("bilinear form is degenerate")]
    Degenerate,
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("unsupported parameters: {0}")]
    Unsupported(String),
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("hypotheses failed: {0}")]
    Hypothesis(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Singular => "singular",
            Error::NotSymmetric => "not_symmetric",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::NotEven => "not_even",
            Error::Dimension(_) => "dimension",
            Error::NotIsometry => "not_isometry",
            Error::DualNotContained => "dual_not_contained",
            Error::Overflow(_) => "overflow",
            Error::Degenerate => "degenerate",
            Error::NotOddPrime(_) => "not_odd_prime",
            Error::Unsupported(_) => "unsupported",
            Error::BudgetExhausted(_) => "budget_exhausted",
            Error::Verification(_) => "verification",
            Error::Hypothesis(_) => "hypothesis",
            Error::Cache(_) => "cache",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
