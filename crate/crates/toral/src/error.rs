use thiserror::Error;

/// Errors shared across the crate.
///
/// Precondition violations (`InvalidInput`, caps, non-ergodic inputs) are
/// recoverable and map to CLI exit code 2. A `ContractViolation` means a
/// mathematically guaranteed identity failed at runtime, which falsifies the
/// construction itself; the CLI maps it to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero polynomial")]
    ZeroPolynomialDivision,

    #[error("polynomial degree {got} exceeds supported cap {cap}")]
    DegreeCap { got: usize, cap: usize },

    #[error("expected a monic polynomial, got leading coefficient {lc}")]
    NotMonic { lc: String },

    #[error("modulus cap exceeded: {0}")]
    ModulusCap(String),

    #[error("p-adic valuation of zero is undefined")]
    ValuationOfZero,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{root} is not a simple root of f mod {p}: f'({root}) ≡ 0")]
    SingularDerivative { root: String, p: u64 },

    #[error("no split prime found below scan cap {cap} (none ruled out above it)")]
    ScanCapExhausted { cap: u64 },

    #[error("iteration cap {cap} exceeded")]
    IterationCap { cap: u64 },

    #[error("modulus {m} shares a factor with the recurrence constant term; sequence is only eventually periodic")]
    NonCoprimeModulus { m: String },

    #[error("matrix is not ergodic on the torus: {reason}")]
    NonErgodic { reason: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
