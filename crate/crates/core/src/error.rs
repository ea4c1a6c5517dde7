use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent alpha = {0} is not allowed: the coupling sum diverges for alpha <= 1")]
    DivergentExponent(f64),
    #[error("invalid exponent {0}")]
    InvalidExponent(String),
    #[error("site {site} is out of range for a chain of {len} sites")]
    SiteOutOfRange { site: i64, len: usize },
    #[error("periodic chains need at least 3 sites, got {0}")]
    PeriodicTooShort(usize),
    #[error("chain length must be positive")]
    EmptyChain,
    #[error("operation requires a finite lattice")]
    InfiniteLattice,
    #[error("operation requires a finite exponent (alpha = inf given)")]
    InfiniteExponent,
    #[error("hopping order must be at least 1")]
    ZeroOrder,
    #[error("distance must be at least 1")]
    ZeroDistance,
    #[error("the (12 lambda)^(n-1) (r-n+1)^-alpha bound needs n <= r, got n = {n}, r = {r}")]
    OrderExceedsDistance { n: usize, r: u64 },
    #[error("mu must lie strictly inside (0, 1), got {0}")]
    InvalidMu(f64),
    #[error("epsilon must lie strictly inside (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("times must be sorted ascending")]
    UnsortedTimes,
    #[error("vector length {got} does not match Hilbert space dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{sites} sites exceed the memory budget ({needed} bytes needed, {budget} allowed)")]
    MemoryBudget { sites: usize, needed: u64, budget: u64 },
    #[error("dense model with {0} sites exceeds the 12-site oracle budget")]
    DenseBudget(usize),
    #[error("invalid Krylov configuration: {0}")]
    InvalidKrylovConfig(String),
    #[error("Krylov step did not converge after {halvings} halvings (error estimate {estimate:e} > tol {tol:e} at dt = {dt:e})")]
    KrylovNonConvergence { halvings: u32, estimate: f64, tol: f64, dt: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
