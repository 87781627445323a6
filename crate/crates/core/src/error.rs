use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter vector has length {found}, family expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("parameter coordinate {index} = {value} lies outside the family domain")]
    OutOfDomain { index: usize, value: f64 },
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    Symbol { symbol: usize, alphabet: usize },
    #[error("data does not match family: {0}")]
    DataShape(&'static str),
    #[error("gradient diverges at a boundary parameter")]
    Boundary,
    #[error("context of length {found} is shorter than the memory order {order}")]
    Context { found: usize, order: usize },
    #[error("{0} is not available for this family")]
    NotAvailable(&'static str),
    #[error("{0} is not applicable to this spectrum")]
    NotApplicable(&'static str),
    #[error("every support point assigns zero likelihood to the data")]
    DegenerateEvidence,
    #[error("exact computation infeasible: {0}")]
    TooLarge(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Langevin chain diverged at step {step}; reduce the step size")]
    Diverged { step: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
