use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("dimension {0} is not prime")]
    NotPrime(usize),
    #[error("operation requires d = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("table shape is not {d}x{d}")]
    BadShape { d: usize },
    #[error("negative probability {value} at ({x}, {z})")]
    NegativeEntry { x: usize, z: usize, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    BadNormalization(f64),
    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("post-selection has zero success probability")]
    ZeroSuccess,
    #[error("map is not a bijection of the phase space")]
    NotBijective,
    #[error("symplectic matrix has determinant {0} mod d, expected 1")]
    BadDeterminant(usize),
    #[error("operator strings act on {left} and {right} sites")]
    LengthMismatch { left: usize, right: usize },
    #[error("problem of size {size} exceeds the limit {limit}")]
    SizeGuard { size: u128, limit: u128 },
    #[error("no convergence after {rounds} rounds (distance {distance:e})")]
    NonConvergence { rounds: u64, distance: f64 },
    #[error("imaginary residue {0:e} in a real quantity")]
    ImaginaryResidue(f64),
    #[error("bad schedule: {0}")]
    BadSchedule(String),
    #[error("bad channel file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
