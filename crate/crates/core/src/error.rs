use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix determinant is {0}, expected 1")]
    DeterminantNotOne(i128),
    #[error("matrix trace {0} gives an eigenvalue of modulus 1 (not hyperbolic)")]
    NotHyperbolic(i64),
    #[error("minimizing lattice shift lies on the boundary of the shift set at distance {0}")]
    ShiftSetInsufficient(f64),
    #[error("threshold radius {0} is not below 0.25")]
    RadiusTooLarge(f64),
    #[error("kappa {kappa} is outside the local range (|lambda|^((kappa+1)q) * r = {reach} >= 1/2)")]
    OutOfLocalRange { kappa: u32, reach: f64 },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: u64, got: u64 },
    #[error("no exceedances recorded")]
    NoExceedances,
    #[error("{0} inter-cluster gaps available, at least 20 required")]
    TooFewGaps(usize),
}
