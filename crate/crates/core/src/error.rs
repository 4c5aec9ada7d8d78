use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0} (only 2 and 3)")]
    UnsupportedDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("energy {energy} does not exceed the local floor {floor}")]
    EnergyTooLow { energy: f64, floor: f64 },
    #[error("speed {0} is not below c")]
    Superluminal(f64),
    #[error("point lies outside the closed domain (chi = {0})")]
    OutsideDomain(f64),
    #[error("point is not interior to the domain")]
    NotInterior,
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget of {0} steps exhausted")]
    MaxSteps(usize),
    #[error("energy drift {drift:e} exceeds bound {bound:e}")]
    EnergyDrift { drift: f64, bound: f64 },
    #[error("magnetic field is not closed (cyclic residual {0:e})")]
    NotClosed(f64),
    #[error("shooting failed: {0}")]
    NoConvergence(String),
    #[error("trajectory leaves the domain before reaching the target")]
    EarlyExit,
    #[error("field model is not compactly supported")]
    NotCompactlySupported,
    #[error("trajectory trapped: no exit within time budget {0}")]
    Trapped(f64),
    #[error("line meets the boundary {0} time(s); a boundary pair needs 2")]
    NoChord(u8),
    #[error("missing boundary crossing: {0}")]
    MissingCrossing(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
