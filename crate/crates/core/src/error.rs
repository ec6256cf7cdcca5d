use thiserror::Error;

/// Errors raised by the physical model and the spectral field operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("pressure exponent gamma = {0} must exceed 1")]
    InvalidGamma(f64),
    #[error("non-physical density: 1 + sigma = {value} at index {index}")]
    NonPhysicalDensity { index: usize, value: f64 },
    #[error("field length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("negative-order multiplier |xi|^{alpha} applied to a field with nonzero mean {mean}")]
    NonzeroMean { alpha: f64, mean: f64 },
    #[error("frequency must be nonzero")]
    ZeroFrequency,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("input violates the field constraint: residual {residual:.3e}")]
    Unconstrained { residual: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Configuration errors for dyadic partitions and quadrature setups.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("dyadic range [{q_min}, {q_max}] is invalid for this grid: {reason}")]
    DyadicRange { q_min: i32, q_max: i32, reason: String },
    #[error("radial profile not negligible at r_max = {r_max}: tail fraction {tail:.3e}")]
    ProfileTail { r_max: f64, tail: f64 },
    #[error("invalid quadrature setup: {0}")]
    Quadrature(String),
    #[error("{0}")]
    Invalid(String),
}

/// Errors raised while integrating a trajectory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("time step {dt} exceeds the CFL bound {bound}")]
    Cfl { dt: f64, bound: f64 },
    #[error("solution diverged at t = {time} (RK stage {stage}): {reason}")]
    Divergence { time: f64, stage: usize, reason: String },
    #[error("initial amplitude too large: {0}")]
    Amplitude(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Errors from the decay-fitting and reporting layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("fit window [{t0}, {t1}] holds {points} points; at least {needed} required")]
    TooFewPoints { t0: f64, t1: f64, points: usize, needed: usize },
    #[error("series value {value} at t = {time} is not positive")]
    NonPositive { time: f64, value: f64 },
    #[error("fit window [{t0}, {t1}] lies outside the series range [{lo}, {hi}]")]
    WindowOutside { t0: f64, t1: f64, lo: f64, hi: f64 },
    #[error("derivative index {ell} outside the admissible range [0, {max}] for {group}")]
    EllOutOfRange { ell: f64, max: f64, group: String },
    #[error("regularity input out of range: {0}")]
    Regime(String),
    #[error("report keys missing fits or predictions: {0:?}")]
    MissingKeys(Vec<String>),
    #[error("empty fit set")]
    Empty,
    #[error("trajectory stores no spectral snapshots")]
    NoStates,
    #[error("fit window ends at t = {t1}, past the box crossover time {crossover:.3}")]
    BeyondCrossover { t1: f64, crossover: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
