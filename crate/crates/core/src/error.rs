use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// alpha + beta + 1 = 0: the closed-form capillary constants are undefined.
    #[error("degenerate exponent: alpha + beta + 1 = {0:e} (logarithmic variable required)")]
    DegenerateTheta(f64),

    #[error("density {min:e} below floor {floor:e}")]
    NonPositiveDensity { min: f64, floor: f64 },

    #[error("transformed density out of range for beta = {beta}: r = {value}")]
    OutOfRange { beta: f64, value: f64 },

    #[error("grid mismatch: {left} vs {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid grid size {0}: must be a power of two >= 4")]
    InvalidGrid(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("singular implicit solve at wavenumber {k}: |det| = {det:e}")]
    SingularSolve { k: i64, det: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
