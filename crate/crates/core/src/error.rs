use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula (e.g. `y' <= 0` under a real square root).
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator of a closed-form solution or group action vanished.
    #[error("pole: {0}")]
    Pole(String),

    /// A square-root radicand of a scheme is negative on this stencil.
    #[error("branch error: {0}")]
    Branch(String),

    #[error("degenerate stencil: {0}")]
    DegenerateStencil(String),

    #[error("index {index} out of range for trajectory of length {len}")]
    Index { index: usize, len: usize },

    #[error("zero step between nodes {0} and {1}")]
    ZeroStep(usize, usize),

    #[error("need at least {needed} nodes, got {got}")]
    InsufficientNodes { needed: usize, got: usize },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("cannot fit: {0} integral vanishes")]
    ZeroIntegral(&'static str),

    #[error("construction failed at node {node}: {reason}")]
    Construction { node: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used in CLI error JSON and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Pole(_) => "pole",
            Error::Branch(_) => "branch",
            Error::DegenerateStencil(_) => "degenerate_stencil",
            Error::Index { .. } => "index",
            Error::ZeroStep(..) => "zero_step",
            Error::InsufficientNodes { .. } => "insufficient_nodes",
            Error::NonConvergence { .. } => "non_convergence",
            Error::ZeroIntegral(_) => "zero_integral",
            Error::Construction { .. } => "construction",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Square root of a radicand that must be strictly positive.
pub(crate) fn sqrt_pos(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.sqrt())
    } else {
        Err(Error::Branch(format!("{what} = {v:e} is not positive")))
    }
}

/// Checked division for scheme denominators; only exact zero (or subnormal) is rejected.
pub(crate) fn div(num: f64, den: f64, what: &str) -> Result<f64> {
    if den.abs() < 1e-300 {
        Err(Error::DegenerateStencil(format!("{what} vanishes")))
    } else {
        Ok(num / den)
    }
}
