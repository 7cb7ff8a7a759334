use thiserror::Error;

/// Errors raised by the distribution, rational-function, flowgraph and
/// Markov-chain layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The MGF does not exist at the requested point.
    #[error("MGF undefined at s = {s}: at or beyond the pole at {pole}")]
    MgfDomain { s: f64, pole: f64 },

    #[error("rational function is not strictly proper (numerator degree {num}, denominator degree {den})")]
    NotStrictlyProper { num: usize, den: usize },

    /// A pole with non-positive real part: the MGF is not that of a
    /// (possibly defective) waiting-time density.
    #[error("improper model: pole {re}{im:+}i has non-positive real part")]
    ImproperPole { re: f64, im: f64 },

    #[error("loop transmittance at s = 0 is {0}; a loop taken with probability >= 1 never exits")]
    AbsorbingLoop(f64),

    #[error("transmittance is defective (value at 0 is {0}); normalize before computing moments")]
    Defective(f64),

    #[error("unknown state '{0}'")]
    UnknownState(String),

    #[error("target '{target}' is not reachable from '{from}'")]
    Unreachable { from: String, target: String },

    /// Elimination hit a pivot `1 - loop` that is identically zero.
    #[error("structural failure eliminating state '{0}': zero pivot")]
    ZeroPivot(String),

    #[error("reduction pattern mismatch at {site}: {reason}")]
    PatternMismatch { site: String, reason: String },

    /// Simulation and the Kolmogorov oracles need exponential holding times.
    #[error("branch {from} -> {to} has a non-exponential waiting time; this operation requires the Markov jump process form")]
    NonExponential { from: String, to: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
