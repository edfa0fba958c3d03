use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no HE11 root bracketed in ({lo:e}, {hi:e}) rad/m after {samples} samples")]
    NoBracket { lo: f64, hi: f64, samples: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("root refinement did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("{quantity} evaluated outside its domain (r = {r:e} m, fiber radius {radius:e} m)")]
    Domain { quantity: &'static str, r: f64, radius: f64 },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("density factor computed for (delta = {have_delta} Hz, P = {have_power:e} W) but requested (delta = {want_delta} Hz, P = {want_power:e} W)")]
    GridMismatch { have_delta: f64, have_power: f64, want_delta: f64, want_power: f64 },

    #[error("spectrum has no interior peak with half-maximum crossings on both sides")]
    NoPeak,

    #[error("offset search found no interior minimum within +/-{window:e} Hz")]
    NoFitConvergence { window: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("transmission {value} at line {line} is outside (0, 1]")]
    Range { line: usize, value: f64 },

    #[error("detuning grid not strictly increasing at line {line}")]
    Grid { line: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
