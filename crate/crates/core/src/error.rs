use thiserror::Error;

use crate::profiles::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("field has {found} values but the grid has {expected} cells")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("environment field {field} must be {constraint}, violated at cell {index} (value {value})")]
    Environment {
        field: &'static str,
        constraint: &'static str,
        index: usize,
        value: f64,
    },

    #[error("environment field r must be positive on at least one cell")]
    GrowthRateVanishes,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular shifted system (s = {s})")]
    Singular { s: f64 },

    #[error("unstable time step: non-finite state at t = {t} with dt = {dt}")]
    UnstableStep { dt: f64, t: f64 },

    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("harvesting transformation undefined for beta = {beta} (requires beta < 1)")]
    TransformUndefined { beta: f64 },

    #[error("no outcome change for beta = {beta} between alpha = {lo} and alpha = {hi}")]
    NoSwitch { beta: f64, lo: f64, hi: f64 },
}

impl Error {
    /// True for errors caused by bad inputs rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::LengthMismatch { .. }
                | Error::InvalidGrid(_)
                | Error::Parse(_)
                | Error::Eval(_)
                | Error::Environment { .. }
                | Error::GrowthRateVanishes
                | Error::InvalidParameter(_)
                | Error::TransformUndefined { .. }
        )
    }
}
