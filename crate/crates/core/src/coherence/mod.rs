//! Forward models and least-squares fits for the time-domain spectroscopy
//! traces: fluorescence decay, two-pulse photon-echo decay and spectral-hole
//! area decay.

mod fit;
mod models;
mod trace;

pub use fit::{fit_decay, FitParameter, FitReport};
pub use models::{
    model_fluorescence, model_hole_decay, model_two_pulse_echo, model_two_pulse_echo_with,
    DecayModel, EchoConvention,
};
pub use trace::{DecayTrace, TimeUnit};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherenceError {
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("{points} points cannot constrain {params} parameters (need {needed})")]
    InsufficientData {
        points: usize,
        params: usize,
        needed: usize,
    },
    #[error("trace values are all equal; the decay model is degenerate")]
    DegenerateModel,
    #[error("initial guess has {got} parameters, model needs {want}")]
    InvalidGuess { got: usize, want: usize },
}

pub type Result<T, E = CoherenceError> = std::result::Result<T, E>;
