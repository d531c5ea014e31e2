//! Linear-filter propagation of weak pulses through a comb: transfer function
//! with Kramers–Kronig phase, FFT propagation, echo efficiency and the
//! closed-form Gaussian-comb efficiency.

mod analytic;
mod echo;
mod memory;
mod pulse;
mod transfer;

pub use analytic::{
    afc_efficiency_analytic, delay_line_comparison, multimode_capacity, optimal_finesse, DelayLine,
    SPEED_OF_LIGHT_M_PER_S,
};
pub use echo::{
    default_echo_window_ns, echo_efficiency, echo_series, mode_efficiencies, MemoryResult,
};
pub use memory::CombMemory;
pub use pulse::PulseTrain;
pub use transfer::{
    propagate, transfer_function, transfer_function_with_padding, TransferFunction,
};

use thiserror::Error;

use crate::ensemble::EnsembleError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("transfer-function grid does not match the pulse FFT grid: {0}")]
    GridMismatch(String),
    #[error("sampling violates Nyquist: {0}")]
    NyquistViolation(String),
    #[error("pulse bandwidth {pulse_mhz} MHz exceeds half the comb bandwidth {comb_mhz} MHz")]
    PulseTooBroadband { pulse_mhz: f64, comb_mhz: f64 },
    #[error("transfer function is not passive: |H| reaches {max_gain}")]
    NonPassive { max_gain: f64 },
    #[error("echo window {window_ns} ns must be shorter than the storage time {tau_ns} ns")]
    WindowOverlapsTransmission { window_ns: f64, tau_ns: f64 },
    #[error("input pulse carries no energy")]
    EmptyInput,
    #[error(transparent)]
    Comb(#[from] EnsembleError),
}

pub type Result<T, E = PropagationError> = std::result::Result<T, E>;
