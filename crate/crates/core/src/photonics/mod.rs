//! Time-bin qubit encoding, the unbalanced Mach–Zehnder analyzer, photon
//! counting, and the fidelity and benchmark arithmetic built on the counts.

mod analysis;
mod bound;
mod detection;
mod interferometer;
mod qubit;

pub use analysis::{
    fidelity_el, fidelity_el_background_subtracted, snr, superposition_fidelity, total_fidelity,
    total_fidelity_with_uncertainty, visibility_and_fidelity, ElFidelity, Estimate, SnrEstimate,
    VisibilityFit,
};
pub use bound::{classical_bound, classical_bound_search, estimation_fidelity};
pub use detection::{detect, CountHistogram, DetectorModel, Window};
pub use interferometer::{umzi_for_qubit, umzi_output, InterferometerSpec, Port};
pub use qubit::{encode_qubit, QubitState, TimeBinGeometry, TimeBinQubit};

use thiserror::Error;

use crate::propagation::PropagationError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotonicsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time bins overlap: neighbour amplitude {overlap:.3e} exceeds 1%")]
    Overlap { overlap: f64 },
    #[error("interferometer delay {delay_ns} ns does not match {expected_ns} ns within {tolerance_ns} ns")]
    DelayMismatch {
        delay_ns: f64,
        expected_ns: f64,
        tolerance_ns: f64,
    },
    #[error("windows must be disjoint and of equal duration")]
    WindowMismatch,
    #[error("no counts in the analysis windows")]
    ZeroCounts,
    #[error("fringe needs at least 6 points spanning 0.8 of a period")]
    InsufficientFringe,
    #[error("fringe fit diverged: {0}")]
    FitDivergence(String),
    #[error(
        "demanded throughput {demanded:.4e} exceeds the non-vacuum probability {available:.4e}"
    )]
    InfeasibleEfficiency { demanded: f64, available: f64 },
    #[error(transparent)]
    Pulse(#[from] PropagationError),
}

pub type Result<T, E = PhotonicsError> = std::result::Result<T, E>;
