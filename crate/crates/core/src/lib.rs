//! Simulation of atomic-frequency-comb storage in an erbium-doped thin-film
//! lithium niobate waveguide: comb preparation by spectral hole burning,
//! linear-filter storage of weak pulses, spectroscopy fits and time-bin qubit
//! analysis.
//!
//! Every numerical type is generic over a [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix it to `f64`.

// `!(x > 0)` is how the range checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod ensemble;
pub mod io;
mod linalg;
pub mod lm;
pub mod photonics;
pub mod propagation;
pub mod scalar;

pub use scalar::Real;

pub type FrequencyGrid = ensemble::FrequencyGrid<f64>;
pub type SpectralProfile = ensemble::SpectralProfile<f64>;
pub type CombSpec = ensemble::CombSpec<f64>;
pub type IonEnsembleParams = ensemble::IonEnsembleParams<f64>;
pub type BurnSchedule = ensemble::BurnSchedule<f64>;
pub type BurnOutcome = ensemble::BurnOutcome<f64>;
pub type FittedComb = ensemble::FittedComb<f64>;
pub type PulseTrain = propagation::PulseTrain<f64>;
pub type TransferFunction = propagation::TransferFunction<f64>;
pub type CombMemory = propagation::CombMemory<f64>;
pub type MemoryResult = propagation::MemoryResult<f64>;
pub type DelayLine = propagation::DelayLine<f64>;
pub type DecayTrace = coherence::DecayTrace<f64>;
pub type FitReport = coherence::FitReport<f64>;
pub type TimeBinGeometry = photonics::TimeBinGeometry<f64>;
pub type InterferometerSpec = photonics::InterferometerSpec<f64>;
pub type DetectorModel = photonics::DetectorModel<f64>;
pub type QubitState = photonics::QubitState<f64>;
