//! Er³⁺ ensemble: inhomogeneous absorption line, comb profiles, spectral hole
//! burning and comb parameter extraction.

mod burn;
mod comb;
mod extract;
mod params;
mod profile;

pub use burn::{burn_comb, BurnOutcome, BurnSchedule, ClassTrajectory, PumpTable};
pub use comb::{ideal_comb_profile, CombSpec, ToothShape};
pub use extract::{extract_comb_params, FittedComb, ToothFit};
pub use params::{hole_area_decay, Environment, HoleChannel, IonEnsembleParams};
pub use profile::{FrequencyGrid, SpectralProfile};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid too coarse: spacing {spacing_mhz} MHz exceeds {limit_mhz} MHz")]
    GridTooCoarse { spacing_mhz: f64, limit_mhz: f64 },
    #[error("grid too narrow: need [{need_lo_mhz}, {need_hi_mhz}] MHz, have [{have_lo_mhz}, {have_hi_mhz}] MHz")]
    GridTooNarrow {
        need_lo_mhz: f64,
        need_hi_mhz: f64,
        have_lo_mhz: f64,
        have_hi_mhz: f64,
    },
    #[error("detuning grid is not uniform and increasing at sample {index}")]
    GridNotUniform { index: usize },
    #[error("length mismatch: grid has {grid} samples, data has {data}")]
    LengthMismatch { grid: usize, data: usize },
    #[error("optical depth must be finite and non-negative (sample {index})")]
    InvalidDepth { index: usize },
    #[error("no comb teeth found in profile")]
    NoPeaksFound,
    #[error("found {found} comb teeth, need at least {needed}")]
    TooFewTeeth { found: usize, needed: usize },
    #[error("comb fit diverged on {skipped} of {total} teeth")]
    FitDivergence { skipped: usize, total: usize },
    #[error("rate-equation step produced non-finite populations at {detuning_mhz} MHz")]
    NonConvergentStep { detuning_mhz: f64 },
    #[error("rate-equation step produced negative population {value} at {detuning_mhz} MHz")]
    NegativePopulation { detuning_mhz: f64, value: f64 },
}

pub type Result<T, E = EnsembleError> = std::result::Result<T, E>;
