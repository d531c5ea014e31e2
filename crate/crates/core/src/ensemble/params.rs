use serde::{Deserialize, Serialize};

use super::{EnsembleError, FrequencyGrid, Result, SpectralProfile};
use crate::scalar::Real;

/// One exponential return channel of the burned (shelved) population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleChannel<T> {
    pub amplitude: T,
    pub lifetime_s: T,
}

/// Measurement environment. Recorded for provenance only; nothing in the
/// simulation depends on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub temperature_k: f64,
    pub magnetic_field_t: f64,
    pub polarization_axis: String,
    pub field_axis: String,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            temperature_k: 1.6,
            magnetic_field_t: 4.0,
            polarization_axis: "Y".into(),
            field_axis: "Z".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonEnsembleParams<T> {
    pub peak_absorption_per_cm: T,
    pub inhomogeneous_fwhm_ghz: T,
    pub center_wavelength_nm: T,
    pub t1_excited_ms: T,
    /// 1 to 3 channels; amplitudes sum to one.
    pub hole_lifetimes: Vec<HoleChannel<T>>,
    pub waveguide_length_mm: T,
    /// Fraction of excited-state decay that returns directly to the ground pool.
    pub branch_to_ground: T,
    /// Lorentzian weight of the pseudo-Voigt inhomogeneous line.
    pub lorentz_fraction: T,
    pub environment: Environment,
}

impl<T: Real> IonEnsembleParams<T> {
    /// Er³⁺ in 5 mm of thin-film lithium niobate at 1531.6 nm.
    ///
    /// Only the 1.95 s hole channel is measured; the two longer channels,
    /// their amplitudes, the ground branching ratio and the line-shape mix are
    /// placeholders.
    pub fn er_tfln() -> Self {
        Self {
            peak_absorption_per_cm: T::lit(10.52),
            inhomogeneous_fwhm_ghz: T::lit(250.0),
            center_wavelength_nm: T::lit(1531.6),
            t1_excited_ms: T::lit(2.78),
            hole_lifetimes: vec![
                HoleChannel {
                    amplitude: T::lit(0.5),
                    lifetime_s: T::lit(1.95),
                },
                HoleChannel {
                    amplitude: T::lit(0.3),
                    lifetime_s: T::lit(20.0),
                },
                HoleChannel {
                    amplitude: T::lit(0.2),
                    lifetime_s: T::lit(200.0),
                },
            ],
            waveguide_length_mm: T::lit(5.0),
            branch_to_ground: T::lit(0.5),
            lorentz_fraction: T::lit(0.5),
            environment: Environment::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(EnsembleError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        pos("peak_absorption_per_cm", self.peak_absorption_per_cm)?;
        pos("inhomogeneous_fwhm_ghz", self.inhomogeneous_fwhm_ghz)?;
        pos("t1_excited_ms", self.t1_excited_ms)?;
        pos("waveguide_length_mm", self.waveguide_length_mm)?;
        if self.hole_lifetimes.is_empty() || self.hole_lifetimes.len() > 3 {
            return Err(EnsembleError::InvalidParameter(format!(
                "expected 1 to 3 hole channels, got {}",
                self.hole_lifetimes.len()
            )));
        }
        for ch in &self.hole_lifetimes {
            pos("hole lifetime", ch.lifetime_s)?;
            if !(ch.amplitude >= T::zero()) {
                return Err(EnsembleError::InvalidParameter(
                    "hole channel amplitudes must be non-negative".into(),
                ));
            }
        }
        let total: T = self.hole_lifetimes.iter().map(|c| c.amplitude).sum();
        if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(8.0)) {
            return Err(EnsembleError::InvalidParameter(format!(
                "hole channel amplitudes sum to {total}, expected 1"
            )));
        }
        let unit = |name: &str, v: T| {
            if (T::zero()..=T::one()).contains(&v) {
                Ok(())
            } else {
                Err(EnsembleError::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {v}"
                )))
            }
        };
        unit("branch_to_ground", self.branch_to_ground)?;
        unit("lorentz_fraction", self.lorentz_fraction)?;
        Ok(())
    }

    /// Line-center optical depth `α·L`.
    pub fn peak_optical_depth(&self) -> T {
        self.peak_absorption_per_cm * self.waveguide_length_mm / T::lit(10.0)
    }

    /// Unburned pseudo-Voigt absorption line on `grid`, unit height at center.
    pub fn absorption_profile(&self, grid: &FrequencyGrid<T>) -> Result<SpectralProfile<T>> {
        self.validate()?;
        let d_peak = self.peak_optical_depth();
        let half = self.inhomogeneous_fwhm_ghz * T::lit(500.0);
        let eta = self.lorentz_fraction;
        let ln2 = T::LN_2();
        let depth = grid
            .points()
            .map(|f| {
                let x = f / half;
                let lorentz = T::one() / (T::one() + x * x);
                let gauss = (-ln2 * x * x).exp();
                d_peak * (eta * lorentz + (T::one() - eta) * gauss)
            })
            .collect();
        SpectralProfile::new(*grid, depth)
    }
}

/// Normalized spectral-hole area remaining after `t_s` seconds,
/// `Σ aᵢ exp(-t/τᵢ)`.
pub fn hole_area_decay<T: Real>(params: &IonEnsembleParams<T>, t_s: T) -> T {
    params
        .hole_lifetimes
        .iter()
        .map(|c| c.amplitude * (-t_s / c.lifetime_s).exp())
        .sum()
}
