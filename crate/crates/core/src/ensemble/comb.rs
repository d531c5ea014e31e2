use serde::{Deserialize, Serialize};

use super::{EnsembleError, FrequencyGrid, Result, SpectralProfile};
use crate::scalar::{four_ln2, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToothShape {
    Gaussian,
    Square,
}

/// Parametric atomic frequency comb centered on zero detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombSpec<T> {
    /// Tooth spacing Δ.
    pub tooth_spacing_mhz: T,
    /// Tooth FWHM γ.
    pub tooth_fwhm_mhz: T,
    /// Tooth optical depth d₁ above the background.
    pub comb_depth: T,
    /// Residual background optical depth d₀.
    pub background_depth: T,
    pub bandwidth_mhz: T,
    pub tooth_shape: ToothShape,
}

impl<T: Real> CombSpec<T> {
    /// The 40 MHz Gaussian comb with Δ = 2.5 MHz, γ = 1.03 MHz, d₁ = 1.61, d₀ = 1.36.
    pub fn er_tfln() -> Self {
        Self {
            tooth_spacing_mhz: T::lit(2.5),
            tooth_fwhm_mhz: T::lit(1.03),
            comb_depth: T::lit(1.61),
            background_depth: T::lit(1.36),
            bandwidth_mhz: T::lit(40.0),
            tooth_shape: ToothShape::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EnsembleError::InvalidParameter(msg));
        if !(self.tooth_fwhm_mhz > T::zero()) {
            return bad(format!(
                "tooth FWHM must be positive, got {}",
                self.tooth_fwhm_mhz
            ));
        }
        if !(self.tooth_spacing_mhz > self.tooth_fwhm_mhz) {
            return bad(format!(
                "tooth spacing {} must exceed tooth FWHM {} (finesse > 1)",
                self.tooth_spacing_mhz, self.tooth_fwhm_mhz
            ));
        }
        if !(self.comb_depth >= T::zero()) || !(self.background_depth >= T::zero()) {
            return bad("comb and background depths must be non-negative".into());
        }
        if !(self.bandwidth_mhz >= T::lit(2.0) * self.tooth_spacing_mhz) {
            return bad(format!(
                "bandwidth {} must be at least twice the tooth spacing",
                self.bandwidth_mhz
            ));
        }
        if ![
            self.tooth_spacing_mhz,
            self.tooth_fwhm_mhz,
            self.comb_depth,
            self.background_depth,
            self.bandwidth_mhz,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return bad("comb parameters must be finite".into());
        }
        Ok(())
    }

    pub fn finesse(&self) -> T {
        self.tooth_spacing_mhz / self.tooth_fwhm_mhz
    }

    /// Echo delay τ = 1/Δ in ns.
    pub fn storage_time_ns(&self) -> T {
        T::lit(1000.0) / self.tooth_spacing_mhz
    }

    /// Tooth centers `kΔ` with `|kΔ| ≤ bandwidth/2`.
    pub fn tooth_centers(&self) -> Vec<T> {
        let half = self.bandwidth_mhz / T::lit(2.0);
        let kmax = (half / self.tooth_spacing_mhz + T::lit(1e-9))
            .floor()
            .to_i64()
            .unwrap_or(0);
        (-kmax..=kmax)
            .map(|k| T::lit(k as f64) * self.tooth_spacing_mhz)
            .collect()
    }

    /// Detuning interval a hosting grid must cover.
    pub fn required_span(&self) -> (T, T) {
        let half = self.bandwidth_mhz / T::lit(2.0) + T::lit(2.0) * self.tooth_spacing_mhz;
        (-half, half)
    }

    /// Unit-height tooth shape evaluated at `x = (ω - center)/γ`.
    #[inline]
    pub fn shape(&self, x: T) -> T {
        match self.tooth_shape {
            ToothShape::Gaussian => (-four_ln2::<T>() * x * x).exp(),
            ToothShape::Square => {
                if x.abs() <= T::lit(0.5) {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Noiseless optical depth of this comb at detuning `f`.
    pub fn depth_at(&self, f_mhz: T) -> T {
        let teeth: T = self
            .tooth_centers()
            .into_iter()
            .map(|c| self.shape((f_mhz - c) / self.tooth_fwhm_mhz))
            .sum();
        self.background_depth + self.comb_depth * teeth
    }
}

/// Samples `d(ω) = d₀ + d₁ Σₖ shape((ω - kΔ)/γ)` on `grid`.
///
/// Overlapping tooth tails add linearly. The grid must resolve a tenth of a
/// tooth width and extend two tooth spacings past the comb edges.
pub fn ideal_comb_profile<T: Real>(
    spec: &CombSpec<T>,
    grid: &FrequencyGrid<T>,
) -> Result<SpectralProfile<T>> {
    spec.validate()?;
    let limit = spec.tooth_fwhm_mhz / T::lit(10.0);
    if grid.step() > limit * (T::one() + T::lit(1e-9)) {
        return Err(EnsembleError::GridTooCoarse {
            spacing_mhz: grid.step().as_f64(),
            limit_mhz: limit.as_f64(),
        });
    }
    let (lo, hi) = spec.required_span();
    if !grid.covers(lo, hi) {
        return Err(EnsembleError::GridTooNarrow {
            need_lo_mhz: lo.as_f64(),
            need_hi_mhz: hi.as_f64(),
            have_lo_mhz: grid.start().as_f64(),
            have_hi_mhz: grid.end().as_f64(),
        });
    }

    let centers = spec.tooth_centers();
    // Gaussian tails are below 1e-40 beyond 6 FWHM.
    let reach = spec.tooth_fwhm_mhz * T::lit(6.0);
    let mut teeth = vec![T::zero(); grid.len()];
    for &c in &centers {
        let lo_i = grid.nearest_index(c - reach);
        let hi_i = grid.nearest_index(c + reach);
        for (i, t) in teeth.iter_mut().enumerate().take(hi_i + 1).skip(lo_i) {
            *t += spec.shape((grid.at(i) - c) / spec.tooth_fwhm_mhz);
        }
    }
    let depth = teeth
        .into_iter()
        .map(|t| spec.background_depth + spec.comb_depth * t)
        .collect();
    SpectralProfile::new(*grid, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3a_grid(spec: &CombSpec<f64>) -> FrequencyGrid<f64> {
        let (lo, hi) = spec.required_span();
        FrequencyGrid::spanning(lo, hi, spec.tooth_fwhm_mhz / 20.0).unwrap()
    }

    #[test]
    fn peaks_at_multiples_of_spacing() {
        let spec = CombSpec::<f64>::er_tfln();
        let grid = fig3a_grid(&spec);
        let prof = ideal_comb_profile(&spec, &grid).unwrap();
        assert_eq!(spec.tooth_centers().len(), 17);
        for c in spec.tooth_centers() {
            let d = spec.depth_at(c);
            // peak = d0 + d1 plus the ~1e-7 tails of the neighbours
            assert!((2.97 - 1e-12..2.97 + 1e-6).contains(&d), "{d}");
        }
        let center = grid.nearest_index(0.0);
        assert!((prof.optical_depth()[center] - spec.depth_at(grid.at(center))).abs() < 1e-12);
        // far outside the comb only the background remains
        assert!((prof.optical_depth()[0] - 1.36).abs() < 1e-12);
        // trough floor sits just above d0 because of tail overlap
        let trough = spec.depth_at(1.25);
        assert!(trough > 1.36 && trough < 1.36 + 0.06);
    }

    #[test]
    fn zero_comb_depth_is_flat() {
        let mut spec = CombSpec::<f64>::er_tfln();
        spec.comb_depth = 0.0;
        spec.background_depth = 0.5;
        let prof = ideal_comb_profile(&spec, &fig3a_grid(&spec)).unwrap();
        assert!(prof.optical_depth().iter().all(|&d| d == 0.5));
    }

    #[test]
    fn grid_preconditions() {
        let spec = CombSpec::<f64>::er_tfln();
        let coarse = FrequencyGrid::spanning(-30.0, 30.0, 0.2).unwrap();
        assert!(matches!(
            ideal_comb_profile(&spec, &coarse),
            Err(EnsembleError::GridTooCoarse { .. })
        ));
        let narrow = FrequencyGrid::spanning(-21.0, 21.0, 0.05).unwrap();
        assert!(matches!(
            ideal_comb_profile(&spec, &narrow),
            Err(EnsembleError::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = CombSpec::<f64>::er_tfln();
        spec.tooth_fwhm_mhz = 3.0;
        assert!(spec.validate().is_err());
        let mut spec = CombSpec::<f64>::er_tfln();
        spec.bandwidth_mhz = 4.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn square_teeth_have_full_width_gamma() {
        let mut spec = CombSpec::<f64>::er_tfln();
        spec.tooth_shape = ToothShape::Square;
        assert_eq!(spec.depth_at(0.51), 2.97);
        assert_eq!(spec.depth_at(0.52), 1.36);
    }

    #[test]
    fn storage_time_is_inverse_spacing() {
        let spec = CombSpec::<f64>::er_tfln();
        assert!((spec.storage_time_ns() - 400.0).abs() < 1e-12);
        assert!((spec.finesse() - 2.5 / 1.03).abs() < 1e-15);
        let s32 = CombSpec::<f32>::er_tfln();
        assert!((s32.storage_time_ns() - 400.0).abs() < 1e-3);
    }
}
