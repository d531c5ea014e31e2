use serde::{Deserialize, Serialize};

use super::{CombSpec, EnsembleError, Result, SpectralProfile, ToothShape};
use crate::lm::{self, LeastSquaresProblem, LmOptions};
use crate::scalar::{four_ln2, Real};

const MIN_TEETH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToothFit<T> {
    pub center_mhz: T,
    pub height: T,
    pub fwhm_mhz: T,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedComb<T> {
    pub spec: CombSpec<T>,
    pub teeth: Vec<ToothFit<T>>,
    pub skipped: usize,
    pub residual_rms: T,
}

/// Local maxima whose topographic prominence exceeds `min_prominence`.
fn prominent_peaks<T: Real>(v: &[T], min_prominence: T) -> Vec<usize> {
    let n = v.len();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(v[i] > v[i - 1] && v[i] >= v[i + 1]) {
            continue;
        }
        let mut left_min = v[i];
        for &x in v[..i].iter().rev() {
            if x > v[i] {
                break;
            }
            left_min = left_min.min(x);
        }
        let mut right_min = v[i];
        for &x in &v[i + 1..] {
            if x > v[i] {
                break;
            }
            right_min = right_min.min(x);
        }
        if v[i] - left_min.max(right_min) >= min_prominence {
            peaks.push(i);
        }
    }
    peaks
}

struct CombModel<'a, T> {
    freq: &'a [T],
    data: &'a [T],
    teeth: usize,
}

impl<T: Real> CombModel<'_, T> {
    fn eval(&self, p: &[T], f: T) -> T {
        let k = four_ln2::<T>();
        let mut d = p[0];
        for t in 0..self.teeth {
            let (c, h, w) = (p[1 + 3 * t], p[2 + 3 * t], p[3 + 3 * t]);
            let x = (f - c) / w;
            d += h * (-k * x * x).exp();
        }
        d
    }
}

impl<T: Real> LeastSquaresProblem<T> for CombModel<'_, T> {
    fn num_params(&self) -> usize {
        1 + 3 * self.teeth
    }

    fn num_residuals(&self) -> usize {
        self.freq.len()
    }

    fn residuals(&self, p: &[T], out: &mut [T]) {
        for (i, (&f, &y)) in self.freq.iter().zip(self.data).enumerate() {
            out[i] = self.eval(p, f) - y;
        }
    }

    fn jacobian(&self, p: &[T], out: &mut [T]) {
        let np = self.num_params();
        let k = four_ln2::<T>();
        let two = T::lit(2.0);
        for (i, &f) in self.freq.iter().enumerate() {
            let row = &mut out[i * np..(i + 1) * np];
            row[0] = T::one();
            for t in 0..self.teeth {
                let (c, h, w) = (p[1 + 3 * t], p[2 + 3 * t], p[3 + 3 * t]);
                let u = f - c;
                let g = (-k * u * u / (w * w)).exp();
                row[1 + 3 * t] = h * g * two * k * u / (w * w);
                row[2 + 3 * t] = g;
                row[3 + 3 * t] = h * g * two * k * u * u / (w * w * w);
            }
        }
    }

    fn is_admissible(&self, p: &[T]) -> bool {
        (0..self.teeth).all(|t| p[3 + 3 * t] > T::zero())
    }
}

/// Recovers Δ, γ, d₁ and d₀ from a measured or simulated comb profile.
///
/// Teeth are located by prominence, then all teeth and the shared background
/// are refined jointly as a sum of Gaussians so overlapping tails are
/// attributed to their own teeth. A tooth whose refined parameters are
/// unphysical is dropped from the averages; more than half dropped is an error.
pub fn extract_comb_params<T: Real>(profile: &SpectralProfile<T>) -> Result<FittedComb<T>> {
    let d = profile.optical_depth();
    let grid = profile.grid();
    let (lo, hi) = (profile.min_depth(), profile.max_depth());
    let range = hi - lo;
    if !(range > T::lit(1e-12) * (T::one() + hi.abs())) {
        return Err(EnsembleError::NoPeaksFound);
    }
    let peaks = prominent_peaks(d, range * T::lit(0.1));
    if peaks.is_empty() {
        return Err(EnsembleError::NoPeaksFound);
    }
    if peaks.len() < MIN_TEETH {
        return Err(EnsembleError::TooFewTeeth {
            found: peaks.len(),
            needed: MIN_TEETH,
        });
    }

    let mut gaps: Vec<T> = peaks
        .windows(2)
        .map(|w| grid.at(w[1]) - grid.at(w[0]))
        .collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let spacing0 = gaps[gaps.len() / 2];

    let first = grid.at(peaks[0]) - spacing0 * T::lit(1.5);
    let last = grid.at(peaks[peaks.len() - 1]) + spacing0 * T::lit(1.5);
    let i0 = grid.nearest_index(first);
    let i1 = grid.nearest_index(last);
    let freq: Vec<T> = (i0..=i1).map(|i| grid.at(i)).collect();
    let data = &d[i0..=i1];
    let floor0 = data.iter().copied().fold(T::infinity(), T::min);

    let mut init = vec![floor0];
    for &p in &peaks {
        let h = d[p] - floor0;
        let half = floor0 + h / T::lit(2.0);
        let mut l = p;
        while l > 0 && d[l] > half {
            l -= 1;
        }
        let mut r = p;
        while r + 1 < d.len() && d[r] > half {
            r += 1;
        }
        let mut w = grid.at(r) - grid.at(l);
        if !(w > T::zero()) || w > spacing0 {
            w = spacing0 / T::lit(2.0);
        }
        init.extend([grid.at(p), h, w]);
    }

    let model = CombModel {
        freq: &freq,
        data,
        teeth: peaks.len(),
    };
    let sol = lm::minimize(&model, &init, &LmOptions::default());
    let p = &sol.params;

    let mut teeth = Vec::with_capacity(peaks.len());
    for (t, &pk) in peaks.iter().enumerate() {
        let (c, h, w) = (p[1 + 3 * t], p[2 + 3 * t], p[3 + 3 * t]);
        let accepted = c.is_finite()
            && h.is_finite()
            && w.is_finite()
            && h > T::zero()
            && w > T::zero()
            && w < spacing0 * T::lit(2.0)
            && (c - grid.at(pk)).abs() < spacing0 / T::lit(2.0);
        if !accepted {
            log::warn!(
                "comb tooth near {} MHz diverged in fit; excluded",
                grid.at(pk)
            );
        }
        teeth.push(ToothFit {
            center_mhz: c,
            height: h,
            fwhm_mhz: w,
            accepted,
        });
    }
    let skipped = teeth.iter().filter(|t| !t.accepted).count();
    if skipped * 2 > teeth.len() || teeth.len() - skipped < 2 {
        return Err(EnsembleError::FitDivergence {
            skipped,
            total: teeth.len(),
        });
    }

    // Δ from a least-squares line through (tooth index, center).
    let good: Vec<(T, &ToothFit<T>)> = teeth
        .iter()
        .enumerate()
        .filter(|(_, t)| t.accepted)
        .map(|(i, t)| (T::count(i), t))
        .collect();
    let n = T::count(good.len());
    let mean_i = good.iter().map(|(i, _)| *i).sum::<T>() / n;
    let mean_c = good.iter().map(|(_, t)| t.center_mhz).sum::<T>() / n;
    let sxy: T = good
        .iter()
        .map(|(i, t)| (*i - mean_i) * (t.center_mhz - mean_c))
        .sum();
    let sxx: T = good
        .iter()
        .map(|(i, _)| (*i - mean_i) * (*i - mean_i))
        .sum();
    let spacing = sxy / sxx;
    let fwhm = good.iter().map(|(_, t)| t.fwhm_mhz).sum::<T>() / n;
    let depth = good.iter().map(|(_, t)| t.height).sum::<T>() / n;

    let spec = CombSpec {
        tooth_spacing_mhz: spacing,
        tooth_fwhm_mhz: fwhm,
        comb_depth: depth,
        background_depth: p[0].max(T::zero()),
        bandwidth_mhz: spacing * T::count(teeth.len() - 1),
        tooth_shape: ToothShape::Gaussian,
    };
    let residual_rms = (sol.cost / T::count(freq.len())).sqrt();
    Ok(FittedComb {
        spec,
        teeth,
        skipped,
        residual_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{ideal_comb_profile, FrequencyGrid};
    use crate::scalar::rel_diff;

    fn profile_for(spec: &CombSpec<f64>) -> SpectralProfile<f64> {
        let (lo, hi) = spec.required_span();
        let grid = FrequencyGrid::spanning(lo, hi, spec.tooth_fwhm_mhz / 10.0).unwrap();
        ideal_comb_profile(spec, &grid).unwrap()
    }

    #[test]
    fn round_trip_fig3a_comb() {
        let spec = CombSpec::er_tfln();
        let fit = extract_comb_params(&profile_for(&spec)).unwrap();
        assert_eq!(fit.teeth.len(), 17);
        assert_eq!(fit.skipped, 0);
        let s = fit.spec;
        assert!(rel_diff(s.tooth_spacing_mhz, 2.5) < 0.02);
        assert!(rel_diff(s.tooth_fwhm_mhz, 1.03) < 0.02);
        assert!(rel_diff(s.comb_depth, 1.61) < 0.02);
        assert!(rel_diff(s.background_depth, 1.36) < 0.02);
        assert!(rel_diff(s.bandwidth_mhz, 40.0) < 0.02);
    }

    #[test]
    fn high_finesse_round_trip() {
        let spec = CombSpec {
            tooth_fwhm_mhz: 0.1,
            comb_depth: 1.0,
            ..CombSpec::er_tfln()
        };
        let fit = extract_comb_params(&profile_for(&spec)).unwrap();
        assert!(
            rel_diff(fit.spec.finesse(), 25.0) < 0.02,
            "{}",
            fit.spec.finesse()
        );
    }

    #[test]
    fn flat_profile_has_no_peaks() {
        let grid = FrequencyGrid::spanning(-25.0, 25.0, 0.1).unwrap();
        let flat = SpectralProfile::flat(grid, 1.3).unwrap();
        assert_eq!(extract_comb_params(&flat), Err(EnsembleError::NoPeaksFound));
    }

    #[test]
    fn too_few_teeth() {
        let spec = CombSpec {
            bandwidth_mhz: 5.0,
            ..CombSpec::er_tfln()
        };
        assert!(matches!(
            extract_comb_params(&profile_for(&spec)),
            Err(EnsembleError::TooFewTeeth { found: 3, .. })
        ));
    }
}
