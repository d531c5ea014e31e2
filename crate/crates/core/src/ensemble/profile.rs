use serde::{Deserialize, Serialize};

use super::{EnsembleError, Result};
use crate::scalar::Real;

/// Uniform, strictly increasing detuning grid in MHz relative to line center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid<T> {
    start_mhz: T,
    step_mhz: T,
    len: usize,
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(start_mhz: T, step_mhz: T, len: usize) -> Result<Self> {
        if !(step_mhz > T::zero()) || !step_mhz.is_finite() || !start_mhz.is_finite() {
            return Err(EnsembleError::InvalidParameter(format!(
                "grid step must be positive and finite, got {step_mhz}"
            )));
        }
        if len < 2 {
            return Err(EnsembleError::InvalidParameter(
                "grid needs at least two samples".into(),
            ));
        }
        Ok(Self {
            start_mhz,
            step_mhz,
            len,
        })
    }

    /// Grid from `lo` to at least `hi` with the given step.
    pub fn spanning(lo_mhz: T, hi_mhz: T, step_mhz: T) -> Result<Self> {
        if !(hi_mhz > lo_mhz) {
            return Err(EnsembleError::InvalidParameter(format!(
                "empty span [{lo_mhz}, {hi_mhz}]"
            )));
        }
        let n = ((hi_mhz - lo_mhz) / step_mhz)
            .ceil()
            .to_usize()
            .unwrap_or(0)
            + 1;
        Self::new(lo_mhz, step_mhz, n)
    }

    /// Frequency grid conjugate to an `n`-sample time record with spacing
    /// `dt_ns`, in sorted (fft-shifted) order: `-n/2 .. n/2 - 1` bins.
    pub fn fft_conjugate(n: usize, dt_ns: T) -> Result<Self> {
        let step = T::lit(1000.0) / (T::count(n) * dt_ns);
        Self::new(-T::count(n / 2) * step, step, n)
    }

    pub fn start(&self) -> T {
        self.start_mhz
    }

    pub fn step(&self) -> T {
        self.step_mhz
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> T {
        self.at(self.len - 1)
    }

    #[inline]
    pub fn at(&self, i: usize) -> T {
        self.start_mhz + T::count(i) * self.step_mhz
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |i| self.at(i))
    }

    /// Index of the sample nearest to `f`, clamped to the grid.
    pub fn nearest_index(&self, f_mhz: T) -> usize {
        let x = ((f_mhz - self.start_mhz) / self.step_mhz).round();
        if x <= T::zero() {
            0
        } else {
            x.to_usize().unwrap_or(usize::MAX).min(self.len - 1)
        }
    }

    pub fn covers(&self, lo_mhz: T, hi_mhz: T) -> bool {
        let tol = self.step_mhz * T::lit(1e-6);
        self.start_mhz <= lo_mhz + tol && self.end() >= hi_mhz - tol
    }
}

/// Optical depth `d(ω) = α(ω)·L` sampled on a uniform detuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile<T> {
    grid: FrequencyGrid<T>,
    optical_depth: Vec<T>,
}

impl<T: Real> SpectralProfile<T> {
    pub fn new(grid: FrequencyGrid<T>, optical_depth: Vec<T>) -> Result<Self> {
        if grid.len() != optical_depth.len() {
            return Err(EnsembleError::LengthMismatch {
                grid: grid.len(),
                data: optical_depth.len(),
            });
        }
        if let Some(index) = optical_depth
            .iter()
            .position(|d| !d.is_finite() || *d < T::zero())
        {
            return Err(EnsembleError::InvalidDepth { index });
        }
        Ok(Self {
            grid,
            optical_depth,
        })
    }

    pub fn flat(grid: FrequencyGrid<T>, depth: T) -> Result<Self> {
        Self::new(grid, vec![depth; grid.len()])
    }

    /// Builds a profile from raw `(detuning, depth)` columns, checking that
    /// the detunings form a uniform increasing grid.
    pub fn from_samples(detuning_mhz: &[T], optical_depth: Vec<T>) -> Result<Self> {
        if detuning_mhz.len() < 2 {
            return Err(EnsembleError::InvalidParameter(
                "profile needs at least two samples".into(),
            ));
        }
        let step = (detuning_mhz[detuning_mhz.len() - 1] - detuning_mhz[0])
            / T::count(detuning_mhz.len() - 1);
        let tol = step.abs() * T::lit(1e-6);
        for (i, w) in detuning_mhz.windows(2).enumerate() {
            let d = w[1] - w[0];
            if !(d > T::zero()) || (d - step).abs() > tol {
                return Err(EnsembleError::GridNotUniform { index: i + 1 });
            }
        }
        let grid = FrequencyGrid::new(detuning_mhz[0], step, detuning_mhz.len())?;
        Self::new(grid, optical_depth)
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn optical_depth(&self) -> &[T] {
        &self.optical_depth
    }

    pub fn len(&self) -> usize {
        self.optical_depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.optical_depth.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.grid.points().zip(self.optical_depth.iter().copied())
    }

    /// Linear interpolation; constant extrapolation beyond the grid edges.
    pub fn depth_at(&self, f_mhz: T) -> T {
        let x = (f_mhz - self.grid.start()) / self.grid.step();
        if x <= T::zero() {
            return self.optical_depth[0];
        }
        let last = self.len() - 1;
        if x >= T::count(last) {
            return self.optical_depth[last];
        }
        let i = x.floor().to_usize().unwrap_or(0).min(last - 1);
        let frac = x - T::count(i);
        self.optical_depth[i] * (T::one() - frac) + self.optical_depth[i + 1] * frac
    }

    pub fn max_depth(&self) -> T {
        self.optical_depth.iter().copied().fold(T::zero(), T::max)
    }

    pub fn min_depth(&self) -> T {
        self.optical_depth
            .iter()
            .copied()
            .fold(T::infinity(), T::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_conjugate_grid_is_centered() {
        let g = FrequencyGrid::<f64>::fft_conjugate(8, 1.0).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g.step() - 125.0).abs() < 1e-12);
        assert!((g.start() + 500.0).abs() < 1e-12);
        assert!((g.end() - 375.0).abs() < 1e-12);
    }

    #[test]
    fn from_samples_rejects_nonuniform_grid() {
        let f = [0.0, 1.0, 2.5, 3.0];
        let err = SpectralProfile::from_samples(&f, vec![0.0; 4]).unwrap_err();
        assert_eq!(err, EnsembleError::GridNotUniform { index: 2 });
        let f = [0.0, 1.0, 2.0, 3.0];
        assert!(SpectralProfile::from_samples(&f, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn negative_depth_rejected() {
        let g = FrequencyGrid::new(0.0, 1.0, 3).unwrap();
        let err = SpectralProfile::new(g, vec![0.0, -1e-3, 0.0]).unwrap_err();
        assert_eq!(err, EnsembleError::InvalidDepth { index: 1 });
    }

    #[test]
    fn interpolation_and_clamping() {
        let g = FrequencyGrid::new(-1.0, 1.0, 3).unwrap();
        let p = SpectralProfile::new(g, vec![1.0, 3.0, 5.0]).unwrap();
        assert_eq!(p.depth_at(-0.5), 2.0);
        assert_eq!(p.depth_at(-7.0), 1.0);
        assert_eq!(p.depth_at(9.0), 5.0);
        assert_eq!(g.nearest_index(0.4), 1);
    }
}
