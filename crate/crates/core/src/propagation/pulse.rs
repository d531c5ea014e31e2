use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{PropagationError, Result};
use crate::scalar::Real;

/// Complex field envelope on a uniform time grid.
///
/// Amplitudes are in √(photons/ns): `Σ |E|² dt` is the mean photon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain<T> {
    t0_ns: T,
    dt_ns: T,
    samples: Vec<Complex<T>>,
}

impl<T: Real> PulseTrain<T> {
    pub fn new(t0_ns: T, dt_ns: T, samples: Vec<Complex<T>>) -> Result<Self> {
        if !(dt_ns > T::zero()) || !dt_ns.is_finite() || !t0_ns.is_finite() {
            return Err(PropagationError::InvalidPulse(format!(
                "sample interval must be positive and finite, got {dt_ns}"
            )));
        }
        if samples.len() < 2 {
            return Err(PropagationError::InvalidPulse(
                "pulse needs at least two samples".into(),
            ));
        }
        if samples
            .iter()
            .any(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return Err(PropagationError::InvalidPulse(
                "pulse samples must be finite".into(),
            ));
        }
        Ok(Self {
            t0_ns,
            dt_ns,
            samples,
        })
    }

    pub fn zeros(t0_ns: T, dt_ns: T, len: usize) -> Result<Self> {
        Self::new(t0_ns, dt_ns, vec![Complex::new(T::zero(), T::zero()); len])
    }

    /// Gaussian envelope with intensity FWHM `fwhm_ns` centered at `center_ns`,
    /// normalized to `photons` on the sampled grid.
    pub fn gaussian(
        center_ns: T,
        fwhm_ns: T,
        photons: T,
        t0_ns: T,
        dt_ns: T,
        len: usize,
    ) -> Result<Self> {
        let mut p = Self::zeros(t0_ns, dt_ns, len)?;
        p.add_gaussian(center_ns, fwhm_ns, Complex::new(T::one(), T::zero()));
        let e = p.energy();
        if !(e > T::zero()) {
            return Err(PropagationError::InvalidPulse(
                "gaussian does not overlap the sample window".into(),
            ));
        }
        let scale = (photons / e).sqrt();
        p.samples.iter_mut().for_each(|s| *s *= scale);
        Ok(p)
    }

    /// Adds `weight · exp(-2 ln2 (t - center)² / fwhm²)` (unit peak amplitude).
    pub fn add_gaussian(&mut self, center_ns: T, fwhm_ns: T, weight: Complex<T>) {
        let k = T::lit(2.0) * T::LN_2() / (fwhm_ns * fwhm_ns);
        for i in 0..self.samples.len() {
            let u = self.time(i) - center_ns;
            let a = (-k * u * u).exp();
            self.samples[i] += weight * a;
        }
    }

    pub fn t0(&self) -> T {
        self.t0_ns
    }

    pub fn dt(&self) -> T {
        self.dt_ns
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    #[inline]
    pub fn time(&self, i: usize) -> T {
        self.t0_ns + T::count(i) * self.dt_ns
    }

    pub fn end_time(&self) -> T {
        self.time(self.len() - 1)
    }

    /// `|E|²` per sample, photons/ns.
    pub fn intensity(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Mean photon number `Σ |E|² dt`.
    pub fn energy(&self) -> T {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<T>() * self.dt_ns
    }

    fn in_window(&self, lo_ns: T, hi_ns: T) -> impl Iterator<Item = (T, Complex<T>)> + '_ {
        (0..self.len())
            .map(move |i| (self.time(i), self.samples[i]))
            .filter(move |(t, _)| *t >= lo_ns && *t <= hi_ns)
    }

    /// Photon number carried by samples with `lo ≤ t ≤ hi`.
    pub fn energy_between(&self, lo_ns: T, hi_ns: T) -> T {
        self.in_window(lo_ns, hi_ns)
            .map(|(_, s)| s.norm_sqr())
            .sum::<T>()
            * self.dt_ns
    }

    /// Intensity-weighted mean time over `[lo, hi]`, `None` if the window is dark.
    pub fn centroid_between(&self, lo_ns: T, hi_ns: T) -> Option<T> {
        let (mut w, mut wt) = (T::zero(), T::zero());
        for (t, s) in self.in_window(lo_ns, hi_ns) {
            let p = s.norm_sqr();
            w += p;
            wt += p * t;
        }
        (w > T::zero()).then(|| wt / w)
    }

    pub fn centroid(&self) -> Option<T> {
        self.centroid_between(self.t0_ns, self.end_time())
    }

    /// Same record extended with zeros to `len` samples.
    pub fn zero_padded(&self, len: usize) -> Self {
        let mut samples = self.samples.clone();
        samples.resize(len.max(self.len()), Complex::new(T::zero(), T::zero()));
        Self {
            t0_ns: self.t0_ns,
            dt_ns: self.dt_ns,
            samples,
        }
    }

    /// Delays the envelope by `k` whole samples; the record length is kept and
    /// samples pushed past the end are dropped.
    pub fn delayed_by_samples(&self, k: usize) -> Self {
        let n = self.len();
        let mut samples = vec![Complex::new(T::zero(), T::zero()); n];
        if k < n {
            samples[k..].copy_from_slice(&self.samples[..n - k]);
        }
        Self {
            t0_ns: self.t0_ns,
            dt_ns: self.dt_ns,
            samples,
        }
    }

    pub fn scaled(&self, a: Complex<T>) -> Self {
        Self {
            t0_ns: self.t0_ns,
            dt_ns: self.dt_ns,
            samples: self.samples.iter().map(|&s| s * a).collect(),
        }
    }

    /// Sample-wise sum; both pulses must share `t0`, `dt` and length.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() || self.dt_ns != other.dt_ns || self.t0_ns != other.t0_ns {
            return Err(PropagationError::GridMismatch(
                "pulses live on different time grids".into(),
            ));
        }
        Ok(Self {
            t0_ns: self.t0_ns,
            dt_ns: self.dt_ns,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_normalization_and_width() {
        let p = PulseTrain::<f64>::gaussian(0.0, 50.0, 0.578, -300.0, 1.0, 600).unwrap();
        assert!((p.energy() - 0.578).abs() < 1e-14);
        assert!(p.centroid().unwrap().abs() < 1e-9);
        let peak = p.samples()[300].norm_sqr();
        // intensity at t = ±25 ns is half the peak
        assert!((p.samples()[325].norm_sqr() / peak - 0.5).abs() < 1e-12);
        assert!((p.samples()[275].norm_sqr() / peak - 0.5).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(PulseTrain::<f64>::zeros(0.0, 0.0, 10).is_err());
        assert!(PulseTrain::<f64>::zeros(0.0, 1.0, 1).is_err());
        let bad = vec![Complex::new(f64::NAN, 0.0); 4];
        assert!(PulseTrain::new(0.0, 1.0, bad).is_err());
    }

    #[test]
    fn delay_moves_centroid() {
        let p = PulseTrain::<f64>::gaussian(0.0, 20.0, 1.0, -100.0, 1.0, 400).unwrap();
        let q = p.delayed_by_samples(37);
        assert!((q.centroid().unwrap() - 37.0).abs() < 1e-9);
    }
}
