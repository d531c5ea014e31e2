use rustfft::FftNum;

use super::transfer::{sorted_index, spectrum, DEFAULT_PADDING};
use super::TransferFunction;
use super::{propagate, transfer_function_with_padding, PropagationError, PulseTrain, Result};
use crate::ensemble::{ideal_comb_profile, CombSpec, FrequencyGrid, SpectralProfile};
use crate::scalar::Real;

/// A prepared comb bound to a time grid, ready to store pulses.
#[derive(Debug, Clone)]
pub struct CombMemory<T> {
    spec: CombSpec<T>,
    dt_ns: T,
    profile: SpectralProfile<T>,
    transfer: TransferFunction<T>,
}

impl<T: Real + FftNum> CombMemory<T> {
    /// Smallest power-of-two record of at least `min_len` samples whose
    /// conjugate grid resolves a tenth of a tooth width.
    pub fn record_length(spec: &CombSpec<T>, dt_ns: T, min_len: usize) -> usize {
        let step_limit = spec.tooth_fwhm_mhz / T::lit(10.0);
        let need = (T::lit(1000.0) / (dt_ns * step_limit))
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX);
        need.max(min_len).next_power_of_two()
    }

    /// Builds the ideal comb for `spec` on the FFT grid of a record of at
    /// least `min_len` samples spaced `dt_ns`.
    pub fn new(spec: CombSpec<T>, dt_ns: T, min_len: usize) -> Result<Self> {
        spec.validate()?;
        let nyquist_span = T::lit(1000.0) / dt_ns;
        if !(nyquist_span >= T::lit(4.0) * spec.bandwidth_mhz) {
            return Err(PropagationError::NyquistViolation(format!(
                "sampling at {dt_ns} ns spans {nyquist_span} MHz, less than four comb bandwidths"
            )));
        }
        let n = Self::record_length(&spec, dt_ns, min_len);
        let grid = FrequencyGrid::fft_conjugate(n, dt_ns)?;
        let profile = ideal_comb_profile(&spec, &grid)?;
        Self::from_profile(spec, dt_ns, profile)
    }

    /// Uses an externally prepared profile (e.g. from a burn simulation);
    /// it must already sit on an FFT-conjugate grid.
    pub fn from_profile(spec: CombSpec<T>, dt_ns: T, profile: SpectralProfile<T>) -> Result<Self> {
        let transfer = transfer_function_with_padding(&profile, DEFAULT_PADDING)?;
        Ok(Self {
            spec,
            dt_ns,
            profile,
            transfer,
        })
    }

    pub fn spec(&self) -> &CombSpec<T> {
        &self.spec
    }

    pub fn dt(&self) -> T {
        self.dt_ns
    }

    pub fn record_len(&self) -> usize {
        self.transfer.len()
    }

    pub fn profile(&self) -> &SpectralProfile<T> {
        &self.profile
    }

    pub fn transfer(&self) -> &TransferFunction<T> {
        &self.transfer
    }

    pub fn storage_time_ns(&self) -> T {
        self.spec.storage_time_ns()
    }

    /// FWHM-equivalent spectral width `2√(2 ln2) σ_f` of the pulse, MHz.
    pub fn spectral_width_mhz(&self, pulse: &PulseTrain<T>) -> T {
        let n = self.record_len();
        let spec = spectrum(pulse, n);
        let grid = self.transfer.grid();
        let (mut w, mut m1, mut m2) = (T::zero(), T::zero(), T::zero());
        for (k, x) in spec.iter().enumerate() {
            let f = grid.at(sorted_index(k, n));
            let p = x.norm_sqr();
            w += p;
            m1 += p * f;
            m2 += p * f * f;
        }
        if !(w > T::zero()) {
            return T::zero();
        }
        let mean = m1 / w;
        let var = (m2 / w - mean * mean).max(T::zero());
        T::lit(2.0) * (T::lit(2.0) * T::LN_2()).sqrt() * var.sqrt()
    }

    /// Runs `pulse` through the comb. The pulse is zero-padded to the record
    /// length; its bandwidth must be at most half the comb bandwidth.
    pub fn store(&self, pulse: &PulseTrain<T>) -> Result<PulseTrain<T>> {
        if (pulse.dt() - self.dt_ns).abs() > self.dt_ns * T::lit(1e-12) {
            return Err(PropagationError::GridMismatch(format!(
                "pulse sampled at {} ns, memory at {} ns",
                pulse.dt(),
                self.dt_ns
            )));
        }
        let width = self.spectral_width_mhz(pulse);
        let limit = self.spec.bandwidth_mhz / T::lit(2.0);
        if width > limit * (T::one() + T::lit(1e-9)) {
            return Err(PropagationError::PulseTooBroadband {
                pulse_mhz: width.as_f64(),
                comb_mhz: self.spec.bandwidth_mhz.as_f64(),
            });
        }
        propagate(pulse, &self.transfer)
    }
}
