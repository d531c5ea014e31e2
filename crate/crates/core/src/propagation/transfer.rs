use num_complex::Complex;
use rustfft::{FftDirection, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{PropagationError, PulseTrain, Result};
use crate::ensemble::{FrequencyGrid, SpectralProfile};
use crate::scalar::Real;

/// Default edge-extension factor applied before the Hilbert transform.
pub const DEFAULT_PADDING: usize = 8;

/// Spectral field transmission `H(ω)` on a sorted frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction<T> {
    grid: FrequencyGrid<T>,
    response: Vec<Complex<T>>,
}

impl<T: Real> TransferFunction<T> {
    /// Wraps raw samples; rejects gain above unity (beyond round-off).
    pub fn new(grid: FrequencyGrid<T>, response: Vec<Complex<T>>) -> Result<Self> {
        if response.len() != grid.len() {
            return Err(PropagationError::GridMismatch(format!(
                "{} response samples on a {}-point grid",
                response.len(),
                grid.len()
            )));
        }
        let max_gain = response.iter().map(|h| h.norm()).fold(T::zero(), T::max);
        if !max_gain.is_finite() || max_gain > T::one() + T::lit(1e-9) {
            return Err(PropagationError::NonPassive {
                max_gain: max_gain.as_f64(),
            });
        }
        Ok(Self { grid, response })
    }

    pub fn identity(grid: FrequencyGrid<T>) -> Self {
        Self {
            grid,
            response: vec![Complex::new(T::one(), T::zero()); grid.len()],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn response(&self) -> &[Complex<T>] {
        &self.response
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    /// Unwrapped spectral phase.
    pub fn phase(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        let mut offset = T::zero();
        let mut prev = T::zero();
        let two_pi = T::TAU();
        for (i, h) in self.response.iter().enumerate() {
            let raw = h.im.atan2(h.re);
            if i > 0 {
                let jump = raw + offset - prev;
                if jump > T::PI() {
                    offset -= two_pi;
                } else if jump < -T::PI() {
                    offset += two_pi;
                }
            }
            prev = raw + offset;
            out.push(prev);
        }
        out
    }
}

fn run_fft<T: Real + FftNum>(
    planner: &mut FftPlanner<T>,
    buf: &mut [Complex<T>],
    dir: FftDirection,
) {
    let fft = planner.plan_fft(buf.len(), dir);
    fft.process(buf);
}

/// `H(ω) = exp(-d(ω)/2 + iφ(ω))` with the causal (minimum-phase) φ.
pub fn transfer_function<T: Real + FftNum>(
    profile: &SpectralProfile<T>,
) -> Result<TransferFunction<T>> {
    transfer_function_with_padding(profile, DEFAULT_PADDING)
}

/// As [`transfer_function`], extending the profile by its edge values to at
/// least `padding` times its length before the Hilbert transform.
///
/// The phase comes from the causal part of the cepstrum of `ln|H|`: the log
/// amplitude is taken to the lag domain, negative lags are folded onto
/// positive ones, and the result is transformed back.
pub fn transfer_function_with_padding<T: Real + FftNum>(
    profile: &SpectralProfile<T>,
    padding: usize,
) -> Result<TransferFunction<T>> {
    let n = profile.len();
    let d = profile.optical_depth();
    let total = (n * padding.max(1)).next_power_of_two();
    let left = (total - n) / 2;
    let half = T::lit(0.5);
    let mut buf: Vec<Complex<T>> = (0..total)
        .map(|j| {
            let i = j.saturating_sub(left).min(n - 1);
            Complex::new(-d[i] * half, T::zero())
        })
        .collect();

    let mut planner = FftPlanner::new();
    run_fft(&mut planner, &mut buf, FftDirection::Inverse);
    let norm = T::one() / T::count(total);
    let two = T::lit(2.0) * norm;
    for (m, c) in buf.iter_mut().enumerate() {
        let w = if m == 0 || m == total / 2 {
            norm
        } else if m < total / 2 {
            two
        } else {
            T::zero()
        };
        *c *= w;
    }
    run_fft(&mut planner, &mut buf, FftDirection::Forward);

    let response = buf[left..left + n]
        .iter()
        .zip(d)
        .map(|(l, &di)| Complex::from_polar((-di * half).exp(), l.im))
        .collect();
    TransferFunction::new(*profile.grid(), response)
}

fn grids_match<T: Real>(a: &FrequencyGrid<T>, b: &FrequencyGrid<T>) -> bool {
    let tol = T::lit(1e-9);
    a.len() == b.len()
        && (a.step() - b.step()).abs() <= tol * b.step()
        && (a.start() - b.start()).abs() <= tol * b.step() * T::count(b.len())
}

/// Index on the sorted grid of FFT bin `k` for an `n`-point transform.
#[inline]
pub(crate) fn sorted_index(k: usize, n: usize) -> usize {
    (k + n / 2) % n
}

/// Spectrum of `pulse` zero-padded to `n`, in FFT bin order.
pub(crate) fn spectrum<T: Real + FftNum>(pulse: &PulseTrain<T>, n: usize) -> Vec<Complex<T>> {
    let mut buf = pulse.zero_padded(n).into_samples();
    let mut planner = FftPlanner::new();
    run_fft(&mut planner, &mut buf, FftDirection::Forward);
    buf
}

/// `E_out(t) = IFFT[ H(ω) · FFT[E_in](ω) ]`.
///
/// `h` must live on the grid conjugate to the (zero-padded) record:
/// `FrequencyGrid::fft_conjugate(h.len(), input.dt())`. The output spans
/// `h.len()` samples starting at the input's `t0`.
pub fn propagate<T: Real + FftNum>(
    input: &PulseTrain<T>,
    h: &TransferFunction<T>,
) -> Result<PulseTrain<T>> {
    let n = h.len();
    if input.len() > n {
        return Err(PropagationError::GridMismatch(format!(
            "pulse has {} samples but the transfer function only {n}",
            input.len()
        )));
    }
    let expected = FrequencyGrid::fft_conjugate(n, input.dt())?;
    if !grids_match(h.grid(), &expected) {
        return Err(PropagationError::GridMismatch(format!(
            "expected step {} MHz from {} MHz, got step {} MHz from {} MHz",
            expected.step(),
            expected.start(),
            h.grid().step(),
            h.grid().start()
        )));
    }

    let mut buf = spectrum(input, n);
    let total: T = buf.iter().map(|x| x.norm_sqr()).sum();
    if total > T::zero() {
        let edge = n * 2 / 5;
        let outer: T = buf
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = if *k < n.div_ceil(2) { *k } else { n - *k };
                f > edge
            })
            .map(|(_, x)| x.norm_sqr())
            .sum();
        if outer > total * T::lit(1e-6) {
            return Err(PropagationError::NyquistViolation(format!(
                "{:.3e} of the pulse energy sits above 0.8 of the Nyquist frequency",
                (outer / total).as_f64()
            )));
        }
    }

    let resp = h.response();
    for (k, x) in buf.iter_mut().enumerate() {
        *x *= resp[sorted_index(k, n)];
    }
    let mut planner = FftPlanner::new();
    run_fft(&mut planner, &mut buf, FftDirection::Inverse);
    let norm = T::one() / T::count(n);
    buf.iter_mut().for_each(|x| *x *= norm);
    PulseTrain::new(input.t0(), input.dt(), buf)
}
