use serde::{Deserialize, Serialize};

use super::{PropagationError, PulseTrain, Result};
use crate::scalar::Real;

/// Echo integrated over one window after a storage experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryResult<T> {
    /// Echo order, or the mode index for [`mode_efficiencies`].
    pub order: usize,
    pub efficiency: T,
    /// Intensity centroid of the output inside the window, ns.
    pub echo_time_ns: T,
    pub window_start_ns: T,
    pub window_end_ns: T,
    pub input_energy: T,
    pub echo_energy: T,
}

/// Full echo-window width for an input of intensity FWHM `fwhm_ns`: ±3 FWHM.
pub fn default_echo_window_ns<T: Real>(fwhm_ns: T) -> T {
    T::lit(6.0) * fwhm_ns
}

fn window_result<T: Real>(
    output: &PulseTrain<T>,
    input_energy: T,
    center: T,
    window_ns: T,
    order: usize,
) -> MemoryResult<T> {
    let lo = center - window_ns / T::lit(2.0);
    let hi = center + window_ns / T::lit(2.0);
    let echo = output.energy_between(lo, hi);
    MemoryResult {
        order,
        efficiency: echo / input_energy,
        echo_time_ns: output.centroid_between(lo, hi).unwrap_or(center),
        window_start_ns: lo,
        window_end_ns: hi,
        input_energy,
        echo_energy: echo,
    }
}

fn check<T: Real>(input: &PulseTrain<T>, tau_ns: T, window_ns: T) -> Result<(T, T)> {
    if !(window_ns > T::zero()) || !(window_ns < tau_ns) {
        return Err(PropagationError::WindowOverlapsTransmission {
            window_ns: window_ns.as_f64(),
            tau_ns: tau_ns.as_f64(),
        });
    }
    let photons = input.energy();
    match input.centroid() {
        Some(c) if photons > T::zero() => Ok((photons, c)),
        _ => Err(PropagationError::EmptyInput),
    }
}

/// First-echo efficiency: output photons in a window of width `window_ns`
/// centered one storage time after the input centroid, over input photons.
pub fn echo_efficiency<T: Real>(
    output: &PulseTrain<T>,
    input: &PulseTrain<T>,
    tau_ns: T,
    window_ns: T,
) -> Result<MemoryResult<T>> {
    let (photons, c) = check(input, tau_ns, window_ns)?;
    Ok(window_result(output, photons, c + tau_ns, window_ns, 1))
}

/// Echoes of order `1..=orders`, each in its own window at `k·τ`.
pub fn echo_series<T: Real>(
    output: &PulseTrain<T>,
    input: &PulseTrain<T>,
    tau_ns: T,
    window_ns: T,
    orders: usize,
) -> Result<Vec<MemoryResult<T>>> {
    let (photons, c) = check(input, tau_ns, window_ns)?;
    Ok((1..=orders)
        .map(|k| window_result(output, photons, c + T::count(k) * tau_ns, window_ns, k))
        .collect())
}

/// Per-mode efficiencies of a pulse train. Mode `k` occupies
/// `centers[k] ± width/2` at the input and the same slot shifted by `τ` at
/// the output; each echo is normalized by the input photons in its own slot.
pub fn mode_efficiencies<T: Real>(
    output: &PulseTrain<T>,
    input: &PulseTrain<T>,
    tau_ns: T,
    centers_ns: &[T],
    width_ns: T,
) -> Result<Vec<MemoryResult<T>>> {
    if !(width_ns > T::zero()) || !(width_ns < tau_ns) {
        return Err(PropagationError::WindowOverlapsTransmission {
            window_ns: width_ns.as_f64(),
            tau_ns: tau_ns.as_f64(),
        });
    }
    let half = width_ns / T::lit(2.0);
    centers_ns
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let photons = input.energy_between(c - half, c + half);
            if !(photons > T::zero()) {
                return Err(PropagationError::EmptyInput);
            }
            let mut r = window_result(output, photons, c + tau_ns, width_ns, 1);
            r.order = k;
            Ok(r)
        })
        .collect()
}
