use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PhotonicsError, Result};
use crate::propagation::PulseTrain;
use crate::scalar::Real;

/// Half-open time interval `[start, end)` in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start_ns: f64,
    pub end_ns: f64,
}

impl Window {
    pub fn new(start_ns: f64, end_ns: f64) -> Self {
        Self { start_ns, end_ns }
    }

    pub fn centered(center_ns: f64, width_ns: f64) -> Self {
        Self::new(center_ns - width_ns / 2.0, center_ns + width_ns / 2.0)
    }

    pub fn duration(&self) -> f64 {
        self.end_ns - self.start_ns
    }

    pub fn contains(&self, t_ns: f64) -> bool {
        t_ns >= self.start_ns && t_ns < self.end_ns
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start_ns < other.end_ns && other.start_ns < self.end_ns
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel<T> {
    pub quantum_efficiency: T,
    pub dark_rate_per_s: T,
    /// Detection gate; `None` records the whole field.
    pub gate: Option<(T, T)>,
    pub rng_seed: u64,
}

impl<T: Real> DetectorModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantum_efficiency >= T::zero() && self.quantum_efficiency <= T::one()) {
            return Err(PhotonicsError::InvalidParameter(format!(
                "detector efficiency {} outside [0, 1]",
                self.quantum_efficiency
            )));
        }
        if !(self.dark_rate_per_s >= T::zero()) || !self.dark_rate_per_s.is_finite() {
            return Err(PhotonicsError::InvalidParameter(
                "dark rate must be finite and non-negative".into(),
            ));
        }
        if let Some((a, b)) = self.gate {
            if !(b > a) {
                return Err(PhotonicsError::InvalidParameter(
                    "empty detector gate".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..self.clone()
        }
    }
}

/// Accumulated detection events on uniform time bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub bin_width_ns: f64,
    pub origin_ns: f64,
    pub counts: Vec<u64>,
    pub n_trials: u64,
}

impl CountHistogram {
    pub fn bin_start(&self, i: usize) -> f64 {
        self.origin_ns + i as f64 * self.bin_width_ns
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.bin_start(i) + self.bin_width_ns / 2.0
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts in bins whose center lies in `w`.
    pub fn counts_in(&self, w: &Window) -> u64 {
        (0..self.len())
            .filter(|&i| w.contains(self.bin_center(i)))
            .map(|i| self.counts[i])
            .sum()
    }

    /// Number of bins whose center lies in `w`.
    pub fn bins_in(&self, w: &Window) -> usize {
        (0..self.len())
            .filter(|&i| w.contains(self.bin_center(i)))
            .count()
    }

    /// Bin-wise sum of histograms recorded on the same grid.
    pub fn merge(&self, other: &CountHistogram) -> Result<CountHistogram> {
        if self.len() != other.len()
            || self.bin_width_ns != other.bin_width_ns
            || self.origin_ns != other.origin_ns
        {
            return Err(PhotonicsError::InvalidParameter(
                "histograms live on different bins".into(),
            ));
        }
        Ok(CountHistogram {
            bin_width_ns: self.bin_width_ns,
            origin_ns: self.origin_ns,
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect(),
            n_trials: self.n_trials + other.n_trials,
        })
    }
}

/// Counts accumulated over `n_trials` repetitions, one bin per field sample.
///
/// Bin `b` has mean `λ_b = n_trials·(η_det·|E_b|²·dt + dark·dt)` and is drawn
/// from its own Poisson stream `(seed, b)`, so the result does not depend on
/// how bins are spread across threads.
pub fn detect<T: Real>(
    field: &PulseTrain<T>,
    det: &DetectorModel<T>,
    n_trials: u64,
) -> Result<CountHistogram> {
    det.validate()?;
    if n_trials == 0 {
        return Err(PhotonicsError::InvalidParameter(
            "n_trials must be at least 1".into(),
        ));
    }
    let dt = field.dt().as_f64();
    let (lo, hi) = match det.gate {
        Some((a, b)) => (a.as_f64(), b.as_f64()),
        None => (field.t0().as_f64(), field.end_time().as_f64() + dt),
    };
    let idx: Vec<usize> = (0..field.len())
        .filter(|&i| {
            let t = field.time(i).as_f64();
            t >= lo && t < hi
        })
        .collect();
    let Some(&first) = idx.first() else {
        return Err(PhotonicsError::InvalidParameter(
            "detector gate does not overlap the field".into(),
        ));
    };
    let eta = det.quantum_efficiency.as_f64();
    let dark = det.dark_rate_per_s.as_f64() * dt * 1e-9;
    let trials = n_trials as f64;
    let samples = field.samples();
    let seed = det.rng_seed;
    let counts: Vec<u64> = idx
        .par_iter()
        .enumerate()
        .map(|(b, &i)| {
            let photons = samples[i].norm_sqr().as_f64() * dt;
            let lambda = trials * (eta * photons + dark);
            if !(lambda > 0.0) {
                return 0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            Poisson::new(lambda)
                .map(|p| p.sample(&mut rng) as u64)
                .unwrap_or(0)
        })
        .collect();
    Ok(CountHistogram {
        bin_width_ns: dt,
        origin_ns: field.time(first).as_f64() - dt / 2.0,
        counts,
        n_trials,
    })
}
