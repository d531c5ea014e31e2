use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{HarnessError, Result};
use crate::output::{derive_seed, RunContext};
use crate::scenarios::storage::{detect_snr, propagate_stage, Propagated};

const MAX_ITERATIONS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub dark_rate_per_s: f64,
    pub snr: f64,
    pub snr_sigma: f64,
    pub iterations: usize,
    pub seed: u64,
}

fn snr_at(cfg: &ScenarioConfig, run: &Propagated, dark: f64, seed: u64) -> Result<(f64, f64)> {
    let mut det = cfg.detector.clone().expect("validated");
    det.dark_rate_per_s = dark;
    let (_, s) =
        detect_snr(cfg, run, &det, seed).map_err(|e| HarnessError::stage("calibrate", e))?;
    Ok((s.value, s.sigma))
}

/// Bisects the dark rate (geometrically, within `scan_range`) until the
/// simulated SNR of a `storage` config is within `tolerance` of `target`.
///
/// All evaluations share one seed derived from the config seed, so the
/// result is deterministic. SNR must fall as the dark rate grows.
pub fn calibrate_dark_rate(
    config: &ScenarioConfig,
    target: f64,
    tolerance: f64,
    scan_range: (f64, f64),
) -> Result<Calibration> {
    if config.scenario != ScenarioKind::Storage {
        return Err(HarnessError::InvalidArgument(format!(
            "calibration needs a storage scenario, got `{}`",
            config.scenario
        )));
    }
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(HarnessError::InvalidArgument(
            "tolerance must be positive".into(),
        ));
    }
    let (lo, hi) = scan_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(HarnessError::InvalidArgument(
            "scan range must be positive and increasing".into(),
        ));
    }
    if !(target >= 0.0) {
        return Err(HarnessError::Infeasible(format!(
            "SNR target {target} is below zero"
        )));
    }
    let mut ctx = RunContext::new(config);
    let run = propagate_stage(&mut ctx)?;
    let seed = derive_seed(config.seed, "calibrate");

    let (snr_lo, _) = snr_at(config, &run, lo, seed)?;
    let (snr_hi, _) = snr_at(config, &run, hi, seed)?;
    if target > snr_lo + tolerance || target < snr_hi - tolerance {
        return Err(HarnessError::Infeasible(format!(
            "SNR {target} outside [{snr_hi:.3}, {snr_lo:.3}] reachable with dark rates in [{lo}, {hi}] s⁻¹"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    for it in 1..=MAX_ITERATIONS {
        let mid = (a * b).sqrt();
        let (s, sigma) = snr_at(config, &run, mid, seed)?;
        if (s - target).abs() <= tolerance {
            return Ok(Calibration {
                dark_rate_per_s: mid,
                snr: s,
                snr_sigma: sigma,
                iterations: it,
                seed,
            });
        }
        if s > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(HarnessError::Infeasible(format!(
        "no dark rate in [{lo}, {hi}] s⁻¹ reached SNR {target} ± {tolerance}"
    )))
}
