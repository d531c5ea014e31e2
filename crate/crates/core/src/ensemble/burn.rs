//! Spectral hole burning with a per-frequency-class population model.
//!
//! Each frequency class carries a ground pool `g`, an excited pool `e`
//! (lifetime T₁) and one shelf pool per hole channel. Optical pumping at rate
//! `R` drives `g ↔ e` (absorption and stimulated emission); excited ions return
//! to `g` with branching `b` or to shelf `i` with weight `(1-b)·aᵢ`, and shelf
//! `i` relaxes back to `g` with lifetime `τᵢ`. The generator has zero column
//! sums, so total population is conserved by construction.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CombSpec, EnsembleError, FrequencyGrid, IonEnsembleParams, Result, SpectralProfile};
use crate::linalg;
use crate::scalar::Real;

/// Pump rate per frequency class, in s⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpTable<T> {
    pub grid: FrequencyGrid<T>,
    pub rate_per_s: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurnSchedule<T> {
    pub pulse_duration_ms: T,
    pub repetitions: usize,
    pub pump: PumpTable<T>,
    pub wait_after_ms: T,
}

impl<T: Real> BurnSchedule<T> {
    /// Parallel preparation: flat pump of `rate_per_s` in the anti-tooth bands
    /// (farther than γ/2 from every tooth center) inside the comb bandwidth.
    pub fn comb_complement(
        target: &CombSpec<T>,
        grid: FrequencyGrid<T>,
        rate_per_s: T,
        pulse_duration_ms: T,
        repetitions: usize,
        wait_after_ms: T,
    ) -> Result<Self> {
        target.validate()?;
        let centers = target.tooth_centers();
        let half_band = target.bandwidth_mhz / T::lit(2.0) + target.tooth_spacing_mhz / T::lit(2.0);
        let half_tooth = target.tooth_fwhm_mhz / T::lit(2.0);
        let rates = grid
            .points()
            .map(|f| {
                let nearest = centers
                    .iter()
                    .map(|&c| (f - c).abs())
                    .fold(T::infinity(), T::min);
                if f.abs() <= half_band && nearest > half_tooth {
                    rate_per_s
                } else {
                    T::zero()
                }
            })
            .collect();
        let sched = Self {
            pulse_duration_ms,
            repetitions,
            pump: PumpTable {
                grid,
                rate_per_s: rates,
            },
            wait_after_ms,
        };
        sched.validate()?;
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_duration_ms > T::zero()) || !self.pulse_duration_ms.is_finite() {
            return Err(EnsembleError::InvalidParameter(format!(
                "pulse duration must be positive, got {}",
                self.pulse_duration_ms
            )));
        }
        if self.repetitions == 0 {
            return Err(EnsembleError::InvalidParameter(
                "at least one preparation repetition is required".into(),
            ));
        }
        if !(self.wait_after_ms >= T::zero()) {
            return Err(EnsembleError::InvalidParameter(
                "wait after preparation must be non-negative".into(),
            ));
        }
        if self.pump.rate_per_s.len() != self.pump.grid.len() {
            return Err(EnsembleError::LengthMismatch {
                grid: self.pump.grid.len(),
                data: self.pump.rate_per_s.len(),
            });
        }
        if self
            .pump
            .rate_per_s
            .iter()
            .any(|r| !(*r >= T::zero()) || !r.is_finite())
        {
            return Err(EnsembleError::InvalidParameter(
                "pump rates must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Final state of one frequency class after the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTrajectory<T> {
    pub rate_per_s: T,
    /// `[g, e, shelf_1, ..]`, normalized to a unit initial ground population.
    pub populations: Vec<T>,
    /// Largest `|Σ n - 1|` seen at any integrator step.
    pub max_conservation_error: T,
    /// Smallest population component seen at any step.
    pub min_population: T,
    pub steps: usize,
}

impl<T: Real> ClassTrajectory<T> {
    /// Remaining absorption relative to the unburned class, `g - e`, in [0, 1].
    pub fn absorption_fraction(&self) -> T {
        (self.populations[0] - self.populations[1])
            .max(T::zero())
            .min(T::one())
    }
}

#[derive(Debug, Clone)]
pub struct BurnOutcome<T> {
    pub initial: SpectralProfile<T>,
    pub profile: SpectralProfile<T>,
    /// One entry per distinct pump rate in the table.
    pub classes: Vec<ClassTrajectory<T>>,
}

/// Rate-equation generator for one class, row-major `(2 + m) x (2 + m)`.
fn generator<T: Real>(params: &IonEnsembleParams<T>, rate: T) -> Vec<T> {
    let m = params.hole_lifetimes.len();
    let n = 2 + m;
    let inv_t1 = T::lit(1000.0) / params.t1_excited_ms;
    let b = params.branch_to_ground;
    let mut a = vec![T::zero(); n * n];
    // ground
    a[0] = -rate;
    a[1] = rate + b * inv_t1;
    // excited
    a[n] = rate;
    a[n + 1] = -rate - inv_t1;
    for (i, ch) in params.hole_lifetimes.iter().enumerate() {
        let s = 2 + i;
        let inv_tau = T::one() / ch.lifetime_s;
        a[s] = inv_tau;
        a[s * n + 1] = (T::one() - b) * ch.amplitude * inv_t1;
        a[s * n + s] = -inv_tau;
    }
    a
}

/// Integrates one class through the schedule with exact per-step propagators
/// for piecewise-constant pumping; the step never exceeds T₁/50.
pub fn simulate_class<T: Real>(
    params: &IonEnsembleParams<T>,
    rate_per_s: T,
    schedule: &BurnSchedule<T>,
    detuning_mhz: T,
) -> Result<ClassTrajectory<T>> {
    let n = 2 + params.hole_lifetimes.len();
    let max_step_s = params.t1_excited_ms / T::lit(1000.0) / T::lit(50.0);
    let mut state = vec![T::zero(); n];
    state[0] = T::one();
    let mut traj = ClassTrajectory {
        rate_per_s,
        populations: Vec::new(),
        max_conservation_error: T::zero(),
        min_population: T::zero(),
        steps: 0,
    };

    let pulse_s = schedule.pulse_duration_ms / T::lit(1000.0);
    let wait_s = schedule.wait_after_ms / T::lit(1000.0);
    let segments = [
        (rate_per_s, pulse_s, schedule.repetitions),
        (T::zero(), wait_s, 1),
    ];
    for (rate, duration, reps) in segments {
        if !(duration > T::zero()) {
            continue;
        }
        let nsteps = (duration / max_step_s)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h = duration / T::count(nsteps);
        let gen: Vec<T> = generator(params, rate).into_iter().map(|v| v * h).collect();
        let prop = linalg::expm(&gen, n);
        for _ in 0..reps * nsteps {
            state = linalg::matvec(&prop, &state, n);
            traj.steps += 1;
            let total: T = state.iter().copied().sum();
            if !total.is_finite() || state.iter().any(|v| !v.is_finite()) {
                return Err(EnsembleError::NonConvergentStep {
                    detuning_mhz: detuning_mhz.as_f64(),
                });
            }
            let lowest = state.iter().copied().fold(T::infinity(), T::min);
            if lowest < -T::lit(1e-12) {
                return Err(EnsembleError::NegativePopulation {
                    detuning_mhz: detuning_mhz.as_f64(),
                    value: lowest.as_f64(),
                });
            }
            traj.min_population = traj.min_population.min(lowest);
            traj.max_conservation_error = traj.max_conservation_error.max((total - T::one()).abs());
        }
    }
    traj.populations = state;
    Ok(traj)
}

/// Burns a comb into the unburned line of `params` using `schedule`, which
/// also fixes the frequency grid of the result.
pub fn burn_comb<T: Real>(
    params: &IonEnsembleParams<T>,
    target: &CombSpec<T>,
    schedule: &BurnSchedule<T>,
) -> Result<BurnOutcome<T>> {
    params.validate()?;
    target.validate()?;
    schedule.validate()?;
    let grid = schedule.pump.grid;
    let (lo, hi) = target.required_span();
    if !grid.covers(lo, hi) {
        return Err(EnsembleError::GridTooNarrow {
            need_lo_mhz: lo.as_f64(),
            need_hi_mhz: hi.as_f64(),
            have_lo_mhz: grid.start().as_f64(),
            have_hi_mhz: grid.end().as_f64(),
        });
    }
    let initial = params.absorption_profile(&grid)?;

    // Classes with equal pump rate evolve identically.
    let mut first_index: HashMap<u64, usize> = HashMap::new();
    for (i, r) in schedule.pump.rate_per_s.iter().enumerate() {
        first_index.entry(r.as_f64().to_bits()).or_insert(i);
    }
    let mut distinct: Vec<(u64, usize)> = first_index.into_iter().collect();
    distinct.sort_by_key(|&(_, i)| i);

    let classes: Vec<ClassTrajectory<T>> = distinct
        .par_iter()
        .map(|&(_, i)| simulate_class(params, schedule.pump.rate_per_s[i], schedule, grid.at(i)))
        .collect::<Result<_>>()?;
    let by_rate: HashMap<u64, T> = distinct
        .iter()
        .zip(&classes)
        .map(|(&(bits, _), c)| (bits, c.absorption_fraction()))
        .collect();

    let depth = initial
        .optical_depth()
        .iter()
        .zip(&schedule.pump.rate_per_s)
        .map(|(&d, r)| d * by_rate[&r.as_f64().to_bits()])
        .collect();
    let profile = SpectralProfile::new(grid, depth)?;
    Ok(BurnOutcome {
        initial,
        profile,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::HoleChannel;

    fn params() -> IonEnsembleParams<f64> {
        IonEnsembleParams::er_tfln()
    }

    fn uniform_schedule(rate: f64, pulse_ms: f64, reps: usize, wait_ms: f64) -> BurnSchedule<f64> {
        let grid = FrequencyGrid::new(-30.0, 1.0, 61).unwrap();
        BurnSchedule {
            pulse_duration_ms: pulse_ms,
            repetitions: reps,
            pump: PumpTable {
                grid,
                rate_per_s: vec![rate; grid.len()],
            },
            wait_after_ms: wait_ms,
        }
    }

    #[test]
    fn zero_pump_leaves_profile_unchanged() {
        let p = params();
        let sched = uniform_schedule(0.0, 5.0, 150, 10.0);
        let out = burn_comb(&p, &CombSpec::er_tfln(), &sched).unwrap();
        assert_eq!(out.profile, out.initial);
    }

    #[test]
    fn two_level_burn_matches_closed_form() {
        // branch_to_ground = 1 removes the shelf: a closed two-level system.
        let mut p = params();
        p.branch_to_ground = 1.0;
        let t1 = p.t1_excited_ms * 1e-3;
        let rate = 1.0 / t1; // R·T₁ = 1
        let pulse_ms = 5.0;
        let traj =
            simulate_class(&p, rate, &uniform_schedule(rate, pulse_ms, 1, 0.0), 0.0).unwrap();
        // w = g - e obeys dw/dt = -2R w + (1 - w)/T₁
        let t = pulse_ms * 1e-3;
        let w_ss = 1.0 / (1.0 + 2.0 * rate * t1);
        let w = w_ss + (1.0 - w_ss) * (-(2.0 * rate + 1.0 / t1) * t).exp();
        let got = traj.absorption_fraction();
        assert!((got - w).abs() / w < 1e-2, "got {got}, closed form {w}");
        assert!(
            (got - w).abs() / w < 1e-9,
            "exact propagator should be tight: {got} vs {w}"
        );
    }

    #[test]
    fn strong_pump_empties_pumped_classes() {
        let p = params();
        let t1 = p.t1_excited_ms * 1e-3;
        let rate = 100.0 / t1;
        let traj = simulate_class(&p, rate, &uniform_schedule(rate, 5.0, 150, 20.0), 0.0).unwrap();
        // Pumped steady state: g ≈ e = x with shelf s = 1 - 2x fed at (1-b)x/T₁
        // and draining at s/τ_eff, so x ≈ T₁ / (2 (1-b) τ_eff) ≪ 1.
        let b = p.branch_to_ground;
        let tau_short = p.hole_lifetimes[0].lifetime_s;
        let upper = 10.0 * t1 / (2.0 * (1.0 - b) * tau_short);
        let frac = traj.absorption_fraction();
        assert!(frac <= 0.1, "trough retains {frac} of initial depth");
        assert!(frac < upper);
    }

    #[test]
    fn population_is_conserved_each_step() {
        let p = params();
        for rate in [0.0, 10.0, 360.0, 1e4, 1e6] {
            let traj =
                simulate_class(&p, rate, &uniform_schedule(rate, 5.0, 20, 5.0), 0.0).unwrap();
            assert!(
                traj.max_conservation_error < 1e-9,
                "rate {rate}: {}",
                traj.max_conservation_error
            );
            assert!(traj.min_population >= -1e-12);
        }
    }

    #[test]
    fn comb_complement_burn_reproduces_spacing() {
        let p = params();
        let target = CombSpec::er_tfln();
        let (lo, hi) = target.required_span();
        let grid = FrequencyGrid::spanning(lo, hi, 0.05).unwrap();
        let sched = BurnSchedule::comb_complement(&target, grid, 5e3, 5.0, 150, 10.0).unwrap();
        let out = burn_comb(&p, &target, &sched).unwrap();
        let d = out.profile.optical_depth();
        let d0 = out.initial.optical_depth();
        for (i, (&a, &b)) in d.iter().zip(d0).enumerate() {
            assert!(a >= 0.0 && a <= b + 1e-12, "sample {i}");
        }
        // teeth keep the full depth, troughs are burned down
        let at = |f: f64| d[grid.nearest_index(f)];
        assert!((at(0.0) - d0[grid.nearest_index(0.0)]).abs() < 1e-12);
        assert!(at(1.25) < 0.1 * d0[grid.nearest_index(1.25)]);
        // centers of the unburned plateaus are spaced by Δ
        let mut centers = Vec::new();
        let mut run_start = None;
        for (i, &di) in d.iter().enumerate() {
            let inside = grid.at(i).abs() < 21.0 && di > 1.0;
            match (inside, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    centers.push(0.5 * (grid.at(s) + grid.at(i - 1)));
                    run_start = None;
                }
                _ => {}
            }
        }
        assert_eq!(centers.len(), 17);
        for w in centers.windows(2) {
            assert!(((w[1] - w[0]) - 2.5).abs() <= grid.step() + 1e-9, "{:?}", w);
        }
    }

    #[test]
    fn rejects_bad_schedules() {
        let mut s = uniform_schedule(1.0, 5.0, 1, 0.0);
        s.repetitions = 0;
        assert!(s.validate().is_err());
        let mut s = uniform_schedule(1.0, 5.0, 1, 0.0);
        s.pulse_duration_ms = 0.0;
        assert!(s.validate().is_err());
        let mut s = uniform_schedule(1.0, 5.0, 1, 0.0);
        s.pump.rate_per_s[3] = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn single_hole_channel_model() {
        let mut p = params();
        p.hole_lifetimes = vec![HoleChannel {
            amplitude: 1.0,
            lifetime_s: 1.95,
        }];
        let traj = simulate_class(&p, 1e4, &uniform_schedule(1e4, 5.0, 150, 10.0), 0.0).unwrap();
        assert_eq!(traj.populations.len(), 3);
        assert!(traj.absorption_fraction() < 0.1);
    }
}
