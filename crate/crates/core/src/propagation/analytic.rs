use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Closed-form forward-echo efficiency of a Gaussian-tooth comb,
/// `(d₁/F)² e^{-d₁/F} e^{-7/F²} e^{-d₀}`.
///
/// Inputs are not checked; `F ≤ 0` yields a meaningless value.
pub fn afc_efficiency_analytic<T: Real>(d1: T, finesse: T, d0: T) -> T {
    let x = d1 / finesse;
    x * x * (-x).exp() * (-T::lit(7.0) / (finesse * finesse)).exp() * (-d0).exp()
}

/// Finesse maximizing [`afc_efficiency_analytic`] at fixed `d₁`.
///
/// With `x = 1/F` the stationarity condition is `14x² + d₁x − 2 = 0`.
pub fn optimal_finesse<T: Real>(d1: T) -> T {
    let x = (-d1 + (d1 * d1 + T::lit(112.0)).sqrt()) / T::lit(28.0);
    T::one() / x
}

/// Number of temporal modes of width `mode_ns` that fit in `τ`.
pub fn multimode_capacity<T: Real>(tau_ns: T, mode_ns: T) -> usize {
    if !(mode_ns > T::zero()) || !(tau_ns > T::zero()) {
        return 0;
    }
    // guard exact ratios such as 400/100 against round-off
    let r = tau_ns / mode_ns * (T::one() + T::lit(1e-12));
    r.floor().to_usize().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayLine<T> {
    pub length_m: T,
    pub loss_db: T,
}

/// Waveguide length and propagation loss needed to delay light by `τ`.
pub fn delay_line_comparison<T: Real>(tau_ns: T, group_index: T, loss_db_per_m: T) -> DelayLine<T> {
    let length_m = T::lit(SPEED_OF_LIGHT_M_PER_S) * tau_ns * T::lit(1e-9) / group_index;
    DelayLine {
        length_m,
        loss_db: length_m * loss_db_per_m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_value_at_fig3a_parameters() {
        // mpmath, 30 digits
        let eta = afc_efficiency_analytic(1.61f64, 1.92, 1.36);
        assert!((eta - 0.011683295311605782).abs() < 1e-15);
    }

    #[test]
    fn finesse_scan_peak_matches_stationary_point() {
        for d1 in [0.5f64, 1.61, 4.0, 10.0] {
            let (mut best_f, mut best) = (0.0, -1.0);
            let mut f = 0.5;
            while f < 40.0 {
                let e = afc_efficiency_analytic(d1, f, 0.0);
                if e > best {
                    best = e;
                    best_f = f;
                }
                f += 1e-4;
            }
            assert!((best_f - optimal_finesse(d1)).abs() < 2e-4, "d1={d1}");
        }
    }

    #[test]
    fn capacity_and_delay_line() {
        assert_eq!(multimode_capacity(400.0f64, 100.0), 4);
        assert_eq!(multimode_capacity(399.0f64, 100.0), 3);
        assert_eq!(multimode_capacity(400.0f64, 0.0), 0);
        let dl = delay_line_comparison(400.0f64, 2.0, 1.3);
        assert!((dl.length_m - 59.9584916).abs() < 1e-6);
        assert!((dl.loss_db - 77.94603908).abs() < 1e-6);
    }
}
