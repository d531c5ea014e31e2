use serde::{Deserialize, Serialize};

use super::{CountHistogram, PhotonicsError, Result, Window};
use crate::linalg;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    /// `k` successes out of `n` with binomial uncertainty.
    fn binomial(k: f64, n: f64) -> Self {
        let p = k / n;
        Self {
            value: p,
            sigma: (p * (1.0 - p) / n).max(0.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub value: f64,
    pub sigma: f64,
    pub signal_counts: u64,
    pub noise_counts: u64,
    /// Set when the noise window was empty and one count was assumed.
    pub lower_bound: bool,
}

fn check_windows(hist: &CountHistogram, a: &Window, b: &Window) -> Result<()> {
    let (na, nb) = (hist.bins_in(a), hist.bins_in(b));
    if a.overlaps(b) || na != nb || na == 0 {
        return Err(PhotonicsError::WindowMismatch);
    }
    Ok(())
}

/// `(S - N)/N` for signal counts `S` and noise counts `N` in equal-length
/// windows, with `σ² = S/N² + S²/N³` from Poisson statistics.
pub fn snr(hist: &CountHistogram, signal: &Window, noise: &Window) -> Result<SnrEstimate> {
    check_windows(hist, signal, noise)?;
    let s_counts = hist.counts_in(signal);
    let n_counts = hist.counts_in(noise);
    let lower_bound = n_counts == 0;
    let s = s_counts as f64;
    let n = (n_counts as f64).max(1.0);
    let value = (s - n) / n;
    let sigma = (s / (n * n) + s * s / (n * n * n)).sqrt();
    Ok(SnrEstimate {
        value,
        sigma,
        signal_counts: s_counts,
        noise_counts: n_counts,
        lower_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElFidelity {
    pub early: Estimate,
    pub late: Estimate,
    pub average: Estimate,
}

fn el_from_counts(e_right: f64, e_wrong: f64, l_right: f64, l_wrong: f64) -> Result<ElFidelity> {
    if !(e_right + e_wrong > 0.0) || !(l_right + l_wrong > 0.0) {
        return Err(PhotonicsError::ZeroCounts);
    }
    let early = Estimate::binomial(e_right, e_right + e_wrong);
    let late = Estimate::binomial(l_right, l_right + l_wrong);
    let average = Estimate {
        value: (early.value + late.value) / 2.0,
        sigma: 0.5 * (early.sigma.powi(2) + late.sigma.powi(2)).sqrt(),
    };
    Ok(ElFidelity {
        early,
        late,
        average,
    })
}

/// Raw `F_el = (F_e + F_l)/2`, where `F_e` is the fraction of an `|e⟩`
/// record's gated counts landing in the early gate (and likewise for `|l⟩`).
pub fn fidelity_el(
    hist_e: &CountHistogram,
    hist_l: &CountHistogram,
    early: &Window,
    late: &Window,
) -> Result<ElFidelity> {
    check_windows(hist_e, early, late)?;
    check_windows(hist_l, early, late)?;
    el_from_counts(
        hist_e.counts_in(early) as f64,
        hist_e.counts_in(late) as f64,
        hist_l.counts_in(late) as f64,
        hist_l.counts_in(early) as f64,
    )
}

/// As [`fidelity_el`], after subtracting the per-bin background measured in
/// `noise` from both gates (clamped at zero).
pub fn fidelity_el_background_subtracted(
    hist_e: &CountHistogram,
    hist_l: &CountHistogram,
    early: &Window,
    late: &Window,
    noise: &Window,
) -> Result<ElFidelity> {
    check_windows(hist_e, early, late)?;
    check_windows(hist_l, early, late)?;
    let gate_bins = hist_e.bins_in(early) as f64;
    let net = |h: &CountHistogram, w: &Window| -> Result<f64> {
        let nb = h.bins_in(noise);
        if nb == 0 {
            return Err(PhotonicsError::WindowMismatch);
        }
        let per_bin = h.counts_in(noise) as f64 / nb as f64;
        Ok((h.counts_in(w) as f64 - per_bin * gate_bins).max(0.0))
    };
    el_from_counts(
        net(hist_e, early)?,
        net(hist_e, late)?,
        net(hist_l, late)?,
        net(hist_l, early)?,
    )
}

/// `F = C/(C+D)` from the central-peak counts of the constructive and
/// destructive preparations, i.e. `(1+V)/2` with `V = (C-D)/(C+D)`.
pub fn superposition_fidelity(constructive: u64, destructive: u64) -> Result<Estimate> {
    let n = (constructive + destructive) as f64;
    if n == 0.0 {
        return Err(PhotonicsError::ZeroCounts);
    }
    Ok(Estimate::binomial(constructive as f64, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    /// Fitted visibility, possibly above 1; see `clamped`.
    pub visibility: f64,
    pub visibility_sigma: f64,
    /// `(1 + min(V, 1))/2`.
    pub fidelity: f64,
    pub fidelity_sigma: f64,
    /// `φ₀` in `C̄(1 + V sin(Δα + φ₀))`.
    pub phase_offset: f64,
    pub mean_counts: f64,
    /// The fit returned `V > 1` and the fidelity used `V = 1`.
    pub clamped: bool,
}

/// Fits `C̄(1 + V sin(Δα + φ₀))` to `(Δα, counts)` pairs.
///
/// The model is linear as `C̄ + a sin Δα + b cos Δα`, solved by weighted least
/// squares with Poisson weights `1/max(counts, 1)`; uncertainties come from
/// that covariance.
pub fn visibility_and_fidelity(fringe: &[(f64, f64)]) -> Result<VisibilityFit> {
    if fringe.len() < 6 {
        return Err(PhotonicsError::InsufficientFringe);
    }
    let (lo, hi) = fringe
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    if hi - lo < 0.8 * std::f64::consts::TAU {
        return Err(PhotonicsError::InsufficientFringe);
    }
    if fringe
        .iter()
        .any(|p| !p.0.is_finite() || !p.1.is_finite() || p.1 < 0.0)
    {
        return Err(PhotonicsError::FitDivergence(
            "non-finite or negative counts".into(),
        ));
    }
    let mut xtx = [0.0f64; 9];
    let mut xty = [0.0f64; 3];
    for &(phase, y) in fringe {
        let w = 1.0 / y.max(1.0);
        let row = [1.0, phase.sin(), phase.cos()];
        for a in 0..3 {
            xty[a] += w * row[a] * y;
            for b in 0..3 {
                xtx[a * 3 + b] += w * row[a] * row[b];
            }
        }
    }
    let coef = linalg::solve(&xtx, &xty, 3)
        .ok_or_else(|| PhotonicsError::FitDivergence("singular design".into()))?;
    let cov = linalg::invert(&xtx, 3)
        .ok_or_else(|| PhotonicsError::FitDivergence("singular design".into()))?;
    let (c, a, b) = (coef[0], coef[1], coef[2]);
    if !(c > 0.0) {
        return Err(PhotonicsError::FitDivergence(format!("mean counts {c}")));
    }
    let r = a.hypot(b);
    let visibility = r / c;
    // gradient of V = √(a²+b²)/c
    let grad = if r > 0.0 {
        [-r / (c * c), a / (r * c), b / (r * c)]
    } else {
        [0.0, 1.0 / c, 1.0 / c]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i * 3 + j] * grad[j];
        }
    }
    let visibility_sigma = var.max(0.0).sqrt();
    // round-off on an ideal fringe can land a hair above 1
    let clamped = visibility > 1.0 + 1e-9;
    Ok(VisibilityFit {
        visibility,
        visibility_sigma,
        fidelity: (1.0 + visibility.min(1.0)) / 2.0,
        fidelity_sigma: visibility_sigma / 2.0,
        phase_offset: b.atan2(a),
        mean_counts: c,
        clamped,
    })
}

/// `F_T = F_el/3 + 2F_±/3`.
pub fn total_fidelity<T: Real>(f_el: T, f_pm: T) -> T {
    (f_el + T::lit(2.0) * f_pm) / T::lit(3.0)
}

/// [`total_fidelity`] with uncertainties added in quadrature.
pub fn total_fidelity_with_uncertainty<T: Real>(
    f_el: T,
    sigma_el: T,
    f_pm: T,
    sigma_pm: T,
) -> (T, T) {
    let three = T::lit(3.0);
    let s = ((sigma_el / three).powi(2) + (T::lit(2.0) * sigma_pm / three).powi(2)).sqrt();
    (total_fidelity(f_el, f_pm), s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: Vec<u64>) -> CountHistogram {
        CountHistogram {
            bin_width_ns: 1.0,
            origin_ns: 0.0,
            counts,
            n_trials: 1,
        }
    }

    #[test]
    fn snr_arithmetic() {
        let mut c = vec![0u64; 20];
        c[2] = 563;
        c[15] = 10;
        let h = hist(c);
        let r = snr(&h, &Window::new(0.0, 10.0), &Window::new(10.0, 20.0)).unwrap();
        assert!((r.value - 55.3).abs() < 1e-12);
        let want = (563.0 / 100.0 + 563.0f64.powi(2) / 1000.0).sqrt();
        assert!((r.sigma - want).abs() < 1e-12);
        assert!(!r.lower_bound);

        let z = hist(vec![1; 20]);
        let r = snr(&z, &Window::new(0.0, 10.0), &Window::new(10.0, 20.0)).unwrap();
        assert!(r.value.abs() < 1e-12);

        let empty = hist(vec![0; 20]);
        assert!(
            snr(&empty, &Window::new(0.0, 10.0), &Window::new(10.0, 20.0))
                .unwrap()
                .lower_bound
        );
        assert_eq!(
            snr(&h, &Window::new(0.0, 10.0), &Window::new(5.0, 15.0)),
            Err(PhotonicsError::WindowMismatch)
        );
        assert_eq!(
            snr(&h, &Window::new(0.0, 10.0), &Window::new(10.0, 15.0)),
            Err(PhotonicsError::WindowMismatch)
        );
    }

    #[test]
    fn el_fidelity_arithmetic() {
        let (e, l) = (Window::new(0.0, 5.0), Window::new(5.0, 10.0));
        let mut he = vec![0u64; 10];
        he[1] = 988;
        he[7] = 12;
        let mut hl = vec![0u64; 10];
        hl[6] = 988;
        hl[2] = 12;
        let f = fidelity_el(&hist(he), &hist(hl), &e, &l).unwrap();
        assert!((f.early.value - 0.988).abs() < 1e-12);
        assert!((f.average.value - 0.988).abs() < 1e-12);

        let f = fidelity_el(&hist(vec![3; 10]), &hist(vec![3; 10]), &e, &l).unwrap();
        assert!((f.average.value - 0.5).abs() < 1e-12);
        assert_eq!(
            fidelity_el(&hist(vec![0; 10]), &hist(vec![3; 10]), &e, &l),
            Err(PhotonicsError::ZeroCounts)
        );
    }

    #[test]
    fn background_subtraction_removes_flat_noise() {
        let (e, l, n) = (
            Window::new(0.0, 5.0),
            Window::new(5.0, 10.0),
            Window::new(10.0, 15.0),
        );
        let mut he = vec![2u64; 15];
        he[1] += 100;
        let mut hl = vec![2u64; 15];
        hl[7] += 100;
        let raw = fidelity_el(&hist(he.clone()), &hist(hl.clone()), &e, &l).unwrap();
        let sub = fidelity_el_background_subtracted(&hist(he), &hist(hl), &e, &l, &n).unwrap();
        assert!(raw.average.value < 0.95);
        assert!((sub.average.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn visibility_examples() {
        let pts = |v: f64, phi: f64| -> Vec<(f64, f64)> {
            (0..16)
                .map(|k| {
                    let a = k as f64 * std::f64::consts::TAU / 16.0;
                    (a, 1000.0 * (1.0 + v * (a + phi).sin()))
                })
                .collect()
        };
        let r = visibility_and_fidelity(&pts(0.94, 0.3)).unwrap();
        assert!((r.visibility - 0.94).abs() < 1e-9);
        assert!((r.fidelity - 0.97).abs() < 1e-9);
        assert!((r.phase_offset - 0.3).abs() < 1e-9);

        let r = visibility_and_fidelity(&pts(0.0, 0.0)).unwrap();
        assert!(r.visibility.abs() < 1e-12 && (r.fidelity - 0.5).abs() < 1e-12);

        let r = visibility_and_fidelity(&pts(1.0, 0.0)).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-6 && !r.clamped);

        let over: Vec<(f64, f64)> = pts(1.0, 0.0)
            .into_iter()
            .map(|(a, _)| (a, (1000.0 * (1.0 + 1.2 * a.sin())).max(0.0)))
            .collect();
        let r = visibility_and_fidelity(&over).unwrap();
        assert!(r.clamped && r.visibility > 1.0 && r.fidelity == 1.0);

        assert_eq!(
            visibility_and_fidelity(&pts(0.9, 0.0)[..5]),
            Err(PhotonicsError::InsufficientFringe)
        );
        assert_eq!(
            visibility_and_fidelity(&pts(0.9, 0.0)[..8]),
            Err(PhotonicsError::InsufficientFringe)
        );
    }

    #[test]
    fn total_fidelity_examples() {
        assert!((total_fidelity(0.988f64, 0.966) - 0.9733333333333334).abs() < 1e-15);
        assert_eq!(total_fidelity(1.0f64, 1.0), 1.0);
        assert_eq!(total_fidelity(0.5f64, 0.5), 0.5);
        let (_, s) = total_fidelity_with_uncertainty(0.988f64, 0.001, 0.966, 0.002);
        assert!((s - (0.001f64.powi(2) / 9.0 + 0.004f64.powi(2) / 9.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn superposition_counts() {
        let f = superposition_fidelity(966, 34).unwrap();
        assert!((f.value - 0.966).abs() < 1e-12);
        assert_eq!(
            superposition_fidelity(0, 0),
            Err(PhotonicsError::ZeroCounts)
        );
    }
}
