use super::{PhotonicsError, Result};
use crate::scalar::Real;

/// Optimal fidelity for estimating a qubit from `n` identical copies.
pub fn estimation_fidelity<T: Real>(n: usize) -> T {
    T::count(n + 1) / T::count(n + 2)
}

/// Poisson probabilities `p(0..=n_max)` for mean `mu`.
fn poisson_pmf<T: Real>(mu: T, n_max: usize) -> Vec<T> {
    let mut p = Vec::with_capacity(n_max + 1);
    let mut term = (-mu).exp();
    p.push(term);
    for n in 1..=n_max {
        term = term * mu / T::count(n);
        p.push(term);
    }
    p
}

fn check_inputs<T: Real>(mu: T, eta: T) -> Result<()> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(PhotonicsError::InvalidParameter(format!(
            "mean photon number must be positive, got {mu}"
        )));
    }
    if !(eta > T::zero()) || !eta.is_finite() {
        return Err(PhotonicsError::InvalidParameter(format!(
            "device efficiency must be positive, got {eta}"
        )));
    }
    Ok(())
}

/// Number-state cutoff beyond which the Poisson tail is below round-off.
fn cutoff<T: Real>(mu: T) -> usize {
    let m = mu.as_f64();
    (m + 12.0 * m.sqrt() + 40.0).ceil() as usize
}

/// Best fidelity of a measure-and-prepare device fed a Poissonian source of
/// mean `mu` that must succeed with probability `η·(1 - p(0))`.
///
/// The device sees `N` photons with probability `p(N)`, keeps that event
/// with probability `q_N` and then achieves `F_N = (N+1)/(N+2)`. Since `F_N`
/// grows with `N`, the optimal `q` passes the largest `N` first until the
/// demanded throughput is met.
pub fn classical_bound<T: Real>(mu: T, eta: T) -> Result<T> {
    check_inputs(mu, eta)?;
    let p = poisson_pmf(mu, cutoff(mu));
    let available = T::one() - p[0];
    let demanded = eta * available;
    if demanded > available * (T::one() + T::lit(1e-12)) {
        return Err(PhotonicsError::InfeasibleEfficiency {
            demanded: demanded.as_f64(),
            available: available.as_f64(),
        });
    }
    let mut remaining = demanded;
    let mut weighted = T::zero();
    for n in (1..p.len()).rev() {
        let take = p[n].min(remaining);
        weighted += take * estimation_fidelity::<T>(n);
        remaining -= take;
        if remaining <= T::zero() {
            break;
        }
    }
    Ok(weighted / (demanded - remaining.max(T::zero())))
}

/// Grid search over pass fractions `q_N ∈ {0, δ, 2δ, …, 1}` for
/// `1 ≤ N ≤ n_max`, alternating single-coordinate scans and pairwise moves
/// until no move improves the objective. Independent of the ordering
/// argument behind [`classical_bound`]; used to cross-check it.
pub fn classical_bound_search<T: Real>(mu: T, eta: T, n_max: usize, resolution: T) -> Result<T> {
    check_inputs(mu, eta)?;
    if n_max < 1 || !(resolution > T::zero() && resolution <= T::one()) {
        return Err(PhotonicsError::InvalidParameter(
            "need n_max ≥ 1 and a resolution in (0, 1]".into(),
        ));
    }
    let steps = (T::one() / resolution)
        .round()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let p = poisson_pmf(mu, n_max);
    let demanded = eta * (T::one() - p[0]);
    let available: T = p[1..].iter().copied().sum();
    // the tail above n_max is dropped, so allow a sliver of slack
    if demanded > available * (T::one() + T::lit(1e-6)) {
        return Err(PhotonicsError::InfeasibleEfficiency {
            demanded: demanded.as_f64(),
            available: available.as_f64(),
        });
    }
    let demanded = demanded.min(available) * (T::one() - T::lit(1e-12));
    let grid = T::count(steps);
    let f: Vec<T> = (0..=n_max).map(estimation_fidelity::<T>).collect();
    let eval = |q: &[usize]| -> Option<T> {
        let (mut pass, mut weighted) = (T::zero(), T::zero());
        for n in 1..=n_max {
            let w = T::count(q[n]) / grid * p[n];
            pass += w;
            weighted += w * f[n];
        }
        (pass >= demanded && pass > T::zero()).then(|| weighted / pass)
    };

    let mut q = vec![steps; n_max + 1];
    q[0] = 0;
    let mut best = eval(&q).expect("all-pass is feasible");
    let tiny = T::epsilon() * T::lit(16.0);
    let moves: [isize; 8] = [-100, -10, -3, -1, 1, 3, 10, 100];
    loop {
        let mut improved = false;
        for n in 1..=n_max {
            let keep = q[n];
            let mut best_v = keep;
            for v in 0..=steps {
                q[n] = v;
                if let Some(val) = eval(&q) {
                    if val > best + tiny {
                        best = val;
                        best_v = v;
                        improved = true;
                    }
                }
            }
            q[n] = best_v;
        }
        for i in 1..=n_max {
            for j in 1..=n_max {
                if i == j {
                    continue;
                }
                for &di in &moves {
                    for &dj in &moves {
                        let (qi, qj) = (q[i] as isize + di, q[j] as isize + dj);
                        if qi < 0 || qj < 0 || qi > steps as isize || qj > steps as isize {
                            continue;
                        }
                        let (oi, oj) = (q[i], q[j]);
                        q[i] = qi as usize;
                        q[j] = qj as usize;
                        match eval(&q) {
                            Some(val) if val > best + tiny => {
                                best = val;
                                improved = true;
                            }
                            _ => {
                                q[i] = oi;
                                q[j] = oj;
                            }
                        }
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_source_limit_is_two_thirds() {
        let b = classical_bound(1e-6f64, 1.0).unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn full_efficiency_averages_all_events() {
        let mu = 1.61f64;
        let p = poisson_pmf(mu, 80);
        let want: f64 = (1..=80)
            .map(|n| p[n] * estimation_fidelity::<f64>(n))
            .sum::<f64>()
            / (1.0 - p[0]);
        assert!((classical_bound(mu, 1.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_invalid() {
        assert!(matches!(
            classical_bound(1.0f64, 1.5),
            Err(PhotonicsError::InfeasibleEfficiency { .. })
        ));
        assert!(classical_bound(0.0f64, 0.5).is_err());
        assert!(classical_bound(1.0f64, 0.0).is_err());
    }
}
