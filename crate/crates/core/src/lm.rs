//! Levenberg–Marquardt nonlinear least squares with Marquardt diagonal
//! scaling. The scaling makes the iteration equivariant under per-parameter
//! rescaling, which the decay fits rely on for unit changes.

use crate::linalg;
use crate::scalar::Real;

/// A least-squares problem `min Σ r_i(p)²` with an analytic Jacobian.
pub trait LeastSquaresProblem<T: Real> {
    fn num_params(&self) -> usize;
    fn num_residuals(&self) -> usize;
    fn residuals(&self, params: &[T], out: &mut [T]);
    /// Row-major `num_residuals x num_params` matrix of `∂r_i/∂p_j`.
    fn jacobian(&self, params: &[T], out: &mut [T]);
    /// Rejects trial points outside the model's domain (e.g. negative lifetimes).
    fn is_admissible(&self, _params: &[T]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions<T> {
    pub max_iterations: usize,
    pub ftol: T,
    pub xtol: T,
    pub initial_lambda: T,
}

impl<T: Real> Default for LmOptions<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            max_iterations: 500,
            ftol: eps * T::lit(16.0),
            xtol: eps.sqrt() * T::lit(1e-3),
            initial_lambda: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution<T> {
    pub params: Vec<T>,
    pub residuals: Vec<T>,
    /// Sum of squared residuals at `params`.
    pub cost: T,
    pub iterations: usize,
    pub converged: bool,
    /// `JᵀJ` at the returned point, row-major.
    pub jtj: Vec<T>,
}

pub fn minimize<T: Real, P: LeastSquaresProblem<T>>(
    problem: &P,
    initial: &[T],
    opts: &LmOptions<T>,
) -> LmSolution<T> {
    let n = problem.num_params();
    let m = problem.num_residuals();
    debug_assert_eq!(initial.len(), n);

    let mut p = initial.to_vec();
    let mut r = vec![T::zero(); m];
    let mut jac = vec![T::zero(); m * n];
    problem.residuals(&p, &mut r);
    let mut cost = sum_sq(&r);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    if !cost.is_finite() {
        return finish(problem, p, r, cost, 0, false, &mut jac);
    }

    let mut trial = vec![T::zero(); n];
    let mut r_trial = vec![T::zero(); m];
    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        if cost == T::zero() {
            converged = true;
            break;
        }
        problem.jacobian(&p, &mut jac);
        let (jtj, grad) = normal_equations(&jac, &r, m, n);
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        let diag_floor = (0..n).map(|j| jtj[j * n + j]).fold(T::zero(), T::max) * T::epsilon();

        let mut accepted = false;
        for _ in 0..40 {
            let mut lhs = jtj.clone();
            for j in 0..n {
                let d = jtj[j * n + j].max(diag_floor);
                lhs[j * n + j] += lambda * d;
            }
            let neg_grad: Vec<T> = grad.iter().map(|&g| -g).collect();
            let step = match linalg::solve(&lhs, &neg_grad, n) {
                Some(s) => s,
                None => {
                    lambda *= T::lit(10.0);
                    continue;
                }
            };
            for j in 0..n {
                trial[j] = p[j] + step[j];
            }
            if trial.iter().any(|v| !v.is_finite()) || !problem.is_admissible(&trial) {
                lambda *= T::lit(10.0);
                continue;
            }
            problem.residuals(&trial, &mut r_trial);
            let trial_cost = sum_sq(&r_trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, v)| s.abs() <= opts.xtol * (v.abs() + opts.xtol));
                let small_gain = cost - trial_cost <= opts.ftol * cost;
                p.copy_from_slice(&trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = trial_cost;
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                accepted = true;
                if small_step && small_gain {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= T::lit(10.0);
            if lambda > T::lit(1e16) {
                break;
            }
        }
        if !accepted {
            // No downhill step exists even at tiny step lengths: the point is
            // a minimum to working precision.
            converged = cost.is_finite();
            break;
        }
    }
    if converged {
        polish(problem, &mut p, &mut r, &mut cost, &mut jac);
    }
    finish(problem, p, r, cost, iterations, converged, &mut jac)
}

/// Undamped Gauss–Newton steps from a converged point. Near the optimum the
/// cost is flat to round-off, so LM acceptance stalls about `√ε` short of
/// the stationary point; contracting Gauss–Newton steps close that gap
/// (linearly for problems with non-zero residuals).
fn polish<T: Real, P: LeastSquaresProblem<T>>(
    problem: &P,
    p: &mut [T],
    r: &mut Vec<T>,
    cost: &mut T,
    jac: &mut [T],
) {
    let n = problem.num_params();
    let m = problem.num_residuals();
    let mut prev_norm = T::infinity();
    let mut trial = vec![T::zero(); n];
    let mut r_trial = vec![T::zero(); m];
    let slack = T::one() + T::epsilon() * T::lit(100.0);
    for _ in 0..200 {
        problem.jacobian(p, jac);
        let d: Vec<T> = (0..n)
            .map(|j| {
                (0..m)
                    .map(|i| jac[i * n + j] * jac[i * n + j])
                    .sum::<T>()
                    .sqrt()
            })
            .collect();
        if d.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return;
        }
        let scaled: Vec<T> = (0..m * n).map(|k| jac[k] / d[k % n]).collect();
        let rhs: Vec<T> = r.iter().map(|&v| -v).collect();
        let Some(z) = linalg::lstsq(&scaled, &rhs, m, n) else {
            return;
        };
        let norm = z.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if !(norm < prev_norm) || !norm.is_finite() {
            return;
        }
        for j in 0..n {
            trial[j] = p[j] + z[j] / d[j];
        }
        if !problem.is_admissible(&trial) {
            return;
        }
        problem.residuals(&trial, &mut r_trial);
        let c = sum_sq(&r_trial);
        if !(c <= *cost * slack) {
            return;
        }
        p.copy_from_slice(&trial);
        std::mem::swap(r, &mut r_trial);
        *cost = c;
        prev_norm = norm;
        if norm <= T::epsilon() * T::lit(4.0) {
            return;
        }
    }
}

fn finish<T: Real, P: LeastSquaresProblem<T>>(
    problem: &P,
    p: Vec<T>,
    r: Vec<T>,
    cost: T,
    iterations: usize,
    converged: bool,
    jac: &mut [T],
) -> LmSolution<T> {
    let n = problem.num_params();
    let m = problem.num_residuals();
    problem.jacobian(&p, jac);
    let (jtj, _) = normal_equations(jac, &r, m, n);
    LmSolution {
        params: p,
        residuals: r,
        cost,
        iterations,
        converged,
        jtj,
    }
}

fn sum_sq<T: Real>(r: &[T]) -> T {
    r.iter().map(|&v| v * v).sum()
}

fn normal_equations<T: Real>(jac: &[T], r: &[T], m: usize, n: usize) -> (Vec<T>, Vec<T>) {
    let mut jtj = vec![T::zero(); n * n];
    let mut grad = vec![T::zero(); n];
    for i in 0..m {
        let row = &jac[i * n..(i + 1) * n];
        for a in 0..n {
            let ja = row[a];
            if ja == T::zero() {
                continue;
            }
            grad[a] += ja * r[i];
            for b in a..n {
                jtj[a * n + b] += ja * row[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[a * n + b] = jtj[b * n + a];
        }
    }
    (jtj, grad)
}

/// Parameter covariance `s² (JᵀJ)⁻¹`; `residual_variance = None` means the
/// residuals were already normalized by absolute per-point sigmas.
pub fn covariance<T: Real>(sol: &LmSolution<T>, residual_variance: Option<T>) -> Option<Vec<T>> {
    let n = sol.params.len();
    // invert the unit-diagonal correlation form so wildly different
    // parameter scales do not limit the pivoting
    let d: Vec<T> = (0..n).map(|j| sol.jtj[j * n + j].sqrt()).collect();
    if d.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return None;
    }
    let scaled: Vec<T> = (0..n * n)
        .map(|k| sol.jtj[k] / (d[k / n] * d[k % n]))
        .collect();
    let mut cov = linalg::invert(&scaled, n)?;
    for k in 0..n * n {
        cov[k] /= d[k / n] * d[k % n];
    }
    if let Some(s2) = residual_variance {
        cov.iter_mut().for_each(|c| *c *= s2);
    }
    Some(cov)
}
