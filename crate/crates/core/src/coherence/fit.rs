use serde::{Deserialize, Serialize};

use super::{CoherenceError, DecayModel, DecayTrace, EchoConvention, Result, TimeUnit};
use crate::linalg;
use crate::lm::{self, LeastSquaresProblem, LmOptions, LmSolution};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter<T> {
    pub name: String,
    pub value: T,
    /// 1σ uncertainty; infinite when the covariance is singular.
    pub sigma: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<T> {
    pub model: DecayModel,
    pub unit: TimeUnit,
    pub parameters: Vec<FitParameter<T>>,
    /// Row-major parameter covariance, when `JᵀJ` is invertible.
    pub covariance: Option<Vec<T>>,
    /// RMS of `value - model` in trace units.
    pub residual_rms: T,
    /// `χ²/(n - p)`, weighted when the trace carries σ.
    pub reduced_chi2: T,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> FitReport<T> {
    pub fn get(&self, name: &str) -> Option<&FitParameter<T>> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<T> {
        self.get(name).map(|p| p.value)
    }

    pub fn sigma(&self, name: &str) -> Option<T> {
        self.get(name).map(|p| p.sigma)
    }

    pub fn values(&self) -> Vec<T> {
        self.parameters.iter().map(|p| p.value).collect()
    }
}

struct DecayFit<'a, T> {
    model: DecayModel,
    t: &'a [T],
    y: &'a [T],
    /// `1/σ` per point, or `None` for an unweighted fit.
    inv_sigma: Option<Vec<T>>,
}

impl<T: Real> DecayFit<'_, T> {
    fn weight(&self, i: usize) -> T {
        self.inv_sigma.as_ref().map_or(T::one(), |w| w[i])
    }
}

impl<T: Real> LeastSquaresProblem<T> for DecayFit<'_, T> {
    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn num_residuals(&self) -> usize {
        self.t.len()
    }

    fn residuals(&self, p: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate().take(self.t.len()) {
            *o = (self.model.eval(p, self.t[i]) - self.y[i]) * self.weight(i);
        }
    }

    fn jacobian(&self, p: &[T], out: &mut [T]) {
        let np = self.num_params();
        for i in 0..self.t.len() {
            let row = &mut out[i * np..(i + 1) * np];
            self.model.gradient(p, self.t[i], row);
            let w = self.weight(i);
            row.iter_mut().for_each(|v| *v *= w);
        }
    }

    fn is_admissible(&self, p: &[T]) -> bool {
        self.model
            .time_constants()
            .iter()
            .all(|&j| p[j] > T::zero() && p[j].is_finite())
    }
}

/// Exponential structure shared by the three models.
struct Shape {
    components: usize,
    rate: f64,
    offset: bool,
}

fn shape(model: DecayModel) -> Shape {
    match model {
        DecayModel::SingleExp => Shape {
            components: 1,
            rate: 1.0,
            offset: true,
        },
        DecayModel::TwoPulseEcho { convention } => Shape {
            components: 1,
            rate: match convention {
                EchoConvention::Intensity => 4.0,
                EchoConvention::Amplitude => 2.0,
            },
            offset: false,
        },
        DecayModel::TripleExp => Shape {
            components: 3,
            rate: 1.0,
            offset: true,
        },
    }
}

fn pack<T: Real>(model: DecayModel, amps: &[T], taus: &[T], offset: T) -> Vec<T> {
    match model {
        DecayModel::SingleExp => vec![amps[0], taus[0], offset],
        DecayModel::TwoPulseEcho { .. } => vec![amps[0], taus[0]],
        DecayModel::TripleExp => vec![amps[0], amps[1], amps[2], taus[0], taus[1], taus[2], offset],
    }
}

/// Weighted linear least squares for the amplitudes (and offset) at fixed
/// time constants. Returns `(amplitudes, offset, cost)`.
fn linear_amplitudes<T: Real>(
    sh: &Shape,
    taus: &[T],
    t: &[T],
    y: &[T],
    w: &[T],
) -> Option<(Vec<T>, T, T)> {
    let k = T::lit(sh.rate);
    let nb = taus.len() + usize::from(sh.offset);
    let basis = |i: usize, b: usize| -> T {
        if b < taus.len() {
            (-k * t[i] / taus[b]).exp()
        } else {
            T::one()
        }
    };
    let mut gram = vec![T::zero(); nb * nb];
    let mut rhs = vec![T::zero(); nb];
    for i in 0..t.len() {
        for a in 0..nb {
            let fa = basis(i, a) * w[i];
            rhs[a] += fa * y[i];
            for b in 0..nb {
                gram[a * nb + b] += fa * basis(i, b);
            }
        }
    }
    let d: Vec<T> = (0..nb).map(|a| gram[a * nb + a].sqrt()).collect();
    if d.iter().any(|v| !(*v > T::zero())) {
        return None;
    }
    let scaled: Vec<T> = (0..nb * nb)
        .map(|q| gram[q] / (d[q / nb] * d[q % nb]))
        .collect();
    let srhs: Vec<T> = (0..nb).map(|a| rhs[a] / d[a]).collect();
    let x: Vec<T> = linalg::solve(&scaled, &srhs, nb)?
        .into_iter()
        .zip(&d)
        .map(|(v, s)| v / *s)
        .collect();
    let mut cost = T::zero();
    for i in 0..t.len() {
        let m: T = (0..nb).map(|b| x[b] * basis(i, b)).sum();
        cost += w[i] * (m - y[i]) * (m - y[i]);
    }
    let offset = if sh.offset { x[nb - 1] } else { T::zero() };
    Some((x[..taus.len()].to_vec(), offset, cost))
}

/// Weighted regression of `ln r` on `t` over the given points.
fn log_linear<T: Real>(t: &[T], r: &[T], idx: &[usize]) -> Option<(T, T)> {
    let pts: Vec<(T, T, T)> = idx
        .iter()
        .filter(|&&i| r[i] > T::zero())
        .map(|&i| (t[i], r[i].ln(), r[i] * r[i]))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let sw: T = pts.iter().map(|p| p.2).sum();
    let mt = pts.iter().map(|p| p.2 * p.0).sum::<T>() / sw;
    let ml = pts.iter().map(|p| p.2 * p.1).sum::<T>() / sw;
    let sxx: T = pts.iter().map(|p| p.2 * (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: T = pts.iter().map(|p| p.2 * (p.0 - mt) * (p.1 - ml)).sum();
    if !(sxx > T::zero()) {
        return None;
    }
    let slope = sxy / sxx;
    Some(((ml - slope * mt).exp(), slope))
}

/// Successive tail peeling: the slowest component is fitted log-linearly on
/// the last segment, subtracted, and the next segment is treated the same way.
fn peel<T: Real>(sh: &Shape, t: &[T], y: &[T]) -> Option<Vec<T>> {
    let n = t.len();
    let k = sh.components;
    let rate = T::lit(sh.rate);
    let span = t[n - 1] - t[0];
    let log_spaced = t[0] > T::zero() && t[n - 1] / t[0] > T::lit(20.0);
    let segment_of = |i: usize| -> usize {
        let frac = if log_spaced {
            (t[i] / t[0]).ln() / (t[n - 1] / t[0]).ln()
        } else {
            T::count(i) / T::count(n - 1)
        };
        (frac * T::count(k)).to_usize().unwrap_or(k).min(k - 1)
    };
    let mut r: Vec<T> = y.to_vec();
    let mut taus = vec![T::zero(); k];
    for j in (0..k).rev() {
        let idx: Vec<usize> = (0..n).filter(|&i| segment_of(i) == j).collect();
        let tau = match log_linear(t, &r, &idx) {
            Some((a, slope)) if slope < T::zero() => {
                let tau = -rate / slope;
                for i in 0..n {
                    r[i] -= a * (slope * t[i]).exp();
                }
                tau
            }
            _ => span * T::count(k - j),
        };
        taus[j] = tau;
    }
    for j in (0..k - 1).rev() {
        if !(taus[j] < taus[j + 1] * T::lit(0.8)) || !(taus[j] > T::zero()) {
            taus[j] = taus[j + 1] / T::lit(3.0);
        }
    }
    Some(taus)
}

/// Projected cost over a log grid of time constants; returns the best set.
fn grid_start<T: Real>(sh: &Shape, t: &[T], y: &[T], w: &[T]) -> Option<Vec<T>> {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let min_dt = t
        .windows(2)
        .map(|p| p[1] - p[0])
        .fold(T::infinity(), T::min);
    let rate = T::lit(sh.rate);
    let lo = (min_dt / T::lit(2.0)).max(span * T::lit(1e-5)) * rate;
    let hi = span * T::lit(3.0) * rate;
    let points = if sh.components == 1 { 80 } else { 28 };
    let ratio = (hi / lo).ln() / T::count(points - 1);
    let grid: Vec<T> = (0..points)
        .map(|g| lo * (ratio * T::count(g)).exp())
        .collect();

    let mut best: Option<(T, Vec<T>)> = None;
    let mut consider = |taus: Vec<T>| {
        if let Some((_, _, c)) = linear_amplitudes(sh, &taus, t, y, w) {
            if c.is_finite() && best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, taus));
            }
        }
    };
    if sh.components == 1 {
        for &g in &grid {
            consider(vec![g]);
        }
    } else {
        for a in 0..points {
            for b in a + 1..points {
                for c in b + 1..points {
                    consider(vec![grid[a], grid[b], grid[c]]);
                }
            }
        }
    }
    best.map(|b| b.1)
}

fn start_from<T: Real>(
    model: DecayModel,
    sh: &Shape,
    taus: Vec<T>,
    t: &[T],
    y: &[T],
    w: &[T],
) -> Option<Vec<T>> {
    let (amps, offset, _) = linear_amplitudes(sh, &taus, t, y, w)?;
    Some(pack(model, &amps, &taus, offset))
}

/// Orders triple-exponential components by ascending time constant.
fn sort_components<T: Real>(model: DecayModel, p: &mut [T], cov: Option<&mut Vec<T>>) {
    if model != DecayModel::TripleExp {
        return;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| p[3 + a].partial_cmp(&p[3 + b]).expect("finite"));
    let perm: Vec<usize> = order
        .iter()
        .copied()
        .chain(order.iter().map(|o| o + 3))
        .chain([6])
        .collect();
    let old = p.to_vec();
    for (new, &src) in perm.iter().enumerate() {
        p[new] = old[src];
    }
    if let Some(c) = cov {
        let n = 7;
        let prev = c.clone();
        for a in 0..n {
            for b in 0..n {
                c[a * n + b] = prev[perm[a] * n + perm[b]];
            }
        }
    }
}

/// Weighted Levenberg–Marquardt fit of `model` to `trace`.
///
/// Without `initial_guess`, two starts are tried and the lower-cost optimum
/// kept: successive tail peeling, and the best point of a log grid of time
/// constants with the linear parameters solved exactly. Uncertainties are
/// `√diag((JᵀJ)⁻¹)` with σ-weighted residuals, else scaled by the residual
/// variance. A non-converged fit is reported, not raised.
pub fn fit_decay<T: Real>(
    trace: &DecayTrace<T>,
    model: DecayModel,
    initial_guess: Option<&[T]>,
) -> Result<FitReport<T>> {
    let np = model.num_params();
    let n = trace.len();
    if n < 2 * np {
        return Err(CoherenceError::InsufficientData {
            points: n,
            params: np,
            needed: 2 * np,
        });
    }
    let (t, y) = (trace.times(), trace.values());
    let (lo, hi) = y
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !(hi - lo > T::epsilon() * hi.abs().max(lo.abs())) {
        return Err(CoherenceError::DegenerateModel);
    }
    if let Some(g) = initial_guess {
        if g.len() != np {
            return Err(CoherenceError::InvalidGuess {
                got: g.len(),
                want: np,
            });
        }
    }

    let inv_sigma: Option<Vec<T>> = trace
        .sigma()
        .map(|s| s.iter().map(|&v| T::one() / v).collect());
    let w: Vec<T> = match &inv_sigma {
        Some(is) => is.iter().map(|&v| v * v).collect(),
        None => vec![T::one(); n],
    };
    let problem = DecayFit {
        model,
        t,
        y,
        inv_sigma,
    };
    let opts = LmOptions::default();

    let starts: Vec<Vec<T>> = match initial_guess {
        Some(g) => vec![g.to_vec()],
        None => {
            let sh = shape(model);
            [peel(&sh, t, y), grid_start(&sh, t, y, &w)]
                .into_iter()
                .flatten()
                .filter_map(|taus| start_from(model, &sh, taus, t, y, &w))
                .collect()
        }
    };
    let fallback = {
        let span = t[n - 1] - t[0];
        let taus: Vec<T> = (1..=shape(model).components)
            .map(|j| span * T::count(j) / T::lit(3.0))
            .collect();
        pack(model, &vec![hi - lo; taus.len()], &taus, lo)
    };
    let starts = if starts.is_empty() {
        vec![fallback]
    } else {
        starts
    };

    let mut best: Option<LmSolution<T>> = None;
    for s in &starts {
        if !problem.is_admissible(s) {
            continue;
        }
        let sol = lm::minimize(&problem, s, &opts);
        let better = best.as_ref().is_none_or(|b| sol.cost < b.cost);
        if better {
            best = Some(sol);
        }
    }
    let sol = best.ok_or(CoherenceError::InvalidGuess { got: np, want: np })?;

    let dof = T::count(n - np);
    let reduced_chi2 = sol.cost / dof;
    let variance = if trace.sigma().is_some() {
        None
    } else {
        Some(reduced_chi2)
    };
    let mut covariance = lm::covariance(&sol, variance);
    let mut params = sol.params.clone();
    sort_components(model, &mut params, covariance.as_mut());

    let residual_rms = (t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = model.eval(&params, ti) - yi;
            r * r
        })
        .sum::<T>()
        / T::count(n))
    .sqrt();
    let parameters = model
        .param_names()
        .iter()
        .enumerate()
        .map(|(j, name)| FitParameter {
            name: (*name).to_string(),
            value: params[j],
            sigma: covariance
                .as_ref()
                .map(|c| c[j * np + j].max(T::zero()).sqrt())
                .unwrap_or(T::infinity()),
        })
        .collect();
    Ok(FitReport {
        model,
        unit: trace.unit(),
        parameters,
        covariance,
        residual_rms,
        reduced_chi2,
        converged: sol.converged && params.iter().all(|v| v.is_finite()),
        iterations: sol.iterations,
    })
}
