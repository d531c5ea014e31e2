//! Small dense row-major linear algebra used by the fitters and the
//! rate-equation propagator. Matrices here are at most a few dozen wide.

use crate::scalar::Real;

/// `n x n` matrix product, row-major.
pub(crate) fn matmul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub(crate) fn matvec<T: Real>(a: &[T], x: &[T], n: usize) -> Vec<T> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when the matrix is numerically singular.
pub(crate) fn solve<T: Real>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let (pivot, pmax) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, T::zero()), |acc, v| if v.1 > acc.1 { v } else { acc });
        if !(pmax > T::zero()) || !pmax.is_finite() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            x.swap(col, pivot);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[col * n + j];
                m[r * n + j] -= f * v;
            }
            let xv = x[col];
            x[r] -= f * xv;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in (col + 1)..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Inverse of an `n x n` matrix, column by column.
pub(crate) fn invert<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut inv = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[c] = T::one();
        let col = solve(a, &e, n)?;
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    Some(inv)
}

/// Least-squares solution of the `m x n` system `a x ≈ b` (`m ≥ n`) by
/// Householder QR, avoiding the squared conditioning of normal equations.
pub(crate) fn lstsq<T: Real>(a: &[T], b: &[T], m: usize, n: usize) -> Option<Vec<T>> {
    let mut q = a.to_vec();
    let mut y = b.to_vec();
    for k in 0..n {
        let norm = (k..m)
            .map(|i| q[i * n + k] * q[i * n + k])
            .sum::<T>()
            .sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return None;
        }
        let alpha = if q[k * n + k] > T::zero() {
            -norm
        } else {
            norm
        };
        let mut v: Vec<T> = (k..m).map(|i| q[i * n + k]).collect();
        v[0] -= alpha;
        let vv: T = v.iter().map(|x| *x * *x).sum();
        if !(vv > T::zero()) {
            continue;
        }
        for j in k..n {
            let dot: T = (k..m).map(|i| v[i - k] * q[i * n + j]).sum();
            let f = T::lit(2.0) * dot / vv;
            for i in k..m {
                q[i * n + j] -= f * v[i - k];
            }
        }
        let dot: T = (k..m).map(|i| v[i - k] * y[i]).sum();
        let f = T::lit(2.0) * dot / vv;
        for i in k..m {
            y[i] -= f * v[i - k];
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = y[k];
        for j in k + 1..n {
            s -= q[k * n + j] * x[j];
        }
        let d = q[k * n + k];
        if d == T::zero() {
            return None;
        }
        x[k] = s / d;
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The scaled matrix has 1-norm below 1/2, where 24 Taylor terms are far
/// below `f64` round-off.
pub(crate) fn expm<T: Real>(a: &[T], n: usize) -> Vec<T> {
    let norm = (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<T>())
        .fold(T::zero(), T::max);
    let mut squarings = 0u32;
    let mut scale = T::one();
    let half = T::lit(0.5);
    while norm * scale > half {
        scale *= half;
        squarings += 1;
    }
    let scaled: Vec<T> = a.iter().map(|&v| v * scale).collect();

    let mut result = vec![T::zero(); n * n];
    let mut term = vec![T::zero(); n * n];
    for i in 0..n {
        result[i * n + i] = T::one();
        term[i * n + i] = T::one();
    }
    for k in 1..=24 {
        term = matmul(&term, &scaled, n);
        let inv_k = T::one() / T::count(k);
        term.iter_mut().for_each(|v| *v *= inv_k);
        for (r, t) in result.iter_mut().zip(&term) {
            *r += *t;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, n);
    }
    result
}
