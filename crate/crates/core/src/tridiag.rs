//! Symmetric tridiagonal eigenproblems.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
//! iteration. Vectors whose eigenvalues sit closer than `CLUSTER_GAP · ‖A‖`
//! to their predecessor are reorthogonalised against the rest of their
//! cluster on every iteration.

use crate::error::{invalid, Error, Result};
use crate::math::Real;
use alloc::vec;
use alloc::vec::Vec;

const CLUSTER_GAP: f64 = 1e-7;
const MAX_STALLED: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(invalid("tridiagonal matrix needs n diagonal and n-1 off-diagonal entries"));
        }
        Ok(SymTridiagonal { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Infinity norm (largest absolute row sum).
    pub fn norm(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    fn pivmin(&self) -> f64 {
        let emax = self.off.iter().fold(0.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax.max(1.0)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        self.count_with(x, &self.off_squared(), self.pivmin())
    }

    fn off_squared(&self) -> Vec<f64> {
        self.off.iter().map(|e| e * e).collect()
    }

    fn count_with(&self, x: f64, e2: &[f64], pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            q = self.diag[i] - x - e2[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k` algebraically smallest eigenvalues, ascending, by bisection.
    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.dim() {
            return Err(invalid("requested eigenvalue count must lie in 1..=dim"));
        }
        let e2 = self.off_squared();
        let pivmin = self.pivmin();
        let (lo, hi) = self.gershgorin();
        let span = (hi - lo).abs().max(f64::MIN_POSITIVE);
        let (lo, hi) = (lo - 1e-12 * span - pivmin, hi + 1e-12 * span + pivmin);
        // Absolute floor far below ε‖A‖: exponential potentials make ‖A‖ huge
        // while the low eigenvalues stay O(1) and are still well determined.
        let abstol = f64::EPSILON * f64::EPSILON * self.norm().max(pivmin);
        let mut lower = vec![lo; k];
        let mut upper = vec![hi; k];
        for i in 0..k {
            loop {
                let (a, b) = (lower[i], upper[i]);
                let tol = 2.0 * f64::EPSILON * a.abs().max(b.abs()) + abstol;
                let mid = 0.5 * (a + b);
                if b - a <= tol || mid <= a || mid >= b {
                    break;
                }
                let c = self.count_with(mid, &e2, pivmin);
                // eigenvalues with index < c lie below mid
                for j in (i..c.min(k)).rev() {
                    if upper[j] > mid {
                        upper[j] = mid;
                    } else {
                        break;
                    }
                }
                for l in lower[c.max(i).min(k)..k].iter_mut() {
                    if *l < mid {
                        *l = mid;
                    } else {
                        break;
                    }
                }
            }
        }
        Ok((0..k).map(|i| 0.5 * (lower[i] + upper[i])).collect())
    }
}

/// LU factorisation with partial pivoting of a general tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    /// Factors the matrix with sub-diagonal `sub`, diagonal `diag`, super-diagonal `sup`.
    /// Pivots smaller than `pivmin` in magnitude are replaced by `±pivmin`.
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64], pivmin: f64) -> TridiagonalLu {
        let n = diag.len();
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let guard = |p: f64| {
            if p.abs() < pivmin {
                if p < 0.0 {
                    -pivmin
                } else {
                    pivmin
                }
            } else {
                p
            }
        };
        let mut d = diag[0];
        let mut s = if n > 1 { sup[0] } else { 0.0 };
        for i in 0..n.saturating_sub(1) {
            let a = sub[i];
            let b = diag[i + 1];
            let c = if i + 2 < n { sup[i + 1] } else { 0.0 };
            if a.abs() > d.abs() {
                swapped[i] = true;
                u0[i] = a;
                u1[i] = b;
                u2[i] = c;
                let m = d / a;
                l[i] = m;
                d = s - m * b;
                s = -m * c;
            } else {
                let p = guard(d);
                u0[i] = p;
                u1[i] = s;
                u2[i] = 0.0;
                let m = a / p;
                l[i] = m;
                d = b - m * s;
                s = c;
            }
        }
        u0[n - 1] = guard(d);
        TridiagonalLu { u0, u1, u2, l, swapped }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.u0.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.l[i] * x[i];
        }
        x[n - 1] /= self.u0[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - self.u1[n - 2] * x[n - 1]) / self.u0[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.u1[i] * x[i + 1] - self.u2[i] * x[i + 2]) / self.u0[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

// Deterministic start vector with entries in [0.5, 1.5).
fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn inverse_iteration(
    m: &SymTridiagonal,
    lambda: f64,
    norm: f64,
    cluster: &[Vec<f64>],
    index: usize,
) -> Result<Vec<f64>> {
    let n = m.dim();
    let shifted: Vec<f64> = m.diag.iter().map(|d| d - lambda).collect();
    let local = (lambda.abs() + 2.0 * m.off.iter().fold(0.0f64, |a, e| a.max(e.abs()))).max(f64::MIN_POSITIVE);
    let pivmin = f64::EPSILON * local;
    let lu = TridiagonalLu::factor(&m.off, &shifted, &m.off, pivmin);
    let mut x = start_vector(n, index as u64 + 1);
    normalize(&mut x);
    let mut ax = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        lu.solve_in_place(&mut x);
        for _ in 0..2 {
            for q in cluster {
                let c = dot(&x, q);
                x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= c * qi);
            }
        }
        if normalize(&mut x) == 0.0 || x.iter().any(|v| !v.is_finite()) {
            x = start_vector(n, (index as u64 + 1) * 7919 + iterations as u64);
            normalize(&mut x);
            stalled += 1;
            if stalled > MAX_STALLED {
                return Err(Error::SolverStagnated { index, iterations });
            }
            continue;
        }
        m.matvec(&x, &mut ax);
        let r = ax
            .iter()
            .zip(&x)
            .map(|(a, v)| (a - lambda * v) * (a - lambda * v))
            .sum::<f64>()
            .sqrt();
        if r < 0.999 * best {
            best = r;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if r <= 1e-12 * local || (stalled >= 1 && best <= 1e-9 * local) {
            return Ok(x);
        }
        if stalled > MAX_STALLED && best <= 1e-10 * norm {
            return Ok(x);
        }
        if stalled > MAX_STALLED {
            return Err(Error::SolverStagnated { index, iterations });
        }
    }
}

/// The `k` smallest eigenpairs, eigenvalues ascending, eigenvectors with unit
/// Euclidean norm and residual `‖Av − λv‖ ≤ 1e−10 ‖A‖`.
pub fn solve_lowest(m: &SymTridiagonal, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let values = m.lowest_eigenvalues(k)?;
    let norm = m.norm();
    let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    let mut cluster_start = 0;
    for (i, &lambda) in values.iter().enumerate() {
        if i > 0 && lambda - values[i - 1] > CLUSTER_GAP * norm {
            cluster_start = i;
        }
        let cluster: Vec<Vec<f64>> = out[cluster_start..i].iter().map(|p| p.1.clone()).collect();
        let v = inverse_iteration(m, lambda, norm, &cluster, i)?;
        out.push((lambda, v));
    }
    Ok(out)
}
