//! Cauchy problem `u_t = σ² u_xx + (W − ū(t)) u` through the spectral series.
//!
//! With `v = u · exp(−∫ū)` the problem becomes linear, `v_t = −H v`, so
//! `v(t) = Σ a_k φ_k e^{−λ_k t}` and `u = v / ∫v`. A Crank–Nicolson stepper on
//! the same discrete operator serves as an independent cross-check.

use crate::error::{invalid, Error, Result};
use crate::fitness::Fitness;
use crate::grid::{linf_norm, Grid};
use crate::math::{linear_fit, Real};
use crate::spectral::{gauge_shift, SpectralBasis};
use crate::tridiag::TridiagonalLu;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Largest relative tail bound accepted by the series evaluators.
pub const TAIL_TOL: f64 = 1e-8;
/// Smallest fraction of `‖u₀‖₂²` the basis must capture.
pub const MIN_CAPTURE: f64 = 0.99;

/// Nonnegative initial profile, renormalised to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleInitialData {
    grid: Grid,
    values: Vec<f64>,
    raw_mass: f64,
}

impl AdmissibleInitialData {
    pub fn from_samples(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(invalid("initial data length does not match the grid"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("initial data must be finite and nonnegative"));
        }
        let raw_mass = grid.integrate(&values);
        if !(raw_mass > 0.0) {
            return Err(invalid("initial data has zero mass"));
        }
        let values = values.into_iter().map(|v| v / raw_mass).collect();
        Ok(AdmissibleInitialData { grid: *grid, values, raw_mass })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_samples(grid, grid.sample(f))
    }

    /// `e^{−(x−c)²}/√π`
    pub fn gaussian(grid: &Grid, center: f64) -> Result<Self> {
        Self::from_fn(grid, |x| (-(x - center) * (x - center)).exp() / PI.sqrt())
    }

    pub fn centered_gaussian(grid: &Grid) -> Result<Self> {
        Self::gaussian(grid, 0.0)
    }

    /// `(e^{−(x−4)²} + ε e^{−x²}) / (√π (1+ε))`
    pub fn off_centered_mixture(grid: &Grid, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon must be nonnegative"));
        }
        Self::from_fn(grid, |x| {
            ((-(x - 4.0) * (x - 4.0)).exp() + epsilon * (-x * x).exp()) / (PI.sqrt() * (1.0 + epsilon))
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Quadrature mass before renormalisation.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }
}

/// Projection of the initial data on a spectral basis.
#[derive(Debug, Clone)]
pub struct SolutionState<'a> {
    pub basis: &'a SpectralBasis,
    /// `a_k = ⟨u₀, φ_k⟩`
    pub coefficients: Vec<f64>,
    /// `‖u₀‖₂² − Σ a_k² ≥ 0`
    pub bessel_defect: f64,
    pub captured_fraction: f64,
}

pub fn project<'a>(u0: &AdmissibleInitialData, basis: &'a SpectralBasis) -> Result<SolutionState<'a>> {
    if u0.grid != basis.grid {
        return Err(invalid("initial data and basis live on different grids"));
    }
    let coefficients: Vec<f64> = basis
        .pairs
        .iter()
        .map(|p| basis.grid.inner(&u0.values, &p.eigenfunction))
        .collect();
    let norm2 = basis.grid.inner(&u0.values, &u0.values);
    let captured: f64 = coefficients.iter().map(|a| a * a).sum();
    let captured_fraction = captured / norm2;
    if captured_fraction < MIN_CAPTURE {
        return Err(Error::InsufficientCapture { fraction: captured_fraction });
    }
    // ‖u₀ − Σ a_k φ_k‖² equals ‖u₀‖² − Σ a_k² but avoids the cancellation.
    let mut residual = u0.values.clone();
    for (a, p) in coefficients.iter().zip(&basis.pairs) {
        residual.iter_mut().zip(&p.eigenfunction).for_each(|(r, phi)| *r -= a * phi);
    }
    Ok(SolutionState {
        basis,
        coefficients,
        bessel_defect: basis.grid.inner(&residual, &residual),
        captured_fraction,
    })
}

/// Gauge-corrected pair of mean fitness values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFitness {
    /// In the working gauge, always negative.
    pub working: f64,
    /// For the fitness as given.
    pub original: f64,
}

/// Distances of `u(t)` to `φ₀/m₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaps {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub mass_of_v: Vec<f64>,
    pub mass_of_u: Vec<f64>,
    pub mean_fitness: Vec<MeanFitness>,
    pub gaps: Vec<Gaps>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    /// `λ_{k*} − λ₀`
    pub expected: f64,
    pub k_star: usize,
}

impl<'a> SolutionState<'a> {
    pub fn lambda0_gauge(&self) -> f64 {
        self.basis.shift
    }

    /// Bound on `|Σ_{k≥K} a_k m_k e^{−λ_k t}|` for the discrete problem.
    ///
    /// Tail coefficients have `Σ a_k² ≤` the Bessel defect, tail masses have
    /// `Σ m_k² ≤ ‖1‖₂² = 2L`, and every tail eigenvalue is at least `λ_{K−1}`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        if self.basis.complete {
            return 0.0;
        }
        let last = self.basis.pairs.last().map_or(0.0, |p| p.eigenvalue);
        self.bessel_defect.sqrt() * (2.0 * self.basis.grid.half_length()).sqrt() * (-last * t).exp()
    }

    /// Polynomial-growth version of the tail bound: `A c Σ_{k≥K} k^{1/(2(s+1))} e^{−C k^{2s/(s+1)} t/2}`
    /// with `c` fitted on the computed `‖φ_k‖₁` and `A = √(Bessel defect)`.
    /// `None` without polynomial growth.
    pub fn asymptotic_tail_bound(&self, t: f64) -> Option<f64> {
        if self.basis.complete {
            return Some(0.0);
        }
        let growth = self.basis.growth?;
        let s = growth.half_degree as f64;
        let p = 1.0 / (2.0 * (s + 1.0));
        let beta = 2.0 * s / (s + 1.0);
        let c_lambda = crate::spectral::asymptotic_constant(growth.half_degree, growth.effective_sigma(self.basis.sigma));
        let c_norm = self
            .basis
            .pairs
            .iter()
            .skip(1)
            .map(|q| q.l1_norm / (q.index as f64).powf(p))
            .fold(0.0, f64::max);
        let mut sum = 0.0;
        let mut k = self.basis.len() as f64;
        loop {
            let term = k.powf(p) * (-c_lambda * k.powf(beta) * t / 2.0).exp();
            sum += term;
            if term < 1e-18 * sum || k > 1e7 {
                break;
            }
            k += 1.0;
        }
        Some(self.bessel_defect.sqrt() * c_norm * sum)
    }

    /// Earliest time at which the relative tail bound drops below [`TAIL_TOL`],
    /// to within 1%.
    pub fn min_time(&self) -> f64 {
        if self.basis.complete {
            return 0.0;
        }
        let passes = |t: f64| {
            let mass = self.weights(t).map(|w| self.mass_from(&w)).unwrap_or(0.0);
            self.tail_bound(t) <= TAIL_TOL * mass.abs()
        };
        if passes(0.0) {
            return 0.0;
        }
        let gap = self.basis.pairs.last().unwrap().eigenvalue - self.basis.pairs[0].eigenvalue;
        if !(gap > 0.0) {
            return f64::INFINITY;
        }
        let mut hi = 1.0 / gap;
        while !passes(hi) {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        while hi - lo > 0.01 * hi {
            let mid = 0.5 * (lo + hi);
            if passes(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn weights(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid("time must be nonnegative and finite"));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(&self.basis.pairs)
            .map(|(a, p)| a * (-p.eigenvalue * t).exp())
            .collect())
    }

    fn mass_from(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.basis.pairs).map(|(c, p)| c * p.mass).sum()
    }

    fn check_tail(&self, t: f64, mass: f64) -> Result<()> {
        let bound = self.tail_bound(t);
        if bound > TAIL_TOL * mass.abs() {
            return Err(Error::TruncationInsufficient { t, bound });
        }
        Ok(())
    }

    /// `m_v(t) = Σ a_k m_k e^{−λ_k t}` in the working gauge.
    pub fn mass_of_v(&self, t: f64) -> Result<f64> {
        let w = self.weights(t)?;
        let mass = self.mass_from(&w);
        self.check_tail(t, mass)?;
        Ok(mass)
    }

    /// `v(t,·)` and `m_v(t)` in the working gauge.
    pub fn evaluate_v(&self, t: f64) -> Result<(Vec<f64>, f64)> {
        let w = self.weights(t)?;
        let mass = self.mass_from(&w);
        self.check_tail(t, mass)?;
        let mut v = vec![0.0; self.basis.grid.n_nodes()];
        for (c, p) in w.iter().zip(&self.basis.pairs) {
            if *c != 0.0 {
                v.iter_mut().zip(&p.eigenfunction).for_each(|(vj, phi)| *vj += c * phi);
            }
        }
        Ok((v, mass))
    }

    pub fn evaluate_u(&self, t: f64) -> Result<Vec<f64>> {
        let (mut v, mass) = self.evaluate_v(t)?;
        if !(mass > 0.0) {
            return Err(Error::NonPositiveDenominator { t, value: mass });
        }
        v.iter_mut().for_each(|x| *x /= mass);
        Ok(v)
    }

    /// `ū(t) = Σ a_k w_k e^{−λ_k t} / Σ a_k m_k e^{−λ_k t}`.
    pub fn mean_fitness(&self, t: f64) -> Result<MeanFitness> {
        let w = self.weights(t)?;
        let mass = self.mass_from(&w);
        self.check_tail(t, mass)?;
        if !(mass > 0.0) {
            return Err(Error::NonPositiveDenominator { t, value: mass });
        }
        let num: f64 = w.iter().zip(&self.basis.pairs).map(|(c, p)| c * p.weighted_mass).sum();
        let working = num / mass;
        Ok(MeanFitness { working, original: working - self.basis.shift })
    }

    /// `φ₀ / m₀`
    pub fn limit_profile(&self) -> Vec<f64> {
        let p = &self.basis.pairs[0];
        p.eigenfunction.iter().map(|v| v / p.mass).collect()
    }

    pub fn gaps(&self, t: f64) -> Result<Gaps> {
        let u = self.evaluate_u(t)?;
        Ok(gaps_to(&self.basis.grid, &u, &self.limit_profile()))
    }

    pub fn time_series(&self, times: &[f64]) -> Result<TimeSeries> {
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("times must be strictly ascending"));
        }
        let limit = self.limit_profile();
        let mut out = TimeSeries {
            times: times.to_vec(),
            mass_of_v: Vec::with_capacity(times.len()),
            mass_of_u: Vec::with_capacity(times.len()),
            mean_fitness: Vec::with_capacity(times.len()),
            gaps: Vec::with_capacity(times.len()),
        };
        for &t in times {
            let u = self.evaluate_u(t)?;
            out.mass_of_v.push(self.mass_of_v(t)?);
            out.mass_of_u.push(self.basis.grid.integrate(&u));
            out.mean_fitness.push(self.mean_fitness(t)?);
            out.gaps.push(gaps_to(&self.basis.grid, &u, &limit));
        }
        Ok(out)
    }

    /// Lowest `k ≥ 1` whose coefficient is not negligible next to `a₀`.
    pub fn leading_excited_mode(&self) -> Option<usize> {
        let a0 = self.coefficients[0].abs();
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, a)| a.abs() > 1e-8 * a0)
            .map(|(k, _)| k)
    }

    /// Exponential rate of `‖u(t) − φ₀/m₀‖∞` fitted over `times`.
    pub fn convergence_rate(&self, times: &[f64]) -> Result<RateFit> {
        let k_star = self.leading_excited_mode().ok_or(Error::Stationary)?;
        if times.len() < 2 {
            return Err(invalid("need at least two times to fit a rate"));
        }
        let limit = self.limit_profile();
        let mut logs = Vec::with_capacity(times.len());
        for &t in times {
            let u = self.evaluate_u(t)?;
            let gap = gaps_to(&self.basis.grid, &u, &limit).linf;
            if !(gap > 0.0) {
                return Err(invalid("gap vanished; times are past machine precision"));
            }
            logs.push(gap.ln());
        }
        let (slope, _) = linear_fit(times, &logs);
        let expected = self.basis.pairs[k_star].eigenvalue - self.basis.pairs[0].eigenvalue;
        Ok(RateFit { rate: -slope, expected, k_star })
    }
}

pub fn gaps_to(grid: &Grid, u: &[f64], limit: &[f64]) -> Gaps {
    let d: Vec<f64> = u.iter().zip(limit).map(|(a, b)| a - b).collect();
    Gaps { l1: grid.l1_norm(&d), l2: grid.l2_norm(&d), linf: linf_norm(&d) }
}

/// Default Crank–Nicolson step `min(10⁻³, T/1000)`.
pub fn default_time_step(t_end: f64) -> f64 {
    (1e-3f64).min(t_end / 1000.0)
}

/// Crank–Nicolson integrator for `v_t = −H v` in the working gauge of `f` on `grid`.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    grid: Grid,
    diag: Vec<f64>,
    off: f64,
    shift: f64,
}

impl CrankNicolson {
    pub fn new(f: &dyn Fitness, sigma: f64, grid: &Grid) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma must be positive"));
        }
        let shift = gauge_shift(f, grid)?;
        let h = grid.spacing();
        let c = sigma * sigma / (h * h);
        let n = grid.n_nodes();
        let diag = (1..n - 1).map(|j| 2.0 * c - (f.value(grid.node(j)) + shift)).collect();
        Ok(CrankNicolson { grid: *grid, diag, off: -c, shift })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Advances `v` (all nodes; ends held at zero) by `steps` steps of size `dt`.
    pub fn advance(&self, v: &mut [f64], dt: f64, steps: usize) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("time step must be positive"));
        }
        if v.len() != self.grid.n_nodes() {
            return Err(invalid("state length does not match the grid"));
        }
        let m = self.diag.len();
        let half = dt / 2.0;
        let lhs_diag: Vec<f64> = self.diag.iter().map(|d| 1.0 + half * d).collect();
        let lhs_off = vec![half * self.off; m.saturating_sub(1)];
        let lu = TridiagonalLu::factor(&lhs_off, &lhs_diag, &lhs_off, f64::MIN_POSITIVE);
        let n = v.len();
        v[0] = 0.0;
        v[n - 1] = 0.0;
        let mut rhs = vec![0.0; m];
        for _ in 0..steps {
            for i in 0..m {
                let left = if i > 0 { v[i] } else { 0.0 };
                let right = if i + 1 < m { v[i + 2] } else { 0.0 };
                rhs[i] = (1.0 - half * self.diag[i]) * v[i + 1] - half * self.off * (left + right);
            }
            lu.solve_in_place(&mut rhs);
            v[1..n - 1].copy_from_slice(&rhs);
        }
        Ok(())
    }

    /// `v` at each of the ascending `times`, starting from `u₀` at `t = 0`.
    /// Each interval uses equal steps no longer than `dt`.
    pub fn run(&self, u0: &AdmissibleInitialData, times: &[f64], dt: f64) -> Result<Vec<Vec<f64>>> {
        if u0.grid != self.grid {
            return Err(invalid("initial data and stepper live on different grids"));
        }
        if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("times must be nonnegative and strictly ascending"));
        }
        let mut v = u0.values.clone();
        let mut now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let span = t - now;
            if span > 0.0 {
                let steps = (span / dt).ceil().max(1.0) as usize;
                self.advance(&mut v, span / steps as f64, steps)?;
            }
            now = t;
            out.push(v.clone());
        }
        Ok(out)
    }
}

/// `v_num(T,·)` by Crank–Nicolson; `dt` defaults to [`default_time_step`].
pub fn crank_nicolson_v(
    u0: &AdmissibleInitialData,
    f: &dyn Fitness,
    sigma: f64,
    dt: Option<f64>,
    t_end: f64,
) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("final time must be positive"));
    }
    let dt = dt.unwrap_or_else(|| default_time_step(t_end));
    let cn = CrankNicolson::new(f, sigma, u0.grid())?;
    Ok(cn.run(u0, &[t_end], dt)?.pop().unwrap())
}

/// `v / ∫v`
pub fn normalize_mass(grid: &Grid, v: &[f64]) -> Result<Vec<f64>> {
    let m = grid.integrate(v);
    if !(m > 0.0) {
        return Err(Error::NonPositiveDenominator { t: f64::NAN, value: m });
    }
    Ok(v.iter().map(|x| x / m).collect())
}

/// Observed temporal order of Crank–Nicolson from steps `dt`, `dt/2`, `dt/4`.
pub fn cn_temporal_order(u0: &AdmissibleInitialData, f: &dyn Fitness, sigma: f64, t_end: f64, dt: f64) -> Result<f64> {
    let a = crank_nicolson_v(u0, f, sigma, Some(dt), t_end)?;
    let b = crank_nicolson_v(u0, f, sigma, Some(dt / 2.0), t_end)?;
    let c = crank_nicolson_v(u0, f, sigma, Some(dt / 4.0), t_end)?;
    let e1 = linf_norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let e2 = linf_norm(&b.iter().zip(&c).map(|(x, y)| x - y).collect::<Vec<_>>());
    Ok((e1 / e2).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_data_is_renormalised() {
        let grid = Grid::new(6.0, 601).unwrap();
        let u = AdmissibleInitialData::from_fn(&grid, |x| 3.0 * (-x * x).exp()).unwrap();
        assert!((grid.integrate(u.values()) - 1.0).abs() < 1e-14);
        assert!((u.raw_mass() - 3.0 * PI.sqrt()).abs() < 1e-10);
        let g = AdmissibleInitialData::centered_gaussian(&grid).unwrap();
        assert!((g.raw_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn initial_data_rejects_bad_samples() {
        let grid = Grid::new(1.0, 5).unwrap();
        assert!(AdmissibleInitialData::from_samples(&grid, vec![0.0; 5]).is_err());
        assert!(AdmissibleInitialData::from_samples(&grid, vec![1.0, -1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(AdmissibleInitialData::from_samples(&grid, vec![1.0, f64::NAN, 1.0, 1.0, 1.0]).is_err());
        assert!(AdmissibleInitialData::from_samples(&grid, vec![1.0; 4]).is_err());
        assert!(AdmissibleInitialData::off_centered_mixture(&grid, -1.0).is_err());
    }

    #[test]
    fn default_step() {
        assert_eq!(default_time_step(10.0), 1e-3);
        assert_eq!(default_time_step(0.1), 1e-4);
    }
}
