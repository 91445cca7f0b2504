//! Confining fitness functions.
//!
//! Everything the solver needs from a fitness function is captured by the
//! [`Fitness`] trait; [`FitnessPolynomial`] is the normal form
//! `W(x) = −x^{2s} + Σ_{k<2s} w_k x^k` plus a constant gauge shift.

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::math::Real;
use crate::poly::Polynomial;
use alloc::vec::Vec;

/// Asymptotic polynomial growth `−W(x) ~ leading · x^{2·half_degree}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub half_degree: u32,
    pub leading: f64,
}

impl Growth {
    /// `σ` for the rescaled problem whose potential has unit leading coefficient.
    pub fn effective_sigma(&self, sigma: f64) -> f64 {
        sigma * self.leading.powf(1.0 / (2.0 * self.half_degree as f64))
    }
}

pub trait Fitness: Sync {
    fn value(&self, x: f64) -> f64;

    /// `W''(x)`. The default is a five-point central difference.
    fn second_derivative(&self, x: f64) -> f64 {
        let h = 1e-3 * x.abs().max(1.0);
        let f = |t: f64| self.value(t);
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
            / (12.0 * h * h)
    }

    /// True when `W(−x) = W(x)` holds exactly.
    fn is_even(&self) -> bool {
        false
    }

    fn growth(&self) -> Option<Growth> {
        None
    }
}

impl<F: Fitness + ?Sized> Fitness for &F {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn second_derivative(&self, x: f64) -> f64 {
        (**self).second_derivative(x)
    }
    fn is_even(&self) -> bool {
        (**self).is_even()
    }
    fn growth(&self) -> Option<Growth> {
        (**self).growth()
    }
}

/// Wraps a closure as a fitness function with no symmetry or growth metadata.
pub struct FnFitness<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Fitness for FnFitness<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Adds a constant to another fitness function.
pub struct Shifted<F> {
    pub inner: F,
    pub shift: f64,
}

impl<F: Fitness> Fitness for Shifted<F> {
    fn value(&self, x: f64) -> f64 {
        self.inner.value(x) + self.shift
    }
    fn second_derivative(&self, x: f64) -> f64 {
        self.inner.second_derivative(x)
    }
    fn is_even(&self) -> bool {
        self.inner.is_even()
    }
    fn growth(&self) -> Option<Growth> {
        self.inner.growth()
    }
}

impl Fitness for Polynomial {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn second_derivative(&self, x: f64) -> f64 {
        self.derivative().derivative().eval(x)
    }
    fn is_even(&self) -> bool {
        Polynomial::is_even(self)
    }
    fn growth(&self) -> Option<Growth> {
        let d = self.degree();
        (d >= 2 && d.is_multiple_of(2) && self.leading() < 0.0).then(|| Growth {
            half_degree: (d / 2) as u32,
            leading: -self.leading(),
        })
    }
}

/// Normal-form polynomial fitness `W(x) = −x^{2s} + Σ_{k<2s} w_k x^k + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessPolynomial {
    degree_half: u32,
    coefficients: Vec<f64>,
    constant_shift: f64,
    poly: Polynomial,
}

/// A refined local maximum of `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub location: f64,
    pub value: f64,
    pub curvature: f64,
}

/// Result of rescaling `x` so a general confining polynomial has leading coefficient −1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub fitness: FitnessPolynomial,
    /// Original coordinate is `x = x_scale · y`.
    pub x_scale: f64,
}

impl NormalForm {
    /// `σ` to use with the normal-form fitness so the spectrum is unchanged.
    pub fn sigma(&self, sigma: f64) -> f64 {
        sigma / self.x_scale
    }
}

impl FitnessPolynomial {
    /// `coefficients` are `w_0..w_{2s−1}`; the `x^{2s}` coefficient is fixed at −1.
    pub fn new(degree_half: u32, coefficients: Vec<f64>) -> Result<Self> {
        if degree_half == 0 {
            return Err(invalid("fitness degree must be at least 2"));
        }
        if coefficients.len() != 2 * degree_half as usize {
            return Err(invalid("expected 2s coefficients w_0..w_{2s-1}"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("fitness coefficients must be finite"));
        }
        Ok(Self::build(degree_half, coefficients, 0.0))
    }

    /// Infers `s` from the number of coefficients, which must be even.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() || !coefficients.len().is_multiple_of(2) {
            return Err(invalid("expected an even, non-zero number of coefficients"));
        }
        let s = (coefficients.len() / 2) as u32;
        Self::new(s, coefficients)
    }

    /// Rescales `x` so that a confining polynomial with any negative leading
    /// coefficient takes the normal form.
    pub fn from_polynomial(p: &Polynomial) -> Result<NormalForm> {
        let growth = Fitness::growth(p)
            .ok_or_else(|| invalid("polynomial must have even degree and negative leading coefficient"))?;
        let s = growth.half_degree;
        let x_scale = growth.leading.powf(-1.0 / (2.0 * s as f64));
        let coefficients = p.coefficients()[..2 * s as usize]
            .iter()
            .enumerate()
            .map(|(k, c)| c * x_scale.powi(k as i32))
            .collect();
        Ok(NormalForm { fitness: Self::new(s, coefficients)?, x_scale })
    }

    fn build(degree_half: u32, coefficients: Vec<f64>, constant_shift: f64) -> Self {
        let mut all = coefficients.clone();
        all[0] += constant_shift;
        all.push(-1.0);
        FitnessPolynomial {
            degree_half,
            coefficients,
            constant_shift,
            poly: Polynomial::new(all),
        }
    }

    pub fn degree_half(&self) -> u32 {
        self.degree_half
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn constant_shift(&self) -> f64 {
        self.constant_shift
    }

    /// The full polynomial including the leading term and the shift.
    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    pub fn with_shift(&self, constant_shift: f64) -> Self {
        Self::build(self.degree_half, self.coefficients.clone(), constant_shift)
    }

    /// Shifts `W` so its maximum on the grid is exactly −1.
    ///
    /// Eigenvalues of the shifted problem relate to the unshifted ones by
    /// `λ_original = λ_shifted + shift`, where `shift` is the returned
    /// [`constant_shift`](Self::constant_shift) minus the current one.
    pub fn normalize_shift(&self, grid: &Grid) -> Result<Self> {
        check_endpoints(self, grid)?;
        let max = maximum_value(self, grid);
        Ok(self.with_shift(self.constant_shift - 1.0 - max))
    }

    pub fn global_maxima(&self, grid: &Grid, tol: f64) -> Vec<Maximum> {
        global_maxima(self, grid, tol)
    }
}

impl Fitness for FitnessPolynomial {
    fn value(&self, x: f64) -> f64 {
        self.evaluate(x)
    }
    fn second_derivative(&self, x: f64) -> f64 {
        self.poly.derivative().derivative().eval(x)
    }
    fn is_even(&self) -> bool {
        self.poly.is_even()
    }
    fn growth(&self) -> Option<Growth> {
        Some(Growth { half_degree: self.degree_half, leading: 1.0 })
    }
}

/// Fails unless `W` decreases outward at both ends of the grid.
pub fn check_endpoints(f: &dyn Fitness, grid: &Grid) -> Result<()> {
    let n = grid.n_nodes();
    let (x0, x1) = (grid.node(0), grid.node(1));
    let (y1, y0) = (grid.node(n - 2), grid.node(n - 1));
    if f.value(x0) >= f.value(x1) {
        return Err(Error::DomainTooSmall { endpoint: x0 });
    }
    if f.value(y0) >= f.value(y1) {
        return Err(Error::DomainTooSmall { endpoint: y0 });
    }
    Ok(())
}

/// Largest value of `W` on the grid, refined at the grid maxima.
pub fn maximum_value(f: &dyn Fitness, grid: &Grid) -> f64 {
    let sampled = (0..grid.n_nodes())
        .map(|j| f.value(grid.node(j)))
        .fold(f64::NEG_INFINITY, f64::max);
    global_maxima(f, grid, 0.0)
        .iter()
        .map(|m| m.value)
        .fold(sampled, f64::max)
}

/// All grid local maxima of `W` within `tol` of the global maximum, each
/// refined by a three-point quadratic fit.
pub fn global_maxima(f: &dyn Fitness, grid: &Grid, tol: f64) -> Vec<Maximum> {
    let n = grid.n_nodes();
    let w: Vec<f64> = (0..n).map(|j| f.value(grid.node(j))).collect();
    let mut candidates = Vec::new();
    for j in 1..n - 1 {
        if w[j] >= w[j - 1] && w[j] > w[j + 1] {
            let location = golden_section_max(|x| f.value(x), grid.node(j - 1), grid.node(j + 1));
            let refined = f.value(location);
            let (location, value) = if refined >= w[j] { (location, refined) } else { (grid.node(j), w[j]) };
            candidates.push(Maximum { location, value, curvature: f.second_derivative(location) });
        }
    }
    let top = candidates.iter().map(|m| m.value).fold(f64::NEG_INFINITY, f64::max);
    candidates.retain(|m| m.value >= top - tol);
    candidates
}

/// Maximiser of a unimodal `g` on `[a, b]`.
fn golden_section_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc >= gd {
        c
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn double_well() -> FitnessPolynomial {
        // −(x² − 2)² = −x⁴ + 4x² − 4
        FitnessPolynomial::new(2, vec![-4.0, 0.0, 4.0, 0.0]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let harmonic = FitnessPolynomial::new(1, vec![0.0, 0.0]).unwrap();
        assert_eq!(harmonic.evaluate(0.0), 0.0);
        assert!(double_well().evaluate(2f64.sqrt()).abs() < 1e-14);
        let quartic = FitnessPolynomial::new(2, vec![0.0; 4]).unwrap();
        assert_eq!(quartic.evaluate(2.0), -16.0);
    }

    #[test]
    fn rejects_wrong_coefficient_count() {
        assert!(FitnessPolynomial::new(2, vec![0.0; 3]).is_err());
        assert!(FitnessPolynomial::from_coefficients(vec![1.0]).is_err());
        assert!(FitnessPolynomial::new(0, vec![]).is_err());
    }

    #[test]
    fn normalize_shift_examples() {
        let grid = Grid::new(10.0, 2001).unwrap();
        let harmonic = FitnessPolynomial::new(1, vec![0.0, 0.0]).unwrap();
        let s = harmonic.normalize_shift(&grid).unwrap();
        assert!((s.constant_shift() + 1.0).abs() < 1e-12);
        assert!((s.evaluate(0.0) + 1.0).abs() < 1e-12);

        let s = double_well().normalize_shift(&grid).unwrap();
        assert!((s.constant_shift() + 1.0).abs() < 1e-10);

        let q = FitnessPolynomial::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = q.normalize_shift(&grid).unwrap();
        assert!((s.constant_shift() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_shift_rejects_small_domain() {
        // maximum at ±√2 lies outside [−1, 1]
        let grid = Grid::new(1.0, 101).unwrap();
        assert!(matches!(
            double_well().normalize_shift(&grid),
            Err(Error::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn maxima_of_examples() {
        let grid = Grid::new(4.0, 801).unwrap();
        let harmonic = FitnessPolynomial::new(1, vec![0.0, 0.0]).unwrap();
        let m = harmonic.global_maxima(&grid, 1e-8);
        assert_eq!(m.len(), 1);
        assert!(m[0].location.abs() < 1e-12);
        assert!((m[0].curvature + 2.0).abs() < 1e-12);

        let m = double_well().global_maxima(&grid, 1e-8);
        assert_eq!(m.len(), 2);
        let r2 = 2f64.sqrt();
        assert!((m[0].location + r2).abs() < 1e-4);
        assert!((m[1].location - r2).abs() < 1e-4);
        for mx in &m {
            assert!((mx.curvature + 16.0).abs() < 1e-2);
        }
    }

    #[test]
    fn triple_well_maxima() {
        // −W = x²(x−2)⁴(x+2)⁴/200
        let p = Polynomial::new(vec![0.0, 0.0, 1.0])
            .mul(&Polynomial::new(vec![-4.0, 0.0, 1.0]).pow(4))
            .scale(-1.0 / 200.0);
        let grid = Grid::new(3.0, 1201).unwrap();
        let m = global_maxima(&p, &grid, 1e-8);
        let locs: Vec<f64> = m.iter().map(|m| m.location).collect();
        assert_eq!(locs.len(), 3, "{locs:?}");
        assert!((locs[0] + 2.0).abs() < 1e-2 && locs[1].abs() < 1e-9 && (locs[2] - 2.0).abs() < 1e-2);
    }

    #[test]
    fn normal_form_rescaling() {
        // −W = (x² − 2)²/12
        let p = Polynomial::new(vec![-2.0, 0.0, 1.0]).pow(2).scale(-1.0 / 12.0);
        let nf = FitnessPolynomial::from_polynomial(&p).unwrap();
        for y in [-1.3, 0.0, 0.4, 2.2] {
            assert!((nf.fitness.evaluate(y) - p.eval(nf.x_scale * y)).abs() < 1e-12);
        }
        assert!(FitnessPolynomial::from_polynomial(&Polynomial::new(vec![0.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn generic_second_derivative_is_accurate() {
        let f = FnFitness(|x: f64| -(x * x - 2.0) * (x * x - 2.0));
        let exact = double_well();
        for x in [-2.0, -0.3, 0.0, 1.1] {
            assert!((f.second_derivative(x) - exact.second_derivative(x)).abs() < 1e-6);
        }
    }
}
