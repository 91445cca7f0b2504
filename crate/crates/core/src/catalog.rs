//! Potentials with closed-form ground states, plus the named polynomial
//! potentials used in the branching studies.
//!
//! Every closed-form entry satisfies `−σ² φ₀'' − W φ₀ = λ₀ φ₀` exactly, which
//! makes them oracles for the discrete eigensolver.

use crate::error::{invalid, Result};
use crate::fitness::{Fitness, Growth};
use crate::grid::Grid;
use crate::math::Real;
use crate::poly::Polynomial;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub enum CaseKind {
    /// Degree-ten double well with `λ₀ = 3/8`.
    Decic,
    /// Rational potential family parameterised by `(ω, g, V₂)`.
    XieWangFu { omega: f64, g: f64, v2: f64 },
    /// Hyperbolic potential family parameterised by `(B, C)`.
    Zaslavski { b: f64, c: f64 },
    /// `−W = x²` at mutation scale `σ`.
    Harmonic { sigma: f64 },
    /// `φ₀ = e^{−q}` for a polynomial `q`; `W = q'' − (q')²`, `λ₀ = 0`.
    Ansatz { q: Polynomial, w: Polynomial },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormCase {
    pub name: &'static str,
    pub kind: CaseKind,
    pub lambda0: f64,
    pub sigma: f64,
    pub parameters: Vec<(&'static str, f64)>,
}

fn decic_minus_w() -> Polynomial {
    Polynomial::new(vec![
        0.0,
        0.0,
        105.0 / 64.0,
        0.0,
        -43.0 / 8.0,
        0.0,
        1.0,
        0.0,
        -1.0,
        0.0,
        1.0,
    ])
}

impl ClosedFormCase {
    /// `−W(x)`, the confining potential.
    pub fn potential(&self, x: f64) -> f64 {
        match &self.kind {
            CaseKind::Decic => decic_minus_w().eval(x),
            CaseKind::XieWangFu { omega, g, v2 } => {
                let r = (g * (g - v2)).sqrt();
                let d = 1.0 + g * x * x;
                omega * omega / 4.0 * x * x
                    + (g * (g - v2) + g * omega + r * (g + omega)) / (g * d)
                    + v2 / (d * d)
            }
            CaseKind::Zaslavski { b, c } => {
                let s = x.sinh() - c / b;
                b * b / 4.0 * s * s - b * x.cosh()
            }
            CaseKind::Harmonic { .. } => x * x,
            CaseKind::Ansatz { w, .. } => -w.eval(x),
        }
    }

    /// The ground state up to its normalisation constant.
    pub fn ground_state_unnormalized(&self, x: f64) -> f64 {
        match &self.kind {
            CaseKind::Decic => {
                let x2 = x * x;
                (-3.0 / 16.0 * x2 + x2 * x2 / 8.0 - x2 * x2 * x2 / 6.0).exp()
            }
            CaseKind::XieWangFu { omega, g, v2 } => {
                let r = (g * (g - v2)).sqrt();
                (-omega / 4.0 * x * x + (g + r) / (2.0 * g) * (1.0 + g * x * x).ln()).exp()
            }
            CaseKind::Zaslavski { b, c } => {
                let root = (b * b + c * c).sqrt();
                ((x / 2.0).exp() - (c - root) / b * (-x / 2.0).exp())
                    * (c / 2.0 * x - b / 2.0 * x.cosh()).exp()
            }
            CaseKind::Harmonic { sigma } => (-x * x / (2.0 * sigma)).exp(),
            CaseKind::Ansatz { q, .. } => (-q.eval(x)).exp(),
        }
    }

    /// Ground state sampled on the grid and normalised to unit L² norm.
    pub fn normalized_ground_state(&self, grid: &Grid) -> Vec<f64> {
        let mut phi = grid.sample(|x| self.ground_state_unnormalized(x));
        let norm = grid.l2_norm(&phi);
        phi.iter_mut().for_each(|v| *v /= norm);
        phi
    }

    /// Largest residual of the eigenvalue equation over interior nodes, using
    /// a five-point second difference, relative to `‖φ₀‖∞`.
    pub fn residual(&self, grid: &Grid) -> f64 {
        let phi = grid.sample(|x| self.ground_state_unnormalized(x));
        let h = grid.spacing();
        let sup = crate::grid::linf_norm(&phi);
        let s2 = self.sigma * self.sigma;
        let mut worst: f64 = 0.0;
        for j in 2..phi.len() - 2 {
            let d2 = (-phi[j + 2] + 16.0 * phi[j + 1] - 30.0 * phi[j] + 16.0 * phi[j - 1]
                - phi[j - 2])
                / (12.0 * h * h);
            let x = grid.node(j);
            let r = -s2 * d2 + self.potential(x) * phi[j] - self.lambda0 * phi[j];
            worst = worst.max(r.abs());
        }
        worst / sup
    }
}

impl Fitness for ClosedFormCase {
    fn value(&self, x: f64) -> f64 {
        -self.potential(x)
    }

    fn second_derivative(&self, x: f64) -> f64 {
        match &self.kind {
            CaseKind::Decic => -decic_minus_w().derivative().derivative().eval(x),
            CaseKind::Harmonic { .. } => -2.0,
            CaseKind::Ansatz { w, .. } => w.derivative().derivative().eval(x),
            _ => {
                let h = 1e-3 * x.abs().max(1.0);
                let f = |t: f64| self.value(t);
                (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h)
                    - f(x - 2.0 * h))
                    / (12.0 * h * h)
            }
        }
    }

    fn is_even(&self) -> bool {
        match &self.kind {
            CaseKind::Zaslavski { c, .. } => *c == 0.0,
            CaseKind::Ansatz { w, .. } => w.is_even(),
            _ => true,
        }
    }

    fn growth(&self) -> Option<Growth> {
        match &self.kind {
            CaseKind::Decic => Some(Growth { half_degree: 5, leading: 1.0 }),
            CaseKind::XieWangFu { omega, .. } => {
                Some(Growth { half_degree: 1, leading: omega * omega / 4.0 })
            }
            CaseKind::Zaslavski { .. } => None,
            CaseKind::Harmonic { .. } => Some(Growth { half_degree: 1, leading: 1.0 }),
            CaseKind::Ansatz { w, .. } => w.growth(),
        }
    }
}

pub fn decic() -> ClosedFormCase {
    ClosedFormCase {
        name: "decic",
        kind: CaseKind::Decic,
        lambda0: 0.375,
        sigma: 1.0,
        parameters: Vec::new(),
    }
}

/// Requires `ω > 0`, `g > 0` and `V₂ < g`.
pub fn xie_wang_fu(omega: f64, g: f64, v2: f64) -> Result<ClosedFormCase> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("xie_wang_fu requires omega > 0"));
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(invalid("xie_wang_fu requires g > 0"));
    }
    if !(v2 < g && v2.is_finite()) {
        return Err(invalid("xie_wang_fu requires V2 < g"));
    }
    let lambda0 = ((g * (g - v2)).sqrt() / g + 1.5) * omega;
    Ok(ClosedFormCase {
        name: "xie_wang_fu",
        kind: CaseKind::XieWangFu { omega, g, v2 },
        lambda0,
        sigma: 1.0,
        parameters: vec![("omega", omega), ("g", g), ("V2", v2)],
    })
}

/// Requires `B > 0` and `C ≥ 0`.
pub fn zaslavski(b: f64, c: f64) -> Result<ClosedFormCase> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("zaslavski requires B > 0"));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(invalid("zaslavski requires C >= 0"));
    }
    Ok(ClosedFormCase {
        name: "zaslavski",
        kind: CaseKind::Zaslavski { b, c },
        lambda0: -0.5 * (b * b + c * c).sqrt() - 0.25,
        sigma: 1.0,
        parameters: vec![("B", b), ("C", c)],
    })
}

pub fn harmonic(sigma: f64) -> Result<ClosedFormCase> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("harmonic requires sigma > 0"));
    }
    Ok(ClosedFormCase {
        name: "harmonic",
        kind: CaseKind::Harmonic { sigma },
        lambda0: sigma,
        sigma,
        parameters: vec![("sigma", sigma)],
    })
}

/// Ground state `e^{−q}` for a polynomial `q` of even degree ≥ 2 with positive
/// leading coefficient.
pub fn ansatz_case(q: &Polynomial) -> Result<ClosedFormCase> {
    if q.degree() < 2 || !q.degree().is_multiple_of(2) {
        return Err(invalid("ansatz polynomial must have even degree >= 2"));
    }
    if q.leading() <= 0.0 {
        return Err(invalid("ansatz polynomial must have a positive leading coefficient"));
    }
    let dq = q.derivative();
    let w = dq.derivative().add(&dq.mul(&dq).scale(-1.0));
    Ok(ClosedFormCase {
        name: "ansatz",
        kind: CaseKind::Ansatz { q: q.clone(), w },
        lambda0: 0.0,
        sigma: 1.0,
        parameters: Vec::new(),
    })
}

/// The closed-form cases with default parameters.
pub fn catalog() -> Vec<ClosedFormCase> {
    let mut out = vec![decic()];
    out.extend(xie_wang_fu(1.0, 1.0, 0.5));
    out.extend(zaslavski(1.0, 0.0));
    out.extend(zaslavski(0.25, 0.0));
    out.extend(zaslavski(0.25, 0.1));
    out.extend(harmonic(1.0));
    out
}

/// Asymmetric quartic with a single global maximum; `constant` is free.
pub fn uni_modal_quartic(constant: f64) -> Polynomial {
    Polynomial::new(vec![
        constant,
        139.0 / 420.0,
        -2971.0 / 2520.0,
        -233.0 / 1260.0,
        299.0 / 2520.0,
    ])
    .scale(-1.0)
}

/// `−W = (x² − 2)²/12`.
pub fn scaled_double_well() -> Polynomial {
    Polynomial::new(vec![-2.0, 0.0, 1.0]).pow(2).scale(-1.0 / 12.0)
}

/// `−W = (x² − 4)x² + 4 = (x² − 2)²`.
pub fn double_well() -> Polynomial {
    Polynomial::new(vec![4.0, 0.0, -4.0, 0.0, 1.0]).scale(-1.0)
}

/// `−W = x⁴(6x − 8)²(6x + 8)²/200`: narrow wells at ±4/3, wide well at 0.
pub fn narrow_wide_narrow() -> Polynomial {
    Polynomial::monomial(1.0, 4)
        .mul(&Polynomial::new(vec![-8.0, 6.0]).pow(2))
        .mul(&Polynomial::new(vec![8.0, 6.0]).pow(2))
        .scale(-1.0 / 200.0)
}

/// `−W = x²(x − 2)⁴(x + 2)⁴/200`: wide wells at ±2, narrow well at 0.
pub fn wide_narrow_wide() -> Polynomial {
    Polynomial::monomial(1.0, 2)
        .mul(&Polynomial::new(vec![-2.0, 1.0]).pow(4))
        .mul(&Polynomial::new(vec![2.0, 1.0]).pow(4))
        .scale(-1.0 / 200.0)
}
