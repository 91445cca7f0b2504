//! Discrete spectrum of `H = −σ² d²/dx² − W(x)` on a truncated grid.
//!
//! `H` is discretised with three-point central differences and Dirichlet
//! conditions at `±L`, which gives a symmetric tridiagonal matrix on the
//! interior nodes. Work is done in the gauge where `max W = −1`, so every
//! eigenvalue is at least 1; [`SpectralBasis::shift`] converts back.
//!
//! For even `W` the problem splits into even and odd sectors that are solved
//! separately. Without the split, tunnelling pairs in deep double wells are
//! degenerate to machine precision and the ground state would be an arbitrary
//! mix of one-well states.

use crate::error::{invalid, Error, Result};
use crate::fitness::{check_endpoints, maximum_value, Fitness, Growth};
use crate::gamma::gamma;
use crate::grid::{linf_norm, Grid};
use crate::math::{linear_fit, Real};
use crate::tridiag::{self, SymTridiagonal};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

/// Relative eigenvalue change allowed when the half-length is doubled.
pub const TRUNCATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub index: usize,
    /// Eigenvalue in the working gauge (`max W = −1`).
    pub eigenvalue: f64,
    /// Samples at every grid node, unit L² norm under trapezoid quadrature.
    pub eigenfunction: Vec<f64>,
    /// `m_k = ∫ φ_k`
    pub mass: f64,
    /// `∫ W φ_k` in the working gauge.
    pub weighted_mass: f64,
    pub l1_norm: f64,
    pub linf_norm: f64,
    /// `∫ |W φ_k|` in the working gauge.
    pub weighted_l1_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub sigma: f64,
    pub grid: Grid,
    /// Working-gauge fitness `W + shift` at every node.
    pub potential: Vec<f64>,
    /// Constant added to `W`; `λ_original = λ_working + shift`.
    pub shift: f64,
    pub symmetric: bool,
    pub growth: Option<Growth>,
    pub pairs: Vec<EigenPair>,
    /// True when `pairs` is the whole discrete spectrum.
    pub complete: bool,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    /// `λ_k` for the unshifted fitness.
    pub fn eigenvalue_original(&self, k: usize) -> f64 {
        self.pairs[k].eigenvalue + self.shift
    }

    pub fn ground_state(&self) -> &[f64] {
        &self.pairs[0].eigenfunction
    }

    /// `σ² ‖φ_k'‖² + ∫ (−W) φ_k²` with forward differences, in the working gauge.
    pub fn discrete_energy(&self, k: usize) -> f64 {
        let phi = &self.pairs[k].eigenfunction;
        let h = self.grid.spacing();
        let kinetic: f64 = phi.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>();
        let potential: f64 = phi
            .iter()
            .zip(&self.potential)
            .map(|(p, w)| -w * p * p)
            .sum::<f64>();
        self.sigma * self.sigma * kinetic / h + h * potential
    }

    /// `‖φ_k(x) − (−1)^k φ_k(−x)‖∞ / ‖φ_k‖∞`.
    pub fn parity_error(&self, k: usize) -> f64 {
        let phi = &self.pairs[k].eigenfunction;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let n = phi.len();
        let worst = (0..n).fold(0.0f64, |m, j| m.max((phi[j] - sign * phi[n - 1 - j]).abs()));
        worst / self.pairs[k].linf_norm
    }

    /// Largest `|⟨φ_i, φ_j⟩ − δ_ij|` over the basis.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..=i {
                let ip = self.grid.inner(&self.pairs[i].eigenfunction, &self.pairs[j].eigenfunction);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }
}

/// Interior-node matrix of `−σ² d²/dx² − W` with Dirichlet ends.
pub fn assemble_hamiltonian(f: &dyn Fitness, sigma: f64, grid: &Grid) -> Result<SymTridiagonal> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be positive"));
    }
    let w = grid.sample(|x| f.value(x));
    Ok(assemble_from_samples(&w, sigma, grid.spacing()))
}

pub(crate) fn assemble_from_samples(w: &[f64], sigma: f64, h: f64) -> SymTridiagonal {
    let n = w.len();
    let c = sigma * sigma / (h * h);
    let diag = w[1..n - 1].iter().map(|wj| 2.0 * c - wj).collect();
    let off = vec![-c; n - 3];
    SymTridiagonal { diag, off }
}

/// Number of eigenpairs to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Lowest(usize),
    /// Every eigenpair of the discrete operator.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sector {
    Even,
    Odd,
}

fn sector_matrix(w: &[f64], sigma: f64, h: f64, sector: Sector) -> SymTridiagonal {
    let n = w.len();
    let c = sigma * sigma / (h * h);
    if n % 2 == 1 {
        let m = (n - 1) / 2;
        match sector {
            Sector::Even => {
                let diag: Vec<f64> = w[m..n - 1].iter().map(|wj| 2.0 * c - wj).collect();
                let mut off = vec![-c; diag.len() - 1];
                if !off.is_empty() {
                    off[0] = -SQRT_2 * c;
                }
                SymTridiagonal { diag, off }
            }
            Sector::Odd => {
                let diag: Vec<f64> = w[m + 1..n - 1].iter().map(|wj| 2.0 * c - wj).collect();
                let off = vec![-c; diag.len().saturating_sub(1)];
                SymTridiagonal { diag, off }
            }
        }
    } else {
        let m = n / 2;
        let mut diag: Vec<f64> = w[m..n - 1].iter().map(|wj| 2.0 * c - wj).collect();
        diag[0] += match sector {
            Sector::Even => -c,
            Sector::Odd => c,
        };
        let off = vec![-c; diag.len() - 1];
        SymTridiagonal { diag, off }
    }
}

fn expand_sector(y: &[f64], n: usize, sector: Sector) -> Vec<f64> {
    let mut phi = vec![0.0; n];
    let sign = match sector {
        Sector::Even => 1.0,
        Sector::Odd => -1.0,
    };
    if n % 2 == 1 {
        let m = (n - 1) / 2;
        match sector {
            Sector::Even => {
                phi[m] = SQRT_2 * y[0];
                for (i, v) in y.iter().enumerate().skip(1) {
                    phi[m + i] = *v;
                    phi[m - i] = *v;
                }
            }
            Sector::Odd => {
                for (i, v) in y.iter().enumerate() {
                    phi[m + 1 + i] = *v;
                    phi[m - 1 - i] = -v;
                }
            }
        }
    } else {
        let m = n / 2;
        for (i, v) in y.iter().enumerate() {
            phi[m + i] = *v;
            phi[m - 1 - i] = sign * v;
        }
    }
    phi
}

fn sector_dims(n: usize) -> (usize, usize) {
    if n % 2 == 1 {
        ((n - 1) / 2, (n - 3) / 2)
    } else {
        (n / 2 - 1, n / 2 - 1)
    }
}

fn split_count(count: Count, n: usize, symmetric: bool) -> Result<(usize, usize)> {
    let dim = n - 2;
    let k = match count {
        Count::All => dim,
        Count::Lowest(k) => k,
    };
    if k == 0 || k > dim {
        return Err(invalid("eigenpair count must lie in 1..=n_nodes-2"));
    }
    if !symmetric {
        return Ok((k, 0));
    }
    let (de, d_o) = sector_dims(n);
    let (ke, ko) = (k.div_ceil(2), k / 2);
    debug_assert!(ke <= de && ko <= d_o);
    Ok((ke, ko))
}

fn interleave<T>(even: Vec<T>, odd: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(even.len() + odd.len());
    let mut e = even.into_iter();
    let mut o = odd.into_iter();
    loop {
        match (e.next(), o.next()) {
            (None, None) => break,
            (a, b) => {
                out.extend(a);
                out.extend(b);
            }
        }
    }
    out
}

/// Eigenvalues in the working gauge for samples `w` of the gauge-shifted fitness.
fn discrete_eigenvalues(w: &[f64], sigma: f64, h: f64, count: Count, symmetric: bool) -> Result<Vec<f64>> {
    let n = w.len();
    let (ke, ko) = split_count(count, n, symmetric)?;
    if !symmetric {
        return assemble_from_samples(w, sigma, h).lowest_eigenvalues(ke);
    }
    let even = sector_matrix(w, sigma, h, Sector::Even).lowest_eigenvalues(ke)?;
    let odd = if ko > 0 {
        sector_matrix(w, sigma, h, Sector::Odd).lowest_eigenvalues(ko)?
    } else {
        Vec::new()
    };
    Ok(interleave(even, odd))
}

fn discrete_pairs(
    w: &[f64],
    sigma: f64,
    h: f64,
    count: Count,
    symmetric: bool,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = w.len();
    let (ke, ko) = split_count(count, n, symmetric)?;
    let embed = |v: Vec<f64>| {
        let mut phi = vec![0.0; n];
        phi[1..n - 1].copy_from_slice(&v);
        phi
    };
    if !symmetric {
        let pairs = tridiag::solve_lowest(&assemble_from_samples(w, sigma, h), ke)?;
        return Ok(pairs.into_iter().map(|(l, v)| (l, embed(v))).collect());
    }
    let even: Vec<(f64, Vec<f64>)> = tridiag::solve_lowest(&sector_matrix(w, sigma, h, Sector::Even), ke)?
        .into_iter()
        .map(|(l, y)| (l, expand_sector(&y, n, Sector::Even)))
        .collect();
    let odd = if ko > 0 {
        tridiag::solve_lowest(&sector_matrix(w, sigma, h, Sector::Odd), ko)?
            .into_iter()
            .map(|(l, y)| (l, expand_sector(&y, n, Sector::Odd)))
            .collect()
    } else {
        Vec::new()
    };
    Ok(interleave(even, odd))
}

/// Constant that moves the grid maximum of `W` to −1.
pub fn gauge_shift(f: &dyn Fitness, grid: &Grid) -> Result<f64> {
    check_endpoints(f, grid)?;
    Ok(-1.0 - maximum_value(f, grid))
}

fn shifted_samples(f: &dyn Fitness, grid: &Grid, shift: f64) -> Vec<f64> {
    grid.sample(|x| f.value(x) + shift)
}

/// Whether the even/odd split applies: `W` even and samples mirror-symmetric.
fn use_sectors(f: &dyn Fitness, w: &[f64]) -> bool {
    f.is_even() && (0..w.len()).all(|j| w[j] == w[w.len() - 1 - j])
}

/// Lowest `k` eigenvalues for the unshifted fitness.
pub fn eigenvalues(f: &dyn Fitness, sigma: f64, grid: &Grid, k: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be positive"));
    }
    let shift = gauge_shift(f, grid)?;
    let w = shifted_samples(f, grid, shift);
    let sym = use_sectors(f, &w);
    Ok(discrete_eigenvalues(&w, sigma, grid.spacing(), Count::Lowest(k), sym)?
        .into_iter()
        .map(|l| l + shift)
        .collect())
}

/// Largest relative change of the lowest `k` eigenvalues (working gauge) when
/// the half-length is doubled at fixed spacing.
pub fn truncation_change(f: &dyn Fitness, sigma: f64, grid: &Grid, k: usize) -> Result<Vec<f64>> {
    let shift = gauge_shift(f, grid)?;
    let h = grid.spacing();
    let w = shifted_samples(f, grid, shift);
    let sym = use_sectors(f, &w);
    let base = discrete_eigenvalues(&w, sigma, h, Count::Lowest(k), sym)?;
    let big = grid.doubled();
    let wb = shifted_samples(f, &big, shift);
    let wide = discrete_eigenvalues(&wb, sigma, big.spacing(), Count::Lowest(k), use_sectors(f, &wb))?;
    Ok(base.iter().zip(&wide).map(|(a, b)| ((a - b) / a).abs()).collect())
}

/// Fails with [`Error::TruncationInadequate`] if doubling `L` moves any of the
/// lowest `k` eigenvalues by more than [`TRUNCATION_TOL`] relative.
pub fn check_truncation(f: &dyn Fitness, sigma: f64, grid: &Grid, k: usize) -> Result<()> {
    let changes = truncation_change(f, sigma, grid, k)?;
    for (index, &relative_change) in changes.iter().enumerate() {
        if !(relative_change <= TRUNCATION_TOL) {
            return Err(Error::TruncationInadequate { index, relative_change });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisOptions {
    /// Run the doubling test before accepting the basis.
    pub validate_truncation: bool,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions { validate_truncation: true }
    }
}

/// Lowest `k` eigenpairs with quadrature-normalised eigenfunctions, the
/// truncation test enabled.
pub fn build_basis(f: &dyn Fitness, sigma: f64, grid: &Grid, k: usize) -> Result<SpectralBasis> {
    build_basis_with(f, sigma, grid, Count::Lowest(k), BasisOptions::default())
}

pub fn build_basis_with(
    f: &dyn Fitness,
    sigma: f64,
    grid: &Grid,
    count: Count,
    options: BasisOptions,
) -> Result<SpectralBasis> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be positive"));
    }
    let shift = gauge_shift(f, grid)?;
    let w = shifted_samples(f, grid, shift);
    let symmetric = use_sectors(f, &w);
    let h = grid.spacing();
    let raw = discrete_pairs(&w, sigma, h, count, symmetric)?;
    if options.validate_truncation {
        if let Count::Lowest(k) = count {
            check_truncation(f, sigma, grid, k)?;
        }
    }
    let complete = raw.len() == grid.n_nodes() - 2;
    let pairs = raw
        .into_iter()
        .enumerate()
        .map(|(index, (eigenvalue, mut phi))| {
            let norm = grid.l2_norm(&phi);
            phi.iter_mut().for_each(|v| *v /= norm);
            orient(&mut phi, index);
            let weighted: Vec<f64> = phi.iter().zip(&w).map(|(p, wj)| p * wj).collect();
            EigenPair {
                index,
                eigenvalue,
                mass: grid.integrate(&phi),
                weighted_mass: grid.integrate(&weighted),
                l1_norm: grid.l1_norm(&phi),
                linf_norm: linf_norm(&phi),
                weighted_l1_norm: grid.l1_norm(&weighted),
                eigenfunction: phi,
            }
        })
        .collect();
    Ok(SpectralBasis {
        sigma,
        grid: *grid,
        potential: w,
        shift,
        symmetric,
        growth: f.growth(),
        pairs,
        complete,
    })
}

// φ₀ positive; otherwise the first node above 1e−8 ‖φ‖∞ is positive.
fn orient(phi: &mut [f64], index: usize) {
    let flip = if index == 0 {
        phi.iter().sum::<f64>() < 0.0
    } else {
        let sup = linf_norm(phi);
        phi.iter().find(|v| v.abs() > 1e-8 * sup).is_some_and(|v| *v < 0.0)
    };
    if flip {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
}

/// `C_{s,σ} = (σ √π Γ(3/2 + 1/(2s)) / Γ(1 + 1/(2s)))^{2s/(s+1)}`.
pub fn asymptotic_constant(s: u32, sigma: f64) -> f64 {
    let s = s as f64;
    let inner = sigma * PI.sqrt() * gamma(1.5 + 0.5 / s) / gamma(1.0 + 0.5 / s);
    inner.powf(2.0 * s / (s + 1.0))
}

/// Exponent `2s/(s+1)` of the eigenvalue growth.
pub fn asymptotic_exponent(s: u32) -> f64 {
    2.0 * s as f64 / (s as f64 + 1.0)
}

/// `λ_k / (C_{s,σ} k^{2s/(s+1)}) − 1` for each `k` in `[k_min, k_max]`,
/// eigenvalues in the original gauge.
pub fn asymptotic_deviations(basis: &SpectralBasis, k_min: usize, k_max: usize) -> Result<Vec<(usize, f64)>> {
    let growth = basis
        .growth
        .ok_or_else(|| invalid("eigenvalue asymptotics need polynomial growth"))?;
    if k_min == 0 || k_min > k_max || k_max >= basis.len() {
        return Err(invalid("need 1 <= k_min <= k_max < K"));
    }
    let c = asymptotic_constant(growth.half_degree, growth.effective_sigma(basis.sigma));
    let e = asymptotic_exponent(growth.half_degree);
    Ok((k_min..=k_max)
        .map(|k| (k, basis.eigenvalue_original(k) / (c * (k as f64).powf(e)) - 1.0))
        .collect())
}

/// Largest `|λ_k / (C_{s,σ} k^{2s/(s+1)}) − 1|` over `[k_min, k_max]`.
pub fn check_asymptotics(basis: &SpectralBasis, k_min: usize, k_max: usize) -> Result<f64> {
    Ok(asymptotic_deviations(basis, k_min, k_max)?
        .iter()
        .fold(0.0, |m, (_, d)| m.max(d.abs())))
}

/// Log-log slopes of the eigenfunction norms against `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSlopes {
    pub l1: f64,
    pub linf: f64,
    pub weighted_l1: f64,
}

impl NormSlopes {
    /// Upper bounds `(1/(2(s+1)), s/(2(s+1)), (5s+2)/(2s+2))`.
    pub fn bounds(s: u32) -> NormSlopes {
        let s = s as f64;
        NormSlopes {
            l1: 1.0 / (2.0 * (s + 1.0)),
            linf: s / (2.0 * (s + 1.0)),
            weighted_l1: (5.0 * s + 2.0) / (2.0 * s + 2.0),
        }
    }
}

pub fn norm_scaling_exponents(basis: &SpectralBasis, k_min: usize, k_max: usize) -> Result<NormSlopes> {
    if k_min == 0 || k_min >= k_max || k_max >= basis.len() {
        return Err(invalid("need 1 <= k_min < k_max < K"));
    }
    let logk: Vec<f64> = (k_min..=k_max).map(|k| (k as f64).ln()).collect();
    let fit = |g: &dyn Fn(&EigenPair) -> f64| {
        let y: Vec<f64> = (k_min..=k_max).map(|k| g(&basis.pairs[k]).ln()).collect();
        linear_fit(&logk, &y).0
    };
    Ok(NormSlopes {
        l1: fit(&|p| p.l1_norm),
        linf: fit(&|p| p.linf_norm),
        weighted_l1: fit(&|p| p.weighted_l1_norm),
    })
}

/// `‖v‖₁ / (‖v‖₂^{1−δ} ‖x^s v‖₂^δ)` with `δ = 1/(2s)`.
pub fn interpolation_ratio(grid: &Grid, v: &[f64], s: u32) -> Result<f64> {
    if s == 0 {
        return Err(invalid("s must be at least 1"));
    }
    if v.len() != grid.n_nodes() {
        return Err(invalid("grid function length does not match the grid"));
    }
    let l2 = grid.l2_norm(v);
    if l2 == 0.0 {
        return Err(invalid("interpolation ratio of the zero function"));
    }
    let xs: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(j, vj)| grid.node(j).powi(s as i32) * vj)
        .collect();
    let delta = 0.5 / s as f64;
    Ok(grid.l1_norm(v) / (l2.powf(1.0 - delta) * grid.l2_norm(&xs).powf(delta)))
}

/// Observed convergence orders `log₂((λ_h − λ_{h/2}) / (λ_{h/2} − λ_{h/4}))`
/// for the lowest `k` eigenvalues, plus the finest-grid values.
pub fn refinement_orders(f: &dyn Fitness, sigma: f64, grid: &Grid, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let g1 = *grid;
    let g2 = g1.refined();
    let g3 = g2.refined();
    let l1 = eigenvalues(f, sigma, &g1, k)?;
    let l2 = eigenvalues(f, sigma, &g2, k)?;
    let l3 = eigenvalues(f, sigma, &g3, k)?;
    let orders = (0..k)
        .map(|i| ((l1[i] - l2[i]) / (l2[i] - l3[i])).abs().log2())
        .collect();
    Ok((orders, l3))
}

/// Richardson extrapolation `(4 λ_{h/2} − λ_h) / 3` of the lowest `k` eigenvalues.
pub fn richardson_eigenvalues(f: &dyn Fitness, sigma: f64, grid: &Grid, k: usize) -> Result<Vec<f64>> {
    let coarse = eigenvalues(f, sigma, grid, k)?;
    let fine = eigenvalues(f, sigma, &grid.refined(), k)?;
    Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}

/// How the grid for a given `σ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy {
    Fixed(Grid),
    Auto(AutoGrid),
}

impl GridPolicy {
    pub fn grid_for(&self, f: &dyn Fitness, sigma: f64, k: usize) -> Result<Grid> {
        match self {
            GridPolicy::Fixed(g) => Ok(*g),
            GridPolicy::Auto(a) => a.grid_for(f, sigma, k),
        }
    }
}

/// Automatic truncation and resolution.
///
/// The half-length `L` puts every requested eigenfunction deep in its
/// classically forbidden region: `−W(±L) ≥ λ_K + margin` (gauge with
/// `max W = 0`) and the WKB decay exponent past the turning points reaches
/// `decay`. The spacing starts at `min(σ/4, wavelength/20)` and is refined
/// from a three-level Richardson estimate until the error estimate falls
/// below `target_rel_error`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoGrid {
    pub target_rel_error: f64,
    pub max_nodes: usize,
    pub margin: f64,
    pub decay: f64,
}

impl Default for AutoGrid {
    fn default() -> Self {
        AutoGrid { target_rel_error: 1e-7, max_nodes: 400_001, margin: 10.0, decay: 40.0 }
    }
}

impl AutoGrid {
    pub fn grid_for(&self, f: &dyn Fitness, sigma: f64, k: usize) -> Result<Grid> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma must be positive"));
        }
        if k == 0 {
            return Err(invalid("need at least one eigenpair"));
        }
        let (center, top) = locate_maximum(f)?;
        let v = |x: f64| top - f.value(x);
        let energy = 1.2 * wkb_energy(&v, center, sigma, k as f64 + 0.5)? + 1e-3 * sigma;
        let mut half_length = truncation_length(&v, center, sigma, energy, self.margin, self.decay);
        let wavelength = 2.0 * PI * sigma / energy.sqrt();
        let mut h = (sigma / 4.0).min(wavelength / 20.0).min(half_length / 10.0);

        for _ in 0..8 {
            let g = self.grid_with(half_length, h)?;
            match check_truncation(f, sigma, &g, k) {
                Ok(()) => break,
                Err(Error::TruncationInadequate { .. }) | Err(Error::DomainTooSmall { .. }) => {
                    half_length *= 1.5
                }
                Err(e) => return Err(e),
            }
        }

        for _ in 0..6 {
            let g = self.grid_with(half_length, h)?;
            if 4 * (g.n_nodes() - 1) + 1 > self.max_nodes {
                break;
            }
            let (orders, finest) = refinement_orders(f, sigma, &g, k)?;
            let fine = eigenvalues(f, sigma, &g.refined(), k)?;
            let mut worst: f64 = 0.0;
            let mut order_ok = true;
            for i in 0..k {
                let scale = (finest[i] - top).abs().max(sigma);
                let err = (fine[i] - finest[i]).abs() / 3.0 / scale;
                worst = worst.max(err);
                if err > 1e-12 && !(1.8..=2.2).contains(&orders[i]) {
                    order_ok = false;
                }
            }
            if !order_ok {
                h /= 2.0;
                continue;
            }
            let h_finest = g.spacing() / 4.0;
            let ratio = (0.9 * (self.target_rel_error / worst.max(1e-300)).sqrt()).min(4.0);
            return self.grid_with(half_length, h_finest * ratio);
        }
        self.grid_with(half_length, h)
    }

    fn grid_with(&self, half_length: f64, h: f64) -> Result<Grid> {
        let g = Grid::with_max_spacing(half_length, h)?;
        if g.n_nodes() > self.max_nodes {
            return Err(Error::GridBudgetExceeded { nodes: g.n_nodes(), max_nodes: self.max_nodes });
        }
        Ok(g)
    }
}

/// Location and value of the global maximum of `W`, found on expanding windows.
fn locate_maximum(f: &dyn Fitness) -> Result<(f64, f64)> {
    let mut r = 1.0;
    while r < 1e6 {
        let g = Grid::new(r, 2001)?;
        let w = g.sample(|x| f.value(x));
        let (jmax, wmax) = w
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        let inner = jmax > 200 && jmax < 1800;
        if inner && w[0] < wmax - 1.0 && w[2000] < wmax - 1.0 && check_endpoints(f, &g).is_ok() {
            let top = maximum_value(f, &g);
            return Ok((g.node(jmax), top));
        }
        r *= 2.0;
    }
    Err(invalid("fitness does not look confining: no global maximum found"))
}

/// Outward search for the first point where `V` exceeds `level`.
fn outward_crossing(v: &dyn Fn(f64) -> f64, start: f64, dir: f64, level: f64) -> f64 {
    let mut step = 1e-3;
    let mut x = start;
    while v(x) < level {
        x += dir * step;
        step *= 1.05;
        if x.abs() > 1e6 {
            break;
        }
    }
    x
}

/// Energy `E` where the WKB state count `(1/πσ) ∫ √(E − V)₊ dx` reaches `states`.
fn wkb_energy(v: &dyn Fn(f64) -> f64, center: f64, sigma: f64, states: f64) -> Result<f64> {
    let count = |e: f64| {
        let a = outward_crossing(v, center, -1.0, e);
        let b = outward_crossing(v, center, 1.0, e);
        let n = 4000;
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            acc += (e - v(x)).max(0.0).sqrt();
        }
        acc * h / (PI * sigma)
    };
    let mut hi = sigma.max(1e-6);
    let mut guard = 0;
    while count(hi) < states {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(invalid("could not bracket the requested spectrum"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if count(mid) < states {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn truncation_length(v: &dyn Fn(f64) -> f64, center: f64, sigma: f64, energy: f64, margin: f64, decay: f64) -> f64 {
    let mut half_length: f64 = 0.0;
    for dir in [-1.0, 1.0] {
        let by_margin = outward_crossing(v, center, dir, energy + margin);
        let turning = outward_crossing(v, center, dir, energy);
        let mut x = turning;
        let step = 1e-3 * (1.0 + turning.abs());
        let mut action = 0.0;
        while action < decay && x.abs() < 1e6 {
            x += dir * step;
            action += (v(x) - energy).max(0.0).sqrt() / sigma * step;
        }
        half_length = half_length.max(by_margin.abs()).max(x.abs());
    }
    half_length
}

/// `(σ, λ₀(σ))` in the original gauge, each on its own grid.
pub fn lambda0_of_sigma(f: &dyn Fitness, sigmas: &[f64], policy: &GridPolicy) -> Result<Vec<(f64, Result<f64>)>> {
    if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(invalid("sigmas must be positive"));
    }
    if sigmas.windows(2).any(|w| w[0] < w[1]) {
        return Err(invalid("sigmas must be sorted in descending order"));
    }
    Ok(sigmas
        .iter()
        .map(|&sigma| {
            let value = policy
                .grid_for(f, sigma, 1)
                .and_then(|g| build_basis(f, sigma, &g, 1))
                .map(|b| b.eigenvalue_original(0));
            (sigma, value)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::FnFitness;
    use crate::poly::Polynomial;

    fn double_well() -> Polynomial {
        Polynomial::new(vec![-4.0, 0.0, 4.0, 0.0, -1.0])
    }

    #[test]
    fn sectors_match_full_solve() {
        let p = double_well();
        let opaque = FnFitness(|x: f64| p.eval(x));
        for n in [401, 402] {
            let grid = Grid::new(4.0, n).unwrap();
            let a = build_basis_with(&p, 0.4, &grid, Count::Lowest(8), BasisOptions { validate_truncation: false }).unwrap();
            let b = build_basis_with(&opaque, 0.4, &grid, Count::Lowest(8), BasisOptions { validate_truncation: false }).unwrap();
            assert!(a.symmetric && !b.symmetric);
            for k in 0..8 {
                assert!((a.pairs[k].eigenvalue - b.pairs[k].eigenvalue).abs() < 1e-10 * b.pairs[k].eigenvalue);
                let diff = a.pairs[k]
                    .eigenfunction
                    .iter()
                    .zip(&b.pairs[k].eigenfunction)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                assert!(diff < 1e-7, "n={n} k={k} diff={diff}");
            }
        }
    }

    #[test]
    fn all_pairs_span_the_grid() {
        let grid = Grid::new(3.0, 41).unwrap();
        let b = build_basis_with(&double_well(), 0.5, &grid, Count::All, BasisOptions::default()).unwrap();
        assert!(b.complete);
        assert_eq!(b.len(), 39);
        assert!(b.orthonormality_error() < 1e-12);
    }

    #[test]
    fn working_gauge_has_eigenvalues_above_one() {
        let grid = Grid::new(4.0, 801).unwrap();
        let b = build_basis(&double_well(), 0.3, &grid, 4).unwrap();
        assert!((b.shift + 1.0).abs() < 1e-12);
        assert!(b.potential.iter().all(|w| *w <= -1.0 + 1e-12));
        assert!(b.eigenvalues().iter().all(|l| *l >= 1.0));
        for k in 0..4 {
            assert!((b.discrete_energy(k) - b.pairs[k].eigenvalue).abs() < 1e-9 * b.pairs[k].eigenvalue);
        }
    }

    #[test]
    fn asymptotic_constant_harmonic() {
        // s = 1: C = (σ √π Γ(2)/Γ(3/2))^1 = 2σ
        assert!((asymptotic_constant(1, 1.0) - 2.0).abs() < 1e-12);
        assert!((asymptotic_constant(1, 0.3) - 0.6).abs() < 1e-12);
        assert!((asymptotic_exponent(2) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_requests() {
        let grid = Grid::new(4.0, 101).unwrap();
        assert!(build_basis(&double_well(), 0.3, &grid, 0).is_err());
        assert!(build_basis(&double_well(), 0.3, &grid, 100).is_err());
        assert!(build_basis(&double_well(), 0.0, &grid, 1).is_err());
        let small = Grid::new(1.0, 101).unwrap();
        assert!(matches!(build_basis(&double_well(), 0.3, &small, 1), Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn interpolation_ratio_rejects_zero() {
        let grid = Grid::new(2.0, 11).unwrap();
        assert!(interpolation_ratio(&grid, &[0.0; 11], 1).is_err());
        assert!(interpolation_ratio(&grid, &[1.0; 11], 0).is_err());
        assert!(interpolation_ratio(&grid, &[1.0; 11], 2).unwrap() > 0.0);
    }
}
