//! Modality of the ground state and its dependence on `σ`.

use crate::error::{invalid, Error, Result};
use crate::fitness::{global_maxima, maximum_value, Fitness};
use crate::grid::Grid;
use crate::math::Real;
use crate::spectral::{build_basis, GridPolicy, SpectralBasis};
use alloc::string::String;
use alloc::vec::Vec;

pub const DEFAULT_REL_TOL: f64 = 1e-3;
pub const DEFAULT_GLOBAL_REL_TOL: f64 = 0.2;
/// Relative tolerance for equal curvatures in [`predicted_mode_count`].
pub const CURVATURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub location: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    SecondDerivativeAtZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityReport {
    pub sigma: f64,
    pub mode_count: usize,
    /// Sorted by location.
    pub modes: Vec<Mode>,
    pub global_mode_count: usize,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    pub rel_tol: f64,
    pub global_rel_tol: f64,
    /// `None` means `max(4h, σ/2)`.
    pub min_separation: Option<f64>,
}

impl Default for ModeParams {
    fn default() -> Self {
        ModeParams { rel_tol: DEFAULT_REL_TOL, global_rel_tol: DEFAULT_GLOBAL_REL_TOL, min_separation: None }
    }
}

impl ModeParams {
    pub fn separation(&self, grid: &Grid, sigma: f64) -> f64 {
        self.min_separation
            .unwrap_or_else(|| (4.0 * grid.spacing()).max(sigma / 2.0))
    }
}

/// Modes of a nonnegative grid function.
///
/// A mode is a strict local maximum (plateaus collapse to their midpoint) of
/// height at least `rel_tol · max φ` that is not exceeded anywhere within
/// `min_separation`; of two equal candidates closer than that, the left one wins.
pub fn count_modes(grid: &Grid, phi: &[f64], rel_tol: f64, min_separation: f64) -> Result<Vec<Mode>> {
    if phi.len() != grid.n_nodes() {
        return Err(invalid("grid function length does not match the grid"));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid("rel_tol must lie in (0, 1)"));
    }
    let h = grid.spacing();
    if !(min_separation >= 2.0 * h * (1.0 - 1e-12)) {
        return Err(invalid("min_separation must be at least two grid spacings"));
    }
    let n = phi.len();
    let peak = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Ok(Vec::new());
    }
    let floor = rel_tol * peak;
    let reach = (min_separation / h).floor() as usize;

    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let mut a = 0;
    while a < n {
        let mut b = a;
        while b + 1 < n && phi[b + 1] == phi[a] {
            b += 1;
        }
        let v = phi[a];
        let left_ok = a == 0 || phi[a - 1] < v;
        let right_ok = b + 1 == n || phi[b + 1] < v;
        if left_ok && right_ok && v >= floor {
            candidates.push((a, b));
        }
        a = b + 1;
    }

    let mut modes: Vec<Mode> = Vec::new();
    let mut taken: Vec<usize> = Vec::new();
    for &(a, b) in &candidates {
        let v = phi[a];
        let lo = a.saturating_sub(reach);
        let hi = (b + reach).min(n - 1);
        if phi[lo..=hi].iter().any(|&p| p > v) {
            continue;
        }
        let mid = (grid.node(a) + grid.node(b)) / 2.0;
        if taken.iter().any(|&t| (a - t) as f64 * h <= min_separation && phi[t] == v) {
            continue;
        }
        taken.push(b);
        modes.push(Mode { location: mid, height: v });
    }
    Ok(modes)
}

/// Modes whose height is within `global_rel_tol` of the tallest.
pub fn global_mode_count(modes: &[Mode], global_rel_tol: f64) -> usize {
    let top = modes.iter().map(|m| m.height).fold(0.0, f64::max);
    modes.iter().filter(|m| m.height >= (1.0 - global_rel_tol) * top).count()
}

/// `φ₀''(0)` from `σ² φ₀''(0) = −(W(0) + λ₀) φ₀(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BimodalityCertificate {
    /// `φ₀''(0)/φ₀(0) = −(W(0) + λ₀)/σ²`; its sign is the sign of `φ₀''(0)`.
    pub curvature_ratio: f64,
    pub second_derivative: f64,
    /// Relative gap between the identity and the three-point difference at 0,
    /// `None` when `φ₀(0)` underflows.
    pub residual: Option<f64>,
    /// `φ₀''(0) > 0`: the centre is a local minimum, so there are at least two modes.
    pub certifies: bool,
}

pub fn bimodality_certificate(f: &dyn Fitness, basis: &SpectralBasis) -> Result<BimodalityCertificate> {
    if !f.is_even() {
        return Err(Error::Asymmetric);
    }
    let grid = &basis.grid;
    let c = grid
        .center()
        .ok_or_else(|| invalid("certificate needs a node at x = 0 (odd node count)"))?;
    let w0 = basis.potential[c];
    let lambda0 = basis.pairs[0].eigenvalue;
    let s2 = basis.sigma * basis.sigma;
    let curvature_ratio = -(w0 + lambda0) / s2;
    let phi = basis.ground_state();
    let second_derivative = curvature_ratio * phi[c];
    let h = grid.spacing();
    let residual = (phi[c] > 1e-280).then(|| {
        let fd = (phi[c - 1] - 2.0 * phi[c] + phi[c + 1]) / (h * h);
        (fd - second_derivative).abs() / second_derivative.abs().max(f64::MIN_POSITIVE)
    });
    Ok(BimodalityCertificate {
        curvature_ratio,
        second_derivative,
        residual,
        certifies: curvature_ratio > 0.0,
    })
}

/// Mode report for the ground state of `basis`.
pub fn analyze(f: &dyn Fitness, basis: &SpectralBasis, params: &ModeParams) -> Result<ModalityReport> {
    let grid = &basis.grid;
    let modes = count_modes(grid, basis.ground_state(), params.rel_tol, params.separation(grid, basis.sigma))?;
    let certificate = if f.is_even() && grid.center().is_some() {
        bimodality_certificate(f, basis)?
            .certifies
            .then_some(Certificate::SecondDerivativeAtZero)
    } else {
        None
    };
    Ok(ModalityReport {
        sigma: basis.sigma,
        mode_count: modes.len(),
        global_mode_count: global_mode_count(&modes, params.global_rel_tol),
        modes,
        certificate,
    })
}

/// Small-`σ` prediction: the number of global maxima of `W` sharing the
/// smallest `|W''|`. `tol` is the value tolerance for a maximum to count as global.
pub fn predicted_mode_count(f: &dyn Fitness, grid: &Grid, tol: f64) -> Result<usize> {
    if !f.is_even() {
        return Err(Error::Asymmetric);
    }
    let maxima = global_maxima(f, grid, tol);
    if maxima.len() < 2 {
        return Ok(1);
    }
    let flattest = maxima.iter().map(|m| m.curvature.abs()).fold(f64::INFINITY, f64::min);
    Ok(maxima
        .iter()
        .filter(|m| m.curvature.abs() <= flattest * (1.0 + CURVATURE_TOL))
        .count())
}

/// `φ₀(0) / max φ₀`
pub fn center_ratio(grid: &Grid, phi: &[f64]) -> Option<f64> {
    let c = grid.center()?;
    let top = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some(phi[c] / top)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSample {
    pub report: ModalityReport,
    /// `λ₀` for the fitness as given.
    pub lambda0: f64,
    /// `λ₀ + max W ≥ 0`
    pub lambda0_excess: f64,
    pub grid: Grid,
    pub ground_state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sigma: f64,
    pub outcome: Result<SweepSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Bracket after one bisection, `lower < upper`.
    pub lower: f64,
    pub upper: f64,
    pub count_below: usize,
    pub count_above: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub fitness_id: String,
    /// In the order of the requested sigmas.
    pub points: Vec<SweepPoint>,
    pub thresholds: Vec<Threshold>,
    /// `λ₀ + max W` is nondecreasing in `σ` over the successful points.
    pub lambda0_ordered: bool,
}

impl SweepResult {
    pub fn mode_counts(&self) -> Vec<Option<usize>> {
        self.points
            .iter()
            .map(|p| p.outcome.as_ref().ok().map(|s| s.report.mode_count))
            .collect()
    }
}

/// Runs independent per-`σ` jobs, possibly concurrently; output order must match input.
pub trait Mapper {
    fn map(&self, sigmas: &[f64], job: &(dyn Fn(f64) -> SweepPoint + Sync)) -> Vec<SweepPoint>;
}

pub struct Sequential;

impl Mapper for Sequential {
    fn map(&self, sigmas: &[f64], job: &(dyn Fn(f64) -> SweepPoint + Sync)) -> Vec<SweepPoint> {
        sigmas.iter().map(|&s| job(s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub modes: ModeParams,
    pub policy: GridPolicy,
    pub refine_thresholds: bool,
}

/// Ground-state analysis at a single `σ`.
pub fn sweep_point(f: &dyn Fitness, sigma: f64, params: &SweepParams) -> SweepPoint {
    let outcome = (|| {
        let grid = params.policy.grid_for(f, sigma, 1)?;
        let basis = build_basis(f, sigma, &grid, 1)?;
        let report = analyze(f, &basis, &params.modes)?;
        let lambda0 = basis.eigenvalue_original(0);
        let top = maximum_value(f, &grid);
        Ok(SweepSample {
            report,
            lambda0,
            lambda0_excess: lambda0 + top,
            grid,
            ground_state: basis.pairs[0].eigenfunction.clone(),
        })
    })();
    SweepPoint { sigma, outcome }
}

pub fn sigma_sweep(
    f: &dyn Fitness,
    fitness_id: &str,
    sigmas: &[f64],
    params: &SweepParams,
    mapper: &dyn Mapper,
) -> Result<SweepResult> {
    if sigmas.is_empty() {
        return Err(invalid("sweep needs at least one sigma"));
    }
    if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(invalid("sigmas must be positive and finite"));
    }
    let ascending = sigmas.windows(2).all(|w| w[0] < w[1]);
    let descending = sigmas.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return Err(invalid("sigmas must be strictly sorted"));
    }
    let job = |s: f64| sweep_point(f, s, params);
    let points = mapper.map(sigmas, &job);

    let mut brackets = Vec::new();
    for w in points.windows(2) {
        if let (Ok(a), Ok(b)) = (&w[0].outcome, &w[1].outcome) {
            if a.report.mode_count != b.report.mode_count {
                let (lo, hi, c_lo, c_hi) = if w[0].sigma < w[1].sigma {
                    (w[0].sigma, w[1].sigma, a.report.mode_count, b.report.mode_count)
                } else {
                    (w[1].sigma, w[0].sigma, b.report.mode_count, a.report.mode_count)
                };
                brackets.push(Threshold { lower: lo, upper: hi, count_below: c_lo, count_above: c_hi });
            }
        }
    }
    let thresholds = if params.refine_thresholds && !brackets.is_empty() {
        let mids: Vec<f64> = brackets.iter().map(|t| (t.lower * t.upper).sqrt()).collect();
        let probes = mapper.map(&mids, &job);
        brackets
            .into_iter()
            .zip(probes)
            .map(|(t, p)| match p.outcome {
                Ok(s) if s.report.mode_count == t.count_below => Threshold { lower: p.sigma, ..t },
                Ok(s) if s.report.mode_count == t.count_above => Threshold { upper: p.sigma, ..t },
                _ => t,
            })
            .collect()
    } else {
        brackets
    };

    let mut ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.outcome.as_ref().ok().map(|s| (p.sigma, s.lambda0_excess)))
        .collect();
    ok.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lambda0_ordered = ok.iter().all(|(_, e)| *e >= 0.0) && ok.windows(2).all(|w| w[0].1 <= w[1].1);

    Ok(SweepResult { fitness_id: String::from(fitness_id), points, thresholds, lambda0_ordered })
}
