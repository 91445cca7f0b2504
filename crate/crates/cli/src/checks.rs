//! Module invariants evaluated on the configured problem.

use crate::commands::{initial_data, mode_params};
use crate::config::{InitialSpec, Model, RunConfig};
use crate::error::Result;
use replimut_core::branching;
use replimut_core::evolution::{self, AdmissibleInitialData, CrankNicolson};
use replimut_core::grid::linf_norm;
use replimut_core::spectral::{self, BasisOptions, Count, SpectralBasis};
use replimut_core::{Error, Fitness, Grid};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn bound(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
            detail: format!("{value:.3e} <= {threshold:.0e}"),
        }
    }

    fn failed(name: &str, detail: impl ToString) -> Check {
        Check { name: name.into(), passed: false, value: None, threshold: None, detail: detail.to_string() }
    }

    fn info(name: &str, value: f64, detail: impl ToString) -> Check {
        Check { name: name.into(), passed: true, value: Some(value), threshold: None, detail: detail.to_string() }
    }
}

/// Pairs checked for orthonormality; the check is quadratic in this number.
const ORTHO_PAIRS: usize = 100;

fn orthonormality(basis: &SpectralBasis) -> f64 {
    let k = basis.len().min(ORTHO_PAIRS);
    let g = &basis.grid;
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..=i {
            let ip = g.inner(&basis.pairs[i].eigenfunction, &basis.pairs[j].eigenfunction);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

fn spectral_checks(f: &dyn Fitness, basis: &SpectralBasis, out: &mut Vec<Check>) {
    let lambda = basis.eigenvalues();
    let ordered = lambda.windows(2).all(|w| w[0] < w[1]);
    out.push(Check {
        name: "eigenvalues_ordered".into(),
        passed: ordered && lambda[0] >= 1.0 - 1e-12,
        value: Some(lambda[0]),
        threshold: Some(1.0),
        detail: format!("strictly increasing: {ordered}, working-gauge lambda0 = {:.6}", lambda[0]),
    });
    out.push(Check::bound("orthonormality", orthonormality(basis), 1e-8));
    let energy = (0..basis.len())
        .map(|k| (basis.discrete_energy(k) / lambda[k] - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(Check::bound("rayleigh_quotient", energy, 1e-9));
    if basis.symmetric {
        let parity = (0..basis.len()).map(|k| basis.parity_error(k)).fold(0.0, f64::max);
        out.push(Check::bound("parity", parity, 1e-8));
    }
    let phi0 = basis.ground_state();
    let dip = -phi0.iter().cloned().fold(f64::INFINITY, f64::min) / linf_norm(phi0);
    out.push(Check::bound("ground_state_sign", dip.max(0.0), 1e-10));
    let gauge = spectral::gauge_shift(f, &basis.grid).map(|s| (s - basis.shift).abs()).unwrap_or(f64::INFINITY);
    out.push(Check::bound("gauge_shift", gauge, 0.0));
}

fn evolution_checks(f: &dyn Fitness, basis: &SpectralBasis, config: &RunConfig, out: &mut Vec<Check>) -> Result<()> {
    let grid: &Grid = &basis.grid;
    let spec = config.initial.clone().unwrap_or(InitialSpec::CenteredGaussian);
    let u0 = initial_data(&spec, grid)?;
    let state = match evolution::project(&u0, basis) {
        Ok(s) => s,
        Err(e) => {
            out.push(Check::failed("projection", e));
            return Ok(());
        }
    };
    out.push(Check::info("captured_fraction", state.captured_fraction, format!("{:.12}", state.captured_fraction)));
    let t_min = state.min_time();
    if !t_min.is_finite() {
        out.push(Check::failed("series_start_time", "tail bound never drops below tolerance"));
        return Ok(());
    }
    let mut times: Vec<f64> = [0.1, 1.0, 5.0].iter().map(|t: &f64| t.max(t_min)).collect();
    times.dedup();
    let mut mass = 0.0f64;
    let mut dip = 0.0f64;
    let mut us = Vec::new();
    for &t in &times {
        let u = state.evaluate_u(t)?;
        mass = mass.max((grid.integrate(&u) - 1.0).abs());
        dip = dip.max(-u.iter().cloned().fold(f64::INFINITY, f64::min));
        us.push(u);
    }
    out.push(Check::bound("mass_conservation", mass, 1e-8));
    out.push(Check::bound("positivity", dip.max(0.0), 1e-10));
    let cn = CrankNicolson::new(f, basis.sigma, grid)?;
    let v = cn.run(&u0, &times, config.dt.unwrap_or(1e-3))?;
    let mut gap = 0.0f64;
    for (v, u) in v.iter().zip(&us) {
        let u_cn = evolution::normalize_mass(grid, v)?;
        gap = gap.max(u_cn.iter().zip(u).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
    }
    let mut check = Check::bound("series_vs_crank_nicolson", gap, 1e-4);
    check.detail = format!("{} at t = {times:?}", check.detail);
    out.push(check);
    out.push(semigroup(basis, &us[0], times[0], &us[us.len() - 1], times[times.len() - 1]));
    Ok(())
}

/// Restarting from `u(t1)` and running for `t2 − t1` must land on `u(t2)`.
fn semigroup(basis: &SpectralBasis, u1: &[f64], t1: f64, u2: &[f64], t2: f64) -> Check {
    let restarted = AdmissibleInitialData::from_samples(&basis.grid, u1.to_vec())
        .and_then(|d| {
            let st = evolution::project(&d, basis)?;
            st.evaluate_u(t2 - t1)
        });
    match restarted {
        Ok(u) => Check::bound("semigroup", u.iter().zip(u2).fold(0.0, |m, (a, b)| m.max((a - b).abs())), 1e-8),
        Err(e) => Check::failed("semigroup", e),
    }
}

/// Invariant checks on the configured fitness, `σ` and grid.
pub fn invariant_checks(model: &Model, config: &RunConfig) -> Result<Vec<Check>> {
    let f: &dyn Fitness = &*model.fitness;
    let sigma = model.sigma(config)?;
    let count = config.count();
    let k = match count {
        Count::Lowest(k) => k,
        Count::All => 1,
    };
    let mut out = Vec::new();
    let grid = match config.grid_policy()?.grid_for(f, sigma, k) {
        Ok(g) => g,
        Err(e) => {
            out.push(Check::failed("grid", e));
            return Ok(out);
        }
    };
    match count {
        Count::Lowest(k) => out.push(match spectral::check_truncation(f, sigma, &grid, k) {
            Ok(()) => {
                let change = spectral::truncation_change(f, sigma, &grid, k)?.into_iter().fold(0.0, f64::max);
                Check::bound("truncation", change, spectral::TRUNCATION_TOL)
            }
            Err(Error::TruncationInadequate { index, relative_change }) => Check {
                name: "truncation".into(),
                passed: false,
                value: Some(relative_change),
                threshold: Some(spectral::TRUNCATION_TOL),
                detail: format!("eigenvalue {index} moved by {relative_change:.3e} when L was doubled"),
            },
            Err(e) => Check::failed("truncation", e),
        }),
        Count::All => out.push(Check::info("truncation", 0.0, "complete discrete basis")),
    }
    let basis = match spectral::build_basis_with(f, sigma, &grid, count, BasisOptions { validate_truncation: false }) {
        Ok(b) => b,
        Err(e) => {
            out.push(Check::failed("basis", e));
            return Ok(out);
        }
    };
    spectral_checks(f, &basis, &mut out);
    evolution_checks(f, &basis, config, &mut out)?;
    match branching::analyze(f, &basis, &mode_params(config)) {
        Ok(r) => {
            let locs: Vec<String> = r.modes.iter().map(|m| format!("{:.4}", m.location)).collect();
            out.push(Check::info(
                "modality",
                r.mode_count as f64,
                format!("{} mode(s) at [{}], {} global", r.mode_count, locs.join(", "), r.global_mode_count),
            ));
        }
        Err(e) => out.push(Check::failed("modality", e)),
    }
    Ok(out)
}
