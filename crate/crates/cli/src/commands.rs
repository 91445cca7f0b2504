//! `eigs`, `evolve` and `sweep`.

use crate::config::{InitialSpec, Method, Model, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{fmt, join, read_profile, OutputDir};
use crate::parallel::RayonMapper;
use replimut_core::branching::{self, ModeParams, SweepParams};
use replimut_core::evolution::{self, AdmissibleInitialData, CrankNicolson};
use replimut_core::spectral::{self, BasisOptions, Count, NormSlopes, SpectralBasis};
use replimut_core::{Fitness, Grid};
use serde_json::{json, Value};

/// Largest grid on which `k = "all"` is accepted; the dense eigenvectors take `n²` floats.
pub const ALL_NODE_LIMIT: usize = 8001;

pub struct Context {
    pub jobs: usize,
    pub quiet: bool,
}

impl Context {
    pub fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn mode_params(config: &RunConfig) -> ModeParams {
    ModeParams {
        rel_tol: config.modes.rel_tol,
        global_rel_tol: config.modes.global_rel_tol,
        min_separation: config.modes.min_separation,
    }
}

pub fn grid_json(grid: &Grid) -> Value {
    json!({ "half_length": grid.half_length(), "nodes": grid.n_nodes(), "spacing": grid.spacing() })
}

fn grid_for(model: &Model, config: &RunConfig, sigma: f64) -> Result<Grid> {
    let k = match config.count() {
        Count::Lowest(k) => k,
        Count::All => 1,
    };
    let grid = config.grid_policy()?.grid_for(&*model.fitness, sigma, k)?;
    if config.count() == Count::All && grid.n_nodes() > ALL_NODE_LIMIT {
        return Err(CliError::config(format!(
            "k = \"all\" needs a grid of at most {ALL_NODE_LIMIT} nodes, got {}",
            grid.n_nodes()
        )));
    }
    Ok(grid)
}

pub fn basis_for(model: &Model, config: &RunConfig, sigma: f64, grid: &Grid) -> Result<SpectralBasis> {
    Ok(spectral::build_basis_with(&*model.fitness, sigma, grid, config.count(), BasisOptions::default())?)
}

/// Asymptotic and norm-growth diagnostics, when the basis is long enough.
fn diagnostics(basis: &SpectralBasis) -> Value {
    let k = basis.len();
    let growth = match basis.growth {
        Some(g) if k >= 20 => g,
        _ => return Value::Null,
    };
    let (lo, hi) = (k / 2, k - 1);
    let asym = spectral::asymptotic_deviations(basis, lo, hi)
        .ok()
        .map(|d| d.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max));
    let slopes = spectral::norm_scaling_exponents(basis, (k / 5).max(1), hi).ok();
    let bounds = NormSlopes::bounds(growth.half_degree);
    json!({
        "half_degree": growth.half_degree,
        "asymptotic_max_rel_deviation": asym,
        "asymptotic_range": [lo, hi],
        "norm_slopes": slopes.map(|s| json!({ "l1": s.l1, "linf": s.linf, "weighted_l1": s.weighted_l1 })),
        "norm_slope_bounds": { "l1": bounds.l1, "linf": bounds.linf, "weighted_l1": bounds.weighted_l1 },
    })
}

pub fn eigs(config: &RunConfig, out: &OutputDir, ctx: &Context) -> Result<Value> {
    let model = crate::config::build_model(&config.fitness, config.sigma)?;
    let sigma = model.sigma(config)?;
    let grid = grid_for(&model, config, sigma)?;
    ctx.note(format!("eigs: {} at sigma = {sigma}, {} nodes on [-{}, {}]", model.id, grid.n_nodes(), grid.half_length(), grid.half_length()));
    let basis = basis_for(&model, config, sigma, &grid)?;

    out.csv(
        "eigs.csv",
        &["k", "lambda", "mass", "weighted_mass", "l1", "linf", "wl1"],
        basis.pairs.iter().map(|p| {
            vec![
                p.index.to_string(),
                fmt(p.eigenvalue + basis.shift),
                fmt(p.mass),
                fmt(p.weighted_mass),
                fmt(p.l1_norm),
                fmt(p.linf_norm),
                fmt(p.weighted_l1_norm),
            ]
        }),
    )?;
    let cols = config.eigenfunction_columns.min(basis.len());
    let mut header = vec!["x".to_string()];
    header.extend((0..cols).map(|k| format!("phi{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "eigenfunctions.csv",
        &header,
        (0..grid.n_nodes()).map(|j| {
            let mut row = vec![fmt(grid.node(j))];
            row.extend(basis.pairs[..cols].iter().map(|p| fmt(p.eigenfunction[j])));
            row
        }),
    )?;

    let summary = json!({
        "command": "eigs",
        "fitness": model.id,
        "sigma": sigma,
        "grid": grid_json(&grid),
        "gauge_shift": basis.shift,
        "eigenpairs": basis.len(),
        "complete": basis.complete,
        "symmetric": basis.symmetric,
        "eigenvalues": basis.eigenvalues().iter().map(|l| l + basis.shift).collect::<Vec<_>>(),
        "closed_form_lambda0": model.closed_form.as_ref().filter(|c| c.sigma == sigma).map(|c| c.lambda0),
        "diagnostics": diagnostics(&basis),
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

pub fn initial_data(spec: &InitialSpec, grid: &Grid) -> Result<AdmissibleInitialData> {
    Ok(match spec {
        InitialSpec::CenteredGaussian => AdmissibleInitialData::centered_gaussian(grid)?,
        InitialSpec::Gaussian { center } => AdmissibleInitialData::gaussian(grid, *center)?,
        InitialSpec::OffCenteredMixture { epsilon } => AdmissibleInitialData::off_centered_mixture(grid, *epsilon)?,
        InitialSpec::Csv { path } => {
            let (xs, us) = read_profile(std::path::Path::new(path))?;
            let tol = 1e-9 * grid.half_length();
            let matches = xs.len() == grid.n_nodes()
                && xs.iter().enumerate().all(|(j, x)| (x - grid.node(j)).abs() <= tol);
            if !matches {
                return Err(CliError::config(format!(
                    "{path}: x column must list the {} grid nodes of [-{}, {}]",
                    grid.n_nodes(),
                    grid.half_length(),
                    grid.half_length()
                )));
            }
            AdmissibleInitialData::from_samples(grid, us)?
        }
    })
}

struct Profiles {
    label: &'static str,
    u: Vec<Vec<f64>>,
}

fn modes_json(grid: &Grid, u: &[f64], params: &ModeParams, sigma: f64) -> Result<Value> {
    let modes = branching::count_modes(grid, u, params.rel_tol, params.separation(grid, sigma))?;
    Ok(json!({
        "count": modes.len(),
        "global_count": branching::global_mode_count(&modes, params.global_rel_tol),
        "locations": modes.iter().map(|m| m.location).collect::<Vec<_>>(),
        "heights": modes.iter().map(|m| m.height).collect::<Vec<_>>(),
    }))
}

pub fn evolve(config: &RunConfig, out: &OutputDir, ctx: &Context) -> Result<Value> {
    let model = crate::config::build_model(&config.fitness, config.sigma)?;
    let sigma = model.sigma(config)?;
    let f: &dyn Fitness = &*model.fitness;
    let grid = grid_for(&model, config, sigma)?;
    let times = config.times.clone().expect("validated");
    let u0 = initial_data(config.initial.as_ref().expect("validated"), &grid)?;
    ctx.note(format!("evolve: {} at sigma = {sigma}, {} nodes, {} times", model.id, grid.n_nodes(), times.len()));

    let want_series = config.method != Method::CrankNicolson;
    let want_cn = config.method != Method::Series;
    let basis = if want_series {
        basis_for(&model, config, sigma, &grid)?
    } else {
        spectral::build_basis_with(f, sigma, &grid, Count::Lowest(1), BasisOptions::default())?
    };
    let limit: Vec<f64> = {
        let p = &basis.pairs[0];
        p.eigenfunction.iter().map(|v| v / p.mass).collect()
    };
    let w_original: Vec<f64> = basis.potential.iter().map(|w| w - basis.shift).collect();
    let mut summary = json!({
        "command": "evolve",
        "fitness": model.id,
        "sigma": sigma,
        "grid": grid_json(&grid),
        "gauge_shift": basis.shift,
        "lambda0": basis.eigenvalue_original(0),
        "times": times,
    });

    let mut runs: Vec<Profiles> = Vec::new();
    if want_series {
        let state = evolution::project(&u0, &basis)?;
        let t_min = state.min_time();
        summary["series"] = json!({
            "eigenpairs": basis.len(),
            "complete": basis.complete,
            "captured_fraction": state.captured_fraction,
            "bessel_defect": state.bessel_defect,
            "min_time": t_min,
        });
        let u = times.iter().map(|&t| state.evaluate_u(t)).collect::<std::result::Result<Vec<_>, _>>()?;
        let late: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
        if late.len() >= 2 {
            summary["series"]["rate"] = match state.convergence_rate(&late) {
                Ok(r) => json!({ "rate": r.rate, "expected": r.expected, "k_star": r.k_star }),
                Err(e) => json!({ "unavailable": e.to_string() }),
            };
        }
        runs.push(Profiles { label: "series", u });
    }
    if want_cn {
        let t_end = *times.last().unwrap();
        let dt = config.dt.unwrap_or_else(|| evolution::default_time_step(t_end.max(1e-12)));
        let cn = CrankNicolson::new(f, sigma, &grid)?;
        let v = cn.run(&u0, &times, dt)?;
        let u = v.iter().map(|v| evolution::normalize_mass(&grid, v)).collect::<std::result::Result<Vec<_>, _>>()?;
        summary["crank_nicolson"] = json!({ "dt": dt });
        runs.push(Profiles { label: "crank_nicolson", u });
    }

    let primary = &runs[0];
    out.csv(
        "trajectory.csv",
        &["t", "x", "u"],
        times.iter().zip(&primary.u).flat_map(|(t, u)| {
            let g = &grid;
            u.iter().enumerate().map(move |(j, v)| vec![fmt(*t), fmt(g.node(j)), fmt(*v)])
        }),
    )?;
    if let Some(cn) = runs.get(1) {
        out.csv(
            "trajectory_cn.csv",
            &["t", "x", "u"],
            times.iter().zip(&cn.u).flat_map(|(t, u)| {
                let g = &grid;
                u.iter().enumerate().map(move |(j, v)| vec![fmt(*t), fmt(g.node(j)), fmt(*v)])
            }),
        )?;
        let diff: Vec<Value> = primary
            .u
            .iter()
            .zip(&cn.u)
            .map(|(a, b)| {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                json!({ "l1": grid.l1_norm(&d), "linf": replimut_core::grid::linf_norm(&d) })
            })
            .collect();
        summary["method_gap"] = Value::Array(diff);
    }
    out.csv(
        "summary.csv",
        &["t", "mass", "mean_fitness", "l1_gap", "l2_gap", "linf_gap"],
        times.iter().zip(&primary.u).map(|(t, u)| {
            let mean: f64 = grid.inner(&w_original, u);
            let g = evolution::gaps_to(&grid, u, &limit);
            vec![fmt(*t), fmt(grid.integrate(u)), fmt(mean), fmt(g.l1), fmt(g.l2), fmt(g.linf)]
        }),
    )?;
    summary["primary_method"] = json!(primary.label);
    summary["final_modes"] = modes_json(&grid, primary.u.last().unwrap(), &mode_params(config), sigma)?;
    out.json("summary.json", &summary)?;
    Ok(summary)
}

pub fn sweep(config: &RunConfig, out: &OutputDir, ctx: &Context) -> Result<Value> {
    let model = crate::config::build_model(&config.fitness, config.sigma)?;
    let f: &dyn Fitness = &*model.fitness;
    let sigmas = config.sigmas.clone().expect("validated");
    let params = SweepParams { modes: mode_params(config), policy: config.grid_policy()?, refine_thresholds: true };
    ctx.note(format!("sweep: {} over {} sigmas with {} job(s)", model.id, sigmas.len(), ctx.jobs));
    let mapper = RayonMapper::new(ctx.jobs);
    let result = branching::sigma_sweep(f, &model.id, &sigmas, &params, &mapper)?;

    out.csv(
        "sweep.csv",
        &["sigma", "lambda0", "mode_count", "global_mode_count", "mode_locations", "mode_heights"],
        result.points.iter().map(|p| match &p.outcome {
            Ok(s) => vec![
                fmt(p.sigma),
                fmt(s.lambda0),
                s.report.mode_count.to_string(),
                s.report.global_mode_count.to_string(),
                join(s.report.modes.iter().map(|m| m.location)),
                join(s.report.modes.iter().map(|m| m.height)),
            ],
            Err(_) => vec![fmt(p.sigma), String::new(), String::new(), String::new(), String::new(), String::new()],
        }),
    )?;
    let profiles = out.subdir("profiles")?;
    for (i, p) in result.points.iter().enumerate() {
        if let Ok(s) = &p.outcome {
            profiles.csv(
                &format!("phi0_{i:03}.csv"),
                &["x", "phi0"],
                s.ground_state.iter().enumerate().map(|(j, v)| vec![fmt(s.grid.node(j)), fmt(*v)]),
            )?;
        }
    }
    let predicted = result
        .points
        .iter()
        .find_map(|p| p.outcome.as_ref().ok())
        .and_then(|s| branching::predicted_mode_count(f, &s.grid, config.modes.global_rel_tol).ok());
    let summary = json!({
        "command": "sweep",
        "fitness": model.id,
        "sigmas": sigmas,
        "mode_counts": result.mode_counts(),
        "lambda0_ordered": result.lambda0_ordered,
        "predicted_small_sigma_mode_count": predicted,
        "thresholds": result.thresholds.iter().map(|t| json!({
            "lower": t.lower, "upper": t.upper, "count_below": t.count_below, "count_above": t.count_above,
        })).collect::<Vec<_>>(),
        "failures": result.points.iter().filter_map(|p| p.outcome.as_ref().err().map(|e| json!({
            "sigma": p.sigma, "error": e.to_string(),
        }))).collect::<Vec<_>>(),
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}
