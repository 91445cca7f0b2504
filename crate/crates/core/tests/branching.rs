use replimut_core::branching::*;
use replimut_core::catalog::*;
use replimut_core::spectral::{build_basis, AutoGrid, GridPolicy};
use replimut_core::{Error, Grid, Polynomial};

fn auto() -> SweepParams {
    SweepParams { modes: ModeParams::default(), policy: GridPolicy::Auto(AutoGrid::default()), refine_thresholds: true }
}

fn log_sigmas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

fn counts(r: &SweepResult) -> Vec<usize> {
    r.mode_counts().into_iter().map(|c| c.expect("sweep point failed")).collect()
}

#[test]
fn gaussian_has_one_mode_at_zero() {
    let grid = Grid::new(5.0, 1001).unwrap();
    let phi = grid.sample(|x| (-x * x).exp());
    let modes = count_modes(&grid, &phi, 1e-3, 0.1).unwrap();
    assert_eq!(modes.len(), 1);
    assert!(modes[0].location.abs() < 1e-12);
}

#[test]
fn zaslavski_modality_follows_b() {
    let params = ModeParams::default();
    for (b, expected) in [(0.25, 2), (1.0, 1)] {
        let case = zaslavski(b, 0.0).unwrap();
        let grid = Grid::new(8.0, 4001).unwrap();
        let basis = build_basis(&case, 1.0, &grid, 1).unwrap();
        let report = analyze(&case, &basis, &params).unwrap();
        assert_eq!(report.mode_count, expected, "B={b}");
    }
}

#[test]
fn double_well_is_certified_bimodal_at_small_sigma() {
    let p = double_well();
    let sigma = 1e-3;
    let grid = AutoGrid::default().grid_for(&p, sigma, 1).unwrap();
    let basis = build_basis(&p, sigma, &grid, 1).unwrap();
    let cert = bimodality_certificate(&p, &basis).unwrap();
    assert!(cert.certifies);
    let report = analyze(&p, &basis, &ModeParams::default()).unwrap();
    assert_eq!(report.certificate, Some(Certificate::SecondDerivativeAtZero));
    assert_eq!(report.mode_count, 2);
    let root2 = 2f64.sqrt();
    assert!((report.modes[0].location + root2).abs() < 0.05);
    assert!((report.modes[1].location - root2).abs() < 0.05);
}

#[test]
fn certificate_residual_and_soundness() {
    let p = double_well();
    let grid = Grid::new(6.0, 6001).unwrap();
    for sigma in [0.3, 0.5, 1.0, 2.0] {
        let basis = build_basis(&p, sigma, &grid, 1).unwrap();
        let cert = bimodality_certificate(&p, &basis).unwrap();
        assert!(cert.residual.unwrap() <= 1e-6, "σ={sigma}");
        let modes = count_modes(&grid, basis.ground_state(), 0.5, ModeParams::default().separation(&grid, sigma)).unwrap();
        if cert.certifies {
            assert!(modes.len() >= 2, "σ={sigma}");
        }
    }
}

#[test]
fn harmonic_is_not_certified() {
    let h = harmonic(1.0).unwrap();
    let grid = Grid::new(10.0, 2001).unwrap();
    let basis = build_basis(&h, 1.0, &grid, 1).unwrap();
    let cert = bimodality_certificate(&h, &basis).unwrap();
    assert!(!cert.certifies && cert.second_derivative < 0.0);
    let z = zaslavski(0.25, 0.1).unwrap();
    let grid = Grid::new(8.0, 2001).unwrap();
    let basis = build_basis(&z, 1.0, &grid, 1).unwrap();
    assert!(matches!(bimodality_certificate(&z, &basis), Err(Error::Asymmetric)));
}

#[test]
fn predicted_counts() {
    let grid = Grid::new(3.0, 6001).unwrap();
    assert_eq!(predicted_mode_count(&double_well(), &grid, 1e-9).unwrap(), 2);
    assert_eq!(predicted_mode_count(&narrow_wide_narrow(), &grid, 1e-9).unwrap(), 1);
    assert_eq!(predicted_mode_count(&wide_narrow_wide(), &grid, 1e-9).unwrap(), 2);
    assert_eq!(predicted_mode_count(&Polynomial::monomial(-1.0, 2), &grid, 1e-9).unwrap(), 1);
    assert!(predicted_mode_count(&uni_modal_quartic(0.0), &grid, 1e-9).is_err());
}

#[test]
fn unique_maximum_stays_unimodal() {
    let r = sigma_sweep(&uni_modal_quartic(0.0), "uni_modal_quartic", &log_sigmas(-2.5, 0.5, 13), &auto(), &Sequential).unwrap();
    assert!(counts(&r).iter().all(|c| *c == 1));
    assert!(r.thresholds.is_empty());
}

#[test]
fn scaled_double_well_branches_as_sigma_decreases() {
    let sigmas: Vec<f64> = log_sigmas(-2.5, 0.5, 13).into_iter().rev().collect();
    let r = sigma_sweep(&scaled_double_well(), "scaled_double_well", &sigmas, &auto(), &Sequential).unwrap();
    let c = counts(&r);
    assert_eq!(c[0], 1);
    assert_eq!(*c.last().unwrap(), 2);
    assert_eq!(r.thresholds.len(), 1);
    let t = r.thresholds[0];
    assert_eq!((t.count_below, t.count_above), (2, 1));
    assert!(r.lambda0_ordered);
}

#[test]
fn narrow_wide_narrow_stays_unimodal() {
    let r = sigma_sweep(&narrow_wide_narrow(), "narrow_wide_narrow", &log_sigmas(-2.5, 0.5, 13), &auto(), &Sequential).unwrap();
    assert!(counts(&r).iter().all(|c| *c == 1));
}

#[test]
fn wide_narrow_wide_passes_through_three_modes() {
    let sigmas = log_sigmas(-2.5, 0.5, 25);
    let r = sigma_sweep(&wide_narrow_wide(), "wide_narrow_wide", &sigmas, &auto(), &Sequential).unwrap();
    let c = counts(&r);
    let first = |n: usize| c.iter().position(|x| *x == n).unwrap();
    assert!(first(2) < first(3) && first(3) < first(1));
    assert_eq!(c[0], 2);
    assert_eq!(*c.last().unwrap(), 1);
    for t in &r.thresholds {
        let i = sigmas.iter().position(|s| *s >= t.lower * (1.0 - 1e-12)).unwrap();
        assert!(t.lower < t.upper && t.upper <= sigmas[i + 1] * (1.0 + 1e-12));
    }
    assert!(r.lambda0_ordered);
}

#[test]
fn small_sigma_matches_prediction() {
    let grid = Grid::new(3.0, 6001).unwrap();
    for p in [double_well(), narrow_wide_narrow(), wide_narrow_wide()] {
        let predicted = predicted_mode_count(&p, &grid, 1e-9).unwrap();
        let point = sweep_point(&p, 3e-3, &auto());
        assert_eq!(point.outcome.unwrap().report.mode_count, predicted);
    }
}

#[test]
fn symmetric_modes_mirror_each_other() {
    for sigma in [0.01, 0.1, 0.3] {
        let s = sweep_point(&wide_narrow_wide(), sigma, &auto()).outcome.unwrap();
        let m = &s.report.modes;
        let h = s.grid.spacing();
        for (a, b) in m.iter().zip(m.iter().rev()) {
            assert!((a.location + b.location).abs() <= 2.0 * h);
        }
    }
}

#[test]
fn double_well_concentrates_away_from_zero() {
    let sigmas = [1.0, 0.3, 0.1, 0.03];
    let ratios: Vec<f64> = sigmas
        .iter()
        .map(|s| {
            let out = sweep_point(&double_well(), *s, &auto()).outcome.unwrap();
            center_ratio(&out.grid, &out.ground_state).unwrap()
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}

#[test]
fn single_sigma_sweep_and_bad_input() {
    let r = sigma_sweep(&double_well(), "dw", &[0.1], &auto(), &Sequential).unwrap();
    assert_eq!(r.points.len(), 1);
    assert!(r.thresholds.is_empty());
    assert!(sigma_sweep(&double_well(), "dw", &[], &auto(), &Sequential).is_err());
    assert!(sigma_sweep(&double_well(), "dw", &[0.1, 0.3, 0.2], &auto(), &Sequential).is_err());
    assert!(sigma_sweep(&double_well(), "dw", &[-0.1], &auto(), &Sequential).is_err());
}

#[test]
fn failures_are_recorded_per_point() {
    let params = SweepParams { policy: GridPolicy::Fixed(Grid::new(1.0, 201).unwrap()), ..auto() };
    let r = sigma_sweep(&double_well(), "dw", &[0.1, 0.2], &params, &Sequential).unwrap();
    assert!(r.points.iter().all(|p| p.outcome.is_err()));
}
