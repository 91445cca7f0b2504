use replimut_core::catalog::{decic, double_well, harmonic, xie_wang_fu, zaslavski};
use replimut_core::fitness::Shifted;
use replimut_core::spectral::*;
use replimut_core::{Error, Grid, Polynomial};

fn quartic() -> Polynomial {
    Polynomial::monomial(-1.0, 4)
}

#[test]
fn harmonic_spectrum_with_richardson() {
    let h = harmonic(1.0).unwrap();
    let grid = Grid::with_max_spacing(12.0, 6e-3).unwrap();
    let lambda = richardson_eigenvalues(&h, 1.0, &grid, 21).unwrap();
    for (k, l) in lambda.iter().enumerate() {
        let exact = (2 * k + 1) as f64;
        assert!((l / exact - 1.0).abs() < 1e-6, "k={k} {l}");
    }
}

#[test]
fn harmonic_spectrum_scales_with_sigma() {
    for sigma in [0.5, 2.0] {
        let h = harmonic(sigma).unwrap();
        let grid = Grid::with_max_spacing(10.0 * sigma.sqrt(), 5e-3 * sigma.sqrt()).unwrap();
        let lambda = richardson_eigenvalues(&h, sigma, &grid, 5).unwrap();
        for (k, l) in lambda.iter().enumerate() {
            assert!((l / (sigma * (2 * k + 1) as f64) - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn second_order_convergence() {
    let grid = Grid::with_max_spacing(3.0, 0.02).unwrap();
    let (orders, _) = refinement_orders(&decic(), 1.0, &grid, 3).unwrap();
    for p in orders {
        assert!((1.8..=2.2).contains(&p), "{p}");
    }
}

#[test]
fn decic_ground_state() {
    let case = decic();
    let grid = Grid::new(3.0, 16001).unwrap();
    let basis = build_basis(&case, 1.0, &grid, 1).unwrap();
    assert!((basis.eigenvalue_original(0) - 0.375).abs() < 1e-6);
    let exact = case.normalized_ground_state(&grid);
    let err = basis.ground_state().iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-6, "{err}");
}

#[test]
fn zaslavski_ground_states() {
    for (b, c) in [(1.0, 0.0), (0.25, 0.0), (0.25, 0.1)] {
        let case = zaslavski(b, c).unwrap();
        let grid = Grid::new(8.0, 16001).unwrap();
        let basis = build_basis(&case, 1.0, &grid, 1).unwrap();
        let exact = -0.5 * (b * b + c * c).sqrt() - 0.25;
        assert!((basis.eigenvalue_original(0) - exact).abs() < 1e-6, "B={b} C={c}");
    }
}

#[test]
fn xie_wang_fu_ground_state() {
    let case = xie_wang_fu(1.0, 1.0, 0.5).unwrap();
    let grid = Grid::with_max_spacing(8.0, 4e-3).unwrap();
    let lambda = richardson_eigenvalues(&case, case.sigma, &grid, 1).unwrap();
    assert!((lambda[0] - case.lambda0).abs() < 1e-6, "{} vs {}", lambda[0], case.lambda0);
}

#[test]
fn eigenfunctions_are_orthonormal_with_alternating_parity() {
    let grid = Grid::new(4.0, 2001).unwrap();
    let basis = build_basis(&double_well(), 0.3, &grid, 12).unwrap();
    assert!(basis.symmetric);
    assert!(basis.orthonormality_error() < 1e-10);
    for k in 0..12 {
        assert!(basis.parity_error(k) < 1e-12);
    }
    let l = basis.eigenvalues();
    assert!(l.windows(2).all(|w| w[0] < w[1]));
    assert!(basis.ground_state().iter().skip(1).take(grid.n_nodes() - 2).all(|v| *v > 0.0));
}

#[test]
fn tunnelling_pairs_stay_separated_by_parity() {
    // Splitting is far below double precision here; sectors keep φ₀ even and positive.
    let grid = Grid::new(2.6, 20001).unwrap();
    let basis = build_basis(&double_well(), 1e-3, &grid, 2).unwrap();
    assert!(basis.parity_error(0) < 1e-12 && basis.parity_error(1) < 1e-12);
    assert!(basis.ground_state().iter().all(|v| *v >= 0.0));
    assert!((basis.pairs[1].eigenvalue - basis.pairs[0].eigenvalue).abs() < 1e-12);
}

/// `C = (πσ / I_s)^{2s/(s+1)}`, `I_s = ∫_{−1}^{1} √(1 − y^{2s}) dy`, from counting states.
fn wkb_constant(s: u32, sigma: f64) -> f64 {
    // y = sin θ removes the endpoint singularity of the integrand's derivative.
    let n = 20000;
    let h = std::f64::consts::FRAC_PI_2 / n as f64;
    let g = |t: f64| {
        let y = t.sin();
        (1.0 - y.powi(2 * s as i32)).sqrt() * t.cos()
    };
    let mut acc = g(0.0) + g(std::f64::consts::FRAC_PI_2);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    let integral = 2.0 * acc * h / 3.0;
    (std::f64::consts::PI * sigma / integral).powf(2.0 * s as f64 / (s as f64 + 1.0))
}

#[test]
fn asymptotic_constant_matches_state_counting() {
    for s in 1..=5 {
        for sigma in [0.3, 1.0] {
            let a = asymptotic_constant(s, sigma);
            let b = wkb_constant(s, sigma);
            assert!((a / b - 1.0).abs() < 1e-8, "s={s} {a} {b}");
        }
    }
}

#[test]
fn quartic_eigenvalue_asymptotics() {
    let grid = Grid::with_max_spacing(8.0, 5e-3).unwrap();
    let basis = build_basis(&quartic(), 1.0, &grid, 101).unwrap();
    let dev = asymptotic_deviations(&basis, 50, 100).unwrap();
    assert!(dev.iter().all(|(_, d)| d.abs() <= 0.05));
    assert!(dev.windows(2).all(|w| w[1].1.abs() < w[0].1.abs()));
    assert!(check_asymptotics(&basis, 50, 100).unwrap() <= 0.05);
}

#[test]
fn norm_slopes_respect_bounds() {
    for (p, l, h) in [(Polynomial::monomial(-1.0, 2), 20.0, 0.01), (quartic(), 8.0, 5e-3)] {
        let s = (p.degree() / 2) as u32;
        let grid = Grid::with_max_spacing(l, h).unwrap();
        let basis = build_basis(&p, 1.0, &grid, 101).unwrap();
        let slopes = norm_scaling_exponents(&basis, 20, 100).unwrap();
        let bounds = NormSlopes::bounds(s);
        assert!(slopes.l1 <= bounds.l1 + 0.05, "s={s} {slopes:?}");
        assert!(slopes.linf <= bounds.linf + 0.05, "s={s} {slopes:?}");
        assert!(slopes.weighted_l1 <= bounds.weighted_l1 + 0.05, "s={s} {slopes:?}");
    }
}

#[test]
fn interpolation_ratio_is_bounded_on_eigenfunctions() {
    let grid = Grid::with_max_spacing(8.0, 5e-3).unwrap();
    let basis = build_basis(&quartic(), 1.0, &grid, 30).unwrap();
    let ratios: Vec<f64> = basis
        .pairs
        .iter()
        .map(|p| interpolation_ratio(&grid, &p.eigenfunction, 2).unwrap())
        .collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max.is_finite() && max < 10.0, "{ratios:?}");
}

#[test]
fn eigenvalues_shift_with_the_fitness() {
    let grid = Grid::new(4.0, 801).unwrap();
    let p = double_well();
    let a = build_basis(&p, 0.5, &grid, 5).unwrap();
    let b = build_basis(&Shifted { inner: &p, shift: 5.0 }, 0.5, &grid, 5).unwrap();
    for k in 0..5 {
        assert!((a.pairs[k].eigenvalue - b.pairs[k].eigenvalue).abs() < 1e-10);
        assert!((a.eigenvalue_original(k) - 5.0 - b.eigenvalue_original(k)).abs() < 1e-10);
    }
}

#[test]
fn truncation_check_catches_small_domains() {
    let h = harmonic(1.0).unwrap();
    let small = Grid::new(3.0, 601).unwrap();
    assert!(matches!(build_basis(&h, 1.0, &small, 5), Err(Error::TruncationInadequate { .. })));
    let ok = Grid::new(9.0, 1801).unwrap();
    assert!(check_truncation(&h, 1.0, &ok, 5).is_ok());
}

#[test]
fn auto_grid_is_adequate() {
    let auto = AutoGrid::default();
    for (p, sigma) in [(double_well(), 0.1), (quartic(), 1.0)] {
        let grid = auto.grid_for(&p, sigma, 3).unwrap();
        assert!(check_truncation(&p, sigma, &grid, 3).is_ok());
        assert_eq!(grid.n_nodes() % 2, 1);
    }
    let h = harmonic(1.0).unwrap();
    let grid = auto.grid_for(&h, 1.0, 3).unwrap();
    let lambda = eigenvalues(&h, 1.0, &grid, 3).unwrap();
    for (k, l) in lambda.iter().enumerate() {
        assert!((l / (2 * k + 1) as f64 - 1.0).abs() < 1e-6);
    }
    let tight = AutoGrid { max_nodes: 101, ..AutoGrid::default() };
    assert!(matches!(tight.grid_for(&double_well(), 1e-3, 1), Err(Error::GridBudgetExceeded { .. })));
}

#[test]
fn lambda0_decreases_with_sigma() {
    let sigmas = [1.0, 0.3, 0.1, 0.03, 0.01];
    let policy = GridPolicy::Auto(AutoGrid::default());
    let out = lambda0_of_sigma(&double_well(), &sigmas, &policy).unwrap();
    let values: Vec<f64> = out.iter().map(|(_, v)| *v.as_ref().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    assert!(values.iter().all(|v| *v >= 0.0));
    assert!(values[4] <= 0.15);
    assert!(lambda0_of_sigma(&double_well(), &[0.1, 0.3], &policy).is_err());
}

#[test]
fn hamiltonian_assembly() {
    let grid = Grid::new(1.0, 5).unwrap();
    let m = assemble_hamiltonian(&Polynomial::monomial(-1.0, 2), 1.0, &grid).unwrap();
    assert_eq!(m.dim(), 3);
    // h = 0.5: 2σ²/h² = 8, −W(x) = x²
    assert_eq!(m.diag, vec![8.25, 8.0, 8.25]);
    assert_eq!(m.off, vec![-4.0, -4.0]);
    assert!(assemble_hamiltonian(&Polynomial::monomial(-1.0, 2), -1.0, &grid).is_err());
}
