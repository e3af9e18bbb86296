//! Discrete Robin problem: assembly, solves and spectral diagnostics.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use impedance_lab::domain::{
    build_grid, normal_derivative, robin_combine, trace, BoundaryTrace, GridFunction,
};
use impedance_lab::forward::{
    assemble_operator, eig_sweep, golden_section, robin_solve, sigma_min, uniform_alpha_grid,
    RobinProblem, RobinSystem, NEAR_SINGULAR_RTOL,
};
use impedance_lab::potential::{make_potential, PotentialSpec};
use impedance_lab::Error;
use num_complex::Complex64;

mod common;

fn zero(n: usize) -> GridFunction {
    GridFunction::zeros(build_grid(n).unwrap().0)
}

/// `ψ = eˣ cos(y)` solves `−Δψ = 0·ψ`; `ψ = eˣ` solves `−Δψ = −ψ`.
fn exact(x: f64, y: f64, energy: f64) -> f64 {
    if energy == 0.0 {
        x.exp() * y.cos()
    } else {
        x.exp()
    }
}

fn robin_data_of_exact(n: usize, energy: f64, alpha: f64) -> (GridFunction, BoundaryTrace) {
    let (g, bnd) = build_grid(n).unwrap();
    let psi = GridFunction::from_real_fn(g, |x, y| exact(x, y, energy));
    // Exact continuum normal derivative.
    let dn = BoundaryTrace::from_fn(&bnd, |b| {
        let e = exact(b.x, b.y, energy);
        let (gx, gy) = if energy == 0.0 {
            (e, -b.x.exp() * b.y.sin())
        } else {
            (e, 0.0)
        };
        Complex64::new(gx * b.normal.0 + gy * b.normal.1, 0.0)
    });
    let f = robin_combine(&trace(&psi), &dn, alpha);
    (psi, f)
}

#[test]
fn solves_converge_at_second_order_to_exact_solutions() {
    for (energy, alpha) in [
        (-1.0, 0.0),
        (-1.0, FRAC_PI_4),
        (0.0, 1.0),
        (-1.0, FRAC_PI_2),
    ] {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let (psi, f) = robin_data_of_exact(n, energy, alpha);
                let p = RobinProblem::new(&zero(n), energy, alpha).unwrap();
                let rep = robin_solve(&p, &f).unwrap();
                assert!(rep.residual < 1e-12);
                assert!(!rep.near_singular);
                rep.solution.sub(&psi).sup_norm()
            })
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 1.7, "E={energy} α={alpha}: errors {errs:?}");
    }
}

#[test]
fn robin_rows_reproduce_the_data() {
    let n = 12;
    let (_, bnd) = build_grid(n).unwrap();
    let v = make_potential(
        &PotentialSpec::bump([0.5, 0.5], 2.0, 0.1, 0.2),
        build_grid(n).unwrap().0,
    )
    .unwrap();
    let alpha = 0.7;
    let f = BoundaryTrace::from_fn(&bnd, |b| Complex64::new((3.0 * b.s).sin(), 0.0));
    let rep = robin_solve(&RobinProblem::new(&v, -1.0, alpha).unwrap(), &f).unwrap();
    let got = robin_combine(
        &trace(&rep.solution),
        &normal_derivative(&rep.solution),
        alpha,
    );
    for (a, b) in got.values.iter().zip(&f.values) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn sigma_min_matches_dense_svd() {
    let n = 10;
    let v = make_potential(
        &PotentialSpec::bump([0.4, 0.6], 3.0, 0.1, 0.2),
        build_grid(n).unwrap().0,
    )
    .unwrap();
    for (energy, alpha) in [
        (-1.0, 0.0),
        (-1.0, FRAC_PI_4),
        (5.0, 1.2),
        (-3.0, FRAC_PI_2),
    ] {
        let p = RobinProblem::new(&v, energy, alpha).unwrap();
        let sys = assemble_operator(&p);
        let oracle = common::dense_sigma_min(sys.dim, &sys.to_dense());
        let est = sigma_min(&p).unwrap();
        assert!(
            (est - oracle).abs() <= 1e-6 * oracle,
            "E={energy} α={alpha}: {est} vs {oracle}"
        );
    }
}

#[test]
fn neumann_problem_at_zero_energy_is_rejected() {
    let p = RobinProblem::new(&zero(16), 0.0, FRAC_PI_2).unwrap();
    let err = RobinSystem::new(&p).unwrap_err();
    assert!(matches!(err, Error::Spectral { .. }));
    assert_eq!(err.exit_code(), 3);
    // The unchecked factorization still reports the tiny singular value.
    let sys = RobinSystem::factor_unchecked(&p).unwrap();
    assert!(sys.near_singular());
    assert!(sys.sigma_min < NEAR_SINGULAR_RTOL * sys.norm_inf);
}

#[test]
fn complex_potentials_are_unsupported() {
    let (g, _) = build_grid(8).unwrap();
    let v = GridFunction::from_fn(g, |_, _| Complex64::new(0.0, 1.0));
    assert!(matches!(
        RobinProblem::new(&v, -1.0, 0.0),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn solve_rejects_data_of_wrong_length() {
    let sys = RobinSystem::new(&RobinProblem::new(&zero(8), -1.0, 0.0).unwrap()).unwrap();
    assert!(matches!(
        sys.solve_trace(&BoundaryTrace::zeros(5)),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn golden_section_finds_a_parabola_minimum() {
    let (x, fx) = golden_section(|x| Ok((x - 0.3).powi(2) + 1.0), 0.0, 1.0, 1e-8).unwrap();
    assert!((x - 0.3).abs() < 1e-7);
    assert!((fx - 1.0).abs() < 1e-12);
}

#[test]
fn uniform_alpha_grid_covers_half_period() {
    let g = uniform_alpha_grid(8);
    assert_eq!(g.len(), 8);
    assert_eq!(g[0], 0.0);
    assert!((g[7] - 7.0 * PI / 8.0).abs() < 1e-15);
}

#[test]
fn eig_sweep_flags_only_oracle_crossings() {
    let n = 16;
    let oracle = common::exceptional_angles_oracle(n, -1.0);
    let sweep = eig_sweep(&zero(n), -1.0, &uniform_alpha_grid(64), 1e-3).unwrap();
    assert_eq!(sweep.samples.len(), 64);
    assert!(!sweep.flagged.is_empty());
    for f in &sweep.flagged {
        let d = oracle
            .iter()
            .map(|&o| {
                let d = (f.alpha - o).rem_euclid(PI);
                d.min(PI - d)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-4, "flagged {} is {d} from the oracle", f.alpha);
        assert!(f.sigma_min < 1e-3);
    }
}

#[test]
fn eig_sweep_on_a_partial_grid_skips_end_points() {
    // A non-periodic grid away from any crossing flags nothing.
    let sweep = eig_sweep(&zero(16), -1.0, &[1.4, 1.45, 1.5, 1.55], 1e-3).unwrap();
    assert!(sweep.flagged.is_empty());
}

#[test]
fn sigma_min_is_reproducible() {
    let p = RobinProblem::new(&zero(16), -1.0, 0.9).unwrap();
    assert_eq!(sigma_min(&p).unwrap(), sigma_min(&p).unwrap());
}
