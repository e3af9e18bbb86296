//! CGO transforms, the amplitude equation and the reconstruction pipeline.

use impedance_lab::cgo2d::{
    beurling_pi, born_mu, cauchy_t, cauchy_tbar, cauchy_tbar_direct, delta_h_boundary,
    delta_h_volume, delta_h_volume_from, fit_rate, mu_residual, mu_solve, phase_f, psi_tilde,
    reconstruct_point, CgoParams,
};
use impedance_lab::domain::{build_grid, BoundaryTrace, GridFunction, GridSpec};
use impedance_lab::forward::RobinProblem;
use impedance_lab::impedance::assemble_map;
use impedance_lab::potential::{make_potential, PotentialSpec};
use impedance_lab::Error;
use num_complex::Complex64;

fn bump(g: GridSpec, amp: f64) -> GridFunction {
    make_potential(&PotentialSpec::bump([0.5, 0.5], amp, 0.1, 0.15), g).unwrap()
}

fn centre() -> Complex64 {
    Complex64::new(0.5, 0.5)
}

/// A smooth bump supported well inside the square.
fn smooth(g: GridSpec) -> GridFunction {
    GridFunction::from_real_fn(g, |x, y| {
        let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
        if r2 < 0.09 {
            (1.0 - r2 / 0.09).powi(4)
        } else {
            0.0
        }
    })
}

#[test]
fn phase_is_unimodular() {
    let (g, _) = build_grid(24).unwrap();
    let f = phase_f(g, Complex64::new(0.3, 0.6), Complex64::new(7.0, 2.0));
    assert!(f.values.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
}

#[test]
fn zero_potential_gives_unit_amplitude() {
    let (g, _) = build_grid(16).unwrap();
    let zero = GridFunction::from_real_fn(g, |_, _| 0.0);
    let params = CgoParams::new(centre(), 10.0);
    let sol = mu_solve(&zero, &params).unwrap();
    assert!(sol.converged);
    assert!(sol.mu.values.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    assert_eq!(
        delta_h_volume(&zero, &zero, &params).unwrap(),
        Complex64::new(0.0, 0.0)
    );
}

#[test]
fn amplitude_solve_reaches_tolerance() {
    let (g, _) = build_grid(24).unwrap();
    let v = bump(g, 20.0);
    let params = CgoParams::new(Complex64::new(0.45, 0.55), 8.0);
    let sol = mu_solve(&v, &params).unwrap();
    assert!(sol.converged);
    assert!(mu_residual(&v, &sol.mu, &params) <= 1e-9);
}

#[test]
fn born_approximation_is_second_order_in_amplitude() {
    let (g, _) = build_grid(24).unwrap();
    let params = CgoParams::new(centre(), 6.0);
    let gap = |eps: f64| {
        let v = bump(g, eps);
        let sol = mu_solve(&v, &params).unwrap();
        sol.mu.sub(&born_mu(&v, &params)).sup_norm()
    };
    let (a, b) = (gap(2.0), gap(1.0));
    assert!(b > 0.0);
    let ratio = a / b;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

/// Central differences `∂_z̄ w` and `∂_z w` at an interior node.
fn wirtinger(w: &GridFunction, i: usize, j: usize) -> (Complex64, Complex64) {
    let g = w.grid;
    let at = |a: usize, b: usize| w.values[g.node_at(a, b).unwrap()];
    let dx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * g.h);
    let dy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * g.h);
    let iu = Complex64::new(0.0, 1.0);
    ((dx + iu * dy) / 2.0, (dx - iu * dy) / 2.0)
}

#[test]
fn cauchy_transform_inverts_dbar_and_beurling_is_its_dz() {
    let errs: Vec<(f64, f64)> = [32, 64]
        .iter()
        .map(|&n| {
            let (g, _) = build_grid(n).unwrap();
            let u = smooth(g);
            let t = cauchy_t(&u);
            let pi = beurling_pi(&u);
            let (mut e1, mut e2) = (0.0f64, 0.0f64);
            for k in 0..g.interior_count() {
                let (i, j) = g.lattice(k);
                if g.depth(k) < 2 {
                    continue;
                }
                let (dbar, dz) = wirtinger(&t, i, j);
                e1 = e1.max((dbar - u.values[k]).norm());
                e2 = e2.max((dz - pi.values[k]).norm());
            }
            (e1, e2)
        })
        .collect();
    assert!(errs[1].0 < 0.05 && errs[1].1 < 0.1, "{errs:?}");
    assert!(errs[1].0 < errs[0].0 && errs[1].1 < errs[0].1, "{errs:?}");
}

#[test]
fn factorized_and_direct_phased_transforms_agree() {
    let (g, _) = build_grid(20).unwrap();
    let u = GridFunction::from_fn(g, |x, y| Complex64::new(x * y, x - y));
    let z0 = Complex64::new(0.4, 0.55);
    let lambda = Complex64::new(9.0, 0.0);
    let a = cauchy_tbar(&u, z0, lambda);
    let b = cauchy_tbar_direct(&u, z0, lambda);
    assert!(a.sub(&b).sup_norm() < 1e-12 * a.sup_norm());
}

#[test]
fn expansion_point_must_be_inside() {
    let (g, _) = build_grid(16).unwrap();
    let v = bump(g, 1.0);
    let near = CgoParams::new(Complex64::new(2.0 * g.h, 0.5), 5.0);
    assert!(matches!(mu_solve(&v, &near), Err(Error::Config(_))));
}

#[test]
fn small_frequency_is_outside_the_asymptotic_regime() {
    let (g, _) = build_grid(16).unwrap();
    let v = bump(g, 1.0);
    let params = CgoParams {
        lambda_min: 4.0,
        ..CgoParams::new(centre(), 2.0)
    };
    let err = mu_solve(&v, &params).unwrap_err();
    assert!(matches!(err, Error::AsymptoticRegime(_)));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn conjugate_solution_needs_a_real_potential() {
    let (g, _) = build_grid(16).unwrap();
    let v = GridFunction::from_fn(g, |x, _| Complex64::new(0.0, x * (1.0 - x)));
    let params = CgoParams::new(centre(), 3.0);
    let sol = mu_solve(&v, &params).unwrap();
    assert!(matches!(
        psi_tilde(&sol, &params),
        Err(Error::Unsupported(_))
    ));
    assert!(matches!(
        delta_h_volume(&v, &v, &params),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn rate_fit_recovers_a_synthetic_exponent() {
    let pts: Vec<(f64, f64)> = [10.0f64, 20.0, 40.0, 80.0]
        .iter()
        .map(|&l| (l, 3.0 * l.powf(-0.75) * l.ln().powi(2)))
        .collect();
    assert!((fit_rate(&pts) - 0.75).abs() < 1e-12);
    assert_eq!(fit_rate(&[(10.0, 0.0), (20.0, 0.0)]), f64::INFINITY);
}

#[test]
fn volume_formula_with_zero_background_is_a_weighted_sum() {
    let (g, _) = build_grid(20).unwrap();
    let zero = GridFunction::from_real_fn(g, |_, _| 0.0);
    let v2 = bump(g, 3.0);
    let params = CgoParams::new(Complex64::new(0.45, 0.5), 7.0);
    let mu1 = mu_solve(&zero, &params.negated()).unwrap();
    let mu2 = mu_solve(&v2, &params).unwrap();
    let f = phase_f(g, params.z0, params.lambda);
    let direct: Complex64 = (0..g.interior_count())
        .map(|k| f.values[k] * v2.values[k] * mu2.mu.values[k])
        .sum::<Complex64>()
        * (g.h * g.h);
    let dh = delta_h_volume_from(&mu1, &mu2, &zero, &v2, &params);
    assert!((dh - direct).norm() < 1e-14 * direct.norm().max(1.0));
    let (re, _) = reconstruct_point(dh, params.lambda);
    assert!(re.is_finite());
}

#[test]
fn boundary_formula_rejects_mismatched_inputs() {
    let (g, _) = build_grid(16).unwrap();
    let v = bump(g, 1.0);
    let m1 = assemble_map(&RobinProblem::new(&v, -1.0, 0.3).unwrap()).unwrap();
    let m2 = assemble_map(&RobinProblem::new(&v, -1.0, 0.6).unwrap()).unwrap();
    let t = BoundaryTrace::zeros(g.boundary_count());
    assert!(matches!(
        delta_h_boundary(&m1, &m2, (&t, &t)),
        Err(Error::Mismatch(_))
    ));
    let short = BoundaryTrace::zeros(3);
    assert!(matches!(
        delta_h_boundary(&m1, &m1, (&short, &t)),
        Err(Error::Mismatch(_))
    ));
    assert_eq!(
        delta_h_boundary(&m1, &m1, (&t, &t)).unwrap(),
        Complex64::new(0.0, 0.0)
    );
}
