//! Experiment drivers: integral identity, envelope fits and stability
//! sweeps.

use std::f64::consts::FRAC_PI_4;

use impedance_lab::domain::build_grid;
use impedance_lab::experiments::{
    default_data_pairs, envelope, fit_envelope, fourier_traces, integral_identity_check,
    min_over_alpha, random_smooth_traces, stability_sweep, PotentialPairFamily, StabilityRecord,
    FOURIER_KMAX, RANDOM_TRACES, S_MAX, S_MIN,
};
use impedance_lab::potential::{make_potential, PotentialSpec};
use impedance_lab::Error;

fn family() -> PotentialPairFamily {
    PotentialPairFamily {
        base: PotentialSpec::bump([0.45, 0.5], 1.0, 0.1, 0.15),
        perturbation: PotentialSpec::bump([0.55, 0.45], 1.0, 0.08, 0.15),
        eps: vec![0.5, 0.1, 0.02],
        c2_bound: 1e4,
    }
}

#[test]
fn trace_families_have_the_documented_sizes() {
    let (_, bnd) = build_grid(12).unwrap();
    assert_eq!(fourier_traces(&bnd, 3).len(), 7);
    assert_eq!(
        default_data_pairs(&bnd, 1).len(),
        2 * FOURIER_KMAX + 1 + RANDOM_TRACES
    );
    let a = random_smooth_traces(&bnd, 2, 9);
    assert_eq!(a, random_smooth_traces(&bnd, 2, 9));
    assert_ne!(a, random_smooth_traces(&bnd, 2, 10));
    // The constant mode is first.
    assert!(fourier_traces(&bnd, 1)[0]
        .values
        .iter()
        .all(|z| z.re == 1.0));
}

#[test]
fn envelope_vanishes_at_zero_and_increases() {
    assert_eq!(envelope(2.0, 0.5, 0.0), 0.0);
    let v: Vec<f64> = [1e-6, 1e-3, 1.0]
        .iter()
        .map(|&d| envelope(2.0, 0.5, d))
        .collect();
    assert!(v[0] < v[1] && v[1] < v[2]);
    assert!((envelope(2.0, 0.5, 1.0) - 2.0 / 4f64.ln().sqrt()).abs() < 1e-15);
}

#[test]
fn envelope_fit_recovers_an_exact_power() {
    let pts: Vec<(f64, f64)> = [1e-1, 1e-3, 1e-5, 1e-8]
        .iter()
        .map(|&d| (d, envelope(0.7, 0.4, d)))
        .collect();
    let (c, s, s_ls) = fit_envelope(&pts);
    assert!((s - 0.4).abs() < 1e-12 && (s_ls - 0.4).abs() < 1e-12);
    assert!((c - 0.7).abs() < 1e-12);
    // The constant makes every point admissible.
    let noisy: Vec<(f64, f64)> = pts
        .iter()
        .enumerate()
        .map(|(k, &(d, v))| (d, v * (1.0 + 0.1 * k as f64)))
        .collect();
    let (c, s, _) = fit_envelope(&noisy);
    assert!(noisy
        .iter()
        .all(|&(d, v)| v <= envelope(c, s, d) * (1.0 + 1e-12)));
    // Exponents outside the admissible range are clamped.
    let steep: Vec<(f64, f64)> = [1e-1, 1e-3]
        .iter()
        .map(|&d| (d, envelope(1.0, 3.0, d)))
        .collect();
    assert_eq!(fit_envelope(&steep).1, S_MAX);
    let flat: Vec<(f64, f64)> = [1e-1, 1e-3]
        .iter()
        .map(|&d| (d, envelope(1.0, -1.0, d)))
        .collect();
    assert_eq!(fit_envelope(&flat).1, S_MIN);
}

#[test]
fn integral_identity_is_trivial_for_equal_potentials() {
    let (g, bnd) = build_grid(16).unwrap();
    let v = make_potential(&family().base, g).unwrap();
    let r = integral_identity_check(&v, &v, -1.0, FRAC_PI_4, &default_data_pairs(&bnd, 3)).unwrap();
    assert!(r
        .rows
        .iter()
        .all(|row| row.lhs == [0.0, 0.0] && row.rhs[0].abs() < 1e-12));
}

#[test]
fn integral_identity_residual_decreases_for_distinct_potentials() {
    let f = family();
    let r: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let (g, bnd) = build_grid(n).unwrap();
            let v1 = make_potential(&f.base, g).unwrap();
            let v2 = make_potential(&f.member(1.0), g).unwrap();
            let pairs = fourier_traces(&bnd, 2)
                .into_iter()
                .map(|t| (t.clone(), t))
                .collect::<Vec<_>>();
            integral_identity_check(&v1, &v2, -1.0, 0.0, &pairs)
                .unwrap()
                .max_relative_residual
        })
        .collect();
    assert!(r[1] < r[0], "{r:?}");
}

#[test]
fn family_bound_violation_is_a_configuration_error() {
    let mut f = family();
    f.c2_bound = 1.0;
    assert!(matches!(f.validate(), Err(Error::Config(_))));
    assert!(matches!(
        stability_sweep(&f, 16, -1.0, &[0.0]),
        Err(Error::Config(_))
    ));
}

#[test]
fn stability_sweep_is_reproducible_and_monotone() {
    let f = family();
    let alphas = [0.0, FRAC_PI_4];
    let a = stability_sweep(&f, 16, -1.0, &alphas).unwrap();
    let b = stability_sweep(&f, 16, -1.0, &alphas).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.records.len(), alphas.len() * f.eps.len());
    assert!(a.skipped.is_empty());
    for fit in &a.fits {
        assert!(fit.monotone && fit.s > 0.0 && fit.s <= S_MAX);
    }
    for r in &a.records {
        assert!(r.sup_diff <= envelope(r.c_fit, r.s_fit, r.delta_alpha) * (1.0 + 1e-12));
    }
    let mins = min_over_alpha(&a.records);
    assert_eq!(mins.len(), f.eps.len());
    assert!(mins.windows(2).all(|w| w[0].eps > w[1].eps));
}

#[test]
fn min_over_alpha_breaks_ties_towards_the_smaller_angle() {
    let rec = |alpha: f64| StabilityRecord {
        eps: 0.1,
        alpha,
        delta_alpha: 1e-3,
        sup_diff: 0.1,
        c_fit: 1.0,
        s_fit: 0.5,
    };
    let forward = min_over_alpha(&[rec(0.2), rec(0.9), rec(0.5)]);
    let backward = min_over_alpha(&[rec(0.5), rec(0.9), rec(0.2)]);
    assert_eq!(forward, backward);
    assert_eq!(forward[0].alpha, 0.2);
}
