//! Banded LU and GMRES against dense oracles.

use impedance_lab::linalg::{gmres, BandLu};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random banded matrix (lower/upper bandwidth `kl`, `ku`) whose small
/// diagonal forces row interchanges.
fn banded(dim: usize, kl: usize, ku: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for r in 0..dim {
        for c in r.saturating_sub(kl)..(r + ku + 1).min(dim) {
            let mut v: f64 = rng.random_range(-1.0..1.0);
            if r == c {
                v *= 0.01;
            }
            out.push((r, c, v));
        }
    }
    out
}

fn dense(dim: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for &(r, c, v) in entries {
        a[(r, c)] += v;
    }
    a
}

#[test]
fn band_lu_matches_dense_solve_with_pivoting() {
    let dim = 60;
    let e = banded(dim, 4, 3, 11);
    let a = dense(dim, &e);
    let lu = BandLu::factor(dim, &e);
    assert!(!lu.is_singular());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let oracle = a.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
    let mut x = b.clone();
    lu.solve_in_place(&mut x);
    for k in 0..dim {
        assert!((x[k] - oracle[k]).abs() < 1e-9 * (1.0 + oracle[k].abs()));
    }
    let oracle_t = a
        .transpose()
        .lu()
        .solve(&DVector::from_vec(b.clone()))
        .unwrap();
    let mut y = b;
    lu.solve_transpose_in_place(&mut y);
    for k in 0..dim {
        assert!((y[k] - oracle_t[k]).abs() < 1e-9 * (1.0 + oracle_t[k].abs()));
    }
}

#[test]
fn band_lu_solves_complex_right_hand_sides() {
    let dim = 40;
    let e = banded(dim, 2, 2, 5);
    let lu = BandLu::factor(dim, &e);
    let b: Vec<Complex64> = (0..dim)
        .map(|k| Complex64::new(k as f64, 1.0 - k as f64))
        .collect();
    let mut x = b.clone();
    lu.solve_in_place(&mut x);
    let a = dense(dim, &e);
    for r in 0..dim {
        let ax: Complex64 = (0..dim).map(|c| x[c] * a[(r, c)]).sum();
        assert!((ax - b[r]).norm() < 1e-9 * (1.0 + b[r].norm()));
    }
}

#[test]
fn band_lu_flags_singular_matrices() {
    // Two identical rows.
    let e = vec![
        (0, 0, 1.0),
        (0, 1, 2.0),
        (1, 0, 1.0),
        (1, 1, 2.0),
        (2, 2, 1.0),
    ];
    let lu = BandLu::factor(3, &e);
    assert!(lu.is_singular());
    assert_eq!(lu.dim(), 3);
}

#[test]
fn gmres_solves_a_nonnormal_complex_system() {
    let dim = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<Complex64> = (0..dim * dim)
        .map(|k| {
            let off = Complex64::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
            if k / dim == k % dim {
                Complex64::new(2.0, 0.5) + off
            } else {
                off / (dim as f64).sqrt()
            }
        })
        .collect();
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        (0..dim)
            .map(|r| (0..dim).map(|c| a[r * dim + c] * x[c]).sum())
            .collect()
    };
    let b: Vec<Complex64> = (0..dim)
        .map(|k| Complex64::new(1.0, k as f64 * 0.1))
        .collect();
    let zero = vec![Complex64::new(0.0, 0.0); dim];
    let rep = gmres(apply, &b, &zero, 10, 1e-12, 500);
    assert!(rep.converged, "residual {}", rep.residual);
    let ax = apply(&rep.solution);
    let r: f64 = ax
        .iter()
        .zip(&b)
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(r < 1e-10);
}

#[test]
fn gmres_reports_non_convergence_within_budget() {
    let dim = 20;
    // A rotation-like operator that GMRES(1) cannot reduce.
    let apply =
        |x: &[Complex64]| -> Vec<Complex64> { (0..dim).map(|k| x[(k + 1) % dim]).collect() };
    let mut b = vec![Complex64::new(0.0, 0.0); dim];
    b[0] = Complex64::new(1.0, 0.0);
    let rep = gmres(apply, &b, &vec![Complex64::new(0.0, 0.0); dim], 1, 1e-12, 5);
    assert!(!rep.converged);
    assert!(rep.iterations <= 5);
}
