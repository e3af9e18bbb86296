//! Oracles shared by several test targets.

#![allow(dead_code)]

use impedance_lab::domain::build_grid;
use nalgebra::DMatrix;

/// Dense discrete Dirichlet-to-Neumann matrix `Λ = N_B + N_I (−L_II⁻¹ L_IB)`
/// for the potential `v` (interior nodal values), built from the interior
/// five-point rows and the one-sided normal derivative.
pub fn dtn_matrix(n: usize, v: &[f64], energy: f64) -> DMatrix<f64> {
    let (g, bnd) = build_grid(n).unwrap();
    let ni = g.interior_count();
    let m = g.boundary_count();
    let h = g.h;
    let mut lii = DMatrix::<f64>::zeros(ni, ni);
    let mut lib = DMatrix::<f64>::zeros(ni, m);
    for j in 1..=n {
        for i in 1..=n {
            let r = g.interior_index(i, j);
            lii[(r, r)] = 4.0 / (h * h) + v[r] - energy;
            for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                let c = g.node_at(a, b).unwrap();
                if c < ni {
                    lii[(r, c)] -= 1.0 / (h * h);
                } else {
                    lib[(r, c - ni)] -= 1.0 / (h * h);
                }
            }
        }
    }
    let mut nb = DMatrix::<f64>::zeros(m, m);
    let mut nint = DMatrix::<f64>::zeros(m, ni);
    for (k, b) in bnd.nodes.iter().enumerate() {
        let (i, j) = g.lattice(b.node);
        let (dx, dy) = (-b.normal.0 as i64, -b.normal.1 as i64);
        let at = |d: i64| {
            g.node_at((i as i64 + d * dx) as usize, (j as i64 + d * dy) as usize)
                .unwrap()
        };
        nb[(k, k)] = 3.0 / (2.0 * h);
        nint[(k, at(1))] = -4.0 / (2.0 * h);
        nint[(k, at(2))] = 1.0 / (2.0 * h);
    }
    let lift = -lii.lu().solve(&lib).unwrap();
    nb + nint * lift
}

/// Dense oracle for the exceptional angles: the discrete Robin problem is
/// singular exactly when `cot α` is a real eigenvalue of the discrete
/// Dirichlet-to-Neumann matrix.
pub fn exceptional_angles_oracle(n: usize, energy: f64) -> Vec<f64> {
    let dtn = dtn_matrix(n, &vec![0.0; n * n], energy);
    let schur =
        nalgebra::linalg::Schur::try_new(dtn, 1e-14, 1_000_000).expect("Schur iteration converges");
    let mut out: Vec<f64> = schur
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
        .map(|z| 1f64.atan2(z.re))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Smallest singular value of a dense row-major matrix.
pub fn dense_sigma_min(dim: usize, a: &[f64]) -> f64 {
    let m = DMatrix::from_row_slice(dim, dim, a);
    m.singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
