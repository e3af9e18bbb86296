//! Robin Green functions `G_α(x, y, E)`, solving `(Δ − v + E) G = δ_y`
//! with the homogeneous condition `cos α G − sin α ∂_ν G = 0`, and the
//! identities they satisfy: symmetry, the kernel relation with the
//! impedance map and the resolvent difference.
//!
//! Discretely a column for the interior source `y` solves `A G = −δ_y`
//! with `δ_y = 1/h²` at `y`, where `A` is the assembled matrix of
//! `−Δ + v − E`.
//!
//! The discrete Green function is exactly symmetric for source/target
//! pairs that are both at least two lattice steps from the boundary: the
//! one-sided boundary stencil only couples the boundary node to its first
//! two inward neighbours, which makes the first interior ring the only
//! place where the discrete adjoint differs from the operator.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{BoundaryTrace, GridFunction, GridSpec};
use crate::error::{Error, Result};
use crate::forward::{RobinProblem, RobinSystem};
use crate::impedance::{BoundaryOperator, OperatorKind, CORNER_EXCLUSION};

/// Minimum physical separation `|x − y|` for kernel-relation comparisons;
/// the kernels have a logarithmic singularity on the diagonal.
pub const DIAGONAL_EXCLUSION: f64 = 0.05;

/// Green columns for a set of interior sources.
#[derive(Clone, Debug)]
pub struct GreenColumns {
    pub grid: GridSpec,
    pub alpha: f64,
    pub energy: f64,
    /// Potential the columns were computed with.
    pub v: Vec<f64>,
    /// Source nodes (global indices of interior nodes).
    pub sources: Vec<usize>,
    /// `columns[k]` is `G(·, sources[k])`.
    pub columns: Vec<GridFunction>,
}

impl GreenColumns {
    /// `G(x, y)` for a target node `x` and the `k`-th source.
    pub fn value(&self, x: usize, k: usize) -> Complex64 {
        self.columns[k].values[x]
    }

    /// Position of a node in the source list.
    pub fn source_position(&self, node: usize) -> Option<usize> {
        self.sources.iter().position(|&s| s == node)
    }
}

/// Solve for the Green columns of the given interior sources.
pub fn green_columns(p: &RobinProblem, sources: &[usize]) -> Result<GreenColumns> {
    let sys = RobinSystem::new(p)?;
    green_columns_with(&sys, sources)
}

/// [`green_columns`] with an existing factorization.
pub fn green_columns_with(sys: &RobinSystem, sources: &[usize]) -> Result<GreenColumns> {
    let p = &sys.problem;
    let g = p.grid;
    if let Some(&bad) = sources.iter().find(|&&s| !g.is_interior(s)) {
        return Err(Error::Config(format!(
            "Green sources must be interior nodes, got node {bad}"
        )));
    }
    let m = g.boundary_count();
    let columns: Vec<GridFunction> = sources
        .par_iter()
        .map(|&s| {
            let mut src = vec![Complex64::new(0.0, 0.0); g.node_count()];
            src[s] = Complex64::new(-1.0 / (g.h * g.h), 0.0);
            let b = sys.rhs(&BoundaryTrace::zeros(m), Some(&src));
            GridFunction {
                grid: g,
                values: sys.solve_raw(&b),
            }
        })
        .collect();
    Ok(GreenColumns {
        grid: g,
        alpha: p.alpha,
        energy: p.energy,
        v: p.v.clone(),
        sources: sources.to_vec(),
        columns,
    })
}

/// Draw `count` distinct interior nodes with lattice depth at least
/// `min_depth`, deterministically from `seed`.
pub fn sample_interior_sources(
    grid: GridSpec,
    count: usize,
    min_depth: usize,
    seed: u64,
) -> Vec<usize> {
    let eligible: Vec<usize> = (0..grid.interior_count())
        .filter(|&k| grid.depth(k) >= min_depth)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count.min(eligible.len()) {
        let k = eligible[rng.random_range(0..eligible.len())];
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// `max |G(x, y) − G(y, x)|` over all pairs of sources.
pub fn green_symmetry_residual(g: &GreenColumns) -> f64 {
    let mut r: f64 = 0.0;
    for (a, &sa) in g.sources.iter().enumerate() {
        for (b, &sb) in g.sources.iter().enumerate() {
            r = r.max((g.value(sb, a) - g.value(sa, b)).norm());
        }
    }
    r
}

/// Green function on `∂D × ∂D`: entry `(i, j)` is `G(x_i, y_j)` for
/// boundary nodes `x_i`, `y_j`.
///
/// A boundary source is not representable by an interior delta, so each
/// boundary column is extrapolated in the source variable from the
/// interior sources at depths `2h` and `3h` along the inward normal of
/// `y_j`, using the local model `G(d) = G₀(1 − d cot α) + c d²`, which
/// builds in the Robin condition `∂_ν G = cot α G` in the source variable.
/// (Depth-one sources are avoided: the first interior ring is where the
/// discrete operator is not self-adjoint.)
pub fn boundary_green(p: &RobinProblem) -> Result<BoundaryOperator> {
    let sys = RobinSystem::new(p)?;
    boundary_green_with(&sys)
}

/// [`boundary_green`] with an existing factorization.
pub fn boundary_green_with(sys: &RobinSystem) -> Result<BoundaryOperator> {
    let p = &sys.problem;
    let g = p.grid;
    let h = g.h;
    let m = g.boundary_count();
    let mut sources = Vec::with_capacity(2 * m);
    for b in &sys.bnd.nodes {
        let (i, j) = g.lattice(b.node);
        let (dx, dy) = (-b.normal.0 as i64, -b.normal.1 as i64);
        for depth in [2i64, 3] {
            let a = (i as i64 + depth * dx) as usize;
            let c = (j as i64 + depth * dy) as usize;
            sources.push(g.node_at(a, c).expect("inward nodes exist"));
        }
    }
    let cols = green_columns_with(sys, &sources)?;
    let cot = if p.alpha.sin() == 0.0 {
        f64::INFINITY
    } else {
        p.alpha.cos() / p.alpha.sin()
    };
    let (da, db) = (2.0 * h, 3.0 * h);
    let denom = db * db * (1.0 - da * cot) - da * da * (1.0 - db * cot);
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for jb in 0..m {
        for ib in 0..m {
            let x = g.boundary_node(ib);
            let ga = cols.value(x, 2 * jb);
            let gb = cols.value(x, 2 * jb + 1);
            data[ib * m + jb] = (ga * (db * db) - gb * (da * da)) / denom;
        }
    }
    Ok(BoundaryOperator {
        grid: g,
        alpha: p.alpha,
        energy: p.energy,
        kind: OperatorKind::KernelWithWeights,
        data,
    })
}

/// Residual of the kernel relation `M_α = G_α / sin²α − cot α δ_∂D`:
/// `max |K_ij/h − (G_ij/sin²α − cot α δ_ij/h)|` over boundary pairs at
/// least [`CORNER_EXCLUSION`] from every corner and at least
/// [`DIAGONAL_EXCLUSION`] apart.
pub fn kernel_relation_residual(
    m: &BoundaryOperator,
    gb: &BoundaryOperator,
    alpha: f64,
) -> Result<f64> {
    let s = alpha.sin();
    if s.abs() < 1e-12 {
        return Err(Error::Hypothesis(
            "the kernel relation requires sin(alpha) != 0".into(),
        ));
    }
    if m.grid != gb.grid || m.alpha != alpha || gb.alpha != alpha || m.energy != gb.energy {
        return Err(Error::Mismatch(
            "map and boundary Green table must share grid, alpha and energy".into(),
        ));
    }
    let (_, bnd) = crate::domain::build_grid(m.grid.n)?;
    let h = m.grid.h;
    let cot = alpha.cos() / s;
    let d = m.dim();
    let keep: Vec<usize> = (0..d)
        .filter(|&k| bnd.corner_distance(k) >= CORNER_EXCLUSION)
        .collect();
    let mut r: f64 = 0.0;
    for &i in &keep {
        for &j in &keep {
            let (bi, bj) = (&bnd.nodes[i], &bnd.nodes[j]);
            let dist = ((bi.x - bj.x).powi(2) + (bi.y - bj.y).powi(2)).sqrt();
            if dist < DIAGONAL_EXCLUSION {
                continue;
            }
            let delta = if i == j { 1.0 / h } else { 0.0 };
            let rhs = gb.data[i * d + j] / (s * s) - cot * delta;
            r = r.max((m.data[i * d + j] / h - rhs).norm());
        }
    }
    Ok(r)
}

/// Residual of the resolvent identity
/// `G₁(x,y) − G₂(x,y) = Σ_ξ (v₁−v₂)(ξ) G₁(x,ξ) G₂(ξ,y) h²`, maximized over
/// ordered pairs of distinct sources. `G(x, ξ)` is read from the column of
/// source `x` (symmetry), so sources should be at depth ≥ 2.
pub fn resolvent_difference_residual(g1: &GreenColumns, g2: &GreenColumns) -> Result<f64> {
    if g1.grid != g2.grid
        || g1.alpha != g2.alpha
        || g1.energy != g2.energy
        || g1.sources != g2.sources
    {
        return Err(Error::Mismatch(
            "Green tables must share grid, alpha, energy and sources".into(),
        ));
    }
    let grid = g1.grid;
    let h2 = grid.h * grid.h;
    let dv: Vec<f64> = g1.v.iter().zip(&g2.v).map(|(a, b)| a - b).collect();
    let mut r: f64 = 0.0;
    for (a, &x) in g1.sources.iter().enumerate() {
        for (b, _) in g1.sources.iter().enumerate() {
            if a == b {
                continue;
            }
            let lhs = g1.value(x, b) - g2.value(x, b);
            let vol: Complex64 = (0..grid.interior_count())
                .filter(|&xi| dv[xi] != 0.0)
                .map(|xi| g1.value(xi, a) * g2.value(xi, b) * dv[xi])
                .sum::<Complex64>()
                * h2;
            r = r.max((lhs - vol).norm());
        }
    }
    Ok(r)
}

/// Green function with discrete boundary sources: column `j` is the trace
/// of the solution whose boundary rows carry the data `e_j / h` (a unit
/// boundary delta with the circuit weight `h`) and whose interior rows are
/// homogeneous.
pub fn boundary_source_green_with(sys: &RobinSystem) -> BoundaryOperator {
    let p = &sys.problem;
    let g = p.grid;
    let m = g.boundary_count();
    let columns: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut f = BoundaryTrace::zeros(m);
            f.values[j] = Complex64::new(1.0 / g.h, 0.0);
            let psi = sys.solve_trace(&f).expect("data has circuit length");
            crate::domain::trace(&psi).values
        })
        .collect();
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..m {
            data[i * m + j] = col[i];
        }
    }
    BoundaryOperator {
        grid: g,
        alpha: p.alpha,
        energy: p.energy,
        kind: OperatorKind::KernelWithWeights,
        data,
    }
}

/// Largest entrywise gap `|K_ij/h − G_ij|` between a Neumann-to-Dirichlet
/// matrix (`α = π/2`) and a boundary Green table.
pub fn ntd_green_gap(m: &BoundaryOperator, gb: &BoundaryOperator) -> Result<f64> {
    if (m.alpha - FRAC_PI_2).abs() > 1e-15 || m.grid != gb.grid {
        return Err(Error::Mismatch(
            "NtD comparison needs alpha = pi/2 and a common grid".into(),
        ));
    }
    let h = m.grid.h;
    Ok(m.data
        .iter()
        .zip(&gb.data)
        .map(|(k, g)| (k / h - g).norm())
        .fold(0.0, f64::max))
}
