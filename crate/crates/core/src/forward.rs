//! Discrete Robin boundary-value problem for `−Δ + v − E` and detection of
//! energies on (or near) the Robin spectrum.
//!
//! Unknowns are all grid nodes. Interior rows carry the 5-point stencil
//! `(4ψ_i − Σ neighbours)/h² + (v_i − E) ψ_i`. Boundary rows carry the Robin
//! condition `cos α ψ_b − sin α (3ψ_b − 4ψ₁ + ψ₂)/(2h) = f_b`, multiplied by
//! the row weight `1/h` so that boundary and interior rows have comparable
//! scale. Row weighting does not change any solution; it only makes the
//! smallest singular value of the assembled matrix a meaningful measure of
//! distance to the spectrum on the same footing as the interior operator.
//!
//! Factorization uses a banded LU over the natural full-grid ordering
//! (rows of the closed square minus the corners), whose bandwidth is
//! `2n + 3`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    build_grid, robin_trace, BoundaryIndex, BoundaryTrace, GridFunction, GridSpec,
};
use crate::error::{Error, Result};
use crate::linalg::BandLu;

/// Spectral tolerance: the system is near-singular when
/// `σ_min < NEAR_SINGULAR_RTOL · ‖A‖∞`.
pub const NEAR_SINGULAR_RTOL: f64 = 1e-6;

/// Seed of the start vector of the σ_min iteration.
const SIGMA_SEED: u64 = 0x5eed_0001;
/// Relative stopping tolerance of the σ_min iteration.
const SIGMA_TOL: f64 = 1e-10;
/// Step budget of the σ_min iteration.
const SIGMA_BUDGET: usize = 500;

/// A discrete Robin problem: potential, energy and boundary angle.
#[derive(Clone, Debug)]
pub struct RobinProblem {
    pub grid: GridSpec,
    /// Real potential values per node.
    pub v: Vec<f64>,
    pub energy: f64,
    pub alpha: f64,
}

impl RobinProblem {
    /// Build a problem from a (real-valued) grid function.
    pub fn new(v: &GridFunction, energy: f64, alpha: f64) -> Result<Self> {
        if !v.is_real() {
            return Err(Error::Unsupported(
                "complex-valued potentials are not supported".into(),
            ));
        }
        Ok(RobinProblem {
            grid: v.grid,
            v: v.real_parts(),
            energy,
            alpha,
        })
    }

    /// The same problem at another boundary angle.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        RobinProblem {
            alpha,
            ..self.clone()
        }
    }

    /// The potential as a grid function.
    pub fn potential(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

/// Assembled sparse system in node ordering.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub dim: usize,
    /// `(row, col, value)` triplets, one per structural nonzero, in
    /// deterministic row order.
    pub entries: Vec<(usize, usize, f64)>,
    /// Multiplier applied to each row (1 for interior rows, `1/h` for
    /// boundary rows); the right-hand side must be scaled by it too.
    pub row_weight: Vec<f64>,
}

impl SparseSystem {
    /// Induced ∞-norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.dim];
        for &(r, _, v) in &self.entries {
            rows[r] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Dense copy (row-major), for small-grid inspection and oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.dim * self.dim];
        for &(r, c, v) in &self.entries {
            a[r * self.dim + c] += v;
        }
        a
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += x[c] * v;
        }
        y
    }
}

/// Assemble the row-weighted linear system of a Robin problem.
pub fn assemble_operator(p: &RobinProblem) -> SparseSystem {
    let g = p.grid;
    let (n, h) = (g.n, g.h);
    let ih2 = 1.0 / (h * h);
    let mut entries = Vec::with_capacity(5 * g.interior_count() + 3 * g.boundary_count());
    for j in 1..=n {
        for i in 1..=n {
            let r = g.interior_index(i, j);
            entries.push((r, r, 4.0 * ih2 + (p.v[r] - p.energy)));
            for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                let c = g.node_at(a, b).expect("neighbours of interior nodes exist");
                entries.push((r, c, -ih2));
            }
        }
    }
    let (ca, sa) = (p.alpha.cos(), p.alpha.sin());
    let wb = 1.0 / h;
    let (_, bnd) = build_grid(n).expect("problem grid is valid");
    for b in &bnd.nodes {
        let r = b.node;
        entries.push((r, r, wb * (ca - sa * 3.0 / (2.0 * h))));
        if sa != 0.0 {
            entries.push((r, b.inward[0], wb * (sa * 4.0 / (2.0 * h))));
            entries.push((r, b.inward[1], wb * (-sa / (2.0 * h))));
        }
    }
    let mut row_weight = vec![1.0; g.node_count()];
    for w in row_weight.iter_mut().skip(g.interior_count()) {
        *w = wb;
    }
    SparseSystem {
        dim: g.node_count(),
        entries,
        row_weight,
    }
}

/// Position of each node in the band ordering (full grid, row-major,
/// corners removed).
fn band_position(g: &GridSpec, node: usize) -> usize {
    let n = g.n;
    let (i, j) = g.lattice(node);
    if j == 0 {
        i - 1
    } else if j <= n {
        j * (n + 2) + i - 2
    } else {
        (n + 1) * (n + 2) + i - 3
    }
}

/// A factorized Robin system with its spectral diagnostics, reusable for
/// any number of right-hand sides (read-only after construction, so it can
/// be shared across threads).
#[derive(Debug)]
pub struct RobinSystem {
    pub problem: RobinProblem,
    pub bnd: BoundaryIndex,
    system: SparseSystem,
    lu: BandLu,
    /// `perm[node]` = band position of the node.
    perm: Vec<usize>,
    /// Estimated smallest singular value of the assembled matrix.
    pub sigma_min: f64,
    /// `‖A‖∞` of the assembled matrix.
    pub norm_inf: f64,
}

impl RobinSystem {
    /// Assemble and factorize without checking the spectral condition.
    pub fn factor_unchecked(p: &RobinProblem) -> Result<Self> {
        let g = p.grid;
        let (_, bnd) = build_grid(g.n)?;
        let system = assemble_operator(p);
        let perm: Vec<usize> = (0..g.node_count()).map(|k| band_position(&g, k)).collect();
        let permuted: Vec<(usize, usize, f64)> = system
            .entries
            .iter()
            .map(|&(r, c, v)| (perm[r], perm[c], v))
            .collect();
        let lu = BandLu::factor(system.dim, &permuted);
        let norm_inf = system.norm_inf();
        let mut sys = RobinSystem {
            problem: p.clone(),
            bnd,
            system,
            lu,
            perm,
            sigma_min: f64::NAN,
            norm_inf,
        };
        sys.sigma_min = sys.estimate_sigma_min()?;
        Ok(sys)
    }

    /// Assemble, factorize and enforce the spectral condition: errors with
    /// [`Error::Spectral`] when `σ_min < 10⁻⁶ ‖A‖∞`.
    pub fn new(p: &RobinProblem) -> Result<Self> {
        let sys = Self::factor_unchecked(p)?;
        let threshold = NEAR_SINGULAR_RTOL * sys.norm_inf;
        if !(sys.sigma_min >= threshold) {
            return Err(Error::Spectral {
                sigma_min: sys.sigma_min,
                threshold,
                context: format!(
                    "E = {} is on the Robin spectrum at alpha = {}",
                    p.energy, p.alpha
                ),
            });
        }
        Ok(sys)
    }

    /// Whether σ_min is below the near-singularity tolerance.
    pub fn near_singular(&self) -> bool {
        !(self.sigma_min >= NEAR_SINGULAR_RTOL * self.norm_inf)
    }

    /// The assembled (unpermuted) system.
    pub fn system(&self) -> &SparseSystem {
        &self.system
    }

    /// Solve `A x = b` for a node-ordered right-hand side (already row
    /// weighted).
    pub fn solve_raw(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); b.len()];
        for (k, &v) in b.iter().enumerate() {
            y[self.perm[k]] = v;
        }
        self.lu.solve_in_place(&mut y);
        self.perm.iter().map(|&p| y[p]).collect()
    }

    /// Solve `Aᵀ x = b` for a node-ordered right-hand side.
    pub fn solve_transpose_raw(&self, b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; b.len()];
        for (k, &v) in b.iter().enumerate() {
            y[self.perm[k]] = v;
        }
        self.lu.solve_transpose_in_place(&mut y);
        self.perm.iter().map(|&p| y[p]).collect()
    }

    fn solve_real(&self, b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; b.len()];
        for (k, &v) in b.iter().enumerate() {
            y[self.perm[k]] = v;
        }
        self.lu.solve_in_place(&mut y);
        self.perm.iter().map(|&p| y[p]).collect()
    }

    /// Right-hand side for Robin data `f` and interior source `src`.
    pub fn rhs(&self, f: &BoundaryTrace, interior: Option<&[Complex64]>) -> Vec<Complex64> {
        let g = self.problem.grid;
        let mut b = vec![Complex64::new(0.0, 0.0); g.node_count()];
        if let Some(src) = interior {
            b[..g.interior_count()].copy_from_slice(&src[..g.interior_count()]);
        }
        for (k, v) in f.values.iter().enumerate() {
            let node = g.boundary_node(k);
            b[node] = v * self.system.row_weight[node];
        }
        b
    }

    /// Solve the homogeneous equation with Robin data `[ψ]_α = f`.
    pub fn solve_trace(&self, f: &BoundaryTrace) -> Result<GridFunction> {
        let g = self.problem.grid;
        if f.len() != g.boundary_count() {
            return Err(Error::Mismatch(format!(
                "Robin data has {} values, circuit has {}",
                f.len(),
                g.boundary_count()
            )));
        }
        let x = self.solve_raw(&self.rhs(f, None));
        GridFunction::from_values(g, x)
    }

    /// Relative residual `‖A x − b‖∞ / max(‖b‖∞, ‖A‖∞ ‖x‖∞)`.
    pub fn relative_residual(&self, x: &[Complex64], b: &[Complex64]) -> f64 {
        let ax = self.system.apply(x);
        let r = ax
            .iter()
            .zip(b)
            .map(|(a, c)| (a - c).norm())
            .fold(0.0, f64::max);
        let bn = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let xn = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let scale = bn.max(self.norm_inf * xn);
        if scale == 0.0 {
            0.0
        } else {
            r / scale
        }
    }

    /// Lanczos iteration on `(AᵀA)⁻¹` (one solve with `Aᵀ` and one with
    /// `A` per step, full reorthogonalization) from a seeded start vector.
    /// The largest Ritz value `θ` increases monotonically towards
    /// `1/σ_min²`, so the returned `1/√θ` decreases monotonically to
    /// σ_min; iteration stops when it changes by less than the relative
    /// tolerance.
    fn estimate_sigma_min(&self) -> Result<f64> {
        if self.lu.is_singular() {
            return Ok(0.0);
        }
        let dim = self.system.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(SIGMA_SEED);
        let mut q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        normalize(&mut q);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut diag: Vec<f64> = Vec::new();
        let mut off: Vec<f64> = Vec::new();
        let mut prev = f64::INFINITY;
        for _ in 0..SIGMA_BUDGET.min(dim) {
            let mut w = self.solve_real(&self.solve_transpose_raw(&q));
            if w.iter().any(|x| !x.is_finite()) {
                return Ok(0.0);
            }
            let a = dot(&w, &q);
            basis.push(q);
            // Full reorthogonalization (twice, for numerical safety).
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            diag.push(a);
            let theta = largest_tridiagonal_eigenvalue(&diag, &off);
            let est = if theta > 0.0 { 1.0 / theta.sqrt() } else { 0.0 };
            if !est.is_finite() || est < 1e-300 {
                return Ok(0.0);
            }
            let beta = norm(&w);
            if (prev - est).abs() <= SIGMA_TOL * est || beta <= 1e-14 * theta {
                return Ok(est);
            }
            prev = est;
            off.push(beta);
            w.iter_mut().for_each(|x| *x /= beta);
            q = w;
        }
        Err(Error::Convergence(format!(
            "Lanczos iteration for sigma_min did not converge in {SIGMA_BUDGET} steps"
        )))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `d` and off-diagonal `e`, by Sturm-sequence bisection.
fn largest_tridiagonal_eigenvalue(d: &[f64], e: &[f64]) -> f64 {
    let k = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < k { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    // Number of eigenvalues strictly below x.
    let count_below = |x: f64| {
        let mut c = 0;
        let mut p = d[0] - x;
        if p < 0.0 {
            c += 1;
        }
        for i in 1..k {
            let denom = if p == 0.0 {
                f64::EPSILON * (1.0 + x.abs())
            } else {
                p
            };
            p = d[i] - x - e[i - 1] * e[i - 1] / denom;
            if p < 0.0 {
                c += 1;
            }
        }
        c
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) < k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) {
    let n = norm(x);
    x.iter_mut().for_each(|v| *v /= n);
}

/// Result of a forward solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: GridFunction,
    /// Relative residual of the linear system.
    pub residual: f64,
    /// Smallest-singular-value estimate of the assembled matrix.
    pub sigma_min: f64,
    /// Whether σ_min is below the near-singularity tolerance (never true
    /// for a returned report; such systems produce an error instead).
    pub near_singular: bool,
}

/// Solve the Robin problem with data `[ψ]_α = f`.
pub fn robin_solve(p: &RobinProblem, f: &BoundaryTrace) -> Result<SolveReport> {
    let sys = RobinSystem::new(p)?;
    robin_solve_with(&sys, f)
}

/// [`robin_solve`] with an existing factorization.
pub fn robin_solve_with(sys: &RobinSystem, f: &BoundaryTrace) -> Result<SolveReport> {
    let solution = sys.solve_trace(f)?;
    let b = sys.rhs(f, None);
    let residual = sys.relative_residual(&solution.values, &b);
    Ok(SolveReport {
        solution,
        residual,
        sigma_min: sys.sigma_min,
        near_singular: sys.near_singular(),
    })
}

/// Smallest singular value of the assembled (row-weighted) matrix.
pub fn sigma_min(p: &RobinProblem) -> Result<f64> {
    Ok(RobinSystem::factor_unchecked(p)?.sigma_min)
}

/// Default flagging threshold of the eigen-sweep.
pub const SWEEP_FLAG_TOL: f64 = 1e-3;
/// Final bracket width of the golden-section refinement.
pub const SWEEP_REFINE_WIDTH: f64 = 1e-6;

/// One refined exceptional-angle candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlaggedAlpha {
    /// Refined angle in `[0, π)`.
    pub alpha: f64,
    /// σ_min at the refined angle.
    pub sigma_min: f64,
    /// Grid index of the local minimum that seeded the refinement.
    pub grid_index: usize,
}

/// Output of an eigen-sweep.
#[derive(Clone, Debug)]
pub struct EigSweep {
    /// `(α, σ_min)` on the input grid.
    pub samples: Vec<(f64, f64)>,
    /// Refined local minima with σ_min below the flagging threshold.
    pub flagged: Vec<FlaggedAlpha>,
}

/// Sweep σ_min over a grid of angles and flag exceptional α.
///
/// Strict local minima of σ_min on the grid (taken cyclically when the grid
/// covers a full period, since the problem at `α + π` has the same matrix
/// up to sign) are refined by golden-section search inside the bracket
/// formed by their grid neighbours, to width 10⁻⁶. A refined minimum is
/// flagged when its σ_min is below `flag_tol`.
pub fn eig_sweep(
    v: &GridFunction,
    energy: f64,
    alpha_grid: &[f64],
    flag_tol: f64,
) -> Result<EigSweep> {
    use rayon::prelude::*;
    let base = RobinProblem::new(v, energy, 0.0)?;
    let samples: Vec<(f64, f64)> = alpha_grid
        .par_iter()
        .map(|&a| sigma_min(&base.with_alpha(a)).map(|s| (a, s)))
        .collect::<Result<_>>()?;
    let m = samples.len();
    let periodic = m >= 3 && {
        let span = alpha_grid[m - 1] - alpha_grid[0];
        let step = span / (m - 1) as f64;
        (span + step - std::f64::consts::PI).abs() < 1e-9
    };
    let mut minima = Vec::new();
    for k in 0..m {
        let (prev, next) = if periodic {
            ((k + m - 1) % m, (k + 1) % m)
        } else if k == 0 || k + 1 == m {
            continue;
        } else {
            (k - 1, k + 1)
        };
        let s = samples[k].1;
        if s < samples[prev].1 && s <= samples[next].1 {
            let mut lo = samples[prev].0;
            let mut hi = samples[next].0;
            if periodic && k == 0 {
                lo -= std::f64::consts::PI;
            }
            if periodic && k + 1 == m {
                hi += std::f64::consts::PI;
            }
            minima.push((k, lo, hi));
        }
    }
    let refined: Vec<FlaggedAlpha> = minima
        .par_iter()
        .map(|&(k, lo, hi)| {
            let (a, s) = golden_section(
                |a| sigma_min(&base.with_alpha(a)),
                lo,
                hi,
                SWEEP_REFINE_WIDTH,
            )?;
            Ok(FlaggedAlpha {
                alpha: a.rem_euclid(std::f64::consts::PI),
                sigma_min: s,
                grid_index: k,
            })
        })
        .collect::<Result<_>>()?;
    let flagged = refined
        .into_iter()
        .filter(|f| f.sigma_min < flag_tol)
        .collect();
    Ok(EigSweep { samples, flagged })
}

/// Golden-section minimization of `f` on `[lo, hi]` down to bracket width
/// `width`; returns the best point seen and its value.
pub fn golden_section(
    f: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    width: f64,
) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Uniform grid of `m` angles `k π / m`, `k = 0..m`, covering `[0, π)`.
pub fn uniform_alpha_grid(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| k as f64 * std::f64::consts::PI / m as f64)
        .collect()
}

/// Convenience: Robin trace of a solved field for the problem's angle.
pub fn solution_trace(p: &RobinProblem, psi: &GridFunction) -> BoundaryTrace {
    robin_trace(psi, p.alpha)
}
