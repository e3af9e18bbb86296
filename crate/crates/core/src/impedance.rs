//! The impedance map `M̂_α(E)`: `[ψ]_α ↦ [ψ]_{α−π/2}` on solutions of
//! `−Δψ + (v − E)ψ = 0`, assembled as a dense matrix acting on nodal
//! vectors of the boundary circuit, together with the algebraic identities
//! it satisfies.
//!
//! Conventions:
//!
//! * `(M f)_i = Σ_j K_ij f_j` with `K` the assembled matrix; the continuous
//!   kernel is recovered away from the corners as `M_α(x_i, y_j) ≈ K_ij / h`.
//! * The operator norm is the induced ∞-norm on nodal vectors.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::domain::{
    normal_derivative_with, robin_combine, trace, BoundaryIndex, BoundaryTrace, GridFunction,
    GridSpec,
};
use crate::error::{Error, Result};
use crate::forward::{RobinProblem, RobinSystem};

/// Default corner-exclusion radius for kernel-level comparisons: the
/// square's corners violate boundary smoothness, and the discrete kernel
/// carries O(1) corner artifacts there.
pub const CORNER_EXCLUSION: f64 = 0.2;

/// What a [`BoundaryOperator`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// An impedance map `M̂_α(E)`.
    Map,
    /// A difference of two maps.
    Difference,
    /// A kernel table with quadrature weights folded in (Green function on
    /// `∂D × ∂D`).
    KernelWithWeights,
}

/// Dense complex matrix over the boundary circuit with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryOperator {
    pub grid: GridSpec,
    pub alpha: f64,
    pub energy: f64,
    pub kind: OperatorKind,
    /// Row-major `m × m` entries, `m = 4n`.
    pub data: Vec<Complex64>,
}

impl BoundaryOperator {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.grid.boundary_count()
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim() + j]
    }

    /// The identity operator.
    pub fn identity(grid: GridSpec, alpha: f64, energy: f64) -> Self {
        let m = grid.boundary_count();
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            data[i * m + i] = Complex64::new(1.0, 0.0);
        }
        BoundaryOperator {
            grid,
            alpha,
            energy,
            kind: OperatorKind::Map,
            data,
        }
    }

    /// Transposed matrix (metadata kept).
    pub fn transpose(&self) -> Self {
        let m = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for j in 0..m {
                data[j * m + i] = self.data[i * m + j];
            }
        }
        BoundaryOperator {
            data,
            ..self.clone()
        }
    }

    /// `a·self + b·I`.
    pub fn shifted(&self, a: f64, b: f64) -> Self {
        let m = self.dim();
        let mut data: Vec<Complex64> = self.data.iter().map(|z| z * a).collect();
        for i in 0..m {
            data[i * m + i] += b;
        }
        BoundaryOperator {
            data,
            ..self.clone()
        }
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &BoundaryOperator) -> Self {
        let m = self.dim();
        let data: Vec<Complex64> = (0..m)
            .into_par_iter()
            .flat_map_iter(|i| {
                let row = &self.data[i * m..(i + 1) * m];
                (0..m).map(move |j| {
                    row.iter()
                        .enumerate()
                        .map(|(k, a)| a * other.data[k * m + j])
                        .sum::<Complex64>()
                })
            })
            .collect();
        BoundaryOperator {
            data,
            ..self.clone()
        }
    }
}

/// Assemble `M̂_α(E)` column by column: column `j` is
/// `[ψ_j]_{α−π/2}` for the solution with `[ψ_j]_α = e_j`.
pub fn assemble_map(p: &RobinProblem) -> Result<BoundaryOperator> {
    let sys = RobinSystem::new(p)?;
    Ok(assemble_map_with(&sys))
}

/// [`assemble_map`] with an existing factorization.
pub fn assemble_map_with(sys: &RobinSystem) -> BoundaryOperator {
    let p = &sys.problem;
    let g = p.grid;
    let m = g.boundary_count();
    let columns: Vec<BoundaryTrace> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut f = BoundaryTrace::zeros(m);
            f.values[j] = Complex64::new(1.0, 0.0);
            let psi = sys.solve_trace(&f).expect("unit data has circuit length");
            rotated_trace(&psi, &sys.bnd, p.alpha - FRAC_PI_2)
        })
        .collect();
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..m {
            data[i * m + j] = col.values[i];
        }
    }
    BoundaryOperator {
        grid: g,
        alpha: p.alpha,
        energy: p.energy,
        kind: OperatorKind::Map,
        data,
    }
}

fn rotated_trace(psi: &GridFunction, bnd: &BoundaryIndex, alpha: f64) -> BoundaryTrace {
    robin_combine(&trace(psi), &normal_derivative_with(psi, bnd), alpha)
}

/// Matrix-vector product `M f`.
pub fn apply_map(m: &BoundaryOperator, f: &BoundaryTrace) -> Result<BoundaryTrace> {
    let d = m.dim();
    if f.len() != d {
        return Err(Error::Mismatch(format!(
            "operator has dimension {d}, trace has {} values",
            f.len()
        )));
    }
    Ok(BoundaryTrace {
        values: (0..d)
            .map(|i| {
                m.data[i * d..(i + 1) * d]
                    .iter()
                    .zip(&f.values)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect(),
    })
}

/// Sup-norm residuals of the trace identities
/// `(sin α M + cos α I)[ψ]_α = ψ|_∂D` and
/// `(cos α M − sin α I)[ψ]_α = ∂ψ/∂ν|_∂D`.
pub fn trace_identities_residual(m: &BoundaryOperator, psi: &GridFunction) -> Result<(f64, f64)> {
    let a = m.alpha;
    let (_, bnd) = crate::domain::build_grid(psi.grid.n)?;
    let value = trace(psi);
    let normal = normal_derivative_with(psi, &bnd);
    let f = robin_combine(&value, &normal, a);
    let mf = apply_map(m, &f)?;
    let (s, c) = (Complex64::new(a.sin(), 0.0), Complex64::new(a.cos(), 0.0));
    let r1 =
        mf.combine(s, &f, c)
            .combine(Complex64::new(1.0, 0.0), &value, Complex64::new(-1.0, 0.0));
    let r2 =
        mf.combine(c, &f, -s)
            .combine(Complex64::new(1.0, 0.0), &normal, Complex64::new(-1.0, 0.0));
    Ok((r1.sup_norm(), r2.sup_norm()))
}

/// Sup-norm (max-entry) residual of the composition identity
/// `(sin(α₁−α₂) M₁ + cos(α₁−α₂) I)(sin(α₂−α₁) M₂ + cos(α₂−α₁) I) = I`.
pub fn composition_residual(m1: &BoundaryOperator, m2: &BoundaryOperator) -> Result<f64> {
    check_same(m1, m2, false)?;
    let d = m1.alpha - m2.alpha;
    let a = m1.shifted(d.sin(), d.cos());
    let b = m2.shifted((-d).sin(), (-d).cos());
    let prod = a.matmul(&b);
    let dim = m1.dim();
    Ok((0..dim * dim)
        .map(|k| {
            let id = if k / dim == k % dim { 1.0 } else { 0.0 };
            (prod.data[k] - id).norm()
        })
        .fold(0.0, f64::max))
}

fn check_same(m1: &BoundaryOperator, m2: &BoundaryOperator, same_alpha: bool) -> Result<()> {
    if m1.grid != m2.grid {
        return Err(Error::Mismatch("operators live on different grids".into()));
    }
    if m1.energy != m2.energy {
        return Err(Error::Mismatch(format!(
            "operators at different energies {} and {}",
            m1.energy, m2.energy
        )));
    }
    if same_alpha && m1.alpha != m2.alpha {
        return Err(Error::Mismatch(format!(
            "operators at different angles {} and {}",
            m1.alpha, m2.alpha
        )));
    }
    Ok(())
}

/// Kernel symmetry residual `max |K_w(i,j) − K_w(j,i)|` with `K_w = K/h`,
/// over node pairs at distance at least [`CORNER_EXCLUSION`] from every
/// corner.
pub fn symmetry_residual(m: &BoundaryOperator) -> Result<f64> {
    symmetry_residual_with(m, CORNER_EXCLUSION)
}

/// [`symmetry_residual`] with an explicit corner-exclusion radius
/// (radius 0 gives the plain `‖K_w − K_wᵀ‖_max`).
pub fn symmetry_residual_with(m: &BoundaryOperator, exclusion: f64) -> Result<f64> {
    if m.kind != OperatorKind::Map {
        return Err(Error::Mismatch(
            "symmetry residual needs a map operator".into(),
        ));
    }
    let (_, bnd) = crate::domain::build_grid(m.grid.n)?;
    let keep: Vec<usize> = (0..bnd.len())
        .filter(|&k| bnd.corner_distance(k) >= exclusion)
        .collect();
    let d = m.dim();
    let h = m.grid.h;
    let mut r: f64 = 0.0;
    for &i in &keep {
        for &j in &keep {
            r = r.max((m.data[i * d + j] - m.data[j * d + i]).norm() / h);
        }
    }
    Ok(r)
}

/// Symmetry of the bilinear form: `max |⟨f, M g⟩ − ⟨g, M f⟩|` over the
/// given traces (normalized to unit sup norm), with the circuit quadrature
/// `⟨f, g⟩ = Σ w_j f_j g_j`.
pub fn bilinear_symmetry_residual(m: &BoundaryOperator, data: &[BoundaryTrace]) -> Result<f64> {
    let (_, bnd) = crate::domain::build_grid(m.grid.n)?;
    let normalized: Vec<BoundaryTrace> = data
        .iter()
        .map(|f| {
            let s = f.sup_norm().max(f64::MIN_POSITIVE);
            f.combine(Complex64::new(1.0 / s, 0.0), f, Complex64::new(0.0, 0.0))
        })
        .collect();
    let images: Vec<BoundaryTrace> = normalized
        .iter()
        .map(|f| apply_map(m, f))
        .collect::<Result<_>>()?;
    let mut r: f64 = 0.0;
    for a in 0..normalized.len() {
        for b in a + 1..normalized.len() {
            let fmg = crate::domain::boundary_integral(&normalized[a].mul(&images[b]), &bnd)?;
            let gmf = crate::domain::boundary_integral(&normalized[b].mul(&images[a]), &bnd)?;
            r = r.max((fmg - gmf).norm());
        }
    }
    Ok(r)
}

/// Induced ∞-norm on nodal vectors: `max_i Σ_j |A_ij|`.
pub fn operator_norm(a: &BoundaryOperator) -> f64 {
    let d = a.dim();
    (0..d)
        .map(|i| {
            a.data[i * d..(i + 1) * d]
                .iter()
                .map(|z| z.norm())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Difference `M₁ − M₂` of two maps at the same `(α, E)` on the same grid.
pub fn difference(m1: &BoundaryOperator, m2: &BoundaryOperator) -> Result<BoundaryOperator> {
    check_same(m1, m2, true)?;
    Ok(BoundaryOperator {
        kind: OperatorKind::Difference,
        data: m1.data.iter().zip(&m2.data).map(|(a, b)| a - b).collect(),
        ..m1.clone()
    })
}

/// `δ_α = ‖M₁ − M₂‖`.
pub fn delta_alpha(m1: &BoundaryOperator, m2: &BoundaryOperator) -> Result<f64> {
    Ok(operator_norm(&difference(m1, m2)?))
}

/// Entrywise max difference between the maps for `(v, E, α)` and
/// `(v − E, 0, α)`.
pub fn energy_shift_residual(v: &GridFunction, energy: f64, alpha: f64) -> Result<f64> {
    let p1 = RobinProblem::new(v, energy, alpha)?;
    let shifted = GridFunction {
        grid: v.grid,
        values: v.values.iter().map(|z| z - energy).collect(),
    };
    let p2 = RobinProblem::new(&shifted, 0.0, alpha)?;
    let m1 = assemble_map(&p1)?;
    let m2 = assemble_map(&p2)?;
    Ok(m1
        .data
        .iter()
        .zip(&m2.data)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}
