//! Experiments: the integral identity for the
//! impedance map, stability sweeps over families of potential pairs, and
//! the minimum of the stability envelope over boundary angles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{
    boundary_integral, build_grid, robin_trace, volume_integral, BoundaryIndex, BoundaryTrace,
    GridFunction,
};
use crate::error::{Error, Result};
use crate::forward::{RobinProblem, RobinSystem};
use crate::impedance::{apply_map, assemble_map_with, delta_alpha, difference};
use crate::potential::{make_potential, PotentialSpec};

/// Largest Fourier index of the default integral-identity boundary data.
pub const FOURIER_KMAX: usize = 4;
/// Number of seeded random smooth traces in the default data.
pub const RANDOM_TRACES: usize = 3;
/// Upper end of the admissible stability exponent.
pub const S_MAX: f64 = 0.75;
/// Lower clamp of the fitted stability exponent (keeps `s > 0`).
pub const S_MIN: f64 = 1e-3;

/// Fourier modes on the circuit, `cos(2πk s/4)` for `k = 0..=kmax` and
/// `sin(2πk s/4)` for `k = 1..=kmax`, with `s` the circuit arclength.
pub fn fourier_traces(bnd: &BoundaryIndex, kmax: usize) -> Vec<BoundaryTrace> {
    let mut out = Vec::with_capacity(2 * kmax + 1);
    for k in 0..=kmax {
        let w = 2.0 * PI * k as f64 / 4.0;
        out.push(BoundaryTrace::from_fn(bnd, |b| {
            Complex64::new((w * b.s).cos(), 0.0)
        }));
        if k > 0 {
            out.push(BoundaryTrace::from_fn(bnd, |b| {
                Complex64::new((w * b.s).sin(), 0.0)
            }));
        }
    }
    out
}

/// Seeded smooth traces `1 + ½ Σ_{k=1}^{3} (a_k cos + b_k sin)(2πk s/4)/k`
/// with coefficients uniform in `[−1, 1]`.
pub fn random_smooth_traces(bnd: &BoundaryIndex, count: usize, seed: u64) -> Vec<BoundaryTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let coef: Vec<(f64, f64)> = (1..=3)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            BoundaryTrace::from_fn(bnd, |b| {
                let mut f = 1.0;
                for (k, (a, c)) in coef.iter().enumerate() {
                    let kk = (k + 1) as f64;
                    let w = 2.0 * PI * kk / 4.0;
                    f += 0.5 * (a * (w * b.s).cos() + c * (w * b.s).sin()) / kk;
                }
                Complex64::new(f, 0.0)
            })
        })
        .collect()
}

/// Default integral-identity data: every Fourier mode up to [`FOURIER_KMAX`] and
/// [`RANDOM_TRACES`] random smooth traces, each used as the Robin data of
/// both solutions (`f₁ = f₂`).
pub fn default_data_pairs(bnd: &BoundaryIndex, seed: u64) -> Vec<(BoundaryTrace, BoundaryTrace)> {
    fourier_traces(bnd, FOURIER_KMAX)
        .into_iter()
        .chain(random_smooth_traces(bnd, RANDOM_TRACES, seed))
        .map(|f| (f.clone(), f))
        .collect()
}

/// One data pair of an integral-identity check.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityPairRow {
    pub pair: usize,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    /// `|LHS − RHS| / (|LHS| + |RHS| + ε_mach)`.
    pub relative_residual: f64,
}

/// Result of an integral-identity check.
#[derive(Clone, Debug, Serialize)]
pub struct IntegralIdentityReport {
    pub alpha: f64,
    pub energy: f64,
    pub n: usize,
    pub rows: Vec<IdentityPairRow>,
    pub max_relative_residual: f64,
}

/// Compare `∫_D (v₁ − v₂) ψ₁ ψ₂` with `∫_∂D [ψ₁]_α (M̂₁ − M̂₂)[ψ₂]_α` for
/// solutions `ψ_j` of the Robin problems with data `f_j`.
pub fn integral_identity_check(
    v1: &GridFunction,
    v2: &GridFunction,
    energy: f64,
    alpha: f64,
    pairs: &[(BoundaryTrace, BoundaryTrace)],
) -> Result<IntegralIdentityReport> {
    let g = v1.grid;
    let (_, bnd) = build_grid(g.n)?;
    let s1 = RobinSystem::new(&RobinProblem::new(v1, energy, alpha)?)?;
    let s2 = RobinSystem::new(&RobinProblem::new(v2, energy, alpha)?)?;
    let diff = difference(&assemble_map_with(&s1), &assemble_map_with(&s2))?;
    let dv = v1.sub(v2);
    let rows: Vec<IdentityPairRow> = pairs
        .iter()
        .enumerate()
        .map(|(k, (f1, f2))| {
            let psi1 = s1.solve_trace(f1)?;
            let psi2 = s2.solve_trace(f2)?;
            let lhs = volume_integral(&dv.mul(&psi1).mul(&psi2));
            let image = apply_map(&diff, &robin_trace(&psi2, alpha))?;
            let rhs = boundary_integral(&robin_trace(&psi1, alpha).mul(&image), &bnd)?;
            let rel = (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + f64::EPSILON);
            Ok(IdentityPairRow {
                pair: k,
                lhs: [lhs.re, lhs.im],
                rhs: [rhs.re, rhs.im],
                relative_residual: rel,
            })
        })
        .collect::<Result<_>>()?;
    let max_relative_residual = rows.iter().map(|r| r.relative_residual).fold(0.0, f64::max);
    Ok(IntegralIdentityReport {
        alpha,
        energy,
        n: g.n,
        rows,
        max_relative_residual,
    })
}

/// Family of potential pairs `v₁ = base`, `v₂ = base + ε · perturbation`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPairFamily {
    pub base: PotentialSpec,
    pub perturbation: PotentialSpec,
    pub eps: Vec<f64>,
    /// Declared bound `N` on the C² norms of all members.
    pub c2_bound: f64,
}

impl PotentialPairFamily {
    /// The specification of the perturbed member for amplitude `ε`.
    pub fn member(&self, eps: f64) -> PotentialSpec {
        self.base.plus(&self.perturbation.scaled(eps))
    }

    /// Check the declared C² bound on the base and the largest member.
    pub fn validate(&self) -> Result<()> {
        let emax = self.eps.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        for spec in [self.base.clone(), self.member(emax)] {
            let est = spec.c2_norm_estimate();
            if est > self.c2_bound {
                return Err(Error::Config(format!(
                    "family member has C2 norm estimate {est:.3} above N = {}",
                    self.c2_bound
                )));
            }
        }
        Ok(())
    }
}

/// One cell of a stability sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub eps: f64,
    pub alpha: f64,
    pub delta_alpha: f64,
    pub sup_diff: f64,
    pub c_fit: f64,
    pub s_fit: f64,
}

/// A family member that could not be used.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedMember {
    pub eps: f64,
    pub alpha: f64,
    pub reason: String,
}

/// Per-angle envelope fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub alpha: f64,
    pub c: f64,
    pub s: f64,
    /// Unclamped least-squares exponent.
    pub s_least_squares: f64,
    /// Whether `δ_α` is strictly increasing in `ε` over the ladder.
    pub monotone: bool,
}

/// Output of a stability sweep.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub records: Vec<StabilityRecord>,
    pub fits: Vec<EnvelopeFit>,
    pub skipped: Vec<SkippedMember>,
}

/// Envelope value `C (ln(3 + 1/δ))^{−s}` (zero for `δ = 0`).
pub fn envelope(c: f64, s: f64, delta: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    c * (3.0 + 1.0 / delta).ln().powf(-s)
}

/// Constrained envelope fit to points `(δ, sup_diff)` with `δ > 0`.
///
/// The exponent is the least-squares slope of `ln sup_diff` against
/// `ln ln(3 + 1/δ)`, clamped to `[S_MIN, S_MAX]`; the constant is then the
/// smallest `C` for which every point satisfies the bound.
/// Returns `(C, s, s_least_squares)`.
pub fn fit_envelope(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, v)| *d > 0.0 && *v > 0.0)
        .map(|&(d, v)| ((3.0 + 1.0 / d).ln().ln(), v.ln()))
        .collect();
    let s_ls = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx > 0.0 {
            -sxy / sxx
        } else {
            S_MAX
        }
    } else {
        S_MAX
    };
    let s = s_ls.clamp(S_MIN, S_MAX);
    let c = points
        .iter()
        .filter(|(d, _)| *d > 0.0)
        .map(|&(d, v)| v * (3.0 + 1.0 / d).ln().powf(s))
        .fold(0.0, f64::max);
    (c, s, s_ls)
}

/// Sweep `δ_α` and `‖v₁ − v₂‖∞` over the family and the angle grid, and fit
/// the logarithmic envelope per angle.
pub fn stability_sweep(
    family: &PotentialPairFamily,
    n: usize,
    energy: f64,
    alpha_grid: &[f64],
) -> Result<StabilityReport> {
    let (grid, _) = build_grid(n)?;
    family.validate()?;
    let v1 = make_potential(&family.base, grid)?;
    let members: Vec<GridFunction> = family
        .eps
        .iter()
        .map(|&e| make_potential(&family.member(e), grid))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, f64)> = alpha_grid.iter().copied().enumerate().collect();
    type Cell = (Vec<(f64, Option<f64>, f64)>, Vec<SkippedMember>);
    let per_alpha: Vec<Cell> = cells
        .par_iter()
        .map(|&(_, alpha)| {
            let mut out = Vec::new();
            let mut skipped = Vec::new();
            let base = RobinProblem::new(&v1, energy, alpha)?;
            let m1 = match RobinSystem::new(&base) {
                Ok(s) => assemble_map_with(&s),
                Err(e @ Error::Spectral { .. }) => {
                    for &eps in &family.eps {
                        skipped.push(SkippedMember {
                            eps,
                            alpha,
                            reason: e.to_string(),
                        });
                    }
                    return Ok((out, skipped));
                }
                Err(e) => return Err(e),
            };
            for (k, &eps) in family.eps.iter().enumerate() {
                let v2 = &members[k];
                let sup = v1.sub(v2).sup_norm();
                match RobinSystem::new(&RobinProblem::new(v2, energy, alpha)?) {
                    Ok(s) => {
                        let d = delta_alpha(&m1, &assemble_map_with(&s))?;
                        out.push((eps, Some(d), sup));
                    }
                    Err(e @ Error::Spectral { .. }) => skipped.push(SkippedMember {
                        eps,
                        alpha,
                        reason: e.to_string(),
                    }),
                    Err(e) => return Err(e),
                }
            }
            Ok((out, skipped))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for (&alpha, (cells, skip)) in alpha_grid.iter().zip(per_alpha) {
        skipped.extend(skip);
        let pts: Vec<(f64, f64)> = cells
            .iter()
            .filter_map(|&(_, d, sup)| d.map(|d| (d, sup)))
            .collect();
        let (c, s, s_ls) = fit_envelope(&pts);
        let mut ladder: Vec<(f64, f64)> = cells
            .iter()
            .filter_map(|&(e, d, _)| d.map(|d| (e, d)))
            .collect();
        ladder.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = ladder.windows(2).all(|w| w[1].1 > w[0].1);
        fits.push(EnvelopeFit {
            alpha,
            c,
            s,
            s_least_squares: s_ls,
            monotone,
        });
        for (eps, d, sup) in cells {
            if let Some(d) = d {
                records.push(StabilityRecord {
                    eps,
                    alpha,
                    delta_alpha: d,
                    sup_diff: sup,
                    c_fit: c,
                    s_fit: s,
                });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Config(
            "stability sweep: no admissible family member at any angle".into(),
        ));
    }
    Ok(StabilityReport {
        records,
        fits,
        skipped,
    })
}

/// Minimum of the envelope over angles for one `ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinOverAlpha {
    pub eps: f64,
    pub alpha: f64,
    pub envelope: f64,
}

/// For each `ε`, the angle minimizing `C_α (ln(3 + 1/δ_α))^{−s_α}`
/// (ties resolved towards the smaller angle, so the result does not depend
/// on the order of the records).
pub fn min_over_alpha(records: &[StabilityRecord]) -> Vec<MinOverAlpha> {
    let mut eps: Vec<f64> = records.iter().map(|r| r.eps).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    eps.into_iter()
        .map(|e| {
            let best = records
                .iter()
                .filter(|r| r.eps == e)
                .map(|r| (r.alpha, envelope(r.c_fit, r.s_fit, r.delta_alpha)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
                .expect("each eps has a record");
            MinOverAlpha {
                eps: e,
                alpha: best.0,
                envelope: best.1,
            }
        })
        .collect()
}
