//! Smooth, compactly supported potentials: sums of Gaussian bumps
//! multiplied by a C² polynomial cutoff that vanishes in a band of width
//! `margin` along the boundary.

use serde::{Deserialize, Serialize};

use crate::domain::{GridFunction, GridSpec};
use crate::error::{Error, Result};

/// Potential family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `v ≡ 0`.
    Zero,
    /// A single Gaussian bump.
    GaussianBump,
    /// Any number of Gaussian bumps.
    MultiBump,
}

/// Declarative description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub family: Family,
    #[serde(default)]
    pub centers: Vec<[f64; 2]>,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub widths: Vec<f64>,
    /// Width of the boundary band where the cutoff vanishes.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Declared bound `N` on `‖v‖_{C²}`; checked when present.
    #[serde(default)]
    pub c2_bound: Option<f64>,
}

fn default_margin() -> f64 {
    0.12
}

/// Minimum cutoff margin in grid steps.
pub const MARGIN_IN_STEPS: f64 = 2.0;

impl PotentialSpec {
    /// The zero potential.
    pub fn zero() -> Self {
        PotentialSpec {
            family: Family::Zero,
            centers: vec![],
            amplitudes: vec![],
            widths: vec![],
            margin: default_margin(),
            c2_bound: None,
        }
    }

    /// A single bump `A exp(−|x−c|²/(2s²)) χ(x)`.
    pub fn bump(center: [f64; 2], amplitude: f64, width: f64, margin: f64) -> Self {
        PotentialSpec {
            family: Family::GaussianBump,
            centers: vec![center],
            amplitudes: vec![amplitude],
            widths: vec![width],
            margin,
            c2_bound: None,
        }
    }

    /// Sum of bumps with a common margin.
    pub fn multi(bumps: &[([f64; 2], f64, f64)], margin: f64) -> Self {
        PotentialSpec {
            family: Family::MultiBump,
            centers: bumps.iter().map(|b| b.0).collect(),
            amplitudes: bumps.iter().map(|b| b.1).collect(),
            widths: bumps.iter().map(|b| b.2).collect(),
            margin,
            c2_bound: None,
        }
    }

    /// Concatenate the bumps of two specs (margin of `self` kept).
    pub fn plus(&self, other: &PotentialSpec) -> PotentialSpec {
        let mut out = self.clone();
        if out.family == Family::Zero {
            out.centers.clear();
            out.amplitudes.clear();
            out.widths.clear();
        }
        if other.family != Family::Zero {
            out.centers.extend_from_slice(&other.centers);
            out.amplitudes.extend_from_slice(&other.amplitudes);
            out.widths.extend_from_slice(&other.widths);
        }
        out.family = match out.centers.len() {
            0 => Family::Zero,
            _ => Family::MultiBump,
        };
        out
    }

    /// All amplitudes multiplied by `c`.
    pub fn scaled(&self, c: f64) -> PotentialSpec {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|a| *a *= c);
        out
    }

    /// Structural validation independent of the grid.
    pub fn validate(&self) -> Result<()> {
        let k = self.centers.len();
        if self.amplitudes.len() != k || self.widths.len() != k {
            return Err(Error::Config(
                "potential: centers, amplitudes and widths must have equal length".into(),
            ));
        }
        match self.family {
            Family::Zero if k != 0 => {
                return Err(Error::Config(
                    "potential: family 'zero' takes no bumps".into(),
                ))
            }
            Family::GaussianBump if k != 1 => {
                return Err(Error::Config(
                    "potential: family 'gaussian-bump' takes exactly one bump".into(),
                ))
            }
            _ => {}
        }
        if !(self.margin > 0.0 && self.margin < 0.25) {
            return Err(Error::Config(format!(
                "potential: margin must lie in (0, 0.25), got {}",
                self.margin
            )));
        }
        if self.widths.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config("potential: widths must be positive".into()));
        }
        for c in &self.centers {
            if !(c[0] > 0.0 && c[0] < 1.0 && c[1] > 0.0 && c[1] < 1.0) {
                return Err(Error::Config(format!(
                    "potential: center {c:?} outside the unit square"
                )));
            }
        }
        Ok(())
    }

    /// Evaluate the potential at a point.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        if self.family == Family::Zero {
            return 0.0;
        }
        let chi = cutoff(x, self.margin) * cutoff(y, self.margin);
        if chi == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for ((c, a), w) in self.centers.iter().zip(&self.amplitudes).zip(&self.widths) {
            let r2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
            s += a * (-r2 / (2.0 * w * w)).exp();
        }
        s * chi
    }

    /// Estimate `‖v‖_{C²} = Σ_{|β|≤2} sup |∂^β v|` by central differences on
    /// a fine lattice.
    pub fn c2_norm_estimate(&self) -> f64 {
        if self.family == Family::Zero {
            return 0.0;
        }
        let m = 400;
        let d = 1e-4;
        let mut sup = [0.0f64; 6];
        for a in 0..=m {
            for b in 0..=m {
                let (x, y) = (a as f64 / m as f64, b as f64 / m as f64);
                let f = |dx: f64, dy: f64| self.evaluate(x + dx, y + dy);
                let f0 = f(0.0, 0.0);
                let vals = [
                    f0,
                    (f(d, 0.0) - f(-d, 0.0)) / (2.0 * d),
                    (f(0.0, d) - f(0.0, -d)) / (2.0 * d),
                    (f(d, 0.0) - 2.0 * f0 + f(-d, 0.0)) / (d * d),
                    (f(0.0, d) - 2.0 * f0 + f(0.0, -d)) / (d * d),
                    (f(d, d) - f(d, -d) - f(-d, d) + f(-d, -d)) / (4.0 * d * d),
                ];
                for (s, v) in sup.iter_mut().zip(vals) {
                    *s = s.max(v.abs());
                }
            }
        }
        // The mixed derivative appears twice among the second derivatives.
        sup.iter().sum::<f64>() + sup[5]
    }
}

/// C² cutoff in one variable: 0 for `t ≤ m` and `t ≥ 1 − m`, 1 for
/// `2m ≤ t ≤ 1 − 2m`, quintic smoothstep in between.
pub fn cutoff(t: f64, m: f64) -> f64 {
    smoothstep((t - m) / m) * smoothstep((1.0 - t - m) / m)
}

/// Quintic smoothstep `t³(10 − 15t + 6t²)` clamped to `[0, 1]`
/// (first and second derivatives vanish at both ends).
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Nodal evaluation of a potential on a grid.
///
/// Errors when the spec is malformed, when the margin is narrower than
/// `2h` (the support would then reach the one-sided stencils of the
/// boundary rows), or when a declared C² bound is exceeded.
pub fn make_potential(spec: &PotentialSpec, grid: GridSpec) -> Result<GridFunction> {
    spec.validate()?;
    if spec.family != Family::Zero && spec.margin < MARGIN_IN_STEPS * grid.h {
        return Err(Error::Config(format!(
            "potential: margin {} is below {MARGIN_IN_STEPS}h = {} at n = {}",
            spec.margin,
            MARGIN_IN_STEPS * grid.h,
            grid.n
        )));
    }
    if let Some(bound) = spec.c2_bound {
        let est = spec.c2_norm_estimate();
        if est > bound {
            return Err(Error::Config(format!(
                "potential: C2 norm estimate {est:.4} exceeds declared bound {bound}"
            )));
        }
    }
    Ok(GridFunction::from_real_fn(grid, |x, y| spec.evaluate(x, y)))
}
