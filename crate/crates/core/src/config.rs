//! Run configuration.
//!
//! The file format is TOML restricted to `key = value` pairs inside
//! sections; every section and key is optional except `[grid] n`, and
//! unknown keys are rejected. Example:
//!
//! ```toml
//! [grid]
//! n = 32
//!
//! [problem]
//! energy = -1.0
//! alpha = 1.0471975511965976
//!
//! [potential]
//! family = "gaussian-bump"
//! centers = [[0.5, 0.5]]
//! amplitudes = [1.0]
//! widths = [0.1]
//! margin = 0.12
//!
//! [run]
//! seed = 7
//! output = "out"
//! ```
//!
//! There are no environment-variable overrides: a config file fully
//! determines a run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

/// Complete configuration of one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub problem: ProblemSection,
    /// First (or only) potential `v`, `v₁`, or the family base.
    #[serde(default = "PotentialSpec::zero")]
    pub potential: PotentialSpec,
    /// Second potential `v₂`, or the family perturbation.
    #[serde(default)]
    pub potential2: Option<PotentialSpec>,
    #[serde(default)]
    pub cgo: CgoSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub run: RunSection,
}

/// `[grid]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Interior nodes per axis (≥ 8).
    pub n: usize,
}

/// `[problem]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    /// Energy `E`.
    #[serde(default = "default_energy")]
    pub energy: f64,
    /// Boundary angle `α` (radians) for single-angle commands.
    #[serde(default)]
    pub alpha: f64,
    /// Explicit angle grid for sweeps; overrides `alpha_count`.
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
    /// Number of uniform angles in `[0, π)` when no explicit grid is given.
    #[serde(default = "default_alpha_count")]
    pub alpha_count: usize,
}

fn default_energy() -> f64 {
    -1.0
}
fn default_alpha_count() -> usize {
    64
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            energy: default_energy(),
            alpha: 0.0,
            alpha_grid: None,
            alpha_count: default_alpha_count(),
        }
    }
}

impl ProblemSection {
    /// The sweep grid: explicit, or `alpha_count` uniform angles in `[0, π)`.
    pub fn alphas(&self) -> Vec<f64> {
        match &self.alpha_grid {
            Some(g) => g.clone(),
            None => (0..self.alpha_count)
                .map(|k| k as f64 * PI / self.alpha_count as f64)
                .collect(),
        }
    }
}

/// `[cgo]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgoSection {
    /// Frequency ladder.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Reconstruction points.
    #[serde(default = "default_z0")]
    pub z0: Vec<[f64; 2]>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_cgo_tol")]
    pub tol: f64,
    /// Smallest admissible `|λ|` of the amplitude solve.
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    /// Frequency for the boundary-formula cross-check (small, because the
    /// boundary bilinear form cancels exponentially large terms).
    #[serde(default = "default_boundary_lambda")]
    pub boundary_lambda: f64,
    /// Angles for the boundary-formula cross-check.
    #[serde(default = "default_boundary_alphas")]
    pub boundary_alphas: Vec<f64>,
}

fn default_lambdas() -> Vec<f64> {
    vec![20.0, 40.0, 80.0, 160.0]
}
fn default_z0() -> Vec<[f64; 2]> {
    vec![[0.5, 0.5]]
}
fn default_max_iter() -> usize {
    300
}
fn default_cgo_tol() -> f64 {
    1e-10
}
fn default_lambda_min() -> f64 {
    1.0
}
fn default_boundary_lambda() -> f64 {
    2.0
}
fn default_boundary_alphas() -> Vec<f64> {
    vec![PI / 6.0, PI / 4.0, PI / 3.0]
}

impl Default for CgoSection {
    fn default() -> Self {
        CgoSection {
            lambdas: default_lambdas(),
            z0: default_z0(),
            max_iter: default_max_iter(),
            tol: default_cgo_tol(),
            lambda_min: default_lambda_min(),
            boundary_lambda: default_boundary_lambda(),
            boundary_alphas: default_boundary_alphas(),
        }
    }
}

/// `[stability]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    /// Perturbation amplitudes.
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// Declared C² bound `N` of the family.
    #[serde(default = "default_c2_bound")]
    pub c2_bound: f64,
}

fn default_eps() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn default_c2_bound() -> f64 {
    1e3
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection {
            eps: default_eps(),
            c2_bound: default_c2_bound(),
        }
    }
}

/// `[tolerances]`: pass thresholds of the `check-identities` suites and the
/// eigen-sweep flagging level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    /// Trace identities, relative to `‖ψ‖∞`.
    #[serde(default = "default_trace_tol")]
    pub trace: f64,
    /// Composition identity, absolute.
    #[serde(default = "default_composition_tol")]
    pub composition: f64,
    /// Kernel symmetry, in units of `h`.
    #[serde(default = "default_one")]
    pub kernel_symmetry_per_h: f64,
    /// Kernel relation, in units of `h`.
    #[serde(default = "default_four")]
    pub kernel_relation_per_h: f64,
    /// Green symmetry on sampled deep pairs, absolute.
    #[serde(default = "default_green_tol")]
    pub green_symmetry: f64,
    /// Resolvent identity, absolute.
    #[serde(default = "default_resolvent_tol")]
    pub resolvent: f64,
    /// Energy shift, entrywise.
    #[serde(default = "default_shift_tol")]
    pub energy_shift: f64,
    /// σ_min level below which a refined eigen-sweep minimum is flagged.
    #[serde(default = "default_flag_tol")]
    pub flag_sigma: f64,
}

fn default_trace_tol() -> f64 {
    1e-6
}
fn default_composition_tol() -> f64 {
    1e-2
}
fn default_one() -> f64 {
    1.0
}
fn default_four() -> f64 {
    4.0
}
fn default_green_tol() -> f64 {
    1e-8
}
fn default_resolvent_tol() -> f64 {
    1e-3
}
fn default_shift_tol() -> f64 {
    1e-12
}
fn default_flag_tol() -> f64 {
    1e-3
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection {
            trace: default_trace_tol(),
            composition: default_composition_tol(),
            kernel_symmetry_per_h: default_one(),
            kernel_relation_per_h: default_four(),
            green_symmetry: default_green_tol(),
            resolvent: default_resolvent_tol(),
            energy_shift: default_shift_tol(),
            flag_sigma: default_flag_tol(),
        }
    }
}

/// `[run]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Seed for every randomized input.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Artifact directory.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads (0 = one per core).
    #[serde(default)]
    pub workers: usize,
}

fn default_seed() -> u64 {
    1
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: default_seed(),
            output: default_output(),
            workers: 0,
        }
    }
}

impl RunConfig {
    /// Parse and validate a configuration from text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read, parse and validate a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Range checks for every field.
    pub fn validate(&self) -> Result<()> {
        if self.grid.n < crate::domain::MIN_N {
            return Err(Error::Config(format!(
                "grid.n must be at least {}, got {}",
                crate::domain::MIN_N,
                self.grid.n
            )));
        }
        if self.grid.n > 256 {
            return Err(Error::Config(
                "grid.n above 256 is outside desk scale".into(),
            ));
        }
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be finite")))
            }
        };
        finite(self.problem.energy, "problem.energy")?;
        finite(self.problem.alpha, "problem.alpha")?;
        if self
            .problem
            .alpha_grid
            .as_ref()
            .is_some_and(|g| g.is_empty())
            || (self.problem.alpha_grid.is_none() && self.problem.alpha_count == 0)
        {
            return Err(Error::Config("the angle grid is empty".into()));
        }
        self.potential.validate()?;
        if let Some(p) = &self.potential2 {
            p.validate()?;
        }
        if self.cgo.lambdas.is_empty() || self.cgo.lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config(
                "cgo.lambdas must be non-empty and positive".into(),
            ));
        }
        if self.cgo.z0.is_empty() {
            return Err(Error::Config("cgo.z0 must be non-empty".into()));
        }
        if !(self.cgo.tol > 0.0) || self.cgo.max_iter == 0 {
            return Err(Error::Config(
                "cgo.tol and cgo.max_iter must be positive".into(),
            ));
        }
        if self.stability.eps.iter().any(|&e| !(e >= 0.0)) {
            return Err(Error::Config("stability.eps must be non-negative".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization (changes iff a field
    /// changes).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
