//! Command dispatch: every command reads a [`RunConfig`], writes its CSV
//! artifacts into the configured output directory together with
//! `manifest.json` (`{command, config_hash, versions, wall_time_s}`), and
//! maps failures to exit codes (2 validation, 3 spectral condition,
//! 4 numerical convergence).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::cgo2d::{self, CgoParams};
use crate::config::RunConfig;
use crate::domain::{build_grid, robin_trace, GridFunction};
use crate::error::{Error, Result};
use crate::experiments::{self, PotentialPairFamily};
use crate::forward::{self, RobinProblem, RobinSystem};
use crate::green;
use crate::impedance;
use crate::io;
use crate::potential::{make_potential, PotentialSpec};

/// Command-line interface.
#[derive(Debug, Parser)]
#[command(
    name = "impedance-lab",
    version,
    about = "Impedance-map laboratory for the 2-D Schrödinger equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Commands; each takes a config file.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one Robin problem with seeded smooth data.
    Forward(ConfigArg),
    /// Assemble the impedance map.
    Map(ConfigArg),
    /// Run the identity residual suites.
    CheckIdentities(ConfigArg),
    /// Sweep σ_min over boundary angles and flag exceptional angles.
    EigSweep(ConfigArg),
    /// Check the integral identity for the configured pair.
    Alessandrini(ConfigArg),
    /// Pointwise CGO reconstruction and rate study.
    Reconstruct(ConfigArg),
    /// Stability sweep over a family of potential pairs.
    Stability(ConfigArg),
}

/// Path to the config file.
#[derive(Debug, clap::Args)]
pub struct ConfigArg {
    /// Configuration file (`key = value` with sections).
    #[arg(long, short)]
    pub config: PathBuf,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Forward(_) => "forward",
            Command::Map(_) => "map",
            Command::CheckIdentities(_) => "check-identities",
            Command::EigSweep(_) => "eig-sweep",
            Command::Alessandrini(_) => "alessandrini",
            Command::Reconstruct(_) => "reconstruct",
            Command::Stability(_) => "stability",
        }
    }

    fn config_path(&self) -> &Path {
        match self {
            Command::Forward(a)
            | Command::Map(a)
            | Command::CheckIdentities(a)
            | Command::EigSweep(a)
            | Command::Alessandrini(a)
            | Command::Reconstruct(a)
            | Command::Stability(a) => &a.config,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    versions: Versions,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "impedance-lab")]
    crate_version: &'static str,
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Load the config, run the command inside a worker pool, and write the
/// manifest.
pub fn execute(cmd: &Command) -> Result<()> {
    let cfg = RunConfig::load(cmd.config_path())?;
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.run.output)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(cmd, &cfg))?;
    let manifest = Manifest {
        command: cmd.name(),
        config_hash: cfg.hash(),
        versions: Versions {
            crate_version: env!("CARGO_PKG_VERSION"),
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    io::write_json(&cfg.run.output.join("manifest.json"), &manifest)
}

/// Run one command with a loaded config (artifacts only, no manifest).
pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Command::Forward(_) => cmd_forward(cfg),
        Command::Map(_) => cmd_map(cfg),
        Command::CheckIdentities(_) => cmd_check_identities(cfg).map(|_| ()),
        Command::EigSweep(_) => cmd_eig_sweep(cfg),
        Command::Alessandrini(_) => cmd_integral_identity(cfg),
        Command::Reconstruct(_) => cmd_reconstruct(cfg),
        Command::Stability(_) => cmd_stability(cfg),
    }
}

fn potentials(cfg: &RunConfig) -> Result<(GridFunction, Option<GridFunction>)> {
    let (grid, _) = build_grid(cfg.grid.n)?;
    let v = make_potential(&cfg.potential, grid)?;
    let v2 = cfg
        .potential2
        .as_ref()
        .map(|p| make_potential(p, grid))
        .transpose()?;
    Ok((v, v2))
}

fn require_second(v2: Option<GridFunction>, what: &str) -> Result<GridFunction> {
    v2.ok_or_else(|| Error::Config(format!("{what} needs a [potential2] section")))
}

#[derive(Serialize)]
struct ForwardReport {
    residual: f64,
    sigma_min: f64,
    near_singular: bool,
}

fn cmd_forward(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.run.output;
    let (v, _) = potentials(cfg)?;
    let (_, bnd) = build_grid(cfg.grid.n)?;
    let p = RobinProblem::new(&v, cfg.problem.energy, cfg.problem.alpha)?;
    let f = experiments::random_smooth_traces(&bnd, 1, cfg.run.seed).remove(0);
    let rep = forward::robin_solve(&p, &f)?;
    io::write_trace(&out.join("data.csv"), &f, &bnd)?;
    io::write_grid_function(&out.join("solution.csv"), &rep.solution)?;
    io::write_json(
        &out.join("forward.json"),
        &ForwardReport {
            residual: rep.residual,
            sigma_min: rep.sigma_min,
            near_singular: rep.near_singular,
        },
    )
}

fn cmd_map(cfg: &RunConfig) -> Result<()> {
    let (v, _) = potentials(cfg)?;
    let p = RobinProblem::new(&v, cfg.problem.energy, cfg.problem.alpha)?;
    let m = impedance::assemble_map(&p)?;
    io::write_operator(&cfg.run.output.join("map.csv"), &m)
}

/// One line of the identity report.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub suite: String,
    pub setting: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn row(suite: &str, setting: String, residual: f64, threshold: f64) -> IdentityRow {
    IdentityRow {
        suite: suite.into(),
        setting,
        residual,
        threshold,
        pass: residual <= threshold,
    }
}

/// Small perturbation used by the resolvent suite when no second potential
/// is configured.
pub fn default_resolvent_perturbation(margin: f64) -> PotentialSpec {
    PotentialSpec::bump([0.45, 0.55], 0.1, 0.08, margin)
}

/// Run every identity suite at the configured grid, potential and energy.
pub fn identity_suites(cfg: &RunConfig) -> Result<Vec<IdentityRow>> {
    let (v, v2) = potentials(cfg)?;
    let grid = v.grid;
    let h = grid.h;
    let e = cfg.problem.energy;
    let tol = &cfg.tolerances;
    let (_, bnd) = build_grid(grid.n)?;
    let mut rows = Vec::new();

    let data = experiments::random_smooth_traces(&bnd, 5, cfg.run.seed);
    for a in [0.0, FRAC_PI_4, FRAC_PI_3] {
        let sys = RobinSystem::new(&RobinProblem::new(&v, e, a)?)?;
        let m = impedance::assemble_map_with(&sys);
        let mut worst: f64 = 0.0;
        for f in &data {
            let psi = sys.solve_trace(f)?;
            let (r1, r2) = impedance::trace_identities_residual(&m, &psi)?;
            worst = worst.max(r1.max(r2) / psi.sup_norm());
        }
        rows.push(row("trace", format!("alpha={a:.6}"), worst, tol.trace));
    }

    let map_at = |a: f64| impedance::assemble_map(&RobinProblem::new(&v, e, a)?);
    for (a1, a2) in [(0.0, FRAC_PI_2), (FRAC_PI_3, FRAC_PI_6)] {
        let r = impedance::composition_residual(&map_at(a1)?, &map_at(a2)?)?;
        rows.push(row(
            "composition",
            format!("alpha1={a1:.6},alpha2={a2:.6}"),
            r,
            tol.composition,
        ));
    }

    for a in [FRAC_PI_4, FRAC_PI_3] {
        let r = impedance::symmetry_residual(&map_at(a)?)?;
        rows.push(row(
            "kernel-symmetry",
            format!("alpha={a:.6}"),
            r,
            tol.kernel_symmetry_per_h * h,
        ));
    }

    let sources = green::sample_interior_sources(grid, 10, 2, cfg.run.seed);
    for a in [0.0, FRAC_PI_3] {
        let g = green::green_columns(&RobinProblem::new(&v, e, a)?, &sources)?;
        let r = green::green_symmetry_residual(&g);
        rows.push(row(
            "green-symmetry",
            format!("alpha={a:.6}"),
            r,
            tol.green_symmetry,
        ));
    }

    for a in [FRAC_PI_2, FRAC_PI_4] {
        let sys = RobinSystem::new(&RobinProblem::new(&v, e, a)?)?;
        let m = impedance::assemble_map_with(&sys);
        let gb = green::boundary_green_with(&sys)?;
        let r = green::kernel_relation_residual(&m, &gb, a)?;
        rows.push(row(
            "kernel-relation",
            format!("alpha={a:.6}"),
            r,
            tol.kernel_relation_per_h * h,
        ));
    }

    let w = match v2 {
        Some(w) => w,
        None => make_potential(
            &cfg.potential
                .plus(&default_resolvent_perturbation(cfg.potential.margin)),
            grid,
        )?,
    };
    let pairs = green::sample_interior_sources(grid, 5, 2, cfg.run.seed.wrapping_add(1));
    let g1 = green::green_columns(&RobinProblem::new(&v, e, FRAC_PI_2)?, &pairs)?;
    let g2 = green::green_columns(&RobinProblem::new(&w, e, FRAC_PI_2)?, &pairs)?;
    let r = green::resolvent_difference_residual(&g1, &g2)?;
    rows.push(row(
        "resolvent",
        format!("alpha={FRAC_PI_2:.6}"),
        r,
        tol.resolvent,
    ));

    let r = impedance::energy_shift_residual(&v, e, cfg.problem.alpha)?;
    rows.push(row(
        "energy-shift",
        format!("alpha={:.6},E={e}", cfg.problem.alpha),
        r,
        tol.energy_shift,
    ));
    Ok(rows)
}

fn cmd_check_identities(cfg: &RunConfig) -> Result<Vec<IdentityRow>> {
    let rows = identity_suites(cfg)?;
    io::write_rows(
        &cfg.run.output.join("identities.csv"),
        &["suite", "setting", "residual", "threshold", "pass"],
        &rows,
    )?;
    for r in &rows {
        println!(
            "{} {:<16} {:<32} residual {:.3e} threshold {:.3e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.suite,
            r.setting,
            r.residual,
            r.threshold
        );
    }
    Ok(rows)
}

fn cmd_eig_sweep(cfg: &RunConfig) -> Result<()> {
    let (v, _) = potentials(cfg)?;
    let sweep = forward::eig_sweep(
        &v,
        cfg.problem.energy,
        &cfg.problem.alphas(),
        cfg.tolerances.flag_sigma,
    )?;
    io::write_rows(
        &cfg.run.output.join("eig_sweep.csv"),
        &["alpha", "sigma_min"],
        &sweep.samples,
    )?;
    let flagged: Vec<(f64, f64, usize)> = sweep
        .flagged
        .iter()
        .map(|f| (f.alpha, f.sigma_min, f.grid_index))
        .collect();
    io::write_rows(
        &cfg.run.output.join("flagged.csv"),
        &["alpha", "sigma_min", "grid_index"],
        &flagged,
    )
}

fn cmd_integral_identity(cfg: &RunConfig) -> Result<()> {
    let (v1, v2) = potentials(cfg)?;
    let v2 = require_second(v2, "alessandrini")?;
    let (_, bnd) = build_grid(cfg.grid.n)?;
    let pairs = experiments::default_data_pairs(&bnd, cfg.run.seed);
    let rep = experiments::integral_identity_check(
        &v1,
        &v2,
        cfg.problem.energy,
        cfg.problem.alpha,
        &pairs,
    )?;
    let rows: Vec<(usize, f64, f64, f64, f64, f64)> = rep
        .rows
        .iter()
        .map(|r| {
            (
                r.pair,
                r.lhs[0],
                r.lhs[1],
                r.rhs[0],
                r.rhs[1],
                r.relative_residual,
            )
        })
        .collect();
    io::write_rows(
        &cfg.run.output.join("alessandrini.csv"),
        &[
            "pair",
            "lhs_re",
            "lhs_im",
            "rhs_re",
            "rhs_im",
            "relative_residual",
        ],
        &rows,
    )
}

#[derive(Serialize)]
struct BoundaryCheck {
    alpha: f64,
    lambda: f64,
    volume: [f64; 2],
    boundary: [f64; 2],
    relative_gap: f64,
}

fn cmd_reconstruct(cfg: &RunConfig) -> Result<()> {
    let (v1, v2) = potentials(cfg)?;
    let v2 = require_second(v2, "reconstruct")?;
    let spec1 = cfg.potential.clone();
    let spec2 = cfg.potential2.clone().expect("checked above");
    let template = CgoParams {
        max_iter: cfg.cgo.max_iter,
        tol: cfg.cgo.tol,
        lambda_min: cfg.cgo.lambda_min,
        ..CgoParams::new(Complex64::new(0.5, 0.5), 1.0)
    };
    let z0s: Vec<Complex64> = cfg
        .cgo
        .z0
        .iter()
        .map(|z| Complex64::new(z[0], z[1]))
        .collect();
    let table = cgo2d::rate_check(&v1, &v2, &z0s, &cfg.cgo.lambdas, &template, |z| {
        spec2.evaluate(z.re, z.im) - spec1.evaluate(z.re, z.im)
    })?;
    io::write_reconstruction(&cfg.run.output.join("reconstruction.csv"), &table)?;
    io::write_rate(&cfg.run.output.join("rate.csv"), &table)?;

    // Boundary-data formula against the volume formula at the first point.
    let e = cfg.problem.energy;
    let params = CgoParams {
        z0: z0s[0],
        lambda: Complex64::new(cfg.cgo.boundary_lambda, 0.0),
        lambda_min: 0.0,
        ..template
    };
    let shift = |v: &GridFunction| GridFunction {
        grid: v.grid,
        values: v.values.iter().map(|z| z - e).collect(),
    };
    let volume = cgo2d::delta_h_volume(&shift(&v1), &shift(&v2), &params)?;
    let mut checks = Vec::new();
    for &a in &cfg.cgo.boundary_alphas {
        let m1 = impedance::assemble_map(&RobinProblem::new(&v1, e, a)?)?;
        let m2 = impedance::assemble_map(&RobinProblem::new(&v2, e, a)?)?;
        let tr = cgo2d::cgo_traces(&v1, &v2, e, a, &params)?;
        let b = cgo2d::delta_h_boundary(&m1, &m2, (&tr.tilde1, &tr.psi2))?;
        checks.push(BoundaryCheck {
            alpha: a,
            lambda: cfg.cgo.boundary_lambda,
            volume: [volume.re, volume.im],
            boundary: [b.re, b.im],
            relative_gap: (b - volume).norm() / volume.norm().max(f64::MIN_POSITIVE),
        });
    }
    io::write_json(&cfg.run.output.join("boundary_formula.json"), &checks)
}

#[derive(Serialize)]
struct StabilityJson {
    fits: Vec<experiments::EnvelopeFit>,
    min_over_alpha: Vec<experiments::MinOverAlpha>,
    skipped: Vec<experiments::SkippedMember>,
}

fn cmd_stability(cfg: &RunConfig) -> Result<()> {
    let perturbation = cfg
        .potential2
        .clone()
        .ok_or_else(|| Error::Config("stability needs a [potential2] perturbation".into()))?;
    let family = PotentialPairFamily {
        base: cfg.potential.clone(),
        perturbation,
        eps: cfg.stability.eps.clone(),
        c2_bound: cfg.stability.c2_bound,
    };
    let rep = experiments::stability_sweep(
        &family,
        cfg.grid.n,
        cfg.problem.energy,
        &cfg.problem.alphas(),
    )?;
    io::write_sweep(&cfg.run.output.join("sweep.csv"), &rep.records)?;
    let summary = StabilityJson {
        min_over_alpha: experiments::min_over_alpha(&rep.records),
        fits: rep.fits,
        skipped: rep.skipped,
    };
    io::write_json(&cfg.run.output.join("stability.json"), &summary)
}

/// Robin trace helper re-exported for command implementations.
pub fn robin_data(psi: &GridFunction, alpha: f64) -> crate::domain::BoundaryTrace {
    robin_trace(psi, alpha)
}
