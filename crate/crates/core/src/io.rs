//! CSV and JSON artifacts.
//!
//! Schemas (one header row each):
//!
//! * grid function — `x,y,re,im`, nodes in index order (interior
//!   row-major, then the boundary circuit);
//! * boundary trace — `s,x,y,re,im` with `s` the circuit arclength;
//! * boundary operator — `i,j,re,im` plus a JSON sidecar
//!   `{alpha, E, n, kind}`;
//! * Green table — `src_i,src_j,x_i,x_j,re,im` (source lattice indices,
//!   target coordinates);
//! * reconstruction — `x,y,v_true_diff,v_est,err,lambda`;
//! * rate table — `lambda,max_err,fit_p`;
//! * stability sweep — `eps,alpha,delta_alpha,sup_diff,C_fit,s_fit`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::cgo2d::RateTable;
use crate::domain::{BoundaryIndex, BoundaryTrace, GridFunction};
use crate::error::Result;
use crate::experiments::StabilityRecord;
use crate::green::GreenColumns;
use crate::impedance::BoundaryOperator;

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

/// Write a grid function.
pub fn write_grid_function(path: &Path, f: &GridFunction) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "y", "re", "im"])?;
    for (k, v) in f.values.iter().enumerate() {
        let (x, y) = f.grid.coords(k);
        w.serialize((x, y, v.re, v.im))?;
    }
    w.flush()?;
    Ok(())
}

/// Write a boundary trace.
pub fn write_trace(path: &Path, t: &BoundaryTrace, bnd: &BoundaryIndex) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["s", "x", "y", "re", "im"])?;
    for (v, b) in t.values.iter().zip(&bnd.nodes) {
        w.serialize((b.s, b.x, b.y, v.re, v.im))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OperatorSidecar<'a> {
    alpha: f64,
    #[serde(rename = "E")]
    energy: f64,
    n: usize,
    kind: &'a crate::impedance::OperatorKind,
}

/// Write a boundary operator (`path`) and its JSON sidecar
/// (`path` with extension `json`).
pub fn write_operator(path: &Path, op: &BoundaryOperator) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "re", "im"])?;
    let m = op.dim();
    for i in 0..m {
        for j in 0..m {
            let v = op.data[i * m + j];
            w.serialize((i, j, v.re, v.im))?;
        }
    }
    w.flush()?;
    let side = OperatorSidecar {
        alpha: op.alpha,
        energy: op.energy,
        n: op.grid.n,
        kind: &op.kind,
    };
    write_json(&path.with_extension("json"), &side)
}

/// Write Green columns: one row per (source, target node).
pub fn write_green_table(path: &Path, g: &GreenColumns) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["src_i", "src_j", "x_i", "x_j", "re", "im"])?;
    for (k, &s) in g.sources.iter().enumerate() {
        let (si, sj) = g.grid.lattice(s);
        for (t, v) in g.columns[k].values.iter().enumerate() {
            let (x, y) = g.grid.coords(t);
            w.serialize((si, sj, x, y, v.re, v.im))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write the per-point reconstruction rows of a rate study.
pub fn write_reconstruction(path: &Path, table: &RateTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "y", "v_true_diff", "v_est", "err", "lambda"])?;
    for r in &table.rows {
        w.serialize((r.z0.re, r.z0.im, r.v_true_diff, r.v_est, r.err, r.lambda))?;
    }
    w.flush()?;
    Ok(())
}

/// Write the rate table.
pub fn write_rate(path: &Path, table: &RateTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["lambda", "max_err", "fit_p"])?;
    for &(l, e) in &table.max_err {
        w.serialize((l, e, table.fit_p))?;
    }
    w.flush()?;
    Ok(())
}

/// Write stability records.
pub fn write_sweep(path: &Path, records: &[StabilityRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["eps", "alpha", "delta_alpha", "sup_diff", "C_fit", "s_fit"])?;
    for r in records {
        w.serialize((r.eps, r.alpha, r.delta_alpha, r.sup_diff, r.c_fit, r.s_fit))?;
    }
    w.flush()?;
    Ok(())
}

/// Write any serializable rows with a header taken from `header`.
pub fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
