//! Numerical laboratory for the impedance (Robin-to-Robin) boundary map of
//! the two-dimensional Schrödinger equation `−Δψ + vψ = Eψ` on the unit
//! square.
//!
//! Modules, bottom-up:
//!
//! * [`domain`] — grid, boundary circuit, traces, normal derivatives and
//!   quadrature;
//! * [`linalg`] — banded LU and GMRES;
//! * [`forward`] — the discrete Robin problem, its factorization and
//!   spectral diagnostics;
//! * [`impedance`] — the boundary map `M̂_α(E)` and its identities;
//! * [`green`] — Robin Green functions, the kernel relation and the
//!   resolvent identity;
//! * [`cgo2d`] — complex geometrical optics solutions and pointwise
//!   reconstruction;
//! * [`potential`] — smooth compactly supported potentials;
//! * [`experiments`] — integral-identity checks, stability sweeps, rate fits;
//! * [`config`], [`io`], [`cli`] — configuration, artifacts and commands.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too, and
// the banded kernels index several arrays with one loop variable.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cgo2d;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod green;
pub mod impedance;
pub mod io;
pub mod linalg;
pub mod potential;

pub use error::{Error, Result};
