//! Small self-contained linear algebra: a banded LU factorization with
//! partial pivoting (plus transposed solves) and restarted GMRES for
//! matrix-free complex operators.

use std::ops::{Div, Mul, SubAssign};

use num_complex::Complex64;

/// Scalar types a real banded factorization can be applied to.
pub trait Scalar: Copy + SubAssign + Mul<f64, Output = Self> + Div<f64, Output = Self> {}
impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// Real square matrix stored by rows inside a band `[r − kl, r + ku]`,
/// factorized in place as `P L U` with partial pivoting (LAPACK `gbtrf`
/// layout: multipliers kept per elimination step, pivots applied in order).
#[derive(Clone, Debug)]
pub struct BandLu {
    dim: usize,
    kl: usize,
    ku: usize,
    /// Row stride: `2 kl + ku + 1` (upper band widened by `kl` for fill-in).
    width: usize,
    /// `a[r * width + (c + kl − r)]` holds entry `(r, c)` of `U`.
    a: Vec<f64>,
    /// `l[k * kl + (p − k − 1)]` is the multiplier for row `p` at step `k`.
    l: Vec<f64>,
    piv: Vec<usize>,
    /// Index of the first exactly-zero pivot, if any.
    zero_pivot: Option<usize>,
}

impl BandLu {
    /// Factorize a matrix given as `(row, col, value)` triplets in band
    /// ordering. Duplicate entries are summed.
    pub fn factor(dim: usize, entries: &[(usize, usize, f64)]) -> BandLu {
        let mut kl = 0;
        let mut ku = 0;
        for &(r, c, _) in entries {
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        let width = 2 * kl + ku + 1;
        let mut a = vec![0.0; dim * width];
        for &(r, c, v) in entries {
            a[r * width + (c + kl - r)] += v;
        }
        let mut lu = BandLu {
            dim,
            kl,
            ku,
            width,
            a,
            l: vec![0.0; dim * kl.max(1)],
            piv: vec![0; dim],
            zero_pivot: None,
        };
        lu.eliminate();
        lu
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + (c + self.kl - r)]
    }

    fn eliminate(&mut self) {
        let (dim, kl, ku, w) = (self.dim, self.kl, self.ku, self.width);
        for k in 0..dim {
            let last_row = (k + kl).min(dim - 1);
            let last_col = (k + kl + ku).min(dim - 1);
            // Partial pivoting: first row with the largest modulus.
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            self.piv[k] = p;
            if best == 0.0 {
                if self.zero_pivot.is_none() {
                    self.zero_pivot = Some(k);
                }
                continue;
            }
            if p != k {
                for c in k..=last_col {
                    let ik = k * w + (c + kl - k);
                    let ip = p * w + (c + kl - p);
                    self.a.swap(ik, ip);
                }
            }
            let pivot = self.at(k, k);
            for r in k + 1..=last_row {
                let m = self.at(r, k) / pivot;
                self.l[k * kl + (r - k - 1)] = m;
                if m == 0.0 {
                    continue;
                }
                self.a[r * w + (k + kl - r)] = 0.0;
                for c in k + 1..=last_col {
                    let u = self.a[k * w + (c + kl - k)];
                    if u != 0.0 {
                        self.a[r * w + (c + kl - r)] -= m * u;
                    }
                }
            }
        }
    }

    /// Dimension of the factorized matrix.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether elimination met an exactly zero pivot column.
    pub fn is_singular(&self) -> bool {
        self.zero_pivot.is_some()
    }

    /// Smallest modulus among the diagonal entries of `U`.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dim)
            .map(|k| self.at(k, k).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place<T: Scalar>(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.dim, "right-hand side length");
        let (dim, kl, ku) = (self.dim, self.kl, self.ku);
        for k in 0..dim {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(dim - 1) {
                let m = self.l[k * kl + (r - k - 1)];
                if m != 0.0 {
                    b[r] -= bk * m;
                }
            }
        }
        for k in (0..dim).rev() {
            let mut acc = b[k];
            for c in k + 1..=(k + kl + ku).min(dim - 1) {
                let u = self.at(k, c);
                if u != 0.0 {
                    acc -= b[c] * u;
                }
            }
            b[k] = acc / self.at(k, k);
        }
    }

    /// Solve `Aᵀ x = b` in place.
    pub fn solve_transpose_in_place<T: Scalar>(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.dim, "right-hand side length");
        let (dim, kl, ku) = (self.dim, self.kl, self.ku);
        // Uᵀ z = b (forward substitution, Uᵀ lower triangular).
        for k in 0..dim {
            let zk = b[k] / self.at(k, k);
            b[k] = zk;
            for c in k + 1..=(k + kl + ku).min(dim - 1) {
                let u = self.at(k, c);
                if u != 0.0 {
                    b[c] -= zk * u;
                }
            }
        }
        // Undo the elimination steps in reverse order, transposed.
        for k in (0..dim).rev() {
            let mut acc = b[k];
            for r in k + 1..=(k + kl).min(dim - 1) {
                let m = self.l[k * kl + (r - k - 1)];
                if m != 0.0 {
                    acc -= b[r] * m;
                }
            }
            b[k] = acc;
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}

/// Summary of a GMRES run.
#[derive(Clone, Debug)]
pub struct GmresReport {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted GMRES(`restart`) for `A x = b` with a matrix-free operator.
///
/// Stops when the Euclidean residual is at most `tol · ‖b‖₂` or after
/// `max_iter` inner iterations in total.
pub fn gmres(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    x0: &[Complex64],
    restart: usize,
    tol: f64,
    max_iter: usize,
) -> GmresReport {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = x0.to_vec();
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta <= tol * bnorm || total >= max_iter {
            return GmresReport {
                solution: x,
                iterations: total,
                residual: beta / bnorm,
                converged: beta <= tol * bnorm,
            };
        }
        let m = restart.min(max_iter - total).max(1);
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = apply(&basis[j]);
            for (i, q) in basis.iter().enumerate() {
                let hij = dot(q, &w);
                hess[i][j] = hij;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= hij * qk;
                }
            }
            let hnext = norm2(&w);
            hess[j + 1][j] = Complex64::new(hnext, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (a, bb) = (hess[j][j], hess[j + 1][j]);
            let rho = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if rho == 0.0 {
                cs[j] = Complex64::new(1.0, 0.0);
                sn[j] = zero;
            } else {
                cs[j] = a / rho;
                sn[j] = bb / rho;
            }
            hess[j][j] = cs[j].conj() * a + sn[j].conj() * bb;
            hess[j + 1][j] = zero;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            used = j + 1;
            total += 1;
            if g[j + 1].norm() <= tol * bnorm || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|z| z / hnext).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![zero; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= hess[i][k] * y[k];
            }
            y[i] = acc / hess[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yk * basis[k][i];
            }
        }
    }
}
