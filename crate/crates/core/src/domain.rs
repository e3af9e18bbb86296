//! Discretization of the unit square: grid, boundary circuit, traces,
//! normal derivatives and quadrature.
//!
//! The grid has `n` interior nodes per axis and spacing `h = 1/(n+1)`.
//! Every node sits at integer lattice coordinates `(i, j)` with
//! `x = i h`, `y = j h`. Nodes are numbered as follows:
//!
//! * interior nodes `1 ≤ i, j ≤ n` first, row-major with `x` fastest:
//!   index `(j-1) n + (i-1)`;
//! * then the `4n` boundary nodes (the four corners are excluded) as a
//!   counter-clockwise circuit starting at `(h, 0)`: bottom edge left to
//!   right, right edge bottom to top, top edge right to left, left edge top
//!   to bottom.
//!
//! The outward normal derivative at a boundary node uses the second-order
//! one-sided stencil `(3ψ_b − 4ψ₁ + ψ₂)/(2h)` along the inward grid line.
//!
//! Boundary quadrature: each edge carries the composite trapezoid rule with
//! the (missing) corner values linearly extrapolated from the two nearest
//! edge nodes. This folds into the weights `2h, h/2, h, …, h, h/2, 2h`
//! along every edge, integrates affine functions on each edge exactly, sums
//! to the true perimeter 4 and is second-order accurate on smooth data.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest admissible number of interior nodes per axis.
pub const MIN_N: usize = 8;

/// Uniform Cartesian discretization of the closed unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Interior nodes per axis.
    pub n: usize,
    /// Grid spacing `1/(n+1)`.
    pub h: f64,
}

impl GridSpec {
    /// Number of interior nodes.
    pub fn interior_count(&self) -> usize {
        self.n * self.n
    }

    /// Number of boundary nodes (corners excluded).
    pub fn boundary_count(&self) -> usize {
        4 * self.n
    }

    /// Total node count (interior + boundary).
    pub fn node_count(&self) -> usize {
        self.interior_count() + self.boundary_count()
    }

    /// Global index of the interior node at lattice position `(i, j)`,
    /// `1 ≤ i, j ≤ n`.
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j));
        (j - 1) * self.n + (i - 1)
    }

    /// Whether a global node index refers to an interior node.
    pub fn is_interior(&self, node: usize) -> bool {
        node < self.interior_count()
    }

    /// Global index of the `k`-th node of the boundary circuit.
    pub fn boundary_node(&self, k: usize) -> usize {
        self.interior_count() + k
    }

    /// Lattice coordinates `(i, j)` of a node (`x = i h`, `y = j h`).
    pub fn lattice(&self, node: usize) -> (usize, usize) {
        let n = self.n;
        if node < n * n {
            return (node % n + 1, node / n + 1);
        }
        let k = node - n * n;
        let (edge, p) = (k / n, k % n);
        match edge {
            0 => (p + 1, 0),
            1 => (n + 1, p + 1),
            2 => (n - p, n + 1),
            _ => (0, n - p),
        }
    }

    /// Global index of the node at lattice position `(i, j)`, or `None` for
    /// the corners and positions outside the closed square.
    pub fn node_at(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.n;
        if i > n + 1 || j > n + 1 {
            return None;
        }
        let on_x_edge = i == 0 || i == n + 1;
        let on_y_edge = j == 0 || j == n + 1;
        match (on_x_edge, on_y_edge) {
            (true, true) => None,
            (false, false) => Some(self.interior_index(i, j)),
            (false, true) => {
                let k = if j == 0 { i - 1 } else { 2 * n + (n - i) };
                Some(n * n + k)
            }
            (true, false) => {
                let k = if i == n + 1 {
                    n + (j - 1)
                } else {
                    3 * n + (n - j)
                };
                Some(n * n + k)
            }
        }
    }

    /// Physical coordinates `(x, y)` of a node.
    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.lattice(node);
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Node position as a complex number `x + i y`.
    pub fn z(&self, node: usize) -> Complex64 {
        let (x, y) = self.coords(node);
        Complex64::new(x, y)
    }

    /// Area weight of a node in the two-dimensional trapezoid rule
    /// (`h²` inside, `h²/2` on the boundary circuit).
    pub fn area_weight(&self, node: usize) -> f64 {
        if self.is_interior(node) {
            self.h * self.h
        } else {
            0.5 * self.h * self.h
        }
    }

    /// Lattice distance of a node to the boundary (0 on the circuit,
    /// 1 on the first interior ring, ...).
    pub fn depth(&self, node: usize) -> usize {
        let (i, j) = self.lattice(node);
        let n1 = self.n + 1;
        i.min(j).min(n1 - i).min(n1 - j)
    }
}

/// One node of the boundary circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryNode {
    /// Global node index.
    pub node: usize,
    /// Coordinates.
    pub x: f64,
    pub y: f64,
    /// Outward unit normal (one of ±e₁, ±e₂).
    pub normal: (f64, f64),
    /// Arclength along the circuit measured counter-clockwise from the
    /// corner `(0, 0)`.
    pub s: f64,
    /// Quadrature weight.
    pub weight: f64,
    /// Global indices of the first and second nodes along the inward
    /// normal line (used by the one-sided normal derivative).
    pub inward: [usize; 2],
}

/// Ordered boundary circuit with normals and quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryIndex {
    pub nodes: Vec<BoundaryNode>,
}

impl BoundaryIndex {
    /// Number of boundary nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Whether the circuit is empty (never true for a built grid).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weights in circuit order.
    pub fn weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|b| b.weight).collect()
    }

    /// Euclidean distance from boundary node `k` to the nearest corner of
    /// the square.
    pub fn corner_distance(&self, k: usize) -> f64 {
        let b = &self.nodes[k];
        let dx = b.x.min(1.0 - b.x);
        let dy = b.y.min(1.0 - b.y);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Build the grid and its boundary circuit.
///
/// Errors with [`Error::Config`] when `n < 8`.
pub fn build_grid(n: usize) -> Result<(GridSpec, BoundaryIndex)> {
    if n < MIN_N {
        return Err(Error::Config(format!(
            "grid needs at least {MIN_N} interior nodes per axis, got {n}"
        )));
    }
    let grid = GridSpec {
        n,
        h: 1.0 / (n + 1) as f64,
    };
    let h = grid.h;
    let mut nodes = Vec::with_capacity(4 * n);
    for k in 0..4 * n {
        let node = grid.boundary_node(k);
        let (i, j) = grid.lattice(node);
        let (x, y) = grid.coords(node);
        let (edge, p) = (k / n, k % n);
        let (normal, s, inward) = match edge {
            0 => ((0.0, -1.0), x, [(i, 1), (i, 2)]),
            1 => ((1.0, 0.0), 1.0 + y, [(n, j), (n - 1, j)]),
            2 => ((0.0, 1.0), 2.0 + (1.0 - x), [(i, n), (i, n - 1)]),
            _ => ((-1.0, 0.0), 3.0 + (1.0 - y), [(1, j), (2, j)]),
        };
        let weight = if p == 0 || p == n - 1 {
            2.0 * h
        } else if p == 1 || p == n - 2 {
            0.5 * h
        } else {
            h
        };
        let inward = inward.map(|(a, b)| grid.interior_index(a, b));
        nodes.push(BoundaryNode {
            node,
            x,
            y,
            normal,
            s,
            weight,
            inward,
        });
    }
    Ok((grid, BoundaryIndex { nodes }))
}

/// Complex scalar field on all nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    /// The zero field.
    pub fn zeros(grid: GridSpec) -> Self {
        GridFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.node_count()],
        }
    }

    /// Evaluate a function of `(x, y)` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        GridFunction { grid, values }
    }

    /// Evaluate a real function of `(x, y)` at every node.
    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |x, y| Complex64::new(f(x, y), 0.0))
    }

    /// Wrap a value vector, checking its length.
    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Mismatch(format!(
                "grid function needs {} values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    /// Maximum modulus over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Whether every value has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// Real parts as a vector.
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Nodewise product.
    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    /// Nodewise difference `self − other`.
    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    /// Nodewise complex conjugate.
    pub fn conj(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }
}

/// Complex values on the boundary circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub values: Vec<Complex64>,
}

impl BoundaryTrace {
    /// The zero trace on `m` nodes.
    pub fn zeros(m: usize) -> Self {
        BoundaryTrace {
            values: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    /// Evaluate a function of a boundary node at every circuit position.
    pub fn from_fn(bnd: &BoundaryIndex, f: impl Fn(&BoundaryNode) -> Complex64) -> Self {
        BoundaryTrace {
            values: bnd.nodes.iter().map(f).collect(),
        }
    }

    /// Number of values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the trace has no values.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Maximum modulus.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Linear combination `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &BoundaryTrace, b: Complex64) -> BoundaryTrace {
        BoundaryTrace {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// Nodewise product.
    pub fn mul(&self, other: &BoundaryTrace) -> BoundaryTrace {
        BoundaryTrace {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x * y)
                .collect(),
        }
    }
}

/// Restriction of `ψ` to the boundary circuit.
pub fn trace(psi: &GridFunction) -> BoundaryTrace {
    let g = psi.grid;
    BoundaryTrace {
        values: (0..g.boundary_count())
            .map(|k| psi.values[g.boundary_node(k)])
            .collect(),
    }
}

/// Outward normal derivative by the one-sided stencil
/// `(3ψ_b − 4ψ₁ + ψ₂)/(2h)`.
pub fn normal_derivative(psi: &GridFunction) -> BoundaryTrace {
    let g = psi.grid;
    let (_, bnd) = build_grid(g.n).expect("grid function carries a valid grid");
    normal_derivative_with(psi, &bnd)
}

/// [`normal_derivative`] with a prebuilt boundary index.
pub fn normal_derivative_with(psi: &GridFunction, bnd: &BoundaryIndex) -> BoundaryTrace {
    let h = psi.grid.h;
    BoundaryTrace {
        values: bnd
            .nodes
            .iter()
            .map(|b| {
                let v = &psi.values;
                (3.0 * v[b.node] - 4.0 * v[b.inward[0]] + v[b.inward[1]]) / (2.0 * h)
            })
            .collect(),
    }
}

/// Robin trace `[ψ]_α = cos α ψ − sin α ∂ψ/∂ν`.
pub fn robin_trace(psi: &GridFunction, alpha: f64) -> BoundaryTrace {
    let t = trace(psi);
    let d = normal_derivative(psi);
    robin_combine(&t, &d, alpha)
}

/// Robin combination of given Dirichlet and Neumann traces.
pub fn robin_combine(value: &BoundaryTrace, normal: &BoundaryTrace, alpha: f64) -> BoundaryTrace {
    value.combine(
        Complex64::new(alpha.cos(), 0.0),
        normal,
        Complex64::new(-alpha.sin(), 0.0),
    )
}

/// Composite quadrature `Σ f_i h²` over the interior nodes.
pub fn volume_integral(f: &GridFunction) -> Complex64 {
    let g = f.grid;
    let s: Complex64 = f.values[..g.interior_count()].iter().sum();
    s * (g.h * g.h)
}

/// Boundary quadrature `Σ g_j w_j` with the circuit weights.
pub fn boundary_integral(g: &BoundaryTrace, bnd: &BoundaryIndex) -> Result<Complex64> {
    if g.len() != bnd.len() {
        return Err(Error::Mismatch(format!(
            "boundary trace has {} values, circuit has {} nodes",
            g.len(),
            bnd.len()
        )));
    }
    Ok(g.values
        .iter()
        .zip(&bnd.nodes)
        .map(|(v, b)| v * b.weight)
        .sum())
}
