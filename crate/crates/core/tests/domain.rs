//! Grid layout, boundary circuit, traces and quadrature.

use impedance_lab::domain::{
    boundary_integral, build_grid, normal_derivative, robin_trace, trace, volume_integral,
    BoundaryTrace, GridFunction,
};
use impedance_lab::Error;
use num_complex::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn rejects_small_grids() {
    assert!(matches!(build_grid(7), Err(Error::Config(_))));
    assert!(build_grid(8).is_ok());
}

#[test]
fn node_counts_and_interior_ordering() {
    let (g, bnd) = build_grid(10).unwrap();
    assert_eq!(g.h, 1.0 / 11.0);
    assert_eq!(g.interior_count(), 100);
    assert_eq!(g.boundary_count(), 40);
    assert_eq!(g.node_count(), 140);
    assert_eq!(bnd.len(), 40);
    // Row-major, x fastest.
    assert_eq!(g.interior_index(1, 1), 0);
    assert_eq!(g.interior_index(2, 1), 1);
    assert_eq!(g.interior_index(1, 2), 10);
    for k in 0..g.node_count() {
        let (i, j) = g.lattice(k);
        assert_eq!(g.node_at(i, j), Some(k));
        let (x, y) = g.coords(k);
        assert!((x - i as f64 * g.h).abs() < 1e-15 && (y - j as f64 * g.h).abs() < 1e-15);
    }
    assert_eq!(g.node_at(0, 0), None, "corners are not nodes");
    assert_eq!(g.node_at(11, 11), None);
}

#[test]
fn circuit_is_counter_clockwise_from_first_bottom_node() {
    let (g, bnd) = build_grid(8).unwrap();
    let h = g.h;
    let first = bnd.nodes[0];
    assert!((first.x - h).abs() < 1e-15 && first.y == 0.0);
    assert_eq!(first.normal, (0.0, -1.0));
    // Arclength from the corner (0,0) increases strictly around the circuit.
    for w in bnd.nodes.windows(2) {
        assert!(w[1].s > w[0].s);
    }
    let n = g.n;
    assert_eq!(bnd.nodes[n].normal, (1.0, 0.0));
    assert_eq!(bnd.nodes[2 * n].normal, (0.0, 1.0));
    assert_eq!(bnd.nodes[3 * n].normal, (-1.0, 0.0));
    // Arclength agrees with the walked distance.
    for b in &bnd.nodes {
        let expect = if b.y == 0.0 {
            b.x
        } else if b.x == 1.0 {
            1.0 + b.y
        } else if b.y == 1.0 {
            3.0 - b.x
        } else {
            4.0 - b.y
        };
        assert!((b.s - expect).abs() < 1e-14);
    }
}

#[test]
fn inward_neighbours_lie_along_the_inward_normal() {
    let (g, bnd) = build_grid(9).unwrap();
    for b in &bnd.nodes {
        for (d, &k) in b.inward.iter().enumerate() {
            let (x, y) = g.coords(k);
            let step = (d + 1) as f64 * g.h;
            assert!((x - (b.x - step * b.normal.0)).abs() < 1e-14);
            assert!((y - (b.y - step * b.normal.1)).abs() < 1e-14);
        }
    }
}

#[test]
fn boundary_weights_are_exact_for_affine_data_per_edge() {
    let (_, bnd) = build_grid(12).unwrap();
    let one = BoundaryTrace::from_fn(&bnd, |_| c(1.0));
    let total = boundary_integral(&one, &bnd).unwrap();
    assert!((total.re - 4.0).abs() < 1e-13);
    // ∮ x ds: bottom ½, right 1, top ½, left 0.
    let x = BoundaryTrace::from_fn(&bnd, |b| c(b.x));
    assert!((boundary_integral(&x, &bnd).unwrap().re - 2.0).abs() < 1e-13);
    // ∮ (2x + 3y) ds = 2·2 + 3·2.
    let affine = BoundaryTrace::from_fn(&bnd, |b| c(2.0 * b.x + 3.0 * b.y));
    assert!((boundary_integral(&affine, &bnd).unwrap().re - 10.0).abs() < 1e-12);
}

#[test]
fn boundary_quadrature_converges_for_smooth_data() {
    // ∮ x² ds = 1/3 + 1 + 1/3 + 0 = 5/3.
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let (_, bnd) = build_grid(n).unwrap();
            let f = BoundaryTrace::from_fn(&bnd, |b| c(b.x * b.x));
            (boundary_integral(&f, &bnd).unwrap().re - 5.0 / 3.0).abs()
        })
        .collect();
    assert!(errs[2] < errs[1] && errs[1] < errs[0]);
    assert!(errs[1] / errs[2] > 3.0, "second order: {errs:?}");
}

#[test]
fn boundary_integral_rejects_wrong_length() {
    let (_, bnd) = build_grid(8).unwrap();
    assert!(matches!(
        boundary_integral(&BoundaryTrace::zeros(3), &bnd),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn normal_derivative_is_exact_for_quadratics() {
    let (g, bnd) = build_grid(10).unwrap();
    let psi = GridFunction::from_real_fn(g, |x, y| 1.0 + 2.0 * x - y + x * x + 3.0 * y * y);
    let d = normal_derivative(&psi);
    for (b, v) in bnd.nodes.iter().zip(&d.values) {
        let grad = (2.0 + 2.0 * b.x, -1.0 + 6.0 * b.y);
        let exact = grad.0 * b.normal.0 + grad.1 * b.normal.1;
        assert!((v.re - exact).abs() < 1e-10, "{} vs {exact}", v.re);
    }
}

#[test]
fn robin_trace_interpolates_dirichlet_and_neumann() {
    let (g, _) = build_grid(8).unwrap();
    let psi = GridFunction::from_real_fn(g, |x, y| x * y + x);
    let t = trace(&psi);
    let d = normal_derivative(&psi);
    let r0 = robin_trace(&psi, 0.0);
    let r90 = robin_trace(&psi, std::f64::consts::FRAC_PI_2);
    for k in 0..t.len() {
        assert!((r0.values[k] - t.values[k]).norm() < 1e-14);
        assert!((r90.values[k] + d.values[k]).norm() < 1e-12);
    }
}

#[test]
fn volume_integral_uses_interior_nodes() {
    let (g, _) = build_grid(9).unwrap();
    let one = GridFunction::from_real_fn(g, |_, _| 1.0);
    let v = volume_integral(&one);
    assert!((v.re - 81.0 * g.h * g.h).abs() < 1e-14);
    // A bump vanishing near the boundary is integrated to spectral accuracy.
    let (g, _) = build_grid(40).unwrap();
    let f = GridFunction::from_real_fn(g, |x, y| {
        (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.01).exp()
    });
    let exact = std::f64::consts::PI * 0.01;
    assert!((volume_integral(&f).re - exact).abs() < 1e-8);
}

#[test]
fn depth_counts_lattice_steps_to_the_boundary() {
    let (g, bnd) = build_grid(8).unwrap();
    assert_eq!(g.depth(g.interior_index(1, 5)), 1);
    assert_eq!(g.depth(g.interior_index(4, 4)), 4);
    assert_eq!(g.depth(bnd.nodes[3].node), 0);
}

#[test]
fn grid_function_algebra() {
    let (g, _) = build_grid(8).unwrap();
    let a = GridFunction::from_fn(g, Complex64::new);
    let b = a.conj();
    assert!(!a.is_real());
    assert!(a.mul(&b).is_real());
    assert_eq!(a.sub(&a).sup_norm(), 0.0);
    assert!(matches!(
        GridFunction::from_values(g, vec![c(0.0); 3]),
        Err(Error::Mismatch(_))
    ));
}
