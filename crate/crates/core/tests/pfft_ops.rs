//! Precorrected-FFT operator: grid construction, projection accuracy,
//! Toeplitz convolution, precorrection exactness and whole-operator fidelity
//! against the dense inductive matrix.

mod common;

use common::*;
use num_complex::Complex;
use parex::assembly::quadrature::{bary_point, TRI_GAUSS_16};
use parex::assembly::{
    assemble_lb_dense, edge_pair_entry, rwg, AssemblyOptions, LbBackend,
};
use parex::geom::Vec3;
use parex::pfft::{
    build_grid, grid_kernel_direct, point_stencil_weights, GridKernel, PfftOptions,
    PrecorrectedOperator, Projection,
};

fn opts() -> PfftOptions<f64> {
    PfftOptions::default()
}

#[test]
fn stencil_has_27_nodes_at_order_2() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::tetrahedron(1e-6));
    let grid = build_grid(&mesh, &edges, &opts()).unwrap();
    assert_eq!(grid.order, 2);
    assert_eq!(grid.stencil_nodes_per_edge(), 27);
    // coverage: every stencil cube lies inside the grid
    for e in 0..edges.len() {
        let b = grid.base(e);
        for axis in 0..3 {
            assert!(b[axis] + 3 <= grid.dims[axis]);
        }
    }
}

#[test]
fn doubling_spacing_halves_dims() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::box_grid(
        [40e-6, 40e-6, 80e-6],
        [4, 4, 8],
    ));
    let h = 0.5e-6;
    let g1 = build_grid(
        &mesh,
        &edges,
        &PfftOptions {
            spacing: Some(h),
            ..opts()
        },
    )
    .unwrap();
    let g2 = build_grid(
        &mesh,
        &edges,
        &PfftOptions {
            spacing: Some(2.0 * h),
            ..opts()
        },
    )
    .unwrap();
    // recount: both grids must cover the padded bounding box, and the
    // covered extent per axis shrinks by a factor close to two
    let (lo, hi) = mesh.bounding_box();
    for axis in 0..3 {
        let span = hi.comp(axis) - lo.comp(axis);
        assert!(g1.dims[axis] as f64 * h >= span);
        assert!(g2.dims[axis] as f64 * 2.0 * h >= span);
        let ratio = g1.dims[axis] as f64 / g2.dims[axis] as f64;
        assert!((1.5..=2.5).contains(&ratio), "axis {axis}: ratio {ratio}");
    }
}

#[test]
fn kernel_is_shift_invariant() {
    let h = 5e-7;
    let tri = parex_testmesh::box_grid([2e-6, 2e-6, 4e-6], [1, 1, 2]);
    let (mesh, edges) = mesh_and_edges(&tri);
    let shifted = tri.clone().translated([h, 0.0, 0.0]);
    let (mesh2, edges2) = mesh_and_edges(&shifted);
    let o = PfftOptions {
        spacing: Some(h),
        ..opts()
    };
    let g1 = build_grid(&mesh, &edges, &o).unwrap();
    let g2 = build_grid(&mesh2, &edges2, &o).unwrap();
    assert_eq!(g1.dims, g2.dims);
    // Toeplitz: the kernel depends only on displacement, so a one-spacing
    // translation leaves every table entry unchanged
    for (a, b) in [(0, 1), (1, 2), (3, 5)] {
        let ka = grid_kernel_direct(h, [a, 0, 0], [b, 1, 2]);
        let kb = grid_kernel_direct(h, [a + 1, 0, 0], [b + 1, 1, 2]);
        assert_eq!(ka, kb);
    }
}

#[test]
fn point_source_on_node_projects_to_unit_weight() {
    for order in [1usize, 2, 3] {
        let k = order + 1;
        for node in [[0usize, 0, 0], [1, 0, 0], [k - 1, k - 1, k - 1]] {
            let u = Vec3::new(node[0] as f64, node[1] as f64, node[2] as f64);
            let w = point_stencil_weights(order, u);
            for iz in 0..k {
                for iy in 0..k {
                    for ix in 0..k {
                        let expect = if [ix, iy, iz] == node { 1.0 } else { 0.0 };
                        let got = w[(iz * k + iy) * k + ix];
                        assert!((got - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn projected_moment_matches_dipole() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::icosphere(1e-6, 1));
    let grid = build_grid(&mesh, &edges, &opts()).unwrap();
    let projection = Projection::build(&mesh, &edges, &grid).unwrap();
    for e in 0..edges.len() {
        let m0 = projection.moment0(e);
        let dipole = rwg::dipole_moment(&mesh, &edges, e);
        assert!(
            (m0 - dipole).norm() / dipole.norm() < 1e-10,
            "edge {e}: {:?} vs {:?}",
            m0,
            dipole
        );
    }
}

#[test]
fn projected_far_potential_within_1e3() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::tetrahedron(1e-6));
    let grid = build_grid(&mesh, &edges, &opts()).unwrap();
    let projection = Projection::build(&mesh, &edges, &grid).unwrap();
    let e = 0;
    let c = edges.support_centroid(&mesh, e);
    let obs = c + Vec3::new(10.0 * grid.h, 3.0 * grid.h, -2.0 * grid.h);
    // exact potential of each Cartesian current component
    let edge = edges.edge(e);
    let mut exact = Vec3::zero();
    for &t in &[edge.tri_plus, edge.tri_minus] {
        let v = mesh.triangle_vertices(t);
        let area = mesh.triangle_area(t);
        for node in &TRI_GAUSS_16 {
            let r = bary_point(&v, node);
            let f = rwg::value_on_triangle(&mesh, &edges, e, t, r);
            let g = 1.0 / (4.0 * std::f64::consts::PI * obs.dist(r));
            exact += f * (g * node.w * area);
        }
    }
    let mut projected = Vec3::zero();
    let k = grid.order + 1;
    let b = grid.base(e);
    for iz in 0..k {
        for iy in 0..k {
            for ix in 0..k {
                let pos = grid.node_position([b[0] + ix, b[1] + iy, b[2] + iz]);
                let g = 1.0 / (4.0 * std::f64::consts::PI * obs.dist(pos));
                let idx = (iz * k + iy) * k + ix;
                projected.x += projection.edge_component(e, 0)[idx] * g;
                projected.y += projection.edge_component(e, 1)[idx] * g;
                projected.z += projection.edge_component(e, 2)[idx] * g;
            }
        }
    }
    let rel = (projected - exact).norm() / exact.norm();
    assert!(rel <= 1e-3, "far potential error {rel:.2e}");
}

#[test]
fn convolution_matches_dense_toeplitz() {
    let dims = [8usize, 8, 8];
    let h = 1.0;
    let kernel = GridKernel::<f64>::build(dims, h);
    let n = dims[0] * dims[1] * dims[2];
    let q = random_complex_vec(n, 9);
    let phi = kernel.convolve(dims, &q);

    // dense Toeplitz oracle
    let node = |i: usize| -> [usize; 3] {
        [
            i % dims[0],
            (i / dims[0]) % dims[1],
            i / (dims[0] * dims[1]),
        ]
    };
    let mut want = vec![Complex::new(0.0, 0.0); n];
    for (g, w) in want.iter_mut().enumerate() {
        let a = node(g);
        let mut acc = Complex::new(0.0, 0.0);
        for (gp, qv) in q.iter().enumerate() {
            acc += qv * grid_kernel_direct(h, a, node(gp));
        }
        *w = acc;
    }
    let mut max_abs = 0.0f64;
    for (a, b) in phi.iter().zip(&want) {
        max_abs = max_abs.max((a - b).norm());
    }
    assert!(max_abs <= 1e-12, "max abs dev {max_abs:e}");
    assert!(rel_vec(&phi, &want) <= 1e-10);

    // unit source at one node reproduces the kernel value pointwise
    let mut delta = vec![Complex::new(0.0, 0.0); n];
    let src = 3 + 8 * (2 + 8 * 5);
    delta[src] = Complex::new(1.0, 0.0);
    let phi_d = kernel.convolve(dims, &delta);
    for g in [0usize, 7, 100, 511] {
        let want = grid_kernel_direct(h, node(g), node(src));
        assert!((phi_d[g].re - want).abs() <= 1e-12);
        assert!(phi_d[g].im.abs() <= 1e-12);
    }

    // linearity
    let x = random_complex_vec(n, 10);
    let y = random_complex_vec(n, 11);
    let xy: Vec<C64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let fx = kernel.convolve(dims, &x);
    let fy = kernel.convolve(dims, &y);
    let fxy = kernel.convolve(dims, &xy);
    for i in 0..n {
        assert!((fxy[i] - fx[i] - fy[i]).norm() < 1e-12);
    }
}

#[test]
fn precorrection_identities() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::box_grid(
        [2e-6, 2e-6, 8e-6],
        [1, 1, 4],
    ));
    let asm_opts = AssemblyOptions::default();
    let op = PrecorrectedOperator::build(&mesh, &edges, &asm_opts, &opts()).unwrap();
    // near self pair: L_d(i,i) + grid contribution reproduces the dense entry
    for i in (0..edges.len()).step_by(5) {
        let exact = edge_pair_entry(&mesh, &edges, i, i, &asm_opts, None);
        let rebuilt = op.l_d().get(i, i) + op.grid_pair(i, i);
        assert!(
            rel_err(rebuilt, exact) <= 1e-12,
            "edge {i}: rel {:.2e}",
            rel_err(rebuilt, exact)
        );
    }
    // pairs beyond the near reach carry no L_d entry at all
    let reach = op.near_reach();
    let within = op.near_pairs().iter().all(|&(i, j)| {
        let (bi, bj) = (op.grid().base(i), op.grid().base(j));
        (0..3).all(|a| bi[a].abs_diff(bj[a]) <= reach)
    });
    assert!(within, "near list contains an out-of-reach pair");
    let (i, j) = (0usize, edges.len() - 1);
    let (bi, bj) = (op.grid().base(i), op.grid().base(j));
    if (0..3).any(|a| bi[a].abs_diff(bj[a]) > reach) {
        assert_eq!(op.l_d().get(i, j), 0.0);
    }
}

#[test]
fn apply_matches_dense_on_bar_428() {
    // the 428-triangle bar discretization of the 5×7.5×200 µm benchmark
    let tri = parex_testmesh::box_grid([5e-6, 7.5e-6, 200e-6], [1, 1, 53]);
    assert_eq!(tri.triangles.len(), 428);
    let (mesh, edges) = mesh_and_edges(&tri);
    let asm_opts = AssemblyOptions::default();
    let dense = assemble_lb_dense(&mesh, &edges, &asm_opts).unwrap();
    let op = PrecorrectedOperator::build(&mesh, &edges, &asm_opts, &opts()).unwrap();
    let n = edges.len();

    // zero in, zero out
    let mut y = vec![Complex::new(0.0, 0.0); n];
    op.apply(&vec![Complex::new(0.0, 0.0); n], &mut y);
    assert!(y.iter().all(|z| z.norm() == 0.0));

    let backend = LbBackend::Dense(dense);
    for seed in 0..10 {
        let x = random_real_vec(n, 100 + seed);
        let mut fast = vec![Complex::new(0.0, 0.0); n];
        op.apply(&x, &mut fast);
        let mut exact = vec![Complex::new(0.0, 0.0); n];
        backend.apply(&x, &mut exact);
        let rel = rel_vec(&fast, &exact);
        assert!(rel <= 1e-3, "seed {seed}: matvec error {rel:.3e}");
    }

    // bilinear symmetry xᵀ(Ay) = yᵀ(Ax)
    let x = random_complex_vec(n, 21);
    let yv = random_complex_vec(n, 22);
    let mut ay = vec![Complex::new(0.0, 0.0); n];
    op.apply(&yv, &mut ay);
    let mut ax = vec![Complex::new(0.0, 0.0); n];
    op.apply(&x, &mut ax);
    let lhs: C64 = x.iter().zip(&ay).map(|(a, b)| a * b).sum();
    let rhs: C64 = yv.iter().zip(&ax).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).norm() / lhs.norm() <= 1e-10);
}
