//! Circuit graph construction, spanning forests and fundamental loops on the
//! benchmark geometries.

mod common;

use common::*;
use parex::circuit::{fundamental_loops, spanning_forest, CircuitGraph, PortSpec};
use parex::Error;

fn port(source: Vec<usize>, sink: Vec<usize>) -> PortSpec {
    PortSpec {
        name: "p".into(),
        source_triangles: source,
        sink_triangles: sink,
    }
}

#[test]
fn prism_without_ports() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::prism(1e-6, 3e-6));
    let g = CircuitGraph::build(&mesh, &edges, &[]).unwrap();
    assert_eq!(g.n_nodes(), 8);
    assert_eq!(g.n_branches(), 12);
    assert_eq!(g.n_components(), 1);
    assert_eq!(g.n_ports(), 0);
    let f = spanning_forest(&g);
    assert_eq!(f.n_twigs(), 7);
    let basis = fundamental_loops(&g, &f);
    assert_eq!(basis.n_loops(), 5);
    assert!(basis.incidence_product_is_zero(&g));
    // each loop holds exactly one link, traversed positively
    for l in 0..basis.n_loops() {
        let link = basis.link_of_loop(l);
        let links_in_row: Vec<_> = basis
            .loop_branches(l)
            .iter()
            .filter(|&&(b, _)| !f.is_twig(b))
            .collect();
        assert_eq!(links_in_row.len(), 1);
        assert_eq!(*links_in_row[0], (link, 1));
    }
}

#[test]
fn prism_with_one_port() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::prism(1e-6, 3e-6));
    let g = CircuitGraph::build(&mesh, &edges, &[port(vec![1], vec![0])]).unwrap();
    assert_eq!(g.n_nodes(), 10); // 8 triangles + 2 terminals
    assert_eq!(g.n_branches(), 15); // 12 edges + 2 contacts + 1 source
    assert_eq!(g.n_ports(), 1);
    let f = spanning_forest(&g);
    assert_eq!(f.n_twigs(), 9);
    let basis = fundamental_loops(&g, &f);
    assert_eq!(basis.n_loops(), 15 - 10 + 1);
    assert!(basis.incidence_product_is_zero(&g));
    // the source loop carries +V
    let v = basis
        .loop_voltage(&[num_complex::Complex::new(1.0, 0.0)])
        .unwrap();
    let nonzero: Vec<_> = v.iter().filter(|z| z.norm() > 0.0).collect();
    assert_eq!(nonzero.len(), 1);
    assert_eq!(*nonzero[0], num_complex::Complex::new(1.0, 0.0));
    assert_eq!(v[basis.source_loop(0)], num_complex::Complex::new(1.0, 0.0));
}

#[test]
fn tetrahedron_loops() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::tetrahedron(1e-6));
    let g = CircuitGraph::build(&mesh, &edges, &[]).unwrap();
    let f = spanning_forest(&g);
    assert_eq!(f.n_twigs(), 3);
    let basis = fundamental_loops(&g, &f);
    assert_eq!(basis.n_loops(), 3);
    for l in 0..3 {
        assert_eq!(basis.loop_branches(l).len(), 3);
    }
}

#[test]
fn two_tetrahedra_forest() {
    let a = parex_testmesh::tetrahedron(1e-6);
    let b = parex_testmesh::tetrahedron(1e-6).translated([4e-6, 0.0, 0.0]);
    let (mesh, edges) = mesh_and_edges(&a.merge(&b));
    let g = CircuitGraph::build(&mesh, &edges, &[]).unwrap();
    assert_eq!(g.n_components(), 2);
    let f = spanning_forest(&g);
    assert_eq!(f.n_twigs(), g.n_nodes() - 2);
    let basis = fundamental_loops(&g, &f);
    assert_eq!(basis.n_loops(), g.n_branches() - g.n_nodes() + 2);
}

/// Brute-force rank of A by Gaussian elimination over f64.
fn rank_of_loops(basis: &parex::circuit::LoopBasis) -> usize {
    let rows = basis.n_loops();
    let cols = basis.n_branches();
    let mut m = vec![vec![0.0f64; cols]; rows];
    for (l, row) in m.iter_mut().enumerate() {
        for &(b, s) in basis.loop_branches(l) {
            row[b] = s as f64;
        }
    }
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = (rank..rows).find(|&r| m[r][c].abs() > 1e-9);
        let Some(p) = pivot else { continue };
        m.swap(rank, p);
        let scale = m[rank][c];
        for r in 0..rows {
            if r != rank && m[r][c].abs() > 1e-12 {
                let f = m[r][c] / scale;
                for k in c..cols {
                    m[r][k] -= f * m[rank][k];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn loop_matrix_has_full_rank() {
    for (tri, ports) in [
        (parex_testmesh::prism(1e-6, 3e-6), vec![port(vec![1], vec![0])]),
        (parex_testmesh::tetrahedron(1e-6), vec![]),
        (parex_testmesh::icosahedron(1e-6), vec![]),
    ] {
        let (mesh, edges) = mesh_and_edges(&tri);
        let g = CircuitGraph::build(&mesh, &edges, &ports).unwrap();
        let f = spanning_forest(&g);
        let basis = fundamental_loops(&g, &f);
        assert_eq!(rank_of_loops(&basis), basis.n_loops());
        assert_eq!(
            basis.n_loops(),
            g.n_branches() - g.n_nodes() + g.n_components()
        );
    }
}

#[test]
fn loop_count_tracks_half_triangle_count() {
    // closed single conductor without ports: l = 0.5 N_t + 1
    for tri in [
        parex_testmesh::icosphere(1e-3, 2),
        parex_testmesh::torus(1e-3, 2e-4, 20, 8),
    ] {
        let (mesh, edges) = mesh_and_edges(&tri);
        let g = CircuitGraph::build(&mesh, &edges, &[]).unwrap();
        let f = spanning_forest(&g);
        let basis = fundamental_loops(&g, &f);
        assert_eq!(basis.n_loops(), mesh.n_triangles() / 2 + 1);
        let _ = f;
    }
}

#[test]
fn port_validation_errors() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::prism(1e-6, 3e-6));
    let r = CircuitGraph::build(&mesh, &edges, &[port(vec![], vec![0])]);
    assert!(matches!(r, Err(Error::EmptyPort { .. })));
    let r = CircuitGraph::build(&mesh, &edges, &[port(vec![0], vec![0])]);
    assert!(matches!(r, Err(Error::OverlappingPorts { .. })));
    let r = CircuitGraph::build(
        &mesh,
        &edges,
        &[port(vec![0], vec![1]), port(vec![1], vec![2])],
    );
    assert!(matches!(r, Err(Error::OverlappingPorts { .. })));
    let r = CircuitGraph::build(&mesh, &edges, &[port(vec![0], vec![99])]);
    assert!(matches!(r, Err(Error::PortTriangleOutOfRange { .. })));

    let a = parex_testmesh::tetrahedron(1e-6);
    let b = parex_testmesh::tetrahedron(1e-6).translated([4e-6, 0.0, 0.0]);
    let (two, edges2) = mesh_and_edges(&a.merge(&b));
    let r = CircuitGraph::build(&two, &edges2, &[port(vec![0], vec![5])]);
    assert!(matches!(r, Err(Error::PortSpansConductors { .. })));
}

#[test]
fn single_loop_current_superposes_on_branches() {
    let (mesh, edges) = mesh_and_edges(&parex_testmesh::tetrahedron(1e-6));
    let g = CircuitGraph::build(&mesh, &edges, &[]).unwrap();
    let f = spanning_forest(&g);
    let basis = fundamental_loops(&g, &f);
    let mut i_l = vec![num_complex::Complex::new(0.0, 0.0); basis.n_loops()];
    i_l[0] = num_complex::Complex::new(1.0, 0.0);
    let i_b = basis.to_branch(&i_l);
    for &(b, s) in basis.loop_branches(0) {
        assert_eq!(i_b[b], num_complex::Complex::new(s as f64, 0.0));
    }
    let in_loop: std::collections::HashSet<usize> =
        basis.loop_branches(0).iter().map(|&(b, _)| b).collect();
    for (b, v) in i_b.iter().enumerate() {
        if !in_loop.contains(&b) {
            assert_eq!(v.norm(), 0.0);
        }
    }
}
