//! Loop-analysis extraction against the modified-nodal-analysis reference:
//! both share the branch impedance and port model, so with dense direct
//! solves on both sides the impedances must agree to near machine precision.

mod common;

use common::*;
use parex::assembly::{AssemblyOptions, BranchAssembly, Material};
use parex::circuit::{self, CircuitGraph, PortSpec};
use parex::extract::{self, mna};
use parex::solver::{GmresOptions, PreconditionerPlan};

fn port(name: &str, source: Vec<usize>, sink: Vec<usize>) -> PortSpec {
    PortSpec {
        name: name.into(),
        source_triangles: source,
        sink_triangles: sink,
    }
}

struct Case {
    mesh: parex::SurfaceMesh64,
    edges: parex::EdgeSet64,
    graph: CircuitGraph,
    basis: circuit::LoopBasis,
    assembly: BranchAssembly<f64>,
}

fn build_case(tri: &parex_testmesh::TriMesh, ports: &[PortSpec]) -> Case {
    let (mesh, edges) = mesh_and_edges(tri);
    let graph = CircuitGraph::build(&mesh, &edges, ports).unwrap();
    let forest = circuit::spanning_forest(&graph);
    let basis = circuit::fundamental_loops(&graph, &forest);
    let assembly = BranchAssembly::dense(&mesh, &edges, &AssemblyOptions::default()).unwrap();
    Case {
        mesh,
        edges,
        graph,
        basis,
        assembly,
    }
}

/// Micron-scale prism with a port between the two triangular end caps
/// (triangles 0 and 1 in the generator ordering).
fn prism_case() -> Case {
    let tri = parex_testmesh::prism(1e-6, 3e-6);
    build_case(&tri, &[port("p1", vec![1], vec![0])])
}

#[test]
fn prism_loop_equals_mna() {
    let case = prism_case();
    let mat = Material::copper();
    let omega = 2.0 * std::f64::consts::PI * 50e9;
    let op = case.assembly.at_frequency(&mat, omega).unwrap();

    let (z_loop, solutions) =
        extract::extract_impedance_direct(&case.basis, &case.graph, &op).unwrap();
    let reference = mna::mna_oracle(&case.graph, &op).unwrap();

    let dev = mat_rel_dev(&z_loop, &reference.z);
    assert!(dev <= 1e-8, "loop vs MNA impedance deviation {dev:.3e}");

    // branch currents agree entrywise
    let i_loop = case.basis.to_branch(&solutions[0]);
    let scale = reference.branch_currents[0]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    for (a, b) in i_loop.iter().zip(&reference.branch_currents[0]) {
        assert!((a - b).norm() / scale <= 1e-8);
    }

    // physically sensible one-port result
    let z = z_loop.get(0, 0);
    assert!(z.re > 0.0, "positive resistance, got {z}");
    assert!(z.im > 0.0, "inductive reactance, got {z}");
}

#[test]
fn loop_dimension_is_about_a_fifth_of_mna() {
    let tri = parex_testmesh::icosphere(1e-6, 2); // 320 triangles
    let case = build_case(&tri, &[port("p1", vec![0], vec![200])]);
    let mat = Material::copper();
    let op = case
        .assembly
        .at_frequency(&mat, 2.0 * std::f64::consts::PI * 20e9)
        .unwrap();
    let reference = mna::mna_oracle(&case.graph, &op).unwrap();
    let ratio = case.basis.n_loops() as f64 / reference.dimension as f64;
    assert!(
        (ratio - 0.20).abs() <= 0.02,
        "loop/MNA dimension ratio {ratio:.4}"
    );
}

#[test]
fn gmres_matches_direct_solve() {
    let case = prism_case();
    let mat = Material::copper();
    let omega = 2.0 * std::f64::consts::PI * 50e9;
    let op = case.assembly.at_frequency(&mat, omega).unwrap();

    let (z_direct, _) =
        extract::extract_impedance_direct(&case.basis, &case.graph, &op).unwrap();
    let plan = PreconditionerPlan::new(&case.basis, &case.graph);
    let precond = plan.factor(&op).unwrap();
    let opts = GmresOptions {
        tol: 1e-3,
        ..GmresOptions::default()
    };
    let (z_gmres, stats, _) =
        extract::extract_impedance(&case.basis, &case.graph, &op, Some(&precond), &opts)
            .unwrap();
    assert!(stats[0].converged);
    let dev = mat_rel_dev(&z_gmres, &z_direct);
    assert!(dev <= 1e-2, "GMRES vs direct deviation {dev:.3e}");
}

#[test]
fn sphere_with_port_matches_mna() {
    let tri = parex_testmesh::icosphere(2e-6, 1); // 80 triangles
    // antipodal contacts
    let case = build_case(&tri, &[port("p1", vec![0, 1], vec![40, 41])]);
    let mat = Material::conductor(1e7);
    let omega = 2.0 * std::f64::consts::PI * 10e9;
    let op = case.assembly.at_frequency(&mat, omega).unwrap();
    let (z_loop, _) =
        extract::extract_impedance_direct(&case.basis, &case.graph, &op).unwrap();
    let reference = mna::mna_oracle(&case.graph, &op).unwrap();
    let dev = mat_rel_dev(&z_loop, &reference.z);
    assert!(dev <= 1e-8, "sphere loop vs MNA deviation {dev:.3e}");
}

#[test]
fn two_port_bars_reciprocal_and_match_mna() {
    // two parallel bars, one port each
    let bar = parex_testmesh::box_grid([2e-6, 2e-6, 20e-6], [1, 1, 6]);
    let shifted = bar.clone().translated([6e-6, 0.0, 0.0]);
    let two = bar.merge(&shifted);
    let nt_half = two.triangles.len() / 2;
    // end caps: triangles at z extremes, per bar
    let zmax = 20e-6;
    let cap = |lo: f64, hi: f64, base: usize, count: usize| -> Vec<usize> {
        (0..two.triangles.len())
            .filter(|&t| {
                let c = two.centroid_of(t);
                c[2] > lo && c[2] < hi && (t < nt_half) == (base == 0)
            })
            .take(count)
            .collect()
    };
    let p1 = port("a", cap(-1.0, 1e-9, 0, 8), cap(zmax - 1e-9, 1.0, 0, 8));
    let p2 = port("b", cap(-1.0, 1e-9, 1, 8), cap(zmax - 1e-9, 1.0, 1, 8));
    assert!(!p1.source_triangles.is_empty() && !p2.source_triangles.is_empty());
    let case = build_case(&two, &[p1, p2]);
    assert_eq!(case.mesh.connected_components(), 2);

    let mat = Material::copper();
    let omega = 2.0 * std::f64::consts::PI * 30e9;
    let op = case.assembly.at_frequency(&mat, omega).unwrap();
    let (z, _) = extract::extract_impedance_direct(&case.basis, &case.graph, &op).unwrap();
    let reference = mna::mna_oracle(&case.graph, &op).unwrap();
    assert!(mat_rel_dev(&z, &reference.z) <= 1e-8);

    // reciprocity and geometric symmetry of the two identical ports
    assert!(rel_err_c(z.get(0, 1), z.get(1, 0)) <= 1e-6);
    assert!(rel_err_c(z.get(0, 0), z.get(1, 1)) <= 5e-3);
    // mutual inductive coupling is present and weaker than self terms
    assert!(z.get(0, 1).im.abs() > 0.0);
    assert!(z.get(0, 1).norm() < z.get(0, 0).norm());

    let _ = case.edges;
}
