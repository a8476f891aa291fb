//! Post-processing: branch currents, branch voltages and per-triangle
//! potentials from a converged loop solution.

use crate::assembly::{rwg, BranchOperator};
use crate::circuit::{BranchKind, CircuitGraph, LoopBasis, SpanningForest};
use crate::geom::Vec3;
use crate::mesh::{EdgeSet, SurfaceMesh};
use crate::{Error, Result, Scalar};
use num_complex::Complex;

/// Branch currents and node potentials for one excitation.
#[derive(Clone, Debug)]
pub struct FieldSolution<T: Scalar> {
    /// Per-branch current (edges first, then contacts, then sources).
    pub branch_currents: Vec<Complex<T>>,
    /// Per-branch voltage drop (tail − head).
    pub branch_voltages: Vec<Complex<T>>,
    /// Per-node potential; mesh triangle nodes come first.
    pub potentials: Vec<Complex<T>>,
    pub excited_port: usize,
}

/// Reconstruct currents and potentials. Potentials integrate branch voltage
/// drops over twig paths from each component root, then shift so the excited
/// port's sink terminal (and with it every sink triangle) sits at 0 V. The
/// KVL closure of every link is checked against `closure_tol` (volts);
/// direct solves close to machine precision, GMRES solves to roughly the
/// solver tolerance times the excitation.
pub fn field_solution<T: Scalar>(
    basis: &LoopBasis,
    graph: &CircuitGraph,
    forest: &SpanningForest,
    op: &BranchOperator<'_, T>,
    loop_currents: &[Complex<T>],
    excited_port: usize,
    excitation: Complex<T>,
    closure_tol: T,
) -> Result<FieldSolution<T>> {
    let ne = basis.n_edges();
    let b = basis.n_branches();
    let zero = Complex::new(T::zero(), T::zero());

    let branch_currents = basis.to_branch(loop_currents);
    debug_assert_eq!(branch_currents.len(), b);

    // branch voltages: impedance drop on edges, zero on contacts, the fixed
    // source voltage on source branches
    let mut branch_voltages = vec![zero; b];
    let mut edge_v = vec![zero; ne];
    op.apply(&branch_currents[..ne], &mut edge_v);
    branch_voltages[..ne].copy_from_slice(&edge_v);
    for (k, br) in graph.branches().iter().enumerate() {
        if br.kind == BranchKind::Source {
            let port = (0..graph.n_ports())
                .find(|&p| graph.port(p).source_branch == k)
                .expect("source branch maps to a port");
            branch_voltages[k] = if port == excited_port {
                -excitation
            } else {
                zero
            };
        }
    }

    // integrate over twigs, parents before children
    let mut potentials = vec![zero; graph.n_nodes()];
    for &node in forest.visit_order() {
        if let Some((parent, branch)) = forest.parent(node) {
            let br = graph.branches()[branch];
            let drop = branch_voltages[branch];
            potentials[node] = if br.tail == parent {
                potentials[parent] - drop
            } else {
                potentials[parent] + drop
            };
        }
    }

    // pin the excited port's sink terminal to exactly 0 V
    let sink = graph.port(excited_port).sink_terminal;
    let sink_component = graph.node_component(sink);
    let shift = potentials[sink];
    for (node, phi) in potentials.iter_mut().enumerate() {
        if graph.node_component(node) == sink_component {
            *phi -= shift;
        }
    }

    // KVL closure on every link
    for (k, br) in graph.branches().iter().enumerate() {
        if forest.is_twig(k) {
            continue;
        }
        let closure =
            (potentials[br.tail] - potentials[br.head] - branch_voltages[k]).norm();
        if closure > closure_tol {
            return Err(Error::InconsistentPotential {
                branch: k,
                mismatch: closure.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    Ok(FieldSolution {
        branch_currents,
        branch_voltages,
        potentials,
        excited_port,
    })
}

/// |J| at the centroid of a triangle: magnitude of the complex surface
/// current from the three edge bases of the triangle.
pub fn surface_current_magnitude<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    edge_currents: &[Complex<T>],
    t: usize,
) -> T {
    let c = mesh.triangle_centroid(t);
    let mut jx = Complex::new(T::zero(), T::zero());
    let mut jy = jx;
    let mut jz = jx;
    for er in edges.triangle_edges(t) {
        let f: Vec3<T> = rwg::value_on_triangle(mesh, edges, er.edge, t, c);
        let i = edge_currents[er.edge];
        jx += i * f.x;
        jy += i * f.y;
        jz += i * f.z;
    }
    (jx.norm_sqr() + jy.norm_sqr() + jz.norm_sqr()).sqrt()
}
