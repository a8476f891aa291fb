//! Modified nodal analysis reference: the full (b+n)-dimensional
//! branch-current / node-potential system with the same branch impedance and
//! port model as the loop path, solved densely. Test oracle only; the loop
//! formulation is the production path.

use crate::assembly::BranchOperator;
use crate::circuit::{BranchKind, CircuitGraph};
use crate::linalg::{invert, CMat, LuFactor};
use crate::{Error, Result, Scalar};
use num_complex::Complex;

/// Size budget: dense direct solve of dimension b+n.
pub const MNA_EDGE_BUDGET: usize = 3_000;

#[derive(Clone, Debug)]
pub struct MnaSolution<T: Scalar> {
    pub z: CMat<T>,
    /// One branch-current vector per excited port.
    pub branch_currents: Vec<Vec<Complex<T>>>,
    /// System dimension b + n.
    pub dimension: usize,
}

/// Assemble and solve the MNA system for every port excitation.
///
/// Unknowns `[I_b; φ]`. Rows: per branch the impedance relation
/// `(Zb I)_br − (φ_tail − φ_head) = 0` (contacts force equal potentials, the
/// source branch pins its terminal difference), then KCL per node with one
/// row per component replaced by a ground pin.
pub fn mna_oracle<T: Scalar>(
    graph: &CircuitGraph,
    op: &BranchOperator<'_, T>,
) -> Result<MnaSolution<T>> {
    let ne = graph.n_edges();
    if ne > MNA_EDGE_BUDGET {
        return Err(Error::OutOfBudget {
            size: ne,
            budget: MNA_EDGE_BUDGET,
        });
    }
    let zb = op.dense_matrix().ok_or(Error::OutOfBudget {
        size: ne,
        budget: MNA_EDGE_BUDGET,
    })?;
    let b = graph.n_branches();
    let n = graph.n_nodes();
    let dim = b + n;
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());

    let mut a = CMat::<T>::zeros(dim, dim);
    // branch rows
    for (k, br) in graph.branches().iter().enumerate() {
        match br.kind {
            BranchKind::Interior => {
                for j in 0..ne {
                    a.set(k, j, zb.get(k, j));
                }
                a.add_to(k, b + br.tail, -one);
                a.add_to(k, b + br.head, one);
            }
            BranchKind::Contact | BranchKind::Source => {
                // φ_tail − φ_head = v_br (0 for contacts, −V for the source)
                a.add_to(k, b + br.tail, one);
                a.add_to(k, b + br.head, -one);
            }
        }
    }
    // KCL rows, one per node; ground the lowest node of each component
    let mut grounded = vec![false; graph.n_components().max(1)];
    let mut ground_rows = Vec::new();
    for node in 0..n {
        let comp = graph.node_component(node);
        if !grounded[comp] {
            grounded[comp] = true;
            ground_rows.push(node);
            a.set(b + node, b + node, one);
            continue;
        }
        for (k, br) in graph.branches().iter().enumerate() {
            if br.tail == node {
                a.add_to(b + node, k, one);
            } else if br.head == node {
                a.add_to(b + node, k, -one);
            }
        }
    }

    let lu = LuFactor::factor(a)?;
    let p = graph.n_ports();
    let mut y = CMat::zeros(p, p);
    let mut currents = Vec::with_capacity(p);
    for j in 0..p {
        let mut rhs = vec![zero; dim];
        rhs[graph.port(j).source_branch] = -one; // φ_sink − φ_source = −1 V
        lu.solve_in_place(&mut rhs);
        for k in 0..p {
            y.set(k, j, rhs[graph.port(k).source_branch]);
        }
        currents.push(rhs[..b].to_vec());
    }
    let z = invert(&y).map_err(|_| Error::SingularY)?;
    Ok(MnaSolution {
        z,
        branch_currents: currents,
        dimension: dim,
    })
}
