//! Loop-system solver: `A Zb Aᵀ I_l = V_l` via restarted GMRES with the
//! sparse loop preconditioner `P = A·diag(Zb)·Aᵀ` factored by LDLᵀ.

pub mod gmres;
pub mod ldl;

pub use gmres::{gmres, GmresOptions, GmresOutcome, LinearOperator, Preconditioner};
pub use ldl::{LdlFactors, LdlPlan};

use crate::assembly::BranchOperator;
use crate::circuit::{CircuitGraph, LoopBasis};
use crate::sparse::Csr;
use crate::{Result, Scalar};
use num_complex::Complex;

/// The reduced loop system at one frequency. Applying it expands loop
/// currents to branches, runs the branch impedance on the edge block (contact
/// and source branches carry no impedance) and collapses back to loops.
pub struct LoopSystem<'a, T: Scalar> {
    pub basis: &'a LoopBasis,
    pub graph: &'a CircuitGraph,
    pub op: &'a BranchOperator<'a, T>,
}

impl<'a, T: Scalar> LinearOperator<T> for LoopSystem<'a, T> {
    fn dim(&self) -> usize {
        self.basis.n_loops()
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let ne = self.basis.n_edges();
        let mut branch = self.basis.to_branch(x);
        let mut edge_out = vec![Complex::new(T::zero(), T::zero()); ne];
        self.op.apply(&branch[..ne], &mut edge_out);
        branch[..ne].copy_from_slice(&edge_out);
        for v in branch[ne..].iter_mut() {
            *v = Complex::new(T::zero(), T::zero());
        }
        y.copy_from_slice(&self.basis.to_loop(&branch));
    }
}

/// Pattern side of the loop preconditioner, reusable across a frequency
/// sweep: per-branch loop membership and the symbolic LDLᵀ of the
/// `A·diag·Aᵀ` sparsity.
pub struct PreconditionerPlan {
    /// `membership[branch]` = loops containing it, with signs.
    membership: Vec<Vec<(usize, i8)>>,
    /// Branch order matching the triplet generation in [`Self::values`].
    active_branches: Vec<usize>,
    triplet_loops: Vec<(usize, usize, i8)>,
    ldl: LdlPlan,
}

impl PreconditionerPlan {
    pub fn new(basis: &LoopBasis, graph: &CircuitGraph) -> Self {
        let b = basis.n_branches();
        let ne = basis.n_edges();
        let mut membership: Vec<Vec<(usize, i8)>> = vec![Vec::new(); b];
        for l in 0..basis.n_loops() {
            for &(br, s) in basis.loop_branches(l) {
                membership[br].push((l, s));
            }
        }
        // only edge branches carry impedance; contacts and sources add 0
        let active_branches: Vec<usize> = (0..ne).collect();
        let mut triplet_loops = Vec::new();
        for &br in &active_branches {
            for &(l1, s1) in &membership[br] {
                for &(l2, s2) in &membership[br] {
                    triplet_loops.push((l1, l2, s1 * s2));
                }
            }
        }
        let pattern: Vec<(usize, usize)> =
            triplet_loops.iter().map(|&(i, j, _)| (i, j)).collect();
        let ldl = LdlPlan::new(basis.n_loops(), &pattern);
        let _ = graph;
        PreconditionerPlan {
            membership,
            active_branches,
            triplet_loops,
            ldl,
        }
    }

    /// Triplet values aligned with the plan's pattern for the given branch
    /// impedance diagonal.
    fn values<T: Scalar>(&self, diag: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut values = Vec::with_capacity(self.triplet_loops.len());
        for &br in &self.active_branches {
            let d = diag[br];
            for &(_, s1) in &self.membership[br] {
                for &(_, s2) in &self.membership[br] {
                    let s = s1 * s2;
                    values.push(if s > 0 { d } else { -d });
                }
            }
        }
        debug_assert_eq!(values.len(), self.triplet_loops.len());
        values
    }

    /// Factor the preconditioner for one frequency.
    pub fn factor<T: Scalar>(&self, op: &BranchOperator<'_, T>) -> Result<LoopPreconditioner<'_, T>> {
        let diag = op.diagonal();
        let values = self.values(&diag);
        let factors = self.ldl.factor(&values)?;
        Ok(LoopPreconditioner {
            plan: self,
            factors,
        })
    }

    /// Materialize `P` as a sparse matrix (test and inspection path).
    pub fn assemble_matrix<T: Scalar>(&self, op: &BranchOperator<'_, T>) -> Csr<Complex<T>> {
        let diag = op.diagonal();
        let values = self.values(&diag);
        let n = self.ldl.n();
        let triplets: Vec<(usize, usize, Complex<T>)> = self
            .triplet_loops
            .iter()
            .zip(values)
            .map(|(&(i, j, _), v)| (i, j, v))
            .collect();
        Csr::from_triplets(n, n, triplets)
    }
}

/// Factored `P = A·diag(Zb)·Aᵀ` ready to apply as a left preconditioner.
pub struct LoopPreconditioner<'p, T: Scalar> {
    plan: &'p PreconditionerPlan,
    factors: LdlFactors<T>,
}

impl<'p, T: Scalar> Preconditioner<T> for LoopPreconditioner<'p, T> {
    fn solve_in_place(&self, x: &mut [Complex<T>]) {
        self.plan.ldl.solve_in_place(&self.factors, x);
    }
}

/// One-call preconditioner construction when no sweep reuse is needed.
pub fn build_preconditioner<'p, T: Scalar>(
    plan: &'p PreconditionerPlan,
    op: &BranchOperator<'_, T>,
) -> Result<LoopPreconditioner<'p, T>> {
    plan.factor(op)
}

/// Solve the loop system; `precond: None` runs plain GMRES.
pub fn solve_loop_system<T: Scalar>(
    system: &LoopSystem<'_, T>,
    precond: Option<&LoopPreconditioner<'_, T>>,
    v_l: &[Complex<T>],
    opts: &GmresOptions<T>,
) -> GmresOutcome<T> {
    gmres(
        system,
        precond.map(|p| p as &dyn Preconditioner<T>),
        v_l,
        opts,
    )
}
