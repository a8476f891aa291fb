//! Extraction driver: per-port unit-voltage excitations, admittance-to-
//! impedance conversion, frequency sweeps and derived R/L matrices.
//!
//! Multi-port protocol: port j is driven with 1 V while every other source
//! branch stays in place at 0 V (shorted), giving one admittance column per
//! solve; `Z = Y⁻¹`, `R = Re Z`, `L = Im Z / ω`.

pub mod fields;
pub mod mna;

pub use fields::{field_solution, surface_current_magnitude, FieldSolution};
pub use mna::{mna_oracle, MnaSolution};

use crate::assembly::{BranchAssembly, BranchOperator, Material};
use crate::circuit::{CircuitGraph, LoopBasis};
use crate::linalg::{invert, CMat, LuFactor};
use crate::solver::{
    GmresOptions, LoopPreconditioner, LoopSystem, PreconditionerPlan,
};
use crate::{cast, Error, Result, Scalar};
use num_complex::Complex;

/// Per-port solver diagnostics for one frequency point.
#[derive(Clone, Debug)]
pub struct PortSolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// One frequency point of a sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint<T: Scalar> {
    pub frequency_hz: T,
    /// Port impedance matrix; `None` when the solve failed.
    pub z: Option<CMat<T>>,
    /// Skin-depth validity: false when `δ > thickness/3`.
    pub valid: bool,
    pub port_stats: Vec<PortSolveStats>,
    pub error: Option<String>,
}

impl<T: Scalar> SweepPoint<T> {
    pub fn omega(&self) -> T {
        cast::<T>(2.0) * T::PI() * self.frequency_hz
    }

    pub fn resistance(&self, i: usize, j: usize) -> Option<T> {
        self.z.as_ref().map(|z| z.get(i, j).re)
    }

    pub fn inductance(&self, i: usize, j: usize) -> Option<T> {
        self.z.as_ref().map(|z| z.get(i, j).im / self.omega())
    }

    /// Loop quantities between two ports: `R_o = R_ii − 2R_ij + R_jj` and
    /// the same combination for L.
    pub fn loop_rl(&self, i: usize, j: usize) -> Option<(T, T)> {
        let z = self.z.as_ref()?;
        let two = cast::<T>(2.0);
        let r = z.get(i, i).re - two * z.get(i, j).re + z.get(j, j).re;
        let l = (z.get(i, i).im - two * z.get(i, j).im + z.get(j, j).im) / self.omega();
        Some((r, l))
    }
}

/// Frequency sweep output: per-frequency complex Z with derived R and L.
#[derive(Clone, Debug)]
pub struct ImpedanceResult<T: Scalar> {
    pub n_ports: usize,
    pub points: Vec<SweepPoint<T>>,
}

impl<T: Scalar> ImpedanceResult<T> {
    pub fn frequencies(&self) -> Vec<T> {
        self.points.iter().map(|p| p.frequency_hz).collect()
    }
}

/// Solver configuration for extraction runs.
#[derive(Clone, Debug)]
pub struct SolveSettings<T: Scalar> {
    pub gmres: GmresOptions<T>,
    pub use_preconditioner: bool,
}

impl<T: Scalar> Default for SolveSettings<T> {
    fn default() -> Self {
        SolveSettings {
            gmres: GmresOptions::default(),
            use_preconditioner: true,
        }
    }
}

/// Extract the p×p impedance matrix at one frequency with GMRES.
/// Returns the matrix, per-port stats and the loop solutions (one per port).
pub fn extract_impedance<T: Scalar>(
    basis: &LoopBasis,
    graph: &CircuitGraph,
    op: &BranchOperator<'_, T>,
    precond: Option<&LoopPreconditioner<'_, T>>,
    gmres_opts: &GmresOptions<T>,
) -> Result<(CMat<T>, Vec<PortSolveStats>, Vec<Vec<Complex<T>>>)> {
    let p = graph.n_ports();
    if p == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let system = LoopSystem { basis, graph, op };
    let mut y = CMat::zeros(p, p);
    let mut stats = Vec::with_capacity(p);
    let mut solutions = Vec::with_capacity(p);
    for j in 0..p {
        let mut excitation = vec![Complex::new(T::zero(), T::zero()); p];
        excitation[j] = Complex::new(T::one(), T::zero());
        let v_l = basis.loop_voltage(&excitation)?;
        let out = crate::solver::solve_loop_system(&system, precond, &v_l, gmres_opts);
        stats.push(PortSolveStats {
            iterations: out.iterations,
            residual: out.residual.to_f64().unwrap_or(f64::NAN),
            converged: out.converged,
        });
        if !out.converged {
            return Err(Error::NoConvergence {
                iterations: out.iterations,
                residual: out.residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        for k in 0..p {
            y.set(k, j, out.x[basis.source_loop(k)]);
        }
        solutions.push(out.x);
    }
    let z = invert(&y).map_err(|_| Error::SingularY)?;
    Ok((z, stats, solutions))
}

/// Direct dense factorization of the loop system (reference path; dense
/// backend only).
pub fn extract_impedance_direct<T: Scalar>(
    basis: &LoopBasis,
    graph: &CircuitGraph,
    op: &BranchOperator<'_, T>,
) -> Result<(CMat<T>, Vec<Vec<Complex<T>>>)> {
    let p = graph.n_ports();
    if p == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let zl = dense_loop_matrix(basis, op).ok_or(Error::OutOfMemory {
        dim: basis.n_edges(),
        cap: 0,
    })?;
    let lu = LuFactor::factor(zl)?;
    let mut y = CMat::zeros(p, p);
    let mut solutions = Vec::with_capacity(p);
    for j in 0..p {
        let mut excitation = vec![Complex::new(T::zero(), T::zero()); p];
        excitation[j] = Complex::new(T::one(), T::zero());
        let v_l = basis.loop_voltage(&excitation)?;
        let i_l = lu.solve(&v_l);
        for k in 0..p {
            y.set(k, j, i_l[basis.source_loop(k)]);
        }
        solutions.push(i_l);
    }
    let z = invert(&y).map_err(|_| Error::SingularY)?;
    Ok((z, solutions))
}

/// Materialize `Z_l = A Zb Aᵀ` densely (dense backend only).
pub fn dense_loop_matrix<T: Scalar>(
    basis: &LoopBasis,
    op: &BranchOperator<'_, T>,
) -> Option<CMat<T>> {
    let zb = op.dense_matrix()?;
    let l = basis.n_loops();
    let ne = basis.n_edges();
    let zero = Complex::new(T::zero(), T::zero());
    // M = A_edge · Zb, then Z_l = M · A_edgeᵀ
    let mut m = CMat::zeros(l, ne);
    for li in 0..l {
        let row = m.row_mut(li);
        for &(b, s) in basis.loop_branches(li) {
            if b >= ne {
                continue;
            }
            let zb_row = zb.row(b);
            if s > 0 {
                for (acc, v) in row.iter_mut().zip(zb_row) {
                    *acc += *v;
                }
            } else {
                for (acc, v) in row.iter_mut().zip(zb_row) {
                    *acc -= *v;
                }
            }
        }
    }
    let mut zl = CMat::zeros(l, l);
    for li in 0..l {
        for lj in 0..l {
            let mut acc = zero;
            for &(b, s) in basis.loop_branches(lj) {
                if b >= ne {
                    continue;
                }
                if s > 0 {
                    acc += m.get(li, b);
                } else {
                    acc -= m.get(li, b);
                }
            }
            zl.set(li, lj, acc);
        }
    }
    Some(zl)
}

/// Everything a sweep observer gets to see after each converged port solve.
pub struct SolveEvent<'a, T: Scalar> {
    pub freq_index: usize,
    pub frequency_hz: T,
    pub port: usize,
    pub loop_currents: &'a [Complex<T>],
    pub op: &'a BranchOperator<'a, T>,
}

/// Sweep over ascending frequencies, reusing the loop basis, inductive
/// assembly and the preconditioner's symbolic analysis. Failed points are
/// recorded, not fatal.
pub fn frequency_sweep<T: Scalar>(
    assembly: &BranchAssembly<T>,
    basis: &LoopBasis,
    graph: &CircuitGraph,
    material: &Material<T>,
    frequencies_hz: &[T],
    settings: &SolveSettings<T>,
    conductor_thickness: Option<T>,
) -> Result<ImpedanceResult<T>> {
    frequency_sweep_observed(
        assembly,
        basis,
        graph,
        material,
        frequencies_hz,
        settings,
        conductor_thickness,
        |_| {},
    )
}

/// [`frequency_sweep`] with an observer called after each converged port
/// solve (field export hooks in here).
#[allow(clippy::too_many_arguments)]
pub fn frequency_sweep_observed<T: Scalar, F>(
    assembly: &BranchAssembly<T>,
    basis: &LoopBasis,
    graph: &CircuitGraph,
    material: &Material<T>,
    frequencies_hz: &[T],
    settings: &SolveSettings<T>,
    conductor_thickness: Option<T>,
    mut observer: F,
) -> Result<ImpedanceResult<T>>
where
    F: FnMut(SolveEvent<'_, T>),
{
    if frequencies_hz.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    for w in frequencies_hz.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::NonPositiveFrequency(
                (w[1] - w[0]).to_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    let plan = settings
        .use_preconditioner
        .then(|| PreconditionerPlan::new(basis, graph));
    let mut points = Vec::with_capacity(frequencies_hz.len());
    for (fi, &f) in frequencies_hz.iter().enumerate() {
        let omega = cast::<T>(2.0) * T::PI() * f;
        let point = solve_point(
            assembly,
            basis,
            graph,
            material,
            fi,
            f,
            omega,
            plan.as_ref(),
            settings,
            conductor_thickness,
            &mut observer,
        );
        points.push(match point {
            Ok(p) => p,
            Err(e) => SweepPoint {
                frequency_hz: f,
                z: None,
                valid: validity(material, omega, conductor_thickness),
                port_stats: Vec::new(),
                error: Some(e.to_string()),
            },
        });
    }
    Ok(ImpedanceResult {
        n_ports: graph.n_ports(),
        points,
    })
}

#[allow(clippy::too_many_arguments)]
fn solve_point<T: Scalar, F>(
    assembly: &BranchAssembly<T>,
    basis: &LoopBasis,
    graph: &CircuitGraph,
    material: &Material<T>,
    freq_index: usize,
    f: T,
    omega: T,
    plan: Option<&PreconditionerPlan>,
    settings: &SolveSettings<T>,
    conductor_thickness: Option<T>,
    observer: &mut F,
) -> Result<SweepPoint<T>>
where
    F: FnMut(SolveEvent<'_, T>),
{
    let op = assembly.at_frequency(material, omega)?;
    let precond = match plan {
        Some(plan) => Some(plan.factor(&op)?),
        None => None,
    };
    let (z, stats, solutions) =
        extract_impedance(basis, graph, &op, precond.as_ref(), &settings.gmres)?;
    for (port, i_l) in solutions.iter().enumerate() {
        observer(SolveEvent {
            freq_index,
            frequency_hz: f,
            port,
            loop_currents: i_l,
            op: &op,
        });
    }
    Ok(SweepPoint {
        frequency_hz: f,
        z: Some(z),
        valid: validity(material, omega, conductor_thickness),
        port_stats: stats,
        error: None,
    })
}

fn validity<T: Scalar>(material: &Material<T>, omega: T, thickness: Option<T>) -> bool {
    match thickness {
        None => true,
        Some(t) => match material.skin_depth(omega) {
            Ok(delta) => delta <= t / cast::<T>(3.0),
            Err(_) => false,
        },
    }
}
