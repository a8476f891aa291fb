//! Wideband parasitic resistance and inductance extraction for arbitrarily
//! shaped conductors described by closed triangulated surface meshes.
//!
//! The solver discretizes the magneto-quasi-static surface integral equation
//! with modified Rao-Wilton-Glisson edge bases, maps the Galerkin system onto
//! an equivalent circuit (triangle = node, edge = branch), reduces it with a
//! fundamental-loop basis built on a spanning forest, and solves the loop
//! system with preconditioned GMRES. The dense inductive block can be replaced
//! by a precorrected-FFT operator for large meshes.
//!
//! Pipeline overview:
//!
//! 1. [`mesh`] — load and validate a closed 2-manifold triangulation, build
//!    the interior-edge set.
//! 2. [`circuit`] — build the circuit graph with port terminals, a spanning
//!    forest and the fundamental-loop transfer matrix.
//! 3. [`assembly`] — Galerkin assembly of the surface-impedance (resistive)
//!    and vector-potential (inductive) branch operators.
//! 4. [`pfft`] — optional grid-projection/FFT-convolution acceleration of the
//!    inductive matrix-vector product.
//! 5. [`solver`] — loop preconditioner and restarted GMRES.
//! 6. [`extract`] — per-port excitation, frequency sweeps, R/L matrices and
//!    surface field reconstruction.
//!
//! All numerics are generic over the floating scalar via [`Scalar`]; the
//! `*64` aliases at the crate root pin the common double-precision case.

pub mod assembly;
pub mod circuit;
pub mod error;
pub mod extract;
pub mod geom;
pub mod linalg;
pub mod mesh;
pub mod pfft;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating scalar the whole library is generic over.
///
/// Implemented for `f32` and `f64`. The bound set is what the kernels need:
/// IEEE float ops, conversions from literals, FFT support and thread safety.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + rustfft::FftNum
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn cast<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant not representable in scalar type")
}

/// Vacuum permeability `μ0 = 4π·10⁻⁷ H/m`.
#[inline]
pub fn mu0<T: Scalar>() -> T {
    cast::<T>(4.0e-7) * T::PI()
}

// Concrete double-precision aliases for the main public types.
pub type SurfaceMesh64 = mesh::SurfaceMesh<f64>;
pub type EdgeSet64 = mesh::EdgeSet<f64>;
pub type Material64 = assembly::Material<f64>;
pub type BranchAssembly64 = assembly::BranchAssembly<f64>;
pub type BranchOperator64<'a> = assembly::BranchOperator<'a, f64>;
pub type PrecorrectedOperator64 = pfft::PrecorrectedOperator<f64>;
pub type ImpedanceResult64 = extract::ImpedanceResult<f64>;
