//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between reading a mesh file and writing an
/// impedance matrix.
#[derive(Debug, Error)]
pub enum Error {
    /// Mesh file could not be parsed under the declared format.
    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Triangle with zero area or a repeated vertex after welding.
    #[error("degenerate triangle {triangle}: {message}")]
    DegenerateTriangle { triangle: usize, message: String },

    /// An edge is incident to a number of triangles other than two, so the
    /// surface is not a closed oriented 2-manifold.
    #[error("open or non-manifold surface: edge ({a}, {b}) touches {count} triangles (expected 2)")]
    OpenSurface { a: usize, b: usize, count: usize },

    /// Two triangles traverse a shared edge in the same direction.
    #[error("inconsistent orientation across edge ({a}, {b})")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("frequency must be positive (got {0} rad/s)")]
    NonPositiveFrequency(f64),

    #[error("coincident source and observation points in Green's function")]
    CoincidentPoints,

    #[error("point lies outside the support of edge basis {edge}")]
    PointOutsideSupport { edge: usize },

    /// Dense storage request above the configured cap.
    #[error("dense operator of dimension {dim} exceeds cap {cap}")]
    OutOfMemory { dim: usize, cap: usize },

    #[error("port {port}: source or sink triangle set is empty")]
    EmptyPort { port: usize },

    #[error("triangle {triangle} belongs to more than one port contact set")]
    OverlappingPorts { triangle: usize },

    #[error("port {port}: source and sink lie on different conductors ({a} vs {b})")]
    PortSpansConductors { port: usize, a: usize, b: usize },

    #[error("port {port} references triangle {triangle}, mesh has {count}")]
    PortTriangleOutOfRange {
        port: usize,
        triangle: usize,
        count: usize,
    },

    #[error("pFFT grid of {nodes} nodes exceeds cap {cap}")]
    GridTooLarge { nodes: usize, cap: usize },

    /// Projection stencil produced non-finite weights.
    #[error("singular projection fit for edge {edge}")]
    SingularFit { edge: usize },

    /// Zero pivot while factoring the loop preconditioner. Usually means a
    /// loop made entirely of zero-impedance contact branches, i.e. a bad
    /// port specification.
    #[error("singular loop preconditioner at pivot {pivot}")]
    SingularPreconditioner { pivot: usize },

    #[error("GMRES did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Port admittance matrix is singular (ports shorted together or
    /// disconnected).
    #[error("singular port admittance matrix")]
    SingularY,

    /// KVL closure failure on a non-tree branch during potential
    /// reconstruction; indicates an unconverged loop solution.
    #[error("inconsistent potential: loop closure mismatch {mismatch:.3e} V on branch {branch}")]
    InconsistentPotential { branch: usize, mismatch: f64 },

    /// Brute-force reference path asked for a problem above its size budget.
    #[error("problem size {size} above oracle budget {budget}")]
    OutOfBudget { size: usize, budget: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("port {port}: fundamental loop does not close (source and sink not connected)")]
    PortLoopOpen { port: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable category, used by the CLI error report.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::DegenerateTriangle { .. } => "DegenerateTriangle",
            Error::OpenSurface { .. } => "OpenSurface",
            Error::InconsistentOrientation { .. } => "InconsistentOrientation",
            Error::NonPositiveFrequency(_) => "NonPositiveFrequency",
            Error::CoincidentPoints => "CoincidentPoints",
            Error::PointOutsideSupport { .. } => "PointOutsideSupport",
            Error::OutOfMemory { .. } => "OutOfMemory",
            Error::EmptyPort { .. } => "EmptyPort",
            Error::OverlappingPorts { .. } => "OverlappingPorts",
            Error::PortSpansConductors { .. } => "PortSpansConductors",
            Error::PortTriangleOutOfRange { .. } => "PortTriangleOutOfRange",
            Error::GridTooLarge { .. } => "GridTooLarge",
            Error::SingularFit { .. } => "SingularFit",
            Error::SingularPreconditioner { .. } => "SingularPreconditioner",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SingularY => "SingularY",
            Error::InconsistentPotential { .. } => "InconsistentPotential",
            Error::OutOfBudget { .. } => "OutOfBudget",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::PortLoopOpen { .. } => "PortLoopOpen",
            Error::Io(_) => "Io",
        }
    }
}
