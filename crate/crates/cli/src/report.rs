//! Structured JSON run report.

use serde::Serialize;

#[derive(Serialize)]
pub struct Report {
    pub mesh: MeshStats,
    pub graph: GraphStats,
    pub solver: SolverStats,
    pub frequencies: Vec<FrequencyReport>,
    pub timings_s: Timings,
    pub memory_estimate_bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

#[derive(Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub conductors: usize,
}

#[derive(Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub branches: usize,
    pub separation: usize,
    pub ports: usize,
    pub twigs: usize,
    pub loops: usize,
}

#[derive(Serialize)]
pub struct SolverStats {
    pub backend: String,
    pub tol: f64,
    pub restart: usize,
    pub preconditioner: bool,
}

#[derive(Serialize)]
pub struct FrequencyReport {
    pub freq_hz: f64,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub ports: Vec<PortReport>,
}

#[derive(Serialize)]
pub struct PortReport {
    pub name: String,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Serialize, Default)]
pub struct Timings {
    pub load: f64,
    pub graph: f64,
    pub assembly: f64,
    pub sweep: f64,
    pub total: f64,
}

#[derive(Serialize)]
pub struct OracleReport {
    pub kind: String,
    /// Max relative deviation between the production backend and the oracle
    /// over all frequencies and matrix entries.
    pub max_rel_deviation: f64,
}
