//! Run configuration: a single TOML file plus a few command-line overrides.

use parex::circuit::PortSpec;
use parex::mesh::MeshFormat;
use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSection,
    pub material: MaterialSection,
    pub frequency: FrequencySection,
    #[serde(default)]
    pub ports: Vec<PortSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub path: PathBuf,
    /// msh-ascii | stl-ascii | stl-binary
    pub format: String,
    /// Vertex weld tolerance in meters.
    #[serde(default = "default_weld")]
    pub weld_tolerance: f64,
}

fn default_weld() -> f64 {
    parex::mesh::DEFAULT_WELD_TOL
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    /// Conductivity in S/m; the string "pec" selects a perfect conductor.
    pub conductivity: toml::Value,
    /// Permeability in H/m (defaults to μ0).
    #[serde(default = "default_mu")]
    pub permeability: f64,
    /// Conductor thickness in meters for the skin-depth validity flag.
    #[serde(default)]
    pub thickness: Option<f64>,
}

fn default_mu() -> f64 {
    4.0e-7 * std::f64::consts::PI
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FrequencySection {
    /// Explicit list in Hz (ascending). Mutually exclusive with start/stop.
    #[serde(default)]
    pub list: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    /// lin | log
    #[serde(default = "default_spacing")]
    pub spacing: String,
}

fn default_spacing() -> String {
    "log".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSection {
    pub name: String,
    #[serde(default)]
    pub source_triangles: Option<Vec<usize>>,
    #[serde(default)]
    pub sink_triangles: Option<Vec<usize>>,
    /// Axis-aligned box selectors in meters, alternative to explicit ids.
    #[serde(default)]
    pub source_box: Option<BoxSelector>,
    #[serde(default)]
    pub sink_box: Option<BoxSelector>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSelector {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
    /// dense | pfft
    pub backend: String,
    pub preconditioner: bool,
    pub stencil_order: usize,
    /// 0 = automatic (mean edge-support diameter).
    pub grid_spacing: f64,
    pub near_margin: usize,
    pub dense_cap: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol: 1e-3,
            restart: 100,
            max_iterations: 10_000,
            backend: "pfft".into(),
            preconditioner: true,
            stencil_order: 2,
            grid_spacing: 0.0,
            near_margin: 2,
            dense_cap: 20_000,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Write per-port VTK field exports for every frequency point.
    pub fields: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("parex-out"),
            fields: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Dense,
    Pfft,
}

/// Fully validated run plan.
pub struct RunPlan {
    pub mesh_path: PathBuf,
    pub format: MeshFormat,
    pub weld_tolerance: f64,
    pub conductivity: f64, // +inf for PEC
    pub permeability: f64,
    pub thickness: Option<f64>,
    pub frequencies: Vec<f64>,
    pub ports: Vec<PortSection>,
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
    pub backend: Backend,
    pub preconditioner: bool,
    pub stencil_order: usize,
    pub grid_spacing: Option<f64>,
    pub near_margin: usize,
    pub dense_cap: usize,
    pub output_dir: PathBuf,
    pub write_fields: bool,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Validate and resolve into a run plan; config paths are interpreted
    /// relative to the config file location.
    pub fn resolve(self, config_dir: &Path) -> Result<RunPlan, CliError> {
        let format: MeshFormat = self
            .mesh
            .format
            .parse()
            .map_err(CliError::Config)?;
        let conductivity = match &self.material.conductivity {
            toml::Value::String(s) if s.eq_ignore_ascii_case("pec") => f64::INFINITY,
            toml::Value::Float(f) => *f,
            toml::Value::Integer(i) => *i as f64,
            other => {
                return Err(CliError::Config(format!(
                    "material.conductivity must be a number or \"pec\", got {other}"
                )))
            }
        };
        if conductivity <= 0.0 {
            return Err(CliError::Config("conductivity must be positive".into()));
        }
        if self.material.permeability <= 0.0 {
            return Err(CliError::Config("permeability must be positive".into()));
        }
        let frequencies = resolve_frequencies(&self.frequency)?;
        if self.ports.is_empty() {
            return Err(CliError::Config("at least one [[ports]] entry required".into()));
        }
        for p in &self.ports {
            let has_src = p.source_triangles.is_some() || p.source_box.is_some();
            let has_snk = p.sink_triangles.is_some() || p.sink_box.is_some();
            if !has_src || !has_snk {
                return Err(CliError::Config(format!(
                    "port {}: needs source and sink (triangle list or box)",
                    p.name
                )));
            }
        }
        let backend = match self.solver.backend.as_str() {
            "dense" => Backend::Dense,
            "pfft" => Backend::Pfft,
            other => {
                return Err(CliError::Config(format!(
                    "solver.backend must be dense or pfft, got {other}"
                )))
            }
        };
        if !(0.0..1.0).contains(&self.solver.tol) || self.solver.tol <= 0.0 {
            return Err(CliError::Config("solver.tol must be in (0, 1)".into()));
        }
        if !(1..=3).contains(&self.solver.stencil_order) {
            return Err(CliError::Config("solver.stencil_order must be 1..=3".into()));
        }
        let mesh_path = if self.mesh.path.is_absolute() {
            self.mesh.path
        } else {
            config_dir.join(&self.mesh.path)
        };
        let output_dir = if self.output.directory.is_absolute() {
            self.output.directory
        } else {
            config_dir.join(&self.output.directory)
        };
        Ok(RunPlan {
            mesh_path,
            format,
            weld_tolerance: self.mesh.weld_tolerance,
            conductivity,
            permeability: self.material.permeability,
            thickness: self.material.thickness,
            frequencies,
            ports: self.ports,
            tol: self.solver.tol,
            restart: self.solver.restart,
            max_iterations: self.solver.max_iterations,
            backend,
            preconditioner: self.solver.preconditioner,
            stencil_order: self.solver.stencil_order,
            grid_spacing: (self.solver.grid_spacing > 0.0).then_some(self.solver.grid_spacing),
            near_margin: self.solver.near_margin,
            dense_cap: self.solver.dense_cap,
            output_dir,
            write_fields: self.output.fields,
        })
    }
}

fn resolve_frequencies(f: &FrequencySection) -> Result<Vec<f64>, CliError> {
    let freqs = match (&f.list, f.start, f.stop, f.points) {
        (Some(list), None, None, None) => list.clone(),
        (None, Some(start), Some(stop), Some(points)) => {
            if points < 1 || stop <= start {
                return Err(CliError::Config(
                    "frequency range needs stop > start and points ≥ 1".into(),
                ));
            }
            match f.spacing.as_str() {
                "lin" => (0..points)
                    .map(|i| {
                        start + (stop - start) * i as f64 / (points.max(2) - 1) as f64
                    })
                    .collect(),
                "log" => {
                    let (l0, l1) = (start.ln(), stop.ln());
                    (0..points)
                        .map(|i| {
                            (l0 + (l1 - l0) * i as f64 / (points.max(2) - 1) as f64).exp()
                        })
                        .collect()
                }
                other => {
                    return Err(CliError::Config(format!(
                        "frequency.spacing must be lin or log, got {other}"
                    )))
                }
            }
        }
        _ => {
            return Err(CliError::Config(
                "specify either frequency.list or start/stop/points".into(),
            ))
        }
    };
    if freqs.is_empty() {
        return Err(CliError::Config("frequency list is empty".into()));
    }
    for w in freqs.windows(2) {
        if w[1] <= w[0] {
            return Err(CliError::Config("frequencies must be ascending".into()));
        }
    }
    if freqs[0] <= 0.0 {
        return Err(CliError::Config("frequencies must be positive".into()));
    }
    Ok(freqs)
}

/// Resolve a port section against the loaded mesh (box selectors pick
/// triangles by centroid).
pub fn resolve_port(
    port: &PortSection,
    mesh: &parex::SurfaceMesh64,
) -> Result<PortSpec, CliError> {
    let pick = |ids: &Option<Vec<usize>>, sel: &Option<BoxSelector>, side: &str| {
        if let Some(ids) = ids {
            return Ok(ids.clone());
        }
        let sel = sel.as_ref().expect("validated");
        let found: Vec<usize> = (0..mesh.n_triangles())
            .filter(|&t| {
                let c = mesh.triangle_centroid(t);
                let p = [c.x, c.y, c.z];
                (0..3).all(|a| p[a] >= sel.min[a] && p[a] <= sel.max[a])
            })
            .collect();
        if found.is_empty() {
            return Err(CliError::Config(format!(
                "port {}: {side} box selects no triangles",
                port.name
            )));
        }
        Ok(found)
    };
    Ok(PortSpec {
        name: port.name.clone(),
        source_triangles: pick(&port.source_triangles, &port.source_box, "source")?,
        sink_triangles: pick(&port.sink_triangles, &port.sink_box, "sink")?,
    })
}

/// The fully commented default configuration (`--print-defaults`).
pub const DEFAULT_CONFIG: &str = r#"# parex run configuration (all values shown are the defaults where one exists)

[mesh]
path = "conductor.stl"        # mesh file, relative to this config
format = "stl-ascii"          # msh-ascii | stl-ascii | stl-binary
weld_tolerance = 1e-12        # vertex weld tolerance in meters

[material]
conductivity = 5.8e7          # S/m, or "pec" for a perfect conductor
permeability = 1.2566370614359173e-6   # H/m (mu0)
# thickness = 5e-6            # optional: conductor thickness in meters;
                              # flags sweep points where the skin depth
                              # exceeds thickness/3

[frequency]
# either an explicit ascending list in Hz:
# list = [1e10, 2e10, 5e10]
# or a range:
start = 1e10
stop = 1.5e11
points = 15
spacing = "log"               # lin | log

[[ports]]
name = "p1"
# triangle ids:
# source_triangles = [0, 1]
# sink_triangles = [10, 11]
# or axis-aligned box selectors (meters, triangle centroids):
source_box = { min = [0.0, 0.0, -1e-9], max = [1e-3, 1e-3, 1e-9] }
sink_box = { min = [0.0, 0.0, 1.9e-4], max = [1e-3, 1e-3, 2.1e-4] }

[solver]
tol = 1e-3                    # GMRES relative residual target
restart = 100                 # Krylov dimension per restart cycle
max_iterations = 10000
backend = "pfft"              # dense | pfft
preconditioner = true
stencil_order = 2             # pFFT stencil order (1..=3)
grid_spacing = 0.0            # meters; 0 = automatic
near_margin = 2               # extra near-field cells beyond stencil overlap
dense_cap = 20000             # max unknowns for the dense backend

[output]
directory = "parex-out"
fields = true                 # per-port VTK surface fields per frequency
"#;
