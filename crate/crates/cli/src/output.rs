//! File outputs: impedance CSV, legacy VTK field exports.

use crate::CliError;
use num_complex::Complex;
use parex::extract::{FieldSolution, ImpedanceResult};
use parex::mesh::{EdgeSet, SurfaceMesh};
use std::io::Write;
use std::path::Path;

/// `impedance.csv`: one row per frequency, `R_i_j`/`L_i_j` in row-major port
/// order, 17 significant digits, trailing validity flag. Failed points carry
/// NaN entries.
pub fn write_impedance_csv(
    path: &Path,
    result: &ImpedanceResult<f64>,
    port_names: &[String],
) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let p = result.n_ports;
    let mut header = String::from("freq_hz");
    for kind in ["R", "L"] {
        for i in 0..p {
            for j in 0..p {
                header.push_str(&format!(",{kind}_{}_{}", i + 1, j + 1));
            }
        }
    }
    header.push_str(",valid");
    writeln!(f, "{header}")?;
    for point in &result.points {
        let mut row = format!("{:.16e}", point.frequency_hz);
        for getter in [
            &(|i, j| point.resistance(i, j)) as &dyn Fn(usize, usize) -> Option<f64>,
            &(|i, j| point.inductance(i, j)),
        ] {
            for i in 0..p {
                for j in 0..p {
                    match getter(i, j) {
                        Some(v) => row.push_str(&format!(",{v:.16e}")),
                        None => row.push_str(",nan"),
                    }
                }
            }
        }
        row.push_str(if point.valid { ",1" } else { ",0" });
        writeln!(f, "{row}")?;
    }
    let _ = port_names;
    Ok(())
}

/// Legacy VTK 3.0 ASCII export of one excitation: triangle cell data with
/// the potential (real part, sink side pinned at 0 V) and the surface
/// current magnitude.
pub fn write_fields_vtk(
    path: &Path,
    mesh: &SurfaceMesh<f64>,
    edges: &EdgeSet<f64>,
    fields: &FieldSolution<f64>,
) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "parex surface fields (port {})", fields.excited_port)?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(f, "POINTS {} double", mesh.vertices().len())?;
    for v in mesh.vertices() {
        writeln!(f, "{:e} {:e} {:e}", v.x, v.y, v.z)?;
    }
    let nt = mesh.n_triangles();
    writeln!(f, "CELLS {nt} {}", nt * 4)?;
    for tri in mesh.triangles() {
        writeln!(f, "3 {} {} {}", tri[0], tri[1], tri[2])?;
    }
    writeln!(f, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(f, "5")?; // VTK_TRIANGLE
    }
    writeln!(f, "CELL_DATA {nt}")?;
    writeln!(f, "SCALARS potential_V double 1")?;
    writeln!(f, "LOOKUP_TABLE default")?;
    for t in 0..nt {
        writeln!(f, "{:e}", fields.potentials[t].re)?;
    }
    writeln!(f, "SCALARS current_mag_A_per_m double 1")?;
    writeln!(f, "LOOKUP_TABLE default")?;
    let edge_currents: Vec<Complex<f64>> = fields.branch_currents[..edges.len()].to_vec();
    for t in 0..nt {
        let mag = parex::extract::surface_current_magnitude(mesh, edges, &edge_currents, t);
        writeln!(f, "{mag:e}")?;
    }
    Ok(())
}

pub fn field_file_name(port_name: &str, freq_hz: f64) -> String {
    format!("fields_{port_name}_{freq_hz:.6e}.vtk")
}
