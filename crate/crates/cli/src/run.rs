//! Run orchestration: mesh → graph → assembly → sweep → files.

use crate::config::{resolve_port, Backend, RunPlan};
use crate::report::*;
use crate::{output, CliError};
use parex::assembly::{AssemblyOptions, BranchAssembly, Material};
use parex::circuit::{fundamental_loops, spanning_forest, CircuitGraph};
use parex::extract::{self, mna, SolveSettings};
use parex::mesh::{build_edges, load_mesh_with};
use parex::pfft::PfftOptions;
use parex::solver::GmresOptions;
use std::time::Instant;

pub struct RunSummary {
    pub points: usize,
    pub failed_points: usize,
    pub output_dir: std::path::PathBuf,
}

pub fn run(plan: &RunPlan, oracle: Option<&str>) -> Result<RunSummary, CliError> {
    let t_start = Instant::now();
    std::fs::create_dir_all(&plan.output_dir)?;

    // mesh
    let t0 = Instant::now();
    let mesh = load_mesh_with::<f64>(&plan.mesh_path, plan.format, plan.weld_tolerance)?;
    let edges = build_edges(&mesh);
    let t_load = t0.elapsed().as_secs_f64();

    // circuit graph and loop basis
    let t0 = Instant::now();
    let ports: Vec<_> = plan
        .ports
        .iter()
        .map(|p| resolve_port(p, &mesh))
        .collect::<Result<_, _>>()?;
    let graph = CircuitGraph::build(&mesh, &edges, &ports)?;
    let forest = spanning_forest(&graph);
    let basis = fundamental_loops(&graph, &forest);
    let t_graph = t0.elapsed().as_secs_f64();

    // operators
    let t0 = Instant::now();
    let asm_opts = AssemblyOptions {
        dense_cap: plan.dense_cap,
        ..AssemblyOptions::default()
    };
    let assembly = match plan.backend {
        Backend::Dense => BranchAssembly::dense(&mesh, &edges, &asm_opts)?,
        Backend::Pfft => {
            let pfft_opts = PfftOptions {
                spacing: plan.grid_spacing,
                order: plan.stencil_order,
                near_margin: plan.near_margin,
                ..PfftOptions::default()
            };
            BranchAssembly::pfft(&mesh, &edges, &asm_opts, &pfft_opts)?
        }
    };
    let t_assembly = t0.elapsed().as_secs_f64();

    let material = if plan.conductivity.is_infinite() {
        Material::new(f64::INFINITY, plan.permeability)
    } else {
        Material::new(plan.conductivity, plan.permeability)
    };
    let settings = SolveSettings {
        gmres: GmresOptions {
            tol: plan.tol,
            restart: plan.restart,
            max_iterations: plan.max_iterations,
        },
        use_preconditioner: plan.preconditioner,
    };

    // sweep with optional field export per converged port solve
    let t0 = Instant::now();
    let closure_tol = (1e-6f64).max(10.0 * plan.tol);
    let mut field_errors: Vec<String> = Vec::new();
    let result = extract::frequency_sweep_observed(
        &assembly,
        &basis,
        &graph,
        &material,
        &plan.frequencies,
        &settings,
        plan.thickness,
        |event| {
            if !plan.write_fields {
                return;
            }
            let solve = extract::field_solution(
                &basis,
                &graph,
                &forest,
                event.op,
                event.loop_currents,
                event.port,
                num_complex::Complex::new(1.0, 0.0),
                closure_tol,
            );
            match solve {
                Ok(fields) => {
                    let name = output::field_file_name(
                        graph.port_name(event.port),
                        event.frequency_hz,
                    );
                    if let Err(e) = output::write_fields_vtk(
                        &plan.output_dir.join(name),
                        &mesh,
                        &edges,
                        &fields,
                    ) {
                        field_errors.push(format!(
                            "field export failed at {:.3e} Hz: {e}",
                            event.frequency_hz
                        ));
                    }
                }
                Err(e) => field_errors.push(format!(
                    "field reconstruction failed at {:.3e} Hz port {}: {e}",
                    event.frequency_hz, event.port
                )),
            }
        },
    )?;
    let t_sweep = t0.elapsed().as_secs_f64();
    for w in &field_errors {
        eprintln!("warning: {w}");
    }

    // optional MNA cross-check
    let oracle_report = match oracle {
        None => None,
        Some("mna") => {
            if plan.backend != Backend::Dense {
                return Err(CliError::Config(
                    "--oracle mna requires --backend dense".into(),
                ));
            }
            let mut max_dev = 0.0f64;
            for point in &result.points {
                let Some(z) = &point.z else { continue };
                let omega = 2.0 * std::f64::consts::PI * point.frequency_hz;
                let op = assembly.at_frequency(&material, omega)?;
                let reference = mna::mna_oracle(&graph, &op)?;
                let mut scale = 0.0f64;
                for i in 0..result.n_ports {
                    for j in 0..result.n_ports {
                        scale = scale.max(reference.z.get(i, j).norm());
                    }
                }
                for i in 0..result.n_ports {
                    for j in 0..result.n_ports {
                        let dev = (z.get(i, j) - reference.z.get(i, j)).norm() / scale;
                        max_dev = max_dev.max(dev);
                    }
                }
            }
            Some(OracleReport {
                kind: "mna".into(),
                max_rel_deviation: max_dev,
            })
        }
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown oracle `{other}` (supported: mna)"
            )))
        }
    };

    // outputs
    let port_names: Vec<String> = (0..graph.n_ports())
        .map(|k| graph.port_name(k).to_string())
        .collect();
    output::write_impedance_csv(
        &plan.output_dir.join("impedance.csv"),
        &result,
        &port_names,
    )?;

    let report = Report {
        mesh: MeshStats {
            vertices: mesh.vertices().len(),
            triangles: mesh.n_triangles(),
            edges: edges.len(),
            conductors: mesh.connected_components(),
        },
        graph: GraphStats {
            nodes: graph.n_nodes(),
            branches: graph.n_branches(),
            separation: graph.n_components(),
            ports: graph.n_ports(),
            twigs: forest.n_twigs(),
            loops: basis.n_loops(),
        },
        solver: SolverStats {
            backend: match plan.backend {
                Backend::Dense => "dense".into(),
                Backend::Pfft => "pfft".into(),
            },
            tol: plan.tol,
            restart: plan.restart,
            preconditioner: plan.preconditioner,
        },
        frequencies: result
            .points
            .iter()
            .map(|p| FrequencyReport {
                freq_hz: p.frequency_hz,
                valid: p.valid,
                error: p.error.clone(),
                ports: p
                    .port_stats
                    .iter()
                    .enumerate()
                    .map(|(k, s)| PortReport {
                        name: port_names[k].clone(),
                        iterations: s.iterations,
                        residual: s.residual,
                        converged: s.converged,
                    })
                    .collect(),
            })
            .collect(),
        timings_s: Timings {
            load: t_load,
            graph: t_graph,
            assembly: t_assembly,
            sweep: t_sweep,
            total: t_start.elapsed().as_secs_f64(),
        },
        memory_estimate_bytes: assembly.memory_bytes(),
        oracle: oracle_report,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(format!("report serialization: {e}")))?;
    std::fs::write(plan.output_dir.join("report.json"), json)?;

    let failed = result.points.iter().filter(|p| p.z.is_none()).count();
    Ok(RunSummary {
        points: result.points.len(),
        failed_points: failed,
        output_dir: plan.output_dir.clone(),
    })
}
