//! End-to-end CLI runs against the compiled binary: config parsing, file
//! outputs, oracle cross-check, determinism and error reporting.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_parex")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("parex-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn prism_config(dir: &Path, backend: &str) -> PathBuf {
    let mesh = parex_testmesh::prism(1e-6, 3e-6);
    parex_testmesh::write_stl_ascii(&dir.join("prism.stl"), &mesh, "prism").unwrap();
    let config = format!(
        r#"
[mesh]
path = "prism.stl"
format = "stl-ascii"

[material]
conductivity = 5.8e7
thickness = 1e-6

[frequency]
list = [5e10]

[[ports]]
name = "p1"
source_triangles = [1]
sink_triangles = [0]

[solver]
backend = "{backend}"
tol = 1e-6

[output]
directory = "out"
"#
    );
    let path = dir.join("run.toml");
    write(&path, &config);
    path
}

fn run_ok(args: &[&str]) -> String {
    let out = Command::new(binary()).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn prism_single_frequency_outputs() {
    let dir = workdir("prism");
    let config = prism_config(&dir, "dense");
    run_ok(&[
        "extract",
        config.to_str().unwrap(),
        "--oracle",
        "mna",
        "--threads",
        "1",
    ]);

    let csv = std::fs::read_to_string(dir.join("out/impedance.csv")).unwrap();
    let lines: Vec<&str> = csv.trim().lines().collect();
    assert_eq!(lines.len(), 2, "header + one data row");
    assert_eq!(lines[0], "freq_hz,R_1_1,L_1_1,valid");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 4);
    let freq: f64 = fields[0].parse().unwrap();
    assert_eq!(freq, 5e10);
    let r: f64 = fields[1].parse().unwrap();
    let l: f64 = fields[2].parse().unwrap();
    assert!(r > 0.0 && l > 0.0);
    assert_eq!(fields[3], "1");
    // 17 significant digits in numeric fields
    let mantissa = fields[1].split('e').next().unwrap().replace(['-', '.'], "");
    assert!(mantissa.len() >= 17, "field `{}` too short", fields[1]);

    // VTK field export exists and is legacy 3.0 ASCII with both cell arrays
    let vtk_name = format!("fields_p1_{:.6e}.vtk", 5e10);
    let vtk = std::fs::read_to_string(dir.join("out").join(vtk_name)).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    assert!(vtk.contains("DATASET UNSTRUCTURED_GRID"));
    assert!(vtk.contains("CELL_DATA 8"));
    assert!(vtk.contains("SCALARS potential_V double 1"));
    assert!(vtk.contains("SCALARS current_mag_A_per_m double 1"));

    // report: counts and oracle deviation
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mesh"]["triangles"], 8);
    assert_eq!(report["mesh"]["edges"], 12);
    assert_eq!(report["graph"]["nodes"], 10);
    assert_eq!(report["graph"]["branches"], 15);
    assert_eq!(report["graph"]["twigs"], 9);
    assert_eq!(report["graph"]["loops"], 6);
    assert_eq!(report["frequencies"][0]["ports"][0]["converged"], true);
    let dev = report["oracle"]["max_rel_deviation"].as_f64().unwrap();
    assert!(dev <= 1e-4, "oracle deviation {dev:e}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = workdir("determinism");
    let config = prism_config(&dir, "dense");
    run_ok(&["extract", config.to_str().unwrap(), "--threads", "1"]);
    let csv1 = std::fs::read(dir.join("out/impedance.csv")).unwrap();
    let vtk_name = format!("fields_p1_{:.6e}.vtk", 5e10);
    let vtk1 = std::fs::read(dir.join("out").join(&vtk_name)).unwrap();
    run_ok(&["extract", config.to_str().unwrap(), "--threads", "1"]);
    let csv2 = std::fs::read(dir.join("out/impedance.csv")).unwrap();
    let vtk2 = std::fs::read(dir.join("out").join(&vtk_name)).unwrap();
    assert_eq!(csv1, csv2, "impedance.csv must be bit-identical");
    assert_eq!(vtk1, vtk2, "field export must be bit-identical");
}

#[test]
fn four_port_csv_has_34_columns() {
    let dir = workdir("fourport");
    // four separated bars along z, one port each, selected by boxes
    let mut scene = parex_testmesh::TriMesh {
        vertices: vec![],
        triangles: vec![],
    };
    for i in 0..4 {
        let bar = parex_testmesh::box_grid([1e-6, 1e-6, 6e-6], [1, 1, 3])
            .translated([3e-6 * i as f64, 0.0, 0.0]);
        scene = scene.merge(&bar);
    }
    parex_testmesh::write_stl_ascii(&dir.join("bars.stl"), &scene, "bars").unwrap();
    let mut ports = String::new();
    for i in 0..4 {
        let x0 = 3e-6 * i as f64 - 1e-9;
        let x1 = 3e-6 * i as f64 + 1e-6 + 1e-9;
        ports.push_str(&format!(
            r#"
[[ports]]
name = "p{i}"
source_box = {{ min = [{x0:e}, -1e-9, -1e-9], max = [{x1:e}, 1.1e-6, 1e-9] }}
sink_box = {{ min = [{x0:e}, -1e-9, 5.9e-6], max = [{x1:e}, 1.1e-6, 6.1e-6] }}
"#
        ));
    }
    let config = format!(
        r#"
[mesh]
path = "bars.stl"
format = "stl-ascii"

[material]
conductivity = 5.8e7

[frequency]
list = [2e10]
{ports}
[solver]
backend = "dense"

[output]
directory = "out"
fields = false
"#
    );
    let path = dir.join("run.toml");
    write(&path, &config);
    run_ok(&["extract", path.to_str().unwrap()]);
    let csv = std::fs::read_to_string(dir.join("out/impedance.csv")).unwrap();
    let lines: Vec<&str> = csv.trim().lines().collect();
    assert_eq!(lines[0].split(',').count(), 1 + 2 * 16 + 1);
    assert_eq!(lines[1].split(',').count(), 1 + 2 * 16 + 1);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mesh"]["conductors"], 4);
    assert_eq!(report["graph"]["ports"], 4);
}

#[test]
fn pfft_backend_matches_dense_end_to_end() {
    let dir = workdir("backends");
    let mesh = parex_testmesh::box_grid([2e-6, 3e-6, 30e-6], [1, 1, 10]);
    parex_testmesh::write_stl_ascii(&dir.join("bar.stl"), &mesh, "bar").unwrap();
    let base = r#"
[mesh]
path = "bar.stl"
format = "stl-ascii"

[material]
conductivity = 5.8e7

[frequency]
list = [5e10]

[[ports]]
name = "p1"
source_box = { min = [-1e-9, -1e-9, -1e-9], max = [2.1e-6, 3.1e-6, 1e-9] }
sink_box = { min = [-1e-9, -1e-9, 2.99e-5], max = [2.1e-6, 3.1e-6, 3.01e-5] }

[solver]
backend = "BACKEND"
tol = 1e-6

[output]
directory = "out-BACKEND"
fields = false
"#;
    for backend in ["dense", "pfft"] {
        let path = dir.join(format!("{backend}.toml"));
        write(&path, &base.replace("BACKEND", backend));
        run_ok(&["extract", path.to_str().unwrap()]);
    }
    let parse = |backend: &str| -> (f64, f64) {
        let csv =
            std::fs::read_to_string(dir.join(format!("out-{backend}/impedance.csv"))).unwrap();
        let line = csv.trim().lines().nth(1).unwrap();
        let f: Vec<&str> = line.split(',').collect();
        (f[1].parse().unwrap(), f[2].parse().unwrap())
    };
    let (rd, ld) = parse("dense");
    let (rp, lp) = parse("pfft");
    assert!((rd - rp).abs() / rd <= 5e-3, "R: {rd} vs {rp}");
    assert!((ld - lp).abs() / ld <= 5e-3, "L: {ld} vs {lp}");
}

#[test]
fn bad_config_yields_machine_readable_error() {
    let dir = workdir("badconfig");
    let path = dir.join("bad.toml");
    write(&path, "[mesh]\npath = \"x.stl\"\nformat = \"weird\"\n");
    let out = Command::new(binary())
        .args(["extract", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["error"], "ConfigError");

    // missing mesh file surfaces as an Io error with nonzero exit
    let cfg = prism_config(&dir, "dense");
    std::fs::remove_file(dir.join("prism.stl")).unwrap();
    let out = Command::new(binary())
        .args(["extract", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn print_defaults_is_valid_config() {
    let stdout = run_ok(&["extract", "--print-defaults"]);
    let parsed: Result<toml::Value, _> = toml::from_str(&stdout);
    assert!(parsed.is_ok(), "default config must parse as TOML");
    let v = parsed.unwrap();
    assert_eq!(v["solver"]["tol"].as_float(), Some(1e-3));
    assert_eq!(v["solver"]["backend"].as_str(), Some("pfft"));
    assert_eq!(v["frequency"]["spacing"].as_str(), Some("log"));
}
