use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gelflow_cli::{run_cli_with, EXIT_CONFIG, EXIT_IO, EXIT_MESH, EXIT_SOLVER};

fn gelflow(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gelflow").chain(args.iter().copied());
    let code = run_cli_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn small(dt: &str, load: &str) -> String {
    format!(
        r#"{{
  "domain": {{ "type": "rect", "nx": 4, "ny": 4 }},
  "load": {load},
  "initial": {{ "type": "diagonal_sine", "amplitude": 1e-4 }},
  "dt": {dt},
  "t_final": 0.05
}}"#
    )
}

const TANGENTIAL: &str = r#"{ "type": "tangential", "magnitude": 0.1 }"#;

#[test]
fn run_writes_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &small("0.01", TANGENTIAL));
    let out = dir.path().join("out");
    let (code, _, err) = gelflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--stride", "2"]);
    assert_eq!(code, 0, "{err}");
    let snaps: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("snap_"))
        .collect();
    // steps 0, 2, 4 of N = 5
    assert_eq!(snaps.len(), 5 / 2 + 1);
    assert!(out.join("snap_0.vtk").exists() && out.join("snap_4.vtk").exists());
    let vtk = fs::read_to_string(out.join("snap_2.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 2.0"));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,t,J_h,C_q,C_u,C_ptilde,C_p,theta,mult_x,mult_y");
    assert_eq!(lines.count(), 5);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &small("0.01", TANGENTIAL));
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert_eq!(gelflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).0, 0);
        files.push((
            fs::read(out.join("diagnostics.csv")).unwrap(),
            fs::read(out.join("snap_5.vtk")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn zero_dt_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &small("0", TANGENTIAL));
    let (code, _, err) = gelflow(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("dt"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = small("0.01", TANGENTIAL).replacen('{', "{ \"dtt\": 1,", 1);
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = gelflow(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("dtt"), "{err}");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nope.json");
    assert_eq!(gelflow(&["run", cfg.to_str().unwrap()]).0, EXIT_IO);
}

#[test]
fn incompatible_load_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let load = r#"{ "type": "per_tag", "values": { "left": [0.5, 0.0] } }"#;
    let cfg = write(dir.path(), "c.json", &small("0.01", load));
    let out = dir.path().join("out");
    let (code, _, err) = gelflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_SOLVER, "{err}");
}

#[test]
fn mesh_info_reports_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.mesh",
        "$Nodes\n3\n1 0 0\n2 1 0\n3 0 1\n$Triangles\n1\n1 1 2 3\n$BoundaryEdges\n3\n1 1 2 1\n2 2 3 1\n3 3 1 1\n",
    );
    let (code, out, _) = gelflow(&["mesh-info", good.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("triangles"), "{out}");

    let bad = write(
        dir.path(),
        "bad.mesh",
        "$Nodes\n3\n1 0 0\n2 1 0\n3 0 1\n$Triangles\n1\n1 1 3 2\n$BoundaryEdges\n3\n1 1 2 1\n2 2 3 1\n3 3 1 1\n",
    );
    let (code, _, err) = gelflow(&["mesh-info", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_MESH);
    assert!(err.contains("negative area"), "{err}");
}

#[test]
fn convergence_writes_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mms.json",
        r#"{
  "domain": { "type": "rect", "nx": 2, "ny": 2 },
  "material": { "k": 100, "g": 100, "phi": 0, "xi": 1 },
  "load": { "type": "mms" },
  "dt": 0.125,
  "t_final": 0.25,
  "study": { "levels": 3, "coupling": "dt_h2" }
}"#,
    );
    let out = dir.path().join("out");
    let (code, _, err) = gelflow(&["convergence", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out.join("rates.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "level,h,dt,H1_u,rate_u,L2_q,rate_q,gradP,rate_p");
    assert_eq!(lines.count(), 3);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gelflow");
    let status = Command::new(bin).args(["run", "/definitely/not/here.json"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_IO));
    let status = Command::new(bin).arg("bogus").status().unwrap();
    assert_eq!(status.code(), Some(EXIT_CONFIG));
}
