//! Black-box tests of the `covep` binary: exit codes, output files, and the
//! shape of the CSV/JSON artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn covep(args: &[&str], extra: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_covep"));
    cmd.args(args);
    for (flag, path) in extra {
        cmd.arg(flag).arg(path);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{ \"seed\": 1, ");
    let out = covep(&["verify"], &[("--config", &cfg), ("--out", dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn invalid_field_value_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{
  "seed": 1,
  "group": { "name": "su2" },
  "grid": { "dims": 3, "shape": [8, 8], "extent": [1.0, 1.0], "boundary": "periodic" }
}
"#,
    );
    let out = covep(&["verify"], &[("--config", &cfg), ("--out", dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.shape"));
}

#[test]
fn malformed_section_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    std::fs::write(&csv, "idx0,idx1,comp,value\n0,0,0,not-a-number\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "reduce.json",
        &format!(
            r#"{{
  "seed": 1,
  "group": {{ "name": "abelian_r:1" }},
  "grid": {{ "dims": 2, "shape": [4, 4], "extent": [1.0, 1.0], "boundary": "periodic" }},
  "reduce": {{ "input": {:?} }}
}}
"#,
            csv.to_str().unwrap()
        ),
    );
    let out = covep(&["reduce"], &[("--config", &cfg), ("--out", dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn reduce_geodesic_input_gives_constant_p() {
    // s(t) = exp(t * (pi/2) E_1) has p identically (pi/2, 0, 0) and zero
    // curvature, up to the stencil truncation error
    let dir = tempfile::tempdir().unwrap();
    let nodes = 33;
    let mut csv = String::from("idx0,comp,value\n");
    for k in 0..nodes {
        let t = k as f64 / (nodes - 1) as f64;
        let half = 0.5 * t * std::f64::consts::FRAC_PI_2;
        // unit quaternion exp(half * i) = (cos half, sin half, 0, 0)
        for (comp, v) in [half.cos(), half.sin(), 0.0, 0.0].iter().enumerate() {
            csv.push_str(&format!("{k},{comp},{v}\n"));
        }
    }
    let csv_path = dir.path().join("s.csv");
    std::fs::write(&csv_path, csv).unwrap();
    let cfg = write_config(
        dir.path(),
        "reduce.json",
        &format!(
            r#"{{
  "seed": 1,
  "group": {{ "name": "su2" }},
  "grid": {{ "dims": 1, "shape": [33], "extent": [1.0], "boundary": "dirichlet" }},
  "reduce": {{ "input": {:?} }}
}}
"#,
            csv_path.to_str().unwrap()
        ),
    );
    let out = covep(&["reduce"], &[("--config", &cfg), ("--out", dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let sigma = std::fs::read_to_string(dir.path().join("sigma.csv")).unwrap();
    let mut lines = sigma.lines();
    assert_eq!(lines.next().unwrap(), "idx0,alpha,i,value");
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let alpha: usize = cols[1].parse().unwrap();
        let value: f64 = cols[3].parse().unwrap();
        let expect = if alpha == 0 { std::f64::consts::FRAC_PI_2 } else { 0.0 };
        assert!((value - expect).abs() < 1e-9, "row {line}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert!(summary["max_curvature"].as_f64().unwrap() < 1e-9);
}

#[test]
fn rigid_body_writes_trajectory_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rb.json",
        r#"{
  "seed": 1,
  "group": { "name": "so3", "h": [[1.0,0.0,0.0],[0.0,2.0,0.0],[0.0,0.0,3.0]] },
  "grid": { "dims": 1, "shape": [3], "extent": [1.0], "boundary": "periodic" },
  "rigid_body": { "mu0": [1.0, 1.0, 1.0], "dt": 0.001, "t_end": 1.0, "output_every": 100 }
}
"#,
    );
    let out = covep(&["rigid-body"], &[("--config", &cfg), ("--out", dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next().unwrap(), "t,mu0,mu1,mu2,casimir_drift,energy_drift");
    let rows: Vec<&str> = lines.collect();
    // 1000 steps sampled every 100, plus the initial and final rows
    assert_eq!(rows.len(), 11);
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-12);
    assert!(last[4].abs() < 1e-10 && last[5].abs() < 1e-10);
}

#[test]
fn harmonic_not_converged_still_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "hm.json",
        r#"{
  "seed": 7,
  "group": { "name": "su2" },
  "grid": { "dims": 1, "shape": [17], "extent": [1.0], "boundary": "dirichlet" },
  "solver": { "max_iter": 0, "grad_tol": 0.0, "tau0": 0.1 },
  "harmonic": { "problem": "geodesic", "xi0": [1.0, 0.0, 0.0] }
}
"#,
    );
    let out = covep(&["harmonic"], &[("--config", &cfg), ("--out", dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["converged"], serde_json::Value::Bool(false));
    assert!(dir.path().join("solution.csv").exists());
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn verify_with_zero_tolerance_scale_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "vf.json",
        r#"{
  "seed": 3,
  "group": { "name": "so3" },
  "grid": { "dims": 2, "shape": [12, 12], "extent": [1.0, 1.0], "boundary": "periodic" },
  "verify": { "trials": 2, "ladder": [8, 16], "tolerance_scale": 0.0 }
}
"#,
    );
    let out = covep(&["verify"], &[("--config", &cfg), ("--out", dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["passed"], serde_json::Value::Bool(false));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "vf.json",
        r#"{
  "seed": 3,
  "group": { "name": "su2" },
  "grid": { "dims": 2, "shape": [12, 12], "extent": [1.0, 1.0], "boundary": "periodic" },
  "verify": { "trials": 2, "ladder": [8, 16] }
}
"#,
    );
    let out_dir = dir.path().join("out");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_covep"));
    cmd.args(["verify", "--seed", "99"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir);
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["seed"], serde_json::json!(99));
}
