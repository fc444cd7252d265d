use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qlbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlbm")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut v = vec!["--out", dir.to_str().unwrap()];
    v.extend_from_slice(args);
    qlbm(&v)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["report"].clone()
}

fn manifest_hash(dir: &Path) -> String {
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    v["sha256"].as_str().unwrap().to_string()
}

const SPHERE_SIM: &str = r#"{
  "tau": 0.8,
  "simulation": {
    "grid": [10, 6, 6],
    "geometry": {"kind": "sphere", "center": [4.5, 2.5, 2.5], "radius": 1.6},
    "initial_velocity": [0.03, 0, 0],
    "steps": 8,
    "snapshot_every": 4
  }
}"#;

#[test]
fn simulate_sphere_writes_drag_series() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("sim.json");
    fs::write(&cfg, SPHERE_SIM).unwrap();
    let out = d.path().join("out");
    let o = run_in(&out, &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("drag.csv")).unwrap();
    let hash = manifest_hash(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), format!("# manifest_sha256={hash}"));
    assert!(lines.next().unwrap().starts_with("step,drag_N"));
    assert_eq!(lines.count(), 8);
    for s in [0, 4, 8] {
        assert!(out.join(format!("snapshot_{s:06}.csv")).exists());
    }
    let r = report(&out.join("simulate.json"));
    let (m0, m1) = (r["initial_mass"].as_f64().unwrap(), r["final_mass"].as_f64().unwrap());
    assert!(((m1 - m0) / m0).abs() < 1e-12);
    assert!(r["solid_nodes"].as_u64().unwrap() > 0);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("sim.json");
    fs::write(&cfg, SPHERE_SIM).unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(code(&run_in(dir, &["--config", cfg.to_str().unwrap(), "simulate"])), 0);
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn simulate_zero_steps_keeps_initial_snapshot_only() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("z.json");
    fs::write(&cfg, r#"{"simulation": {"grid": [3, 3, 3]}}"#).unwrap();
    let o = run_in(d.path(), &["--config", cfg.to_str().unwrap(), "simulate", "--steps", "0"]);
    assert_eq!(code(&o), 0);
    let snaps: Vec<_> = fs::read_dir(d.path())
        .unwrap()
        .filter_map(|e| e.unwrap().file_name().into_string().ok())
        .filter(|n| n.starts_with("snapshot_"))
        .collect();
    assert_eq!(snaps, vec!["snapshot_000000.csv".to_string()]);
    // header, column names, 27 populations on 27 nodes
    let s = fs::read_to_string(d.path().join("snapshot_000000.csv")).unwrap();
    assert_eq!(s.lines().count(), 2 + 27 * 27);
}

#[test]
fn malformed_config_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.json");
    fs::write(&cfg, "{\"tau\": 0.7,").unwrap();
    let o = run_in(d.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line"), "{err}");
    fs::write(&cfg, r#"{"tau": 0.7, "unknown_field": 1}"#).unwrap();
    assert_eq!(code(&run_in(d.path(), &["--config", cfg.to_str().unwrap(), "simulate"])), 2);
}

#[test]
fn unstable_run_is_a_numerical_failure() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("blow.json");
    fs::write(
        &cfg,
        r#"{"tau": 0.51, "simulation": {"grid": [6, 6, 6],
            "geometry": {"kind": "sphere", "center": [3, 3, 3], "radius": 1.5},
            "initial_velocity": [0.9, 0.5, 0], "steps": 3000, "no_snapshots": true}}"#,
    )
    .unwrap();
    assert_eq!(code(&run_in(d.path(), &["--config", cfg.to_str().unwrap(), "simulate"])), 4);
}

#[test]
fn oversized_simulation_is_refused() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(d.path(), &["simulate", "--instance", "sphere-re1e3"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));
}

#[test]
fn matrices_single_node_census() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["matrices"])), 0);
    let r = report(&d.path().join("census.json"));
    assert_eq!(r["census"]["f1_nonzeros"], 729);
    assert_eq!(r["census"]["f2_nonzeros"], 15180);
    assert_eq!(r["census"]["f3_nonzeros"], 409860);
    assert_eq!(r["assembled_nonzeros"]["f2"], 15180);
    assert_eq!(r["assembled_nonzeros"]["f3"], 409860);
    let coo = fs::read_to_string(d.path().join("f2.coo")).unwrap();
    let mut lines = coo.lines();
    assert!(lines.next().unwrap().starts_with("% manifest_sha256="));
    assert_eq!(lines.next().unwrap(), "% 27 729 15180");
    assert_eq!(lines.count(), 15180);
}

#[test]
fn matrices_variant_changes_census() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("dense"), d.path().join("sparse"));
    assert_eq!(code(&run_in(&a, &["matrices", "--variant", "dense"])), 0);
    assert_eq!(code(&run_in(&b, &["matrices", "--variant", "sparse"])), 0);
    let (ra, rb) = (report(&a.join("census.json")), report(&b.join("census.json")));
    assert_eq!(ra["census"]["f1_nonzeros"], rb["census"]["f1_nonzeros"]);
    assert_ne!(ra["census"]["f2_nonzeros"], rb["census"]["f2_nonzeros"]);
    assert_ne!(ra["census"]["f3_nonzeros"], rb["census"]["f3_nonzeros"]);
}

#[test]
fn matrices_cap_refusal() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(d.path(), &["matrices", "--grid", "2", "--cap", "100"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));
    assert!(!d.path().join("census.json").exists());
}

#[test]
fn matrices_csv_format() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["--format", "csv", "matrices", "--variant", "sparse"])), 0);
    let s = fs::read_to_string(d.path().join("census.csv")).unwrap();
    assert_eq!(s.lines().count(), 5);
    assert!(s.contains("sparse,f1,729,"));
}

#[test]
fn analyze_reference_tau() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["analyze", "--phi0", "0.2958"])), 0);
    let r = report(&d.path().join("analyze.json"));
    assert_eq!(r["norms"]["spectral_bound"].as_f64().unwrap().round(), 901.0);
    let lo = r["convergence"]["t_c_lower"].as_f64().unwrap();
    let hi = r["convergence"]["t_c_upper"].as_f64().unwrap();
    assert!((lo - 1.106e-4).abs() < 5e-8, "{lo}");
    assert!((hi - 1.237e-4).abs() < 5e-8, "{hi}");
}

#[test]
fn analyze_tau_limits() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["--tau", "0.4", "analyze"])), 2);
    assert_eq!(code(&run_in(d.path(), &["--tau", "1", "analyze"])), 0);
    let r = report(&d.path().join("analyze.json"));
    assert!((r["norms"]["spectral_bound"].as_f64().unwrap() - 559.0).abs() <= 1.0);
    let top = r["spectral_bound_over_tau"]["tau_half_limit"].as_f64().unwrap();
    assert!((top - 1072.0).abs() <= 1.0, "{top}");
}

#[test]
fn analyze_physical_window() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["--format", "csv", "analyze", "--instance", "sphere-re1e1"])), 0);
    let s = fs::read_to_string(d.path().join("analyze.csv")).unwrap();
    let get = |k: &str| -> f64 {
        s.lines().find_map(|l| l.strip_prefix(&format!("{k},"))).unwrap().parse().unwrap()
    };
    assert!((get("physical_t_c_lower") / 3.676e-2 - 1.0).abs() < 1e-3);
    assert!((get("physical_t_c_upper") / 4.112e-2 - 1.0).abs() < 1e-3);
}

#[test]
fn estimate_known_and_unknown_instances() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["estimate", "--instance", "sphere-re1e2"])), 0);
    let r = report(&d.path().join("estimate.json"));
    let e = &r["estimate"];
    assert!(e["logical_qubits"].as_f64().unwrap() > 0.0);
    let layers: f64 = e["layers"].as_array().unwrap().iter().map(|l| l["calls"].as_f64().unwrap()).product();
    let per = e["per_encoding"]["a_encoding_t_gates"].as_f64().unwrap();
    let total = e["t_gate_total"].as_f64().unwrap();
    assert!((layers * per / total - 1.0).abs() < 1e-12);
    assert_eq!(code(&run_in(d.path(), &["estimate", "--instance", "sphere-re1e9"])), 2);
    assert_eq!(code(&run_in(d.path(), &["estimate"])), 2);
}

#[test]
fn estimate_model_flag() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(code(&run_in(&a, &["estimate", "--instance", "kcs", "--model", "constant:1"])), 0);
    assert_eq!(code(&run_in(&b, &["estimate", "--instance", "kcs", "--model", "constant:10"])), 0);
    let ta = report(&a.join("estimate.json"))["estimate"]["t_gate_total"].as_f64().unwrap();
    let tb = report(&b.join("estimate.json"))["estimate"]["t_gate_total"].as_f64().unwrap();
    assert!((tb / ta - 10.0).abs() < 1e-9);
    assert_eq!(code(&run_in(d.path(), &["estimate", "--instance", "kcs", "--model", "cubic"])), 2);
}

#[test]
fn sweep_spheres_rows_ratio_and_slope() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["sweep"])), 0);
    let s = fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert!(lines[0].starts_with("# manifest_sha256="));
    assert!(lines[1].ends_with("unstructured_over_bespoke"));
    let rows: Vec<&str> = lines[2..].iter().copied().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        let ratio: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ratio > 1.0);
    }
    assert!(lines.last().unwrap().contains("slope="));
}

#[test]
fn sweep_encoding_flag_and_json() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(
        d.path(),
        &["--encoding", "unstructured", "--format", "json", "sweep", "--instances", "sphere-re1e1,sphere-re1e2"],
    );
    assert_eq!(code(&o), 0);
    let r = report(&d.path().join("sweep.json"));
    assert_eq!(r["encoding"], "unstructured");
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["t_gates"], rows[0]["t_gates_unstructured"]);
    assert!(r["fit"]["slope"].is_number());
    assert_eq!(code(&run_in(d.path(), &["sweep", "--instances", "sphere-re1e1,bogus"])), 2);
}

#[test]
fn manifest_records_overrides() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["--tau", "0.7", "analyze", "--phi0", "0.3"])), 0);
    let m: Value = serde_json::from_str(&fs::read_to_string(d.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["manifest"]["command"], "analyze");
    assert_eq!(m["manifest"]["overrides"]["tau"], "0.7");
    assert_eq!(m["manifest"]["overrides"]["phi0_inf"], "0.3");
    assert!(m["manifest"]["seed"].is_null());
    let r: Value = serde_json::from_str(&fs::read_to_string(d.path().join("analyze.json")).unwrap()).unwrap();
    assert_eq!(r["manifest_sha256"], m["sha256"]);
}

#[test]
fn help_documents_rounding() {
    let o = qlbm(&["--help"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("one\nsignificant figure") || s.contains("one significant figure"), "{s}");
}
