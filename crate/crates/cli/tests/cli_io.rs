//! End-to-end checks of the installed binary: exit codes, reproducible
//! output, and the documented file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latbump"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("latbump-cli-{tag}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn ones_block_json() -> &'static str {
    r#"{"n":1,"entries":[
        {"mu":[0],"nu":[0],"re":1.0,"im":0.0},
        {"mu":[0],"nu":[1],"re":1.0,"im":0.0},
        {"mu":[1],"nu":[0],"re":1.0,"im":0.0},
        {"mu":[1],"nu":[1],"re":1.0,"im":0.0}]}"#
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn bnorm_reports_two_sided_estimate_and_is_reproducible() {
    let dir = temp_dir("bnorm");
    let matrix = dir.join("ones.json");
    write(&matrix, ones_block_json());
    let invoke = || {
        run(bin()
            .arg("--seed")
            .arg("7")
            .arg("bnorm")
            .arg("--matrix")
            .arg(&matrix)
            .arg("--restarts")
            .arg("16")
            .arg("--oracle")
            .arg("--oracle-budget")
            .arg("20000"))
    };
    let out1 = invoke();
    assert!(out1.status.success());
    let out2 = invoke();
    assert_eq!(out1.stdout, out2.stdout, "reruns must be bit-identical");
    let v: serde_json::Value = serde_json::from_slice(&out1.stdout).unwrap();
    let lower = v["lower"].as_f64().unwrap();
    let upper = v["upper"].as_f64().unwrap();
    assert!((lower - 1.5f64.sqrt()).abs() <= 1e-7, "lower {lower}");
    assert!((upper - 2.0f64.sqrt()).abs() <= 1e-12, "upper {upper}");
    assert!(v["oracle"].as_f64().unwrap() <= lower + 1e-6);
    assert!(v["converged"].as_bool().unwrap());
}

#[test]
fn missing_matrix_file_exits_2() {
    let out = run(bin().arg("bnorm").arg("--matrix").arg("/nonexistent.json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_q_exits_2() {
    let dir = temp_dir("amalgam");
    let field = dir.join("field.json");
    write(
        &field,
        r#"{"grid":{"lo":[-0.5],"hi":[0.5],"m":4},"re":[0,1,1,1,0],"im":[0,0,0,0,0]}"#,
    );
    let out = run(bin()
        .arg("amalgam")
        .arg("--field")
        .arg(&field)
        .arg("--q")
        .arg("0.3"));
    assert_eq!(out.status.code(), Some(2));
    let ok = run(bin()
        .arg("amalgam")
        .arg("--field")
        .arg(&field)
        .arg("--q")
        .arg("inf"));
    assert!(ok.status.success());
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_a_reports_verdicts() {
    let dir = temp_dir("checka");
    let good = dir.join("std.json");
    write(&good, r#"{"type":"std_bump"}"#);
    let theta_path = dir.join("theta.json");
    let out = run(bin()
        .arg("check-a")
        .arg("--bump")
        .arg(&good)
        .arg("--window")
        .arg("-1,1")
        .arg("--m")
        .arg("64")
        .arg("--theta-out")
        .arg(&theta_path));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "holds");
    assert!(theta_path.exists());
    // the exported window parses back as a sampled field
    let theta = latbump_core::grid::read_field(&theta_path).unwrap();
    assert!(theta.max_abs() > 0.0);

    let bad = dir.join("pair.json");
    write(
        &bad,
        r#"{"type":"shift_sum","base":{"type":"std_bump"},"shifts":[[0.0],[1.0]],"weights":[1.0,1.0]}"#,
    );
    let out = run(bin()
        .arg("check-a")
        .arg("--bump")
        .arg(&bad)
        .arg("--window")
        .arg("-1,1")
        .arg("--m")
        .arg("64"));
    assert!(out.status.success(), "a fails verdict is still a clean run");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "fails");
    assert!(v["obstruction"].as_array().unwrap().len() >= 4);
}

#[test]
fn witness_pipeline_via_cli() {
    let dir = temp_dir("witness");
    let matrix = dir.join("single.json");
    write(
        &matrix,
        r#"{"n":1,"entries":[{"mu":[0],"nu":[0],"re":1.0,"im":0.0}]}"#,
    );
    let out = run(bin()
        .arg("witness")
        .arg("--matrix")
        .arg(&matrix)
        .arg("--m")
        .arg("64"));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["pairing"]["re"].as_f64().unwrap() - 1.0).abs() <= 1e-4);
    assert!(v["abs_error"].as_f64().unwrap() <= 1e-4);
    assert!(v["kit_constants"]["c0"].as_f64().unwrap() > 0.1);
    assert!(v["certificate"].as_f64().unwrap() > 0.3);
}

#[test]
fn apply_writes_field_readable_by_amalgam() {
    let dir = temp_dir("apply");
    let matrix = dir.join("m.json");
    write(
        &matrix,
        r#"{"n":1,"entries":[{"mu":[0],"nu":[0],"re":1.0,"im":0.0}]}"#,
    );
    let bump = dir.join("b.json");
    write(
        &bump,
        r#"{"type":"tensor","factors":[
            {"type":"plateau","inner":[[-0.25,0.25]],"outer":[[-0.5,0.5]]},
            {"type":"plateau","inner":[[-0.25,0.25]],"outer":[[-0.5,0.5]]}]}"#,
    );
    // spectra: theta-like bump samples inside the half cube
    let spectrum = dir.join("f.json");
    let grid = latbump_core::GridBox::new(&[-0.5], &[0.5], 16).unwrap();
    let field = latbump_core::sample(&latbump_core::BumpSpec::scaled(0.0, 0.25), &grid).unwrap();
    write(&spectrum, &latbump_core::grid::field_to_json(&field));
    let out_path = dir.join("out.json");
    let out = run(bin()
        .arg("apply")
        .arg("--matrix")
        .arg(&matrix)
        .arg("--bump")
        .arg(&bump)
        .arg("--f")
        .arg(&spectrum)
        .arg("--g")
        .arg(&spectrum)
        .arg("--m")
        .arg("16")
        .arg("--xbox")
        .arg("-2.5,2.5")
        .arg("--out")
        .arg(&out_path));
    assert!(
        out.status.success(),
        "apply failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let norm = run(bin()
        .arg("amalgam")
        .arg("--field")
        .arg(&out_path)
        .arg("--q")
        .arg("2"));
    assert!(norm.status.success());
    let v: serde_json::Value = serde_json::from_slice(&norm.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_is_bit_stable_and_formats_agree() {
    let dir = temp_dir("verify");
    let cfg = dir.join("cfg.json");
    write(
        &cfg,
        r#"{
            "matrices": [
                {"family": "diagonal", "size": 1},
                {"family": "ones-block", "size": 2}
            ],
            "trials": 3,
            "certificate": false,
            "seed": 11,
            "xbox": [-2.5, 2.5]
        }"#,
    );
    let json1 = dir.join("r1.json");
    let json2 = dir.join("r2.json");
    for out in [&json1, &json2] {
        let r = run(bin()
            .arg("--config")
            .arg(&cfg)
            .arg("verify")
            .arg("--out")
            .arg(out));
        assert!(
            r.status.success(),
            "verify failed: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    let a = std::fs::read(&json1).unwrap();
    let b = std::fs::read(&json2).unwrap();
    assert_eq!(a, b, "same config and seed must give byte-identical reports");

    let csv_path = dir.join("r.csv");
    let r = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("verify")
        .arg("--out")
        .arg(&csv_path));
    assert!(r.status.success());
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let ones_line: Vec<&str> = csv
        .lines()
        .find(|l| l.contains("ones-block"))
        .unwrap()
        .split(',')
        .collect();
    let col = |name: &str| -> f64 {
        let i = header.iter().position(|h| *h == name).unwrap();
        ones_line[i].parse().unwrap()
    };
    let jrow = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["family"] == "ones-block")
        .unwrap();
    assert_eq!(col("bnorm_lower"), jrow["bnorm_lower"].as_f64().unwrap());
    assert_eq!(col("emp_inf"), jrow["empirical"]["inf"].as_f64().unwrap());
}

#[test]
fn verify_rejects_bad_config_with_exit_2() {
    let dir = temp_dir("badcfg");
    let cfg = dir.join("bad.json");
    write(&cfg, r#"{"m": 7}"#);
    let out = run(bin().arg("--config").arg(&cfg).arg("verify"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_obstructed_bump_exits_3() {
    let dir = temp_dir("obstructed");
    let cfg = dir.join("cfg.json");
    write(
        &cfg,
        r#"{
            "matrices": [{"family": "diagonal", "size": 1}],
            "trials": 1,
            "certificate": true,
            "check_m": 32,
            "witness_m": 32,
            "bump": {"type":"tensor","factors":[
                {"type":"shift_sum","base":{"type":"std_bump"},"shifts":[[0.0],[1.0]],"weights":[1.0,1.0]},
                {"type":"shift_sum","base":{"type":"std_bump"},"shifts":[[0.0],[1.0]],"weights":[1.0,1.0]}]}
        }"#,
    );
    let out = run(bin().arg("--config").arg(&cfg).arg("verify"));
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("obstruction"), "stderr: {err}");
}

#[test]
fn results_are_independent_of_thread_count() {
    let dir = temp_dir("threads");
    let cfg = dir.join("cfg.json");
    write(
        &cfg,
        r#"{
            "matrices": [
                {"family": "random-complex", "size": 3, "count": 2},
                {"family": "w-decay", "radius": 2}
            ],
            "trials": 4,
            "certificate": false,
            "seed": 99,
            "xbox": [-2.5, 2.5]
        }"#,
    );
    let single = dir.join("t1.json");
    let multi = dir.join("t4.json");
    for (threads, out) in [("1", &single), ("4", &multi)] {
        let r = run(bin()
            .arg("--threads")
            .arg(threads)
            .arg("--config")
            .arg(&cfg)
            .arg("verify")
            .arg("--out")
            .arg(out));
        assert!(r.status.success());
    }
    assert_eq!(
        std::fs::read(&single).unwrap(),
        std::fs::read(&multi).unwrap(),
        "scheduling must not change any reported number"
    );
}

#[test]
fn expand_reports_terms() {
    let dir = temp_dir("expand");
    let bump = dir.join("b.json");
    write(
        &bump,
        r#"{"type":"tensor","factors":[{"type":"std_bump"},{"type":"std_bump"}]}"#,
    );
    let out = run(bin()
        .arg("expand")
        .arg("--bump")
        .arg(&bump)
        .arg("--tol")
        .arg("1e-4"));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["t"].as_i64().unwrap(), 4);
    assert!(v["achieved_error"].as_f64().unwrap() <= 1e-4);
    assert!(v["term_count"].as_u64().unwrap() > 0);
}
