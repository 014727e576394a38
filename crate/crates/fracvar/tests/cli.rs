use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracvar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracvar")).arg("--output-dir").arg(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("error JSON on stderr")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn weights_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracvar(dir.path(), &["--format", "csv", "weights", "--alpha", "1", "--count", "3"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("weights.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows, ["k,w_k,partial_sum", "0,1,1", "1,-1,0", "2,0,0"]);

    let out = fracvar(dir.path(), &["weights", "--alpha", "0.5", "--count", "3"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("weights.json")).unwrap()).unwrap();
    assert_eq!(v["w_k"], serde_json::json!([1.0, -0.5, -0.125]));
}

#[test]
fn usage_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["weights", "--alpha", "1.5"][..],
        &["verify", "--suite", "nonsense"],
        &["frobnicate"],
        &["solve", "--spec", "/nonexistent/spec.json"],
        &["fracderiv", "--alpha", "0.5"],
    ] {
        let out = fracvar(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}");
        let err = stderr_json(&out);
        assert_eq!(err["error"], "usage");
        assert_eq!(err["exit_code"], 2);
    }
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fracvar(dir.path(), &["--help"])), 0);
}

#[test]
fn fracderiv_of_one_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracvar(dir.path(), &["fracderiv", "--alpha", "0.5", "--function", "one", "--nodes", "1025"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fracderiv.json")).unwrap()).unwrap();
    let last = v["values"][1024].as_f64().unwrap();
    let exact = 1.0 / std::f64::consts::PI.sqrt();
    assert!((last - exact).abs() / exact < 1e-2);
}

#[test]
fn verify_suites_report_and_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracvar(dir.path(), &["verify", "--suite", "limit"]);
    assert_eq!(code(&out), 0);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify-limit.json")).unwrap()).unwrap();
    assert_eq!(r["passed"], true);
    assert!(r["cases"][0]["measured"].as_f64().unwrap() <= 2e-2);

    // the literal kernel criterion does not hold for this discretization
    let out = fracvar(dir.path(), &["verify", "--suite", "kernel"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stderr_json(&out)["error"], "numerical");
}

const POISSON: &str = r#"{
  "kind": "poisson",
  "grid": { "lower": [0, 0], "upper": [1, 1], "nodes": [17, 17] },
  "alpha": [0.5, 0.8],
  "source": "manufactured:sine",
  "dirichlet": "zero",
  "tol": 1e-12
}"#;

#[test]
fn solve_residual_noether_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "p.json", POISSON);
    let out = fracvar(dir.path(), &["solve", "--spec", &spec]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solve-report.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "cg");
    assert_eq!(report["converged"], true);
    assert!(report.get("wall_seconds").is_none());

    assert_eq!(code(&fracvar(dir.path(), &["residual", "--spec", &spec])), 0);
    assert_eq!(code(&fracvar(dir.path(), &["gradcheck", "--spec", &spec, "--trials", "4"])), 0);
    let out = fracvar(dir.path(), &["noether", "--spec", &spec, "--generator", "constant:2"]);
    assert_eq!(code(&out), 0);
    let n: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("noether-report.json")).unwrap()).unwrap();
    assert_eq!(n["identity_holds"], true);
    assert_eq!(n["generator_norm"], 2.0);
}

#[test]
fn non_convergence_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "p.json", &POISSON.replace("\"tol\": 1e-12", "\"tol\": 1e-14, \"max_iter\": 2"));
    let out = fracvar(dir.path(), &["solve", "--spec", &spec]);
    assert_eq!(code(&out), 1);
    assert_eq!(stderr_json(&out)["error"], "numerical");
    // the best iterate is still written
    assert!(dir.path().join("solution.json").exists());
}

#[test]
fn bad_spec_and_mismatched_field_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "bad.json", r#"{"kind":"poisson","alpha":0.5}"#);
    assert_eq!(code(&fracvar(dir.path(), &["solve", "--spec", &spec])), 2);

    let good = write_spec(dir.path(), "p.json", POISSON);
    assert_eq!(code(&fracvar(dir.path(), &["solve", "--spec", &good])), 0);
    let other = write_spec(dir.path(), "q.json", &POISSON.replace("[17, 17]", "[9, 9]"));
    assert_eq!(code(&fracvar(dir.path(), &["residual", "--spec", &other])), 2);
    assert_eq!(code(&fracvar(dir.path(), &["noether", "--spec", &good, "--generator", "bogus"])), 2);
}

#[test]
fn thread_count_does_not_change_bytes() {
    let spec_dir = tempfile::tempdir().unwrap();
    let spec = write_spec(spec_dir.path(), "p.json", POISSON);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_fracvar"))
                .env("FRACVAR_THREADS", threads)
                .arg("--output-dir")
                .arg(dir.path())
                .args(args)
                .output()
                .unwrap();
            assert_eq!(code(&out), 0);
        };
        run(&["solve", "--spec", &spec]);
        run(&["gradcheck", "--spec", &spec, "--trials", "2", "--seed", "7"]);
        outputs.push((
            fs::read(dir.path().join("solution.json")).unwrap(),
            fs::read(dir.path().join("gradcheck-report.json")).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn bad_thread_setting_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fracvar"))
        .env("FRACVAR_THREADS", "many")
        .arg("--output-dir")
        .arg(dir.path())
        .args(["weights", "--alpha", "0.5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
