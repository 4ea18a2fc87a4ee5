use std::fs;
use std::path::Path;
use std::process::Command;

use digimkt::state_io::{read_state, CertificateDocument, ParetoDocument, TransferDocument};
use digimkt::{parse_instance, Instance};
use digimkt_cli::run;
use tempfile::tempdir;

fn go(args: &[&str]) -> i32 {
    run(std::iter::once("digimkt").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen_cd(dir: &Path, name: &str, seed: &str) -> String {
    let out = dir.join(name);
    let code = go(&[
        "gen", "--agents", "2", "--categories", "1", "--songs", "1", "--family", "cobb_douglas", "--seed", seed,
        "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    out.to_str().unwrap().to_string()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        assert_eq!(go(&["gen", "--agents", "2", "--categories", "1", "--songs", "1", "--seed", "7", "--out", p(out)]), 0);
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let inst: Instance = parse_instance(std::str::from_utf8(&text).unwrap()).unwrap();
    assert_eq!((inst.n(), inst.g()), (2, 1));
}

#[test]
fn solve_then_certify_and_check_welfare() {
    let dir = tempdir().unwrap();
    let inst_path = gen_cd(dir.path(), "a.json", "7");
    let run_dir = dir.path().join("run");
    let code = go(&[
        "solve", "--instance", &inst_path, "--rule", "multiplicative", "--eta", "0.1", "--tol", "1e-6",
        "--max-iters", "20000", "--out-dir", p(&run_dir),
    ]);
    assert_eq!(code, 0);
    for f in ["state.json", "certificate.json", "iterations.csv", "report.json"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["outcome"], "converged");
    assert_eq!(report["exit_code"], 0);
    assert_eq!(report["config"]["max_iters"], 20000);

    let state = run_dir.join("state.json");
    let cert = dir.path().join("cert.json");
    assert_eq!(go(&["certify", "--instance", &inst_path, "--state", p(&state), "--tol", "1e-6", "--out", p(&cert)]), 0);
    let doc: CertificateDocument = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert!(doc.pass);
    assert_eq!(fs::read_to_string(&cert).unwrap(), fs::read_to_string(run_dir.join("certificate.json")).unwrap());

    let verdict = dir.path().join("pareto.json");
    assert_eq!(go(&["welfare1", "--instance", &inst_path, "--state", p(&state), "--out", p(&verdict)]), 0);
    let doc: ParetoDocument = serde_json::from_str(&fs::read_to_string(&verdict).unwrap()).unwrap();
    assert!(!doc.dominated);
    assert_eq!(doc.grid_step, 0.05);

    // a tighter tolerance than the solve used may fail, but never as an input error
    let strict = go(&["certify", "--instance", &inst_path, "--state", p(&state), "--tol", "1e-12"]);
    assert!(strict == 0 || strict == 1);
}

#[test]
fn solve_runs_are_reproducible() {
    let dir = tempdir().unwrap();
    let inst_path = gen_cd(dir.path(), "a.json", "3");
    let mut outputs = Vec::new();
    for name in ["one", "two"] {
        let out = dir.path().join(name);
        let code = go(&["solve", "--instance", &inst_path, "--max-iters", "500", "--seed", "4", "--out-dir", p(&out)]);
        assert!(code == 0 || code == 2);
        outputs.push(
            ["state.json", "certificate.json", "iterations.csv"].map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn non_convergence_is_exit_two() {
    let dir = tempdir().unwrap();
    let inst_path = gen_cd(dir.path(), "a.json", "7");
    let out = dir.path().join("run");
    let report = dir.path().join("report.json");
    let code = go(&["solve", "--instance", &inst_path, "--max-iters", "1", "--out-dir", p(&out), "--report", p(&report)]);
    assert_eq!(code, 2);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["outcome"], "max_iters");
    assert_eq!(r["exit_code"], 2);
    // the best state is still written and readable
    let inst: Instance = parse_instance(&fs::read_to_string(&inst_path).unwrap()).unwrap();
    read_state(&inst, &fs::read_to_string(out.join("state.json")).unwrap()).unwrap();
}

#[test]
fn welfare2_writes_transfer_artifacts() {
    let dir = tempdir().unwrap();
    let inst_path = gen_cd(dir.path(), "a.json", "7");
    let targets = dir.path().join("targets.json");
    fs::write(&targets, r#"{"targets": [0.2, 0.2]}"#).unwrap();
    let out = dir.path().join("w2");
    let code = go(&["welfare2", "--instance", &inst_path, "--targets", p(&targets), "--max-iters", "2000", "--out-dir", p(&out)]);
    assert!((0..=2).contains(&code), "{code}");
    let doc: TransferDocument = serde_json::from_str(&fs::read_to_string(out.join("transfer.json")).unwrap()).unwrap();
    assert_eq!(doc.budgets.len(), 2);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["exit_code"], code);
    let inst: Instance = parse_instance(&fs::read_to_string(&inst_path).unwrap()).unwrap();
    read_state(&inst, &fs::read_to_string(out.join("state.json")).unwrap()).unwrap();
}

#[test]
fn input_errors_exit_three() {
    let dir = tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(go(&["solve", "--instance", p(&missing)]), 3);
    assert_eq!(go(&["solve", "--bogus"]), 3);
    assert_eq!(go(&["frobnicate"]), 3);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"agents": [], "categories": []"#).unwrap();
    assert_eq!(go(&["solve", "--instance", p(&bad)]), 3);

    let empty_cat = dir.path().join("empty.json");
    fs::write(
        &empty_cat,
        r#"{"agents": [{"labor": 1, "costs": [1, 1], "utility": {"family": "linear", "coefficients": [1, 1]},
                        "orders": {"1": ["agent:0"]}}],
            "categories": [{"songs": []}]}"#,
    )
    .unwrap();
    assert_eq!(go(&["solve", "--instance", p(&empty_cat)]), 3);

    let inst_path = gen_cd(dir.path(), "a.json", "1");
    assert_eq!(go(&["solve", "--instance", &inst_path, "--eta", "2"]), 3);
    assert_eq!(go(&["certify", "--instance", &inst_path, "--state", p(&bad)]), 3);
    assert_eq!(go(&["gen", "--agents", "0", "--categories", "1", "--songs", "1"]), 3);

    let targets = dir.path().join("t.json");
    fs::write(&targets, r#"{"targets": [1.0, 0.0]}"#).unwrap();
    assert_eq!(go(&["welfare2", "--instance", &inst_path, "--targets", p(&targets)]), 3);
}

#[test]
fn binary_reports_exit_codes() {
    let dir = tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_digimkt");
    let out = Command::new(exe)
        .args(["gen", "--agents", "1", "--categories", "1", "--songs", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let inst: Instance = parse_instance(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(inst.n(), 1);

    let status = Command::new(exe)
        .args(["certify", "--instance", p(&dir.path().join("nothing.json")), "--state", "x"])
        .env("DIGIMKT_LOG", "quiet")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
