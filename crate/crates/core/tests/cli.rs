use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khmoves"))
        .args(args)
        .env("KHMOVES_THREADS", "2")
        .output()
        .unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_r3_symbolic_passes_on_five_closures() {
    let o = bin(&[
        "verify",
        "--move",
        "r3",
        "--closure",
        "all",
        "--symbolic",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reports = v["identities"].as_array().unwrap();
    let theorem2: Vec<_> = reports
        .iter()
        .filter(|r| r["identity"] == "theorem2")
        .collect();
    assert_eq!(theorem2.len(), 5);
    assert_eq!(v["summary"]["failed"], 0);
}

#[test]
fn verify_r2_with_a_perturbed_coefficient_fails_with_witness() {
    let o = bin(&[
        "verify",
        "--move",
        "r2",
        "--perturb",
        "rho2:0:0",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bad = v["identities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["identity"] == "chain.rho2" && r["status"] == "fail")
        .unwrap();
    assert!(bad["witness"]["generator"]
        .as_str()
        .unwrap()
        .starts_with("smoothing:"));
}

#[test]
fn verify_all_aggregates_every_identity() {
    let o = bin(&[
        "verify",
        "--move",
        "all",
        "--extra-circles",
        "all",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: std::collections::BTreeSet<&str> = v["identities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["identity"].as_str().unwrap())
        .collect();
    for spec in khmoves::verify::IDENTITIES {
        assert!(names.contains(spec.name), "{}", spec.name);
    }
    assert_eq!(
        o.status.code(),
        Some(if v["summary"]["failed"] == 0 { 0 } else { 1 })
    );
}

#[test]
fn verify_r1_single_closure_at_zero() {
    let o = bin(&["verify", "--move", "r1", "--closure", "0", "--at", "0,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("transcript.first_begin"));
}

#[test]
fn verify_without_fixture_asks_for_solver() {
    let o = bin(&["verify", "--fixture", "/nonexistent/semantics.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solve-semantics"));
}

#[test]
fn homology_of_trefoil_matches_fixture() {
    let o = bin(&[
        "homology",
        &data("diagrams/trefoil_braid.json"),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let got: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data("trefoil_homology.json")).unwrap())
            .unwrap();
    assert_eq!(got, want);
}

#[test]
fn homology_of_crossingless_unknot_has_two_rows() {
    let o = bin(&["homology", &data("diagrams/unknot.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("  1  Z") && text.contains(" -1  Z"));
}

#[test]
fn malformed_pd_is_reported() {
    let o = bin(&["homology", &data("diagrams/malformed.txt")]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed PD"));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"pd\": [[1, 2, 2]]\n").unwrap();
    let o = bin(&["homology", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn invariance_examples() {
    let unknot = data("diagrams/unknot.json");
    let kink = data("diagrams/unknot_kink.json");
    let tref = data("diagrams/trefoil_braid.json");
    assert_eq!(bin(&["invariance", &unknot, &kink]).status.code(), Some(0));
    assert_eq!(
        bin(&["invariance", &tref, &data("diagrams/trefoil_r2.json")])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        bin(&[
            "invariance",
            &data("diagrams/trefoil_r2.json"),
            &data("diagrams/trefoil_r3.json")
        ])
        .status
        .code(),
        Some(0)
    );
    assert_eq!(bin(&["invariance", &unknot, &tref]).status.code(), Some(1));
}

#[test]
fn solve_semantics_reproduces_the_stored_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("semantics.json");
    let o = bin(&["solve-semantics", "--out", out.to_str().unwrap()]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    if stderr.contains("no candidate passes") {
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr.contains("nearest misses"));
    } else {
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        std::fs::read_to_string(data("semantics.json")).unwrap()
    );
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(bin(&["verify", "--move", "r9"]).status.code(), Some(64));
    assert_eq!(
        bin(&["verify", "--extra-circles", "2"]).status.code(),
        Some(64)
    );
    assert_eq!(
        bin(&["verify", "--perturb", "nosuch:0:0"]).status.code(),
        Some(64)
    );
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = bin(&["verify", "--move", "r2", "--format", "json"]);
    let b = Command::new(env!("CARGO_BIN_EXE_khmoves"))
        .args(["verify", "--move", "r2", "--format", "json"])
        .env("KHMOVES_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}
