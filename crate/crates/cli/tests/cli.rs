use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn nhoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhoc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn validate_reports_dimensions() {
    let o = nhoc(&["validate", &fixture("section5.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["n"], 3);
    assert_eq!(v["m"], 2);
}

#[test]
fn christoffel_table_and_levi_civita() {
    let spec = fixture("section5.json");
    let o = nhoc(&["christoffel", &spec, "--point", "0,0.5,0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,i,j,gamma"));
    assert_eq!(lines.count(), 27);

    let o = nhoc(&[
        "christoffel",
        &spec,
        "--point",
        "0,0,0",
        "--source",
        "levi-civita",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o)
        .lines()
        .find(|l| l.starts_with("1,2,2,"))
        .unwrap()
        .to_string();
    let gamma: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((gamma + 1.0).abs() < 1e-12);
}

#[test]
fn simulate_kinematic_constant_controls() {
    let o = nhoc(&[
        "simulate",
        &fixture("section5.json"),
        "--mode",
        "kin",
        "--controls",
        "0,1",
        "--x0",
        "0,0,0",
        "--t0",
        "0",
        "--tf",
        "1",
        "--step",
        "0.01",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((last[0] - 1.0).abs() < 1e-12);
    assert!((last[2] - 1.0).abs() < 1e-12);
}

#[test]
fn convert_mechanical_to_kinematic_matches_fixture() {
    let o = nhoc(&[
        "convert",
        &fixture("section5.json"),
        "--direction",
        "mech2kin",
        "--traj",
        &fixture("section5_mechanical.csv"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("t,x1,x2,x3,x0,u1,u2"));
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(
            cols[5].abs() < 1e-12 && (cols[6] - 1.0).abs() < 1e-12,
            "{line}"
        );
    }
}

#[test]
fn classify_writes_report_and_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = nhoc(&[
        "classify",
        &fixture("section5.json"),
        "--traj",
        &fixture("section5_mechanical.csv"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verdict"], "strictly-abnormal");
    assert_eq!(report["mode"], "mechanical");
    for name in [
        "mechanical-abnormal.csv",
        "mechanical-case-2.csv",
        "mechanical-case-3.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn classify_kinematic_to_stdout() {
    let o = nhoc(&[
        "classify",
        &fixture("section5.json"),
        "--traj",
        &fixture("section5_kinematic.csv"),
        "--time-mode",
        "free",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], "strictly-abnormal");
}

#[test]
fn transfer_shipped_certificate() {
    let spec = fixture("section5.json");
    let cert = fixture("section5_mech_cert.csv");
    for (t1, passed) in [("0.5", true), ("1", true), ("0", false)] {
        let o = nhoc(&["transfer", &spec, "--mech-cert", &cert, "--t1", t1]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        let r = json(&o);
        assert_eq!(r["passed"], passed, "t1={t1}");
        assert_eq!(r["abnormal"], true);
    }
}

#[test]
fn transfer_off_grid_is_input_error() {
    let o = nhoc(&[
        "transfer",
        &fixture("section5.json"),
        "--mech-cert",
        &fixture("section5_mech_cert.csv"),
        "--t1",
        "0.123",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn example_section5_passes() {
    let o = nhoc(&["example", "section5"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = json(&o);
    let items = r["items"].as_array().unwrap();
    assert!(!items.is_empty());
    assert!(items.iter().all(|i| i["pass"] == true));

    let o = nhoc(&["example", "section5", "--source", "levi-civita"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["gamma_1_22_origin"], -1.0);
    assert_eq!(r["kinematic_verdict"], "strictly-abnormal");
}

#[test]
fn exit_codes() {
    assert_eq!(nhoc(&[]).status.code(), Some(1));
    assert_eq!(nhoc(&["classify"]).status.code(), Some(1));
    assert_eq!(nhoc(&["--help"]).status.code(), Some(0));
    assert_eq!(nhoc(&["--version"]).status.code(), Some(0));

    let o = nhoc(&["validate", "/nonexistent/spec.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/spec.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = nhoc(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

#[test]
fn failing_dynamics_check_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("broken.csv");
    let text = std::fs::read_to_string(fixture("section5_mechanical.csv")).unwrap();
    // Doubles every u1 so the recorded controls no longer drive the path.
    let broken: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                return format!("{l}\n");
            }
            let mut cols: Vec<String> = l.split(',').map(String::from).collect();
            let k = cols.len() - 2;
            cols[k] = "2.0".into();
            format!("{}\n", cols.join(","))
        })
        .collect();
    std::fs::write(&traj, broken).unwrap();
    let out = dir.path().join("report.json");
    let o = nhoc(&[
        "classify",
        &fixture("section5.json"),
        "--traj",
        traj.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.exists());
}
