use std::path::Path;
use std::process::{Command, Output};

fn qualrob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qualrob"))
        .args(args)
        .env("QUALROB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const UGC: &str = r#"{
    "experiment-kind": "ugc",
    "process-class": {"kind": "arma-class", "c": 0.5, "grid-size": 3},
    "metric": "kolmogorov-phi:one",
    "n-grid": [16, 64],
    "delta": 0.2,
    "replicates": 40,
    "master-seed": 11
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn metric_between_point_masses() {
    let o = qualrob(&[
        "metric",
        "--kind",
        "levy",
        "--mu",
        r#"{"kind":"point-mass","location":0}"#,
        "--nu",
        r#"{"kind":"point-mass","location":0}"#,
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);

    let o = qualrob(&[
        "metric",
        "--kind",
        "prohorov",
        "--mu",
        r#"{"kind":"point-mass","location":0}"#,
        "--nu",
        r#"{"kind":"point-mass","location":1}"#,
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 1.0);
}

#[test]
fn mixing_bound_of_arma() {
    let o = qualrob(&[
        "mixing-bound",
        "--phi",
        "0.5",
        "--theta",
        "0.3",
        "--n",
        "10",
    ]);
    assert!(o.status.success());
    let alpha: f64 = stdout(&o).trim().parse().unwrap();
    assert!(alpha > 0.0 && alpha < 0.25);

    let o = qualrob(&["mixing-bound", "--phi", "-0.5", "--n", "3", "--profile"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("n,tail,alpha"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--phi", "0.5", "--n", "20", "--seed", "3"];
    let (a, b) = (qualrob(&args), qualrob(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 21);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(qualrob(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        qualrob(&["metric", "--kind", "levy", "--mu", "{", "--nu", "{}"])
            .status
            .code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ugc.json", UGC);
    let out = dir.path().join("r.csv");
    let o = qualrob(&[
        "robustness",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let bad = write(
        dir.path(),
        "bad.json",
        &UGC.replace("\"delta\": 0.2,", "\"delta\": 0.2, \"extra\": 1,"),
    );
    let o = qualrob(&["ugc", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ugc_run_writes_identical_tables_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ugc.json", UGC);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = qualrob(&["ugc", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let header = String::from_utf8(ta)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned();
    assert_eq!(
        header,
        "experiment-kind,class-member-id,n,statistic,value,mc-std-error,seed,family-descriptor,timestamp"
    );

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["experiment-kind"], "ugc");
    assert_eq!(manifest["master-seed"], 11);
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["config-sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn rio_check_within_bounds_exits_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "rio.json",
        r#"{
            "experiment-kind": "rio-check",
            "process-class": [{"kind": "arma", "phi": [0.5], "noise": {"kind": "gaussian", "mean": 0, "sd": 1}}],
            "n-grid": [16],
            "replicates": 50,
            "master-seed": 1
        }"#,
    );
    let out = dir.path().join("rio.csv");
    let o = qualrob(&[
        "rio-check",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.exists());
}
