use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slopeforge"))
        .args(args)
        .current_dir(dir)
        .env_remove("SLOPEFORGE_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(o: &Output, key: &str) -> Option<String> {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
}

fn real(o: &Output, key: &str) -> f64 {
    value(o, key).unwrap_or_else(|| panic!("missing {key}")).parse().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn entropy_of_tent_and_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["entropy", p(&fixture("tent.pwa")), "--depth", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "c_n").unwrap(), "2,4,8,16,32,64,128,256,512,1024");
    assert!((real(&o, "h_est") - 2f64.ln()).abs() < 1e-12);
    assert!((real(&o, "h_spectral") - 2f64.ln()).abs() < 1e-12);

    let o = run(dir.path(), &["entropy", p(&fixture("golden.pwa")), "--depth", "10"]);
    let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    assert!((real(&o, "h_spectral") - golden).abs() < 1e-9);
}

#[test]
fn entropy_of_identity_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["entropy", p(&fixture("identity.pwa"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "h_est").unwrap(), "0");
    assert!(stderr(&o).contains("not positive"));
}

#[test]
fn normalize_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["normalize", p(&fixture("skewtent.pwa")), "--tol", "1e-6", "--out", "g.pwa", "--psi", "psi.tsv"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(value(&o, "beta").unwrap(), "2");
    assert!(real(&o, "residual") < 1e-6);
    assert_eq!(value(&o, "conjugacy").unwrap(), "true");

    let o = run(
        dir.path(),
        &["verify", p(&fixture("skewtent.pwa")), p(&fixture("tent.pwa")), "psi.tsv", "--grid", "10000"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(real(&o, "residual") < 1e-9);
}

#[test]
fn normalize_golden_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["normalize", p(&fixture("golden.pwa")), "--tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((real(&o, "beta") - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9);

    let o = run(dir.path(), &["normalize", p(&fixture("identity.pwa"))]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert_eq!(err.lines().filter(|l| l.starts_with("error ")).count(), 1);
    assert!(err.contains("error kind=entropy_not_positive reason=\"entropy not positive\""));
}

#[test]
fn verify_flags_a_corrupted_map() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["normalize", p(&fixture("skewtent.pwa")), "--psi", "psi.tsv"]);
    std::fs::write(
        dir.path().join("bad.pwa"),
        "pwa 1\ndomain 0 1\nnodes 3\n0 - 0\n1/2 99/100 99/100\n1 0 -\n",
    )
    .unwrap();
    let o = run(dir.path(), &["verify", p(&fixture("skewtent.pwa")), "bad.pwa", "psi.tsv"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(real(&o, "residual") >= 0.004);
}

#[test]
fn flatten_circle_doubling() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["flatten", p(&fixture("circle_doubling.txt")), "--out", "doubling.pwa"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "jumps").unwrap(), "1");
    let written = std::fs::read_to_string(dir.path().join("doubling.pwa")).unwrap();
    assert_eq!(written, std::fs::read_to_string(fixture("doubling.pwa")).unwrap());

    let o = run(dir.path(), &["flatten", p(&fixture("circle_collapse.txt")), "--normalize", "--quotient", "q.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(value(&o, "collapsed_edges").unwrap(), "b");
    assert_eq!(value(&o, "quotient_edges").unwrap(), "1");
    assert_eq!(value(&o, "continuity").unwrap(), "true");
    assert!(dir.path().join("circle_collapse.pwa").exists());
    let q = std::fs::read_to_string(dir.path().join("q.txt")).unwrap();
    assert!(q.contains("edge a u=w u=w"));
}

#[test]
fn plot_tent_and_doubling() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["plot", p(&fixture("tent.pwa")), "--samples", "4"]);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 5);
    assert!(out.lines().any(|l| l == "0.5\t1"));
    let o = run(dir.path(), &["plot", p(&fixture("doubling.pwa")), "--samples", "4"]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(&lines[2..4], &["0.5\t1".to_string(), "0.5\t0".to_string()]);
}

#[test]
fn phi_bundle_and_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["phi", p(&fixture("skewtent.pwa")), "--out-dir", "bundle"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "evidence").unwrap(), "matrix_primitive");
    for f in ["g.pwa", "psi.tsv", "evidence.txt"] {
        assert!(dir.path().join("bundle").join(f).exists());
    }
    let evidence = std::fs::read_to_string(dir.path().join("bundle/evidence.txt")).unwrap();
    assert!(evidence.contains("conjugacy=true"));

    let o = run(dir.path(), &["phi", p(&fixture("doubling.pwa"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("kind=discontinuous"));
}

#[test]
fn approx_and_markov_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["approx", p(&fixture("tent32.pwa")), "--n", "8", "--out", "g8.pwa"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "within_bound").unwrap(), "true");
    assert_eq!(value(&o, "shadowing").unwrap(), "true");

    let o = run(dir.path(), &["markov-check", p(&fixture("skewtent.pwa")), "--points", "0,5/12,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "primitive").unwrap(), "true");

    let o = run(dir.path(), &["markov-check", p(&fixture("tent32.pwa")), "--max-points", "50"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(value(&o, "markov").unwrap(), "false");
}

#[test]
fn reduce_reports_plateau() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["reduce", p(&fixture("trapezoid.pwa")), "--depth", "4", "--intervals", "iv.tsv"]);
    assert_eq!(o.status.code(), Some(0));
    let tsv = std::fs::read_to_string(dir.path().join("iv.tsv")).unwrap();
    assert!(tsv.lines().any(|l| l == "2/5\t3/5"));
    assert_eq!(value(&o, "fhat_psm").unwrap(), "true");
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("dup.pwa"), "pwa 1\ndomain 0 1\nnodes 3\n0 - 0\n1/2 1 1\n1/2 0 -\n").unwrap();
    let o = run(dir.path(), &["entropy", "dup.pwa"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=parse"));
    let o = run(dir.path(), &["entropy", "missing.pwa"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |tag: &str| {
        vec![
            "normalize".to_string(),
            p(&fixture("golden.pwa")).to_string(),
            "--out".into(),
            format!("g{tag}.pwa"),
            "--psi".into(),
            format!("psi{tag}.tsv"),
        ]
    };
    for tag in ["1", "2"] {
        let a = args(tag);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        run(dir.path(), &refs);
    }
    for (a, b) in [("g1.pwa", "g2.pwa"), ("psi1.tsv", "psi2.tsv")] {
        assert_eq!(
            std::fs::read(dir.path().join(a)).unwrap(),
            std::fs::read(dir.path().join(b)).unwrap()
        );
    }
}

#[test]
fn precision_request_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_slopeforge"))
        .args(["entropy", p(&fixture("tent.pwa")), "--depth", "3"])
        .current_dir(dir.path())
        .env("SLOPEFORGE_PRECISION", "128")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("SLOPEFORGE_PRECISION=128"));
}
