use std::path::Path;
use std::process::{Command, Output};

fn latmrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latmrf")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn counts_max_norm_ball() {
    let o = latmrf(&["mrfi", "norm:Linf:6", "--count"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "84");
    let o = latmrf(&["mrfi", "--pos", "4,4", "--pos", "-1,2"]);
    assert_eq!(stdout(&o), "4 4\n-1 2\n");
}

#[test]
fn exit_codes() {
    assert_eq!(latmrf(&["--help"]).status.code(), Some(0));
    assert_eq!(latmrf(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(latmrf(&["sample", "--dims", "4,4"]).status.code(), Some(1));
    let o = latmrf(&["sample", "--dims", "4,4", "--theta", "/definitely/missing.model", "--out", "/tmp/x.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
    assert_eq!(latmrf(&["mrfi", "--pos", "1,0", "--pos", "-1,0"]).status.code(), Some(2));
}

#[test]
fn sample_then_fit_recovers_sign() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.model");
    std::fs::write(&model, "# potts\ncolors 1\nfamily onepar\ntheta -0.8\n").unwrap();
    let z = dir.path().join("z.txt");
    let o = latmrf(&[
        "sample", "--dims", "64,64", "--mrfi", "norm:L1:1", "--theta", s(&model), "--cycles", "40", "--seed", "1", "--out",
        s(&z),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("z.png").exists());
    assert!(dir.path().join("z.txt.manifest").exists());

    let fitted = dir.path().join("fit.model");
    let o = latmrf(&["fit-pl", "--field", s(&z), "--mrfi", "norm:L1:1", "--family", "onepar", "--out", s(&fitted)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout(&o);
    assert!(summary.contains("Model adjusted via Pseudolikelihood"));
    assert!(summary.contains("Image dimension: 64 64"));
    let text = std::fs::read_to_string(&fitted).unwrap();
    let theta: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("theta "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((theta + 0.8).abs() < 0.15, "theta {theta}");

    let o = latmrf(&["cohist", "--field", s(&z), "--pos", "0,1"]);
    let total: u64 = stdout(&o).lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 64 * 63);
}

#[test]
fn model_positions_must_match_flags() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.model");
    std::fs::write(&model, "colors 1\nfamily oneeach\nposition 1 0\nposition 0 1\ntheta -1 -1\n").unwrap();
    let out = dir.path().join("z.txt");
    let o = latmrf(&["sample", "--dims", "8,8", "--mrfi", "norm:Linf:1", "--theta", s(&model), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_rejects_broken_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("bad.manifest");
    std::fs::write(&m, "tool=latmrf\narg=sample\narg=--nonsense\n").unwrap();
    assert_eq!(latmrf(&["replay", s(&m)]).status.code(), Some(2));
    assert_eq!(latmrf(&["replay", s(&dir.path().join("missing"))]).status.code(), Some(2));
}

#[test]
fn segments_observations_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let seg = dir.path().join("seg");
    let o = latmrf(&["demo", "segment", "--size", "32", "--seed", "3", "--out-dir", s(&seg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let model = dir.path().join("potts.model");
    std::fs::write(&model, "colors 2\nfamily onepar\ntheta -1\n").unwrap();
    let out = dir.path().join("fit");
    let o = latmrf(&[
        "fit-ghm", "--y", s(&seg.join("y.csv")), "--theta", s(&model), "--mrfi", "norm:L1:1", "--basis", "poly:2,2",
        "--out-dir", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("Gaussian mixture model driven by Hidden MRF fitted by EM-algorithm."));
    for f in ["z_pred.txt", "params.csv", "fixed.csv", "predicted.csv", "summary.txt", "z_pred.png"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let png = dir.path().join("y.png");
    let o = latmrf(&["render", "--real", s(&seg.join("y.csv")), "--colors", "viridis", "--out", s(&png)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(&std::fs::read(&png).unwrap()[..4], b"\x89PNG");
}

#[test]
fn oracle_reports_partition_function() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.model");
    std::fs::write(&model, "colors 1\nfamily onepar\ntheta 0\n").unwrap();
    let o = latmrf(&["oracle", "--dims", "3,3", "--theta", s(&model), "--mrfi", "norm:L1:1", "--family", "onepar"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let expected = format!("log partition: {:.10}", 9.0 * 2f64.ln());
    assert!(out.contains(&expected), "{out}");
}
