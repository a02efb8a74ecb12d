use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fairprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairprobe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SPEC: &str = "synthetic:n=400,dependence=1,seed=5";

fn write_predictions(dir: &Path, f: impl Fn(usize) -> f64) -> String {
    let data = fairprobe::datasets::DatasetSource::parse_spec(SPEC)
        .unwrap()
        .load()
        .unwrap();
    let mut s = String::from("row_index,prediction\n");
    for i in 0..data.len() {
        s.push_str(&format!("{i},{}\n", f(i)));
    }
    let path = dir.join("preds.csv");
    fs::write(&path, s).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn measure_prints_fixed_order() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write_predictions(dir.path(), |i| (i as f64 * 0.37).sin());
    let o = fairprobe(&[
        "measure",
        "--predictions",
        &preds,
        "--dataset",
        SPEC,
        "--methods",
        "c2,P4,P1,C1,P3,P2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let names: Vec<&str> = out.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, ["P1", "P2", "P3", "P4", "C1", "C2"]);
    for line in out.lines() {
        let value = line.split('\t').nth(1).unwrap();
        assert_eq!(value.split('.').nth(1).unwrap().len(), 6, "{line}");
        assert!(!value.contains(','));
    }
}

#[test]
fn measure_identical_predictions_score_zero() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write_predictions(dir.path(), |_| 1.5);
    let o = fairprobe(&[
        "measure",
        "--predictions",
        &preds,
        "--dataset",
        SPEC,
        "--methods",
        "P1,P2",
    ]);
    assert_eq!(stdout(&o), "P1\t0.000000\nP2\t0.000000\n");
}

#[test]
fn measure_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write_predictions(dir.path(), |i| i as f64);
    let o = fairprobe(&[
        "measure",
        "--predictions",
        &preds,
        "--dataset",
        SPEC,
        "--methods",
        "P1,Q7",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("P1, P2, P3, P4, C1, C2"),
        "{}",
        stderr(&o)
    );

    let short = dir.path().join("short.csv");
    fs::write(&short, "row_index,prediction\n0,1.0\n1,2.0\n").unwrap();
    let o = fairprobe(&[
        "measure",
        "--predictions",
        short.to_str().unwrap(),
        "--dataset",
        SPEC,
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("alignment"), "{}", stderr(&o));
}

#[test]
fn run_writes_manifest_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(
        &cfg,
        "methods = P1,P2,P3,P4,C1,C2\nmodels = ols,ridge_a10,lasso_a0.5,knn_k15,tree_d3,gbt_r100_lr0.1_d3\n\
         dataset.syn.source = synthetic\ndataset.syn.n = 1500\ndataset.syn.dependence = 1\ndataset.syn.seed = 9\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = fairprobe(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let svgs = fs::read_dir(&a).unwrap().filter(|e| {
        e.as_ref()
            .unwrap()
            .path()
            .extension()
            .is_some_and(|x| x == "svg")
    });
    assert_eq!(svgs.count(), 7);
    for name in [
        "report.json",
        "tables.csv",
        "scatter_P1_P2.csv",
        "scatter_C1_C2.svg",
    ] {
        assert!(a.join(name).exists(), "{name}");
    }
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );

    let c = dir.path().join("c");
    let o = fairprobe(&[
        "--seed",
        "77",
        "run",
        cfg.to_str().unwrap(),
        "--out",
        c.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_ne!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(c.join("report.json")).unwrap()
    );
}

#[test]
fn run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "methods = P1\nwhatever = 3\n").unwrap();
    assert_eq!(
        fairprobe(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    fs::write(
        &cfg,
        "dataset.ins.source = insurance\ndataset.ins.path = missing_insurance.csv\n",
    )
    .unwrap();
    let o = fairprobe(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("missing_insurance.csv"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn version_lists_every_estimator() {
    let o = fairprobe(&["--version"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for m in ["P1 ", "P2 ", "P3 ", "P4 ", "C1 ", "C2 "] {
        assert!(out.lines().any(|l| l.starts_with(m)), "{m}");
    }
}
