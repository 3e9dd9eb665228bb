use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn equispin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equispin"))
        .args(args)
        .env_remove("EQUISPIN_WORKERS")
        .output()
        .expect("binary runs")
}

fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|it| {
            it.map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

#[test]
fn verify_succeeds_and_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = equispin(&["verify", "--n", "3,4", "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        entries(&out),
        ["run_meta.json", "verify_N3.csv", "verify_N4.csv"]
    );
    let table = fs::read_to_string(out.join("verify_N4.csv")).unwrap();
    assert!(table.starts_with("check,n_spins,p,tau_bar,t_bar,max_abs_diff\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "verify");
    assert_eq!(meta["config"]["n_spins"], serde_json::json!([3, 4]));
}

#[test]
fn invalid_input_exits_with_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    for (args, field) in [
        (vec!["--p", "2"], "`p`"),
        (vec!["--n", "0"], "`n_spins`"),
        (vec!["--tau-grid", "0:-1:0.1"], "`tau_grid`"),
        (vec!["--experiment", "C"], "`experiment`"),
        (vec!["verify", "--n", "13"], "12 spins"),
    ] {
        let mut full = args.clone();
        full.extend(["--out", out.to_str().unwrap()]);
        let o = equispin(&full);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{args:?}: {err}");
    }
    assert!(entries(&out).is_empty());
}

#[test]
fn config_file_is_merged_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "experiment = \"B\"\nn_spins = [5]\np = [0.1]\ntau_grid = \"0:2:0.5\"\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = equispin(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--p",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(entries(&out), ["run_meta.json", "spectrum_B_N5_p0.2.csv"]);
    let csv = fs::read_to_string(out.join("spectrum_B_N5_p0.2.csv")).unwrap();
    // 5 τ values × orders 0, 2, 4
    assert_eq!(csv.lines().count(), 1 + 5 * 3);

    fs::write(&cfg, "n_spins = [5]\nbogus = 1\n").unwrap();
    let o = equispin(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failure_after_partial_work_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    // N=4 is written to the stage before N=13 is rejected
    let o = equispin(&["verify", "--n", "4,13", "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(entries(&out).is_empty(), "{:?}", entries(&out));
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = equispin(&["verify", "--n", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn conservation_reports_both_routes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = equispin(&["conservation", "--n", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = String::from_utf8_lossy(&o.stdout);
    let analytic: f64 = text
        .split("analytic = ")
        .nth(1)
        .and_then(|rest| rest.split(',').next())
        .and_then(|v| v.parse().ok())
        .expect("report line");
    assert!((analytic - 0.5).abs() < 1e-12, "{text}");
    assert_eq!(entries(&out), ["conservation_N7.csv", "run_meta.json"]);
}

#[test]
fn experiment_a_pipeline_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = equispin(&[
        "--experiment",
        "A",
        "--n",
        "21",
        "--t-grid",
        "0:0.2:0.002",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        entries(&out),
        [
            "clusters_A_N21.csv",
            "decay_times_A_N21.csv",
            "fits_A_N21.csv",
            "run_meta.json",
            "spectrum_A_N21.csv"
        ]
    );
    let fits = fs::read_to_string(out.join("fits_A_N21.csv")).unwrap();
    assert!(fits.lines().nth(1).unwrap().contains(",coth,"));
}

#[test]
fn output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = equispin(&[
            "--experiment",
            "B",
            "--n",
            "15",
            "--p",
            "0.05",
            "--tau-grid",
            "0:20:0.05",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        out
    };
    let a = run("one", "1");
    let b = run("four", "4");
    let names = entries(&a);
    assert_eq!(names, entries(&b));
    for name in names.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}
