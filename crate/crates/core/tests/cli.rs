use std::path::Path;
use std::process::{Command, Output};

fn fcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcm-cfl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&fcm(&["--help"])), 0);
    assert_eq!(code(&fcm(&["--version"])), 0);
    assert_eq!(code(&fcm(&["plate-study", "--help"])), 0);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&fcm(&[])), 1);
    assert_eq!(code(&fcm(&["no-such-command"])), 1);
    assert_eq!(code(&fcm(&["single-dof", "--alpha", "0.1"])), 1);
    assert_eq!(code(&fcm(&["single-dof", "--chi", "2", "--alpha", "0.1"])), 1);
    assert_eq!(code(&fcm(&["single-dof", "--chi", "abc", "--alpha", "0.1"])), 1);
    assert_eq!(
        code(&fcm(&[
            "single-dof",
            "--chi",
            "0.5",
            "--alpha",
            "0.1",
            "--jobs",
            "0"
        ])),
        1
    );
    let out = fcm(&["element-sweep", "--dim", "4"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
}

#[test]
fn numerical_failures_exit_with_two() {
    let out = fcm(&["element", "--chi", "0", "--alpha", "0"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn single_dof_prints_json() {
    let out = fcm(&["single-dof", "--chi", "0.1", "--alpha", "0", "--dim", "1"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["lambda"].as_f64().unwrap() - 300.0).abs() < 1e-9);
    assert!((v["dt_crit"].as_f64().unwrap() - 2.0 / 300f64.sqrt()).abs() < 1e-12);
}

#[test]
fn cfl_reports_the_modified_step() {
    let out = fcm(&["cfl", "--dim", "2", "--degree", "2", "--alpha", "1e-4"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["cfl_factor"].as_f64().unwrap(), 0.1);
    let dt_c = v["dt_full_c"].as_f64().unwrap();
    assert!((v["dt_cfl_fc"].as_f64().unwrap() - 0.1 * dt_c).abs() <= 1e-15 * dt_c);
}

#[test]
fn analytic_map_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "analytic-map".to_owned(),
            "--dim".into(),
            "3".into(),
            "--chi-count".into(),
            "21".into(),
            "--alpha-count".into(),
            "13".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let run = |p: &Path, jobs: &str| {
        let mut v = args(p);
        v.extend(["--jobs".to_owned(), jobs.to_owned()]);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        assert_eq!(code(&fcm(&refs)), 0);
    };
    run(&a, "1");
    run(&b, "3");
    let rows = lines(&a);
    assert_eq!(rows.len(), 1 + 21 * 13);
    assert_eq!(rows[0], "d,chi,alpha,M,K,lambda,dt_crit");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sweep_and_min_ratio_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let ratio = dir.path().join("ratio.csv");
    let ratio_direct = dir.path().join("ratio_direct.csv");
    let common = [
        "--dim",
        "2",
        "--degrees",
        "1,3",
        "--alphas",
        "1e-4,1e-8",
        "--chi-count",
        "11",
    ];
    let mut args = vec!["element-sweep"];
    args.extend(common);
    args.extend(["--out", sweep.to_str().unwrap()]);
    assert_eq!(code(&fcm(&args)), 0);
    let rows = lines(&sweep);
    assert_eq!(rows.len(), 1 + 2 * 2 * 11);
    assert_eq!(rows[0], "d,p,alpha,chi,lambda_max,dt_crit");

    let out = fcm(&[
        "min-ratio",
        "--input",
        sweep.to_str().unwrap(),
        "--out",
        ratio.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let mut args = vec!["min-ratio"];
    args.extend(common);
    args.extend(["--out", ratio_direct.to_str().unwrap()]);
    assert_eq!(code(&fcm(&args)), 0);
    let rows = lines(&ratio);
    assert_eq!(rows.len(), 1 + 4);
    assert_eq!(rows[0], "d,p,alpha,dt_min,dt_full_c,ratio");
    assert_eq!(
        std::fs::read(&ratio).unwrap(),
        std::fs::read(&ratio_direct).unwrap()
    );
}

#[test]
fn config_file_provides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("map.csv");
    std::fs::write(
        &cfg,
        format!(
            "dim = 1\nchi-count = 5\nalpha-count = 4\nout = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    assert_eq!(
        code(&fcm(&[
            "--config",
            cfg.to_str().unwrap(),
            "analytic-map",
            "--alpha-count",
            "3"
        ])),
        0
    );
    let rows = lines(&out);
    assert_eq!(rows.len(), 1 + 5 * 3);
    assert!(rows[1].starts_with("1,"));

    std::fs::write(&cfg, "dimension = 2\n").unwrap();
    assert_eq!(
        code(&fcm(&["--config", cfg.to_str().unwrap(), "analytic-map"])),
        1
    );
}

#[test]
fn plate_study_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("plate.csv");
    let out = fcm(&[
        "plate-study",
        "--degree",
        "1",
        "--nx-shifts",
        "2",
        "--ny-shifts",
        "2",
        "--subsample",
        "1x2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = lines(&csv);
    // two depths, two configurations each
    assert_eq!(rows.len(), 1 + 4);
    assert_eq!(
        rows[0],
        "config,dx,dy,p,k,dt_element,dt_global,dt_full_c,dt_full_l,dt_cfl_fc,element_ok,global_ok"
    );
    assert!(rows[1].starts_with("1,") && rows[2].starts_with("3,"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    assert_eq!(summary["runs"][0]["k"], 2);
    assert_eq!(summary["runs"][1]["k"], 3);
}
