use std::path::Path;
use std::process::{Command, Output};

fn gibbslab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbslab"))
        .args(args)
        .current_dir(dir)
        .env_remove("GIBBSLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn ck_accepts_critical_and_rejects_supercritical() {
    let dir = tempfile::tempdir().unwrap();
    let ok = gibbslab(&["ck", "--d", "1", "--s", "1", "--p", "6", "--K", "2.0", "--L", "16"], dir.path());
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(stdout(&ok).starts_with("C_K = "));
    let csv = std::fs::read_to_string(dir.path().join("ck.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("C_K,1,1.0,6.0,2.0,16.0,"));
    assert!(dir.path().join("ck_field.csv").exists());

    let bad = gibbslab(&["ck", "--d", "1", "--s", "1", "--p", "8", "--K", "2.0"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("supercritical"), "{}", stderr(&bad));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"seed": 7, "K": 0.5, "N": 2, "nsamples": 20}"#).unwrap();
    let o = gibbslab(&["mc-z", "--config", "run.json", "--seed", "42"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("mc-z.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains(r#""seed":42"#));
    let row = csv.lines().nth(2).unwrap();
    assert!(row.starts_with("direct-mc,1,1.0,6.0,0.5,2,") && row.ends_with(",20,42"), "{row}");

    std::fs::write(dir.path().join("typo.json"), r#"{"sede": 1}"#).unwrap();
    let t = gibbslab(&["mc-z", "--config", "typo.json"], dir.path());
    assert_eq!(t.status.code(), Some(2));
    assert!(stderr(&t).contains("unknown field"));
}

#[test]
fn q_writes_mass_and_gns_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = gibbslab(&["q", "--d", "1", "--s", "1", "--p", "6"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("q.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(2).map(|l| l.split(',').next().unwrap()).collect();
    assert!(names.contains(&"massQ") && names.contains(&"cGNS"), "{names:?}");
}

#[test]
fn rate_writes_fit_and_points() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "rate", "--mode", "supercritical", "--d", "1", "--s", "1", "--p", "8", "--K", "1", "--nList", "4,8,16",
        "--nsamples", "16", "--pilot", "16", "--steps", "32", "--L", "8", "--starts", "2",
    ];
    let o = gibbslab(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = std::fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    assert_eq!(fit.lines().nth(1).unwrap(), "exponent,slope,predictedSlope,relGap,residual");
    let points = std::fs::read_to_string(dir.path().join("rate_points.csv")).unwrap();
    assert_eq!(points.lines().count(), 2 + 3);

    let wrong = gibbslab(&["rate", "--mode", "critical", "--p", "8", "--nList", "4,8,16"], dir.path());
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let o = gibbslab(
            &[
                "--threads", threads, "lowerbound", "--p", "8", "--K", "1", "--nList", "4,6", "--nsamples", "24",
                "--pilot", "8", "--steps", "16", "--profile", "bump",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(dir.path().join("lowerbound.csv")).unwrap()
    };
    let a = run("1");
    let b = run("3");
    assert_eq!(a, b);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("artifacts");
    std::fs::create_dir(&out).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gibbslab"))
        .args(["sample", "--N", "3", "--nsamples", "2"])
        .current_dir(dir.path())
        .env("GIBBSLAB_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("sample.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "sample,k1,re,im");
    // 2N + 1 stored modes per draw, the zero mode included
    assert_eq!(csv.lines().count(), 2 + 2 * 7);
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = gibbslab(&["sample", "--N", "2", "--out", "missing/dir/x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn non_convergence_is_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = gibbslab(&["cb", "--p", "6", "--L", "8", "--tol", "1e-300", "--starts", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stdout(&o).contains("NOT converged"));
}
