//! End-to-end checks of the `darec` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn darec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darec")).args(args).output().unwrap()
}

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ingest(out: &Path, target: &str, min: &str) -> Output {
    darec(&[
        "ingest",
        manifest("tests/fixtures/source.csv").to_str().unwrap(),
        manifest(target).to_str().unwrap(),
        "--min-ratings",
        min,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn ingest_prints_the_hand_counted_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = ingest(&dir.path().join("pair.ds"), "tests/fixtures/target.csv", "1");
    assert!(o.status.success(), "{}", stderr(&o));
    // Users a, b, c are shared; x and y are dropped.
    // source: 3 users x {s1, s2, s3}, 5 ratings -> 1 - 5/9
    // target: 3 users x {t1, t2}, 4 ratings -> 1 - 4/6
    let expected = "\
domain        users      items    ratings   sparsity
source            3          3          5     44.44%
target            3          2          4     33.33%
";
    assert_eq!(stdout(&o), expected);
}

#[test]
fn ingest_is_byte_for_byte_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ds"), dir.path().join("b.ds"));
    assert!(ingest(&a, "tests/fixtures/target.csv", "1").status.success());
    assert!(ingest(&b, "tests/fixtures/target.csv", "1").status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn disjoint_users_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let o = ingest(&dir.path().join("x.ds"), "tests/fixtures/disjoint.csv", "1");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("share no users"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn stats_reads_an_ingested_file() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("pair.ds");
    let first = ingest(&ds, "tests/fixtures/target.csv", "1");
    let o = darec(&["stats", ds.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), stdout(&first));
}

#[test]
fn quickstart_finishes_within_a_minute() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = darec(&[
        "run",
        "--config",
        manifest("configs/quickstart.conf").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let took = start.elapsed();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(took < Duration::from_secs(60), "took {took:?}");
    for f in ["report.txt", "report.csv", "config.resolved"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with(
        "variant,k,alpha,beta,mu,lambda,seed,rmse_target,rmse_source,classifier_accuracy,epochs,wall_seconds"
    ));
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(stdout(&o).contains("U-DARec"));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let quick = manifest("configs/quickstart.conf");
    let small = [
        "--set", "autorec.epochs=20", "--set", "darec.epochs=20", "--set", "synth.users=60",
    ];
    let run = |out: &Path, config: &Path| {
        let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend(small);
        let o = darec(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a, &quick);
    run(&b, &a.join("config.resolved"));
    let strip = |p: &Path| -> Vec<String> {
        // wall_seconds is the last column.
        std::fs::read_to_string(p.join("report.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn mismatched_orientation_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "[experiment]\nvariant = I\norientation = user\n").unwrap();
    let o = darec(&["run", "--config", conf.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("experiment.orientation"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let o = darec(&["run", "--set", "darec.momentum=0.9"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("darec.momentum"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_fails() {
    let o = darec(&["run", "--config", "/nonexistent/darec.conf"]);
    assert!(!o.status.success());
    assert!(!stderr(&o).is_empty());
}

#[test]
fn gradcheck_passes_and_repeats_exactly() {
    let a = darec(&["gradcheck"]);
    let b = darec(&["gradcheck"]);
    assert!(a.status.success(), "{}{}", stdout(&a), stderr(&a));
    assert_eq!(stdout(&a).lines().count(), 4);
    assert!(stdout(&a).lines().all(|l| l.contains("PASS")));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn corrupted_gradient_fails_with_its_component() {
    let o = darec(&["gradcheck", "--corrupt", "i-darec"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("i-darec"), "{}", stderr(&o));
    let out = stdout(&o);
    let failing: Vec<&str> = out.lines().filter(|l| l.contains("FAIL")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].starts_with("i-darec"));
}

#[test]
fn synth_writes_a_loadable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("synth.ds");
    let o = darec(&[
        "synth",
        "--config",
        manifest("configs/quickstart.conf").to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        ds.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = darec(&["stats", ds.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("\nsource          120"), "{}", stdout(&o));
}
