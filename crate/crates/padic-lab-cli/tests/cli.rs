use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_padic-lab"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

const FIXTURE_CONFIG: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../padic-lab/tests/fixtures/exceptional_config.json"
);
const FIXTURE_CSV: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../padic-lab/tests/fixtures/exceptional.csv"
);

#[test]
fn selftest_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["selftest", "--quick"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn moment_prints_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "vinogradov",
            "moment",
            "--p",
            "3",
            "--l",
            "1",
            "--s",
            "2",
            "--n",
            "2",
        ],
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# padic-lab "));
    assert!(
        text.contains("3,1,2,2,1215.000000000,15,135,1215"),
        "{text}"
    );
}

#[test]
fn count_and_budget_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["vinogradov", "count", "--s", "2", "--n", "2", "--N", "10"],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("2,2,10,190"));
    let o = run(
        dir.path(),
        &[
            "vinogradov",
            "count",
            "--s",
            "6",
            "--n",
            "3",
            "--N",
            "200",
            "--budget",
            "1000",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(dir.path(), &["fourier", "roundtrip", "--p", "4"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(dir.path(), &["decoupling", "harness", "--lemma", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(dir.path(), &["projection", "run"]).status.code(),
        Some(2)
    );
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"p": 5, "n": 3, "m": 1, "l0": 2, "b0": 0.03, "b1": 1.0, "alpha": 1.0,
        "epsilon": 0.01, "generator": {"kind": "alpha_regular", "seed": 1}}"#,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &["projection", "run", "--config", bad.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    fs::write(&bad, "[1, 2]").unwrap();
    let o = run(
        dir.path(),
        &["vinogradov", "count", "--config", bad.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.json");
    fs::write(&cfg, r#"{"s": 1, "n": 3, "N": 17}"#).unwrap();
    let o = run(
        dir.path(),
        &["vinogradov", "count", "--config", cfg.to_str().unwrap()],
    );
    assert!(stdout(&o).contains("1,3,17,17"));
    let o = run(
        dir.path(),
        &[
            "vinogradov",
            "count",
            "--config",
            cfg.to_str().unwrap(),
            "--N",
            "5",
        ],
    );
    assert!(stdout(&o).contains("1,3,5,5"));
}

#[test]
fn flat_harness_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "decoupling",
            "harness",
            "--lemma",
            "flat",
            "--trials",
            "1000",
            "--seed",
            "7",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("1000/1000 pass"));
    let csv = fs::read_to_string(dir.path().join("harness_flat.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn projection_run_matches_fixture_and_replays() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run(
        a.path(),
        &[
            "projection",
            "run",
            "--config",
            FIXTURE_CONFIG,
            "--jobs",
            "1",
        ],
    );
    let ob = run(
        b.path(),
        &[
            "projection",
            "run",
            "--config",
            FIXTURE_CONFIG,
            "--jobs",
            "4",
        ],
    );
    assert!(oa.status.success() && ob.status.success());
    let expect = fs::read_to_string(FIXTURE_CSV).unwrap();
    for name in ["exceptional.csv", "nu_t_masses.csv", "kakeya.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let got = fs::read_to_string(a.path().join("exceptional.csv")).unwrap();
    assert_eq!(body(&got), expect);
}

#[test]
fn kakeya_run_checks_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k.json");
    fs::write(
        &cfg,
        r#"{"p": 3, "n": 3, "m": 1, "l0": 3, "b0": 0.037037037037037035, "b1": 1.0, "alpha": 1.5,
        "epsilon": 0.01, "generator": {"kind": "cantor", "digits": [0, 2]}}"#,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "kakeya",
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--tube-depth",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("tube geometry exact"));
    let g = fs::read_to_string(dir.path().join("tube_geometry.csv")).unwrap();
    assert!(g.contains("3,3,1,2,2,81,729,0,81,81,81"), "{g}");
}

#[test]
fn roundtrip_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "fourier",
            "roundtrip",
            "--p",
            "3",
            "--n",
            "2",
            "--a",
            "1",
            "--b",
            "1",
            "--trials",
            "5",
        ],
    );
    assert!(o.status.success());
    let o = run(dir.path(), &["constants", "eval"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for k in ["proj", "kakeya", "decprop", "momentcurve", "vinobound"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{k},"))),
            "{text}"
        );
    }
    let o = run(dir.path(), &["constants", "eval", "--kind", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "decoupling",
            "estimate",
            "--p",
            "3",
            "--n",
            "1",
            "--level",
            "1",
            "--trials",
            "3",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("estimate.csv").exists());
}
