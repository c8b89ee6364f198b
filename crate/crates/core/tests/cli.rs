use std::path::PathBuf;
use std::process::{Command, Output};

fn spec(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "specs", name].iter().collect();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circslice")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn volume_of_ball_as_csv() {
    let out = run(&["volume", "--spec", &spec("ball.json"), "--seed", "7", "--samples", "5000", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("label,command,n,d,value,std_error,samples,seed,verdict"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[1..4], &["volume", "2", "2"]);
    assert!(row[4].starts_with("4.9348022005"), "{row:?}");
    assert_eq!(&row[6..8], &["5000", "7"]);
}

#[test]
fn defect_verdicts() {
    let out = run(&[
        "defect",
        "--spec",
        &spec("ball.json"),
        "--spec",
        &spec("cube.json"),
        "--seed",
        "3",
        "--samples",
        "20000",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with("circular (defect ≈ 0)"), "{}", rows[0]);
    assert!(rows[1].ends_with("not circular"), "{}", rows[1]);
}

#[test]
fn compare_emits_json() {
    let out = run(&[
        "compare",
        "--spec",
        &spec("ball.json"),
        "--spec",
        &spec("polydisc.json"),
        "--seed",
        "5",
        "--samples",
        "20000",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["details"][0]["report"]["status"], "confirmed", "{value}");
    assert_eq!(value["rows"][0]["command"], "compare");
}

#[test]
fn table_output_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.txt");
    let target_str = target.to_string_lossy().into_owned();
    let out =
        run(&["slice", "--spec", &spec("cube.json"), "--seed", "1", "--direction", "1,0,0,0", "--out", &target_str]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let table = std::fs::read_to_string(&target).unwrap();
    assert!(table.starts_with("label"), "{table}");
    assert!(table.contains(" 4 ") || table.contains(" 4.0"), "{table}");
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let args = [
        "circularity",
        "--spec",
        &spec("perturbed_ball.json"),
        "--spec",
        &spec("quaternionic_polydisc.json"),
        "--seed",
        "11",
        "--samples",
        "4000",
        "--phase-samples",
        "64",
        "--format",
        "csv",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn every_example_spec_runs() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "specs"].iter().collect();
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&[
            "volume",
            "--spec",
            path.to_str().unwrap(),
            "--seed",
            "2",
            "--samples",
            "2000",
            "--phase-samples",
            "32",
            "--format",
            "csv",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), stderr(&out));
        count += 1;
    }
    assert!(count >= 10);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["volume", "--spec", &spec("ball.json")]).status.code(), Some(1), "missing seed");
    assert_eq!(run(&["area", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(run(&["compare", "--spec", &spec("ball.json"), "--seed", "1"]).status.code(), Some(1));
    assert_eq!(run(&["volume", "--spec", "/nonexistent.json", "--seed", "1"]).status.code(), Some(1));
    let out = run(&["volume", "--spec", &spec("ball.json"), "--seed", "1", "--circle-nodes", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("circle_nodes"), "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let broken = write_temp(&dir, "broken.json", "{\"d\": 2, \"n\": 2,\n \"body\": {\"kind\": \"ball\" \"r\": 1}}");
    let out = run(&["volume", "--spec", &broken, "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn invalid_bodies_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let negative = write_temp(&dir, "neg.json", r#"{"d": 2, "n": 2, "body": {"kind": "ball", "r": -1}}"#);
    let out = run(&["volume", "--spec", &negative, "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("body.r"), "{}", stderr(&out));

    let out = run(&["demo-necessity", "--spec", &spec("ball.json"), "--seed", "1", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn selfcheck_exit_codes() {
    let out = run(&["selfcheck", "--seed", "1", "--samples", "20000", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).lines().skip(1).all(|l| l.ends_with(",pass")));
    // A single sample cannot reproduce the closed forms.
    let out = run(&["selfcheck", "--seed", "1", "--samples", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains(",fail"));
}
