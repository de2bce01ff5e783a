use std::process::{Command, Output};

fn qnormal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnormal")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn digits_csv() {
    let o = qnormal(&["digits", "--seq", "constant:2", "--count", "6", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim_end(), "1,0\n2,1\n3,0\n4,1\n5,0\n6,1");
}

#[test]
fn digits_with_oracle_check() {
    let o = qnormal(&["digits", "--seq", "periodic:2,3", "--count", "200", "--oracle-check", "200"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).split_whitespace().count(), 200);
    assert!(String::from_utf8_lossy(&o.stderr).contains("200 positions agree"));
}

#[test]
fn json_sequence_spec_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    std::fs::write(&path, r#"{"kind":"constant","b":2}"#).unwrap();
    let spec = format!("file:{}", path.display());
    let o = qnormal(&["digits", "--seq", &spec, "--count", "4"]);
    assert_eq!(stdout(&o).trim(), "0 1 0 1");
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(qnormal(&["digits", "--seq", "constant:1", "--count", "3"]).status.code(), Some(2));
    assert_eq!(qnormal(&["digits", "--seq", "nonsense", "--count", "3"]).status.code(), Some(2));
    let o = qnormal(&["construct", "--target", "rnq-not-nq", "--seq", "constant:10", "--count", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[hypothesis]"));
}

#[test]
fn exhausted_scan_bound_exits_3() {
    let o = Command::new(env!("CARGO_BIN_EXE_qnormal"))
        .args(["ladder", "--seq", "constant:2", "--max-r", "5"])
        .env("QNORMAL_SCAN_BOUND", "1000")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold"));
}

#[test]
fn stats_csv_columns() {
    let o = qnormal(&["stats", "--seq", "constant:2", "--blocks", "0;1,1", "--checkpoints", "100,1000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "block,n,observed,expected_num,expected_den,ratio");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,100,"));
    assert!(lines[1].contains(",50,1,"));
    assert!(lines[3].starts_with("1 1,100,"));
}

#[test]
fn stats_from_digit_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.txt");
    std::fs::write(&path, "1 1 0\n1,0").unwrap();
    let src = format!("file:{}", path.display());
    let o = qnormal(&["stats", "--seq", "constant:2", "--digits", &src, "--blocks", "1", "--checkpoints", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "1,5,3,5,2,1.200000000");
    let short = qnormal(&["stats", "--seq", "constant:2", "--digits", &src, "--blocks", "1", "--checkpoints", "9"]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn discrepancy_csv() {
    let o = qnormal(&["discrepancy", "--seq", "constant:2", "--checkpoints", "100,1000", "--depth", "fixed:20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(text.lines().next().unwrap(), "n,d_star,d_extreme,max_eps");
    assert_eq!(rows.len(), 2);
    let star: f64 = rows[1][1].parse().unwrap();
    let extreme: f64 = rows[1][2].parse().unwrap();
    assert!(star <= extreme && extreme <= 2.0 * star);
}

#[test]
fn value_digits_and_exact_interval() {
    let o = qnormal(&["value", "--seq", "constant:2", "--digits", "8"]);
    assert_eq!(stdout(&o).trim(), "0.33333331");
    let o = qnormal(&["value", "--seq", "constant:2", "--exact", "2"]);
    assert_eq!(stdout(&o), "lower 1/4\nupper 1/2\n");
}

#[test]
fn graph_round_trip_reproduces_digits() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    let g = graph.to_str().unwrap();
    let a = qnormal(&[
        "construct",
        "--target",
        "rnq-dnq-not-nq",
        "--seq",
        "preset:log",
        "--count",
        "300",
        "--emit-graph",
        g,
    ]);
    assert!(a.status.success());
    let b = qnormal(&["construct", "--graph", g, "--count", "300"]);
    assert!(b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn manifest_records_output_digest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let o = qnormal(&["--manifest", path.to_str().unwrap(), "digits", "--seq", "constant:3", "--count", "10"]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["output_bytes"], o.stdout.len());
    assert_eq!(m["output_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn schedule_levels() {
    let o = qnormal(&["schedule", "--seq", "preset:log"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["start"], 4);
    assert_eq!(v[1]["start"], 252);
    assert_eq!(v[3]["start"], "beyond");
}
