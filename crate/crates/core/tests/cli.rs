use std::path::Path;
use std::process::{Command, Output};

fn ergolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergolab")).args(args).output().expect("spawn ergolab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

#[test]
fn verlinde_prints_dimension() {
    let o = ergolab(&["verlinde", "--genus", "2", "--p", "12"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "35\n");
}

#[test]
fn verlinde_grid_labels_rows() {
    let o = ergolab(&["verlinde", "--genus", "1,2", "--p", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "genus 1 p 8: 3\ngenus 2 p 8: 10\n");
}

#[test]
fn spin_decomposition_runs() {
    let o = ergolab(&["spin", "--genus", "2", "--r", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("total 10, partition_ok=true"), "{out}");
}

#[test]
fn spin_level_not_divisible_by_four_is_usage_error() {
    let o = ergolab(&["spin", "--genus", "2", "--p", "13"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("4 | N"));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(ergolab(&["torus-check", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(ergolab(&["catmap", "--matrix", "1,1,0,1"]).status.code(), Some(2));
    assert_eq!(ergolab(&["catmap", "--n-max", "5000"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("report.jsonl");
    let o = ergolab(&["verlinde", "--genus", "2", "--p", "12", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!path.exists());
}

#[test]
fn no_output_flag_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(["verlinde", "--genus", "2", "--p", "12"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

fn report(args: &[&str], path: &Path, threads: &str) -> String {
    let o = Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(args)
        .arg("--output")
        .arg(path)
        .env("ERGOLAB_THREADS", threads)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], &str)] = &[
        (&["verlinde", "--genus", "2", "--p", "8"], "genus,p,dimension\n2,8,10\n"),
        (&["spin", "--genus", "1", "--r", "3"], "genus,r,N,character_class,multiplicity,dimension\n"),
        (&["catmap", "--levels", "11", "--family-size", "9"], "N,fraction,barycenter_distance,n_outliers\n11,"),
        (&["torus-check", "--n-max", "4", "--pairs", "2"], "N,morphism_defect,"),
        (&["asymptotics", "--r", "10,20"], "genus,r,total,estimate,ratio\n"),
    ];
    for (i, (args, prefix)) in cases.iter().enumerate() {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--format", "csv"]);
        let text = report(&full, &dir.path().join(format!("{i}.csv")), "2");
        assert!(text.starts_with(prefix), "{args:?}: {text}");
    }
}

#[test]
fn json_lines_parse() {
    let dir = tempfile::tempdir().unwrap();
    let text = report(&["weil-check", "--n-max", "6", "--egorov-n-max", "7", "--pairs", "3"], &dir.path().join("w.jsonl"), "2");
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["n"], 7);
    assert!(rows[3]["unitarity_defect"].is_null());
    assert_eq!(rows[3]["egorov_counted"], false);
}

#[test]
fn reports_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["catmap", "--levels", "11,13,17,19", "--family-size", "12"];
    let one = report(&args, &dir.path().join("1.jsonl"), "1");
    let four = report(&args, &dir.path().join("4.jsonl"), "4");
    let again = report(&args, &dir.path().join("1b.jsonl"), "1");
    assert_eq!(one, four);
    assert_eq!(one, again);
}

#[test]
fn invalid_thread_count_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(["verlinde", "--genus", "2", "--p", "12"])
        .env("ERGOLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
