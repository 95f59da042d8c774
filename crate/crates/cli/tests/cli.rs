use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const EXAMPLE: &str = "c running example\np cnf 4 3\n1 2 4 0\n2 3 4 0\n-1 2 -4 0\n";

fn fpsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpsat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn model(o: &Output) -> Vec<i64> {
    let text = stdout(o);
    let line = text.lines().find(|l| l.starts_with("v ")).expect("model line");
    let lits: Vec<i64> = line[2..].split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(lits.last(), Some(&0));
    lits[..lits.len() - 1].to_vec()
}

fn satisfies(cnf: &str, lits: &[i64]) -> bool {
    cnf.lines()
        .filter(|l| !l.starts_with('c') && !l.starts_with('p') && !l.trim().is_empty())
        .all(|l| {
            l.split_whitespace()
                .map(|t| t.parse::<i64>().unwrap())
                .take_while(|&x| x != 0)
                .any(|x| lits.contains(&x))
        })
}

/// 14 variables, 3-SAT, satisfied by x_i = (i % 3 == 0).
fn planted() -> String {
    let mut text = String::from("p cnf 14 56\n");
    let value = |v: i64| v % 3 == 0;
    let mut state = 12345u64;
    let mut emitted = 0;
    while emitted < 56 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let vars = [(state >> 10) % 14 + 1, (state >> 24) % 14 + 1, (state >> 38) % 14 + 1];
        if vars[0] == vars[1] || vars[1] == vars[2] || vars[0] == vars[2] {
            continue;
        }
        let lits: Vec<i64> = vars
            .iter()
            .enumerate()
            .map(|(j, &v)| if (state >> (50 + j)) & 1 == 1 { -(v as i64) } else { v as i64 })
            .collect();
        if lits.iter().any(|&l| (l > 0) == value(l.abs())) {
            text.push_str(&format!("{} {} {} 0\n", lits[0], lits[1], lits[2]));
            emitted += 1;
        }
    }
    text
}

#[test]
fn solves_the_example_and_the_model_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.cnf", EXAMPLE);
    let out = fpsat(&["solve", "--input", &input, "--k", "2", "--epsilon", "0.1", "--c", "0.3", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(10));
    assert!(stdout(&out).contains("s SATISFIABLE"));
    assert!(satisfies(EXAMPLE, &model(&out)));
}

#[test]
fn every_mode_agrees_on_a_planted_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = planted();
    let input = write(dir.path(), "p.cnf", &cnf);
    for mode in ["hybrid", "classical", "brute"] {
        let out = fpsat(&["solve", "--input", &input, "--mode", mode, "--r-max", "2", "--workers", "1"]);
        assert_eq!(out.status.code(), Some(10), "mode {mode}");
        assert!(satisfies(&cnf, &model(&out)), "mode {mode}");
    }
}

#[test]
fn unsatisfiable_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "u.cnf", "p cnf 3 2\n1 0\n-1 0\n");
    let out = fpsat(&["solve", "--input", &input, "--r-max", "1"]);
    assert_eq!(out.status.code(), Some(20));
    let text = stdout(&out);
    assert!(text.contains("s UNSATISFIABLE"));
    assert!(text.contains("c one-sided: failure-prob <= "));
}

#[test]
fn reads_standard_input() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_fpsat"))
        .args(["solve", "--mode", "brute"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(EXAMPLE.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(10));
    assert_eq!(model(&out), vec![-1, -2, -3, 4]);
}

#[test]
fn stats_file_has_one_record_per_quantum_call() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.cnf", &planted());
    let stats = dir.path().join("out.jsonl");
    let out = fpsat(&[
        "solve", "--input", &input, "--epsilon", "0.3", "--rho", "0.3", "--r-max", "4",
        "--workers", "1", "--stats", stats.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(10));
    let text = fs::read_to_string(&stats).unwrap();
    let calls: usize = stdout(&out)
        .lines()
        .find_map(|l| l.split("quantum calls = ").nth(1))
        .and_then(|rest| rest.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(text.lines().count(), calls);
    assert!(calls > 0);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["prefix", "codeword", "radius", "L", "queries", "outcome"] {
            assert!(v.get(key).is_some(), "{key} missing from {line}");
        }
        assert_eq!(v["radius"], 4);
        assert_eq!(v["queries"], 24);
        assert_eq!(v["branches"], 81);
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.cnf", &planted());
    let run = |name: &str| {
        let stats = dir.path().join(name);
        let out = fpsat(&[
            "solve", "--input", &input, "--k", "2", "--r-max", "2", "--workers", "1", "--seed", "42",
            "--stats", stats.to_str().unwrap(),
        ]);
        (out.stdout, fs::read(stats).unwrap())
    };
    assert_eq!(run("a.jsonl"), run("b.jsonl"));
}

#[test]
fn cover_cache_is_populated_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.cnf", &planted());
    let cache = dir.path().join("cache");
    let args = ["solve", "--input", &input, "--r-max", "1", "--workers", "1", "--cover-cache", cache.to_str().unwrap()];
    let first = fpsat(&args);
    assert!(fs::read_dir(&cache).unwrap().count() >= 1);
    let second = fpsat(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn bad_flags_and_bad_input_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.cnf", EXAMPLE);
    assert_eq!(fpsat(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(fpsat(&["solve", "--input", &input, "--c", "0.3", "--r-max", "2"]).status.code(), Some(1));
    let broken = write(dir.path(), "bad.cnf", "p cnf 2 1\n1 x 0\n");
    let out = fpsat(&["solve", "--input", &broken]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn configuration_failure_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "ex.cnf", EXAMPLE);
    let out = fpsat(&["solve", "--input", &input, "--k", "9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("s UNKNOWN"));
    let out = fpsat(&["solve", "--input", &input, "--c", "0.99", "--B", "0.1"]);
    assert!(stdout(&out).contains("s UNKNOWN"));
}
