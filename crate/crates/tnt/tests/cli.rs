use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn tnt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnt")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn term_program_exits_zero_with_k_minus_c() {
    let f = corpus("sqrt1-term.imp");
    let o = tnt(&["prove", p(&f), "--mode", "term", "--seed", "1", "--report", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["version"], 1);
    assert_eq!(j["verdict"], "term");
    assert_eq!(j["seed"], 1);
    let rfs = j["evidence"]["loops"][0]["rfs"].as_array().unwrap();
    assert!(rfs.iter().any(|rf| {
        let c = &rf["coeffs"];
        let k = c.get("k").and_then(Value::as_i64).unwrap_or(0);
        k > 0 && c.get("c").and_then(Value::as_i64) == Some(-k) && c.get("s").is_none() && c.get("t").is_none()
    }));
}

#[test]
fn accumulate_exits_one_with_recurrent_set() {
    let o = tnt(&["prove", p(&corpus("cond-xy.imp")), "--report", "json"]);
    assert_eq!(code(&o), 1);
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["evidence"]["kind"], "nonterm");
    let mut smt: Vec<String> =
        j["evidence"]["recurrent_set"].as_array().unwrap().iter().map(|a| a["smt"].as_str().unwrap().to_string()).collect();
    smt.sort();
    assert_eq!(smt, vec!["(>= x 0)".to_string(), "(>= y 0)".to_string()]);
    assert!(j["evidence"]["witness"].get("x").is_some());
}

#[test]
fn unknown_exits_two() {
    let o = tnt(&["prove", p(&corpus("cond-xy.imp")), "--mode", "term"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("verdict: unknown"));
}

#[test]
fn errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.imp");
    std::fs::write(&bad, "fun f(x) { while (x >= 0 { x = x + 1; } }").unwrap();
    let o = tnt(&["prove", p(&bad)]);
    assert_eq!(code(&o), 3);
    assert!(!o.stderr.is_empty());
    assert_eq!(code(&tnt(&["prove", p(&dir.path().join("missing.imp"))])), 3);
    assert_eq!(code(&tnt(&["prove", p(&corpus("cond-xy.imp")), "--bnd", "0"])), 3);
    assert_eq!(code(&tnt(&["frobnicate"])), 3);
}

#[test]
fn text_report_is_default() {
    let o = tnt(&["prove", p(&corpus("while-true.imp"))]);
    assert_eq!(code(&o), 1);
    let s = stdout(&o);
    assert!(s.contains("recurrent set true (depth 0)"), "{s}");
    assert!(s.contains("seed: 1"));
}

#[test]
fn emit_smt_writes_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let o = tnt(&["prove", p(&corpus("cond-xy.imp")), "--emit-smt", p(dir.path())]);
    assert_eq!(code(&o), 1);
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in files {
        assert!(f.file_name().unwrap().to_str().unwrap().starts_with("cond-xy_"));
        let text = std::fs::read_to_string(&f).unwrap();
        assert!(text.contains("(check-sat)"));
    }
}

const HEADER: &str = "name,verdict,confidence,learn_s,validate_s,total_s,switches";

#[test]
fn bench_empty_dir_prints_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = tnt(&["bench", p(dir.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), format!("{HEADER}\n"));
}

#[test]
fn bench_records_timeouts_and_errors_as_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("slow.imp"),
        "fun f(x, y) {\n  while (x < 100000000) {\n    x = x + 1;\n    y = y + x*x;\n  }\n}\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("broken.imp"), "fun f( {").unwrap();
    std::fs::copy(corpus("straight-line.imp"), dir.path().join("straight-line.imp")).unwrap();
    let o = tnt(&["bench", p(dir.path()), "--timeout", "1", "--bnd", "2000000"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(out.lines().next(), Some(HEADER));
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec!["broken.imp", "slow.imp", "straight-line.imp"]);
    assert_eq!(rows[0][1], "error");
    assert_eq!(rows[1][1], "unknown");
    let total: f64 = rows[1][5].parse().unwrap();
    assert!((1.0..10.0).contains(&total), "slow total {total}");
    assert_eq!(rows[2][1], "term");
}

#[test]
fn trace_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("neg.imp");
    std::fs::write(&f, "fun f() {\n  int x = -1;\n  while (x >= 0) {\n    x = x + 1;\n  }\n}\n").unwrap();
    let o = tnt(&["trace", p(&f)]);
    assert_eq!(code(&o), 0);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines, vec!["loop=0 pos=pre seq=0 x=-1", "loop=0 pos=post seq=1 x=-1"]);

    let o = tnt(&["trace", p(&corpus("sqrt1-nonterm.imp"))]);
    assert_eq!(stdout(&o).lines().filter(|l| l.contains("pos=body")).count(), 500);

    let a = tnt(&["trace", p(&corpus("cond-xy.imp")), "--inputs", "1", "--seed", "7"]);
    let b = tnt(&["trace", p(&corpus("cond-xy.imp")), "--inputs", "1", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn check_agrees_and_catches_tampering() {
    let dir = tempfile::tempdir().unwrap();
    for (name, want) in [("sqrt1-term.imp", 0), ("cond-xy.imp", 1)] {
        let o = tnt(&["prove", p(&corpus(name)), "--report", "json"]);
        assert_eq!(code(&o), want);
        let report = dir.path().join(format!("{name}.json"));
        std::fs::write(&report, &o.stdout).unwrap();
        let c = tnt(&["check", p(&report)]);
        assert_eq!(code(&c), 0, "{}", stdout(&c));
        assert!(stdout(&c).starts_with("ok"));

        let mut j: Value = serde_json::from_slice(&o.stdout).unwrap();
        match j["evidence"]["kind"].as_str().unwrap() {
            "term" => j["evidence"]["loops"][0]["rfs"] = serde_json::json!([{"coeffs": {"k": -1}, "constant": 0, "text": "-k"}]),
            _ => j["evidence"]["recurrent_set"] = serde_json::json!([{"smt": "(>= x 0)", "text": "x >= 0"}]),
        }
        let tampered = dir.path().join(format!("{name}.bad.json"));
        std::fs::write(&tampered, serde_json::to_string(&j).unwrap()).unwrap();
        let c = tnt(&["check", p(&tampered)]);
        assert_eq!(code(&c), 1, "{}", stdout(&c));
        assert!(stdout(&c).starts_with("mismatch"));
    }
}

fn strip_timings(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            [f[0], f[1], f[2], f[6]].join(",")
        })
        .collect()
}

#[test]
fn bench_is_reproducible() {
    let dir = corpus("");
    let a = tnt(&["bench", p(&dir), "--seed", "1", "--jobs", "4"]);
    let b = tnt(&["bench", p(&dir), "--seed", "1", "--jobs", "2"]);
    assert_eq!(code(&a), 0);
    let (sa, sb) = (stdout(&a), stdout(&b));
    assert_eq!(sa.lines().count(), 13);
    assert_eq!(sa.lines().next(), Some(HEADER));
    assert_eq!(strip_timings(&sa), strip_timings(&sb));
}
