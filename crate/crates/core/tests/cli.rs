use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(name)
}

fn kinduct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinduct")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kinduct-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn exit_codes_follow_verdicts() {
    let t = kinduct(&["verify", corpus("countdown_true.c").to_str().unwrap(), "--mode", "kind"]);
    assert_eq!(t.status.code(), Some(0), "{}", stdout(&t));
    assert!(stdout(&t).contains("VERIFICATION SUCCESSFUL (phase inductive, k = 1, phase k = 2)"));

    let f = kinduct(&["verify", corpus("off_by_one_false.c").to_str().unwrap(), "--oracle-width", "4"]);
    assert_eq!(f.status.code(), Some(10), "{}", stdout(&f));
    let out = stdout(&f);
    assert!(out.contains("VERIFICATION FAILED (phase base"), "{out}");
    assert!(out.contains("s[0] loop 0 entry"), "{out}");
    assert!(out.contains("violated"), "{out}");

    let u = kinduct(&["verify", corpus("series_true.c").to_str().unwrap(), "--mode", "bmc", "--max-k", "3"]);
    assert_eq!(u.status.code(), Some(2), "{}", stdout(&u));
    assert!(stdout(&u).contains("VERIFICATION UNKNOWN at k = 3 (iteration limit)"));
}

#[test]
fn usage_and_input_errors_exit_one() {
    assert_eq!(kinduct(&["verify"]).status.code(), Some(1));
    assert_eq!(kinduct(&["verify", "/nonexistent/x.c"]).status.code(), Some(1));
    assert_eq!(kinduct(&["bench", ".", "--score-weights", "1,2"]).status.code(), Some(1));
    assert_eq!(kinduct(&["--help"]).status.code(), Some(0));

    let bad = scratch("bad.c");
    std::fs::write(&bad, "int main() {\n  int *p;\n}\n").unwrap();
    let o = kinduct(&["verify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.c:2:"), "{err}");
    assert!(err.contains("unsupported"), "{err}");
}

#[test]
fn dumps() {
    let series = corpus("series_true.c");
    let f = series.to_str().unwrap();
    let goto = stdout(&kinduct(&["verify", f, "--dump-goto", "--phase", "forward", "--mode", "kind"]));
    assert!(goto.contains("assert(!(i <= n)); // unwinding assertion"), "{goto}");

    let inv = stdout(&kinduct(&["verify", f, "--dump-inv"]));
    assert!(inv.starts_with("loop 0 entry:"), "{inv}");
    assert!(inv.contains("loop 0 exit:"), "{inv}");

    let smt = stdout(&kinduct(&["verify", f, "--dump-smt", "--phase", "inductive", "--k", "2", "--mode", "kind"]));
    assert!(smt.contains("(set-logic QF_BV)") && smt.contains("(check-sat)") && smt.contains("(get-model)"), "{smt}");
    let vc = stdout(&kinduct(&["verify", f, "--dump-vc", "--mode", "kind"]));
    assert!(vc.contains("(check-sat)") && !vc.contains("(get-model)"), "{vc}");
}

#[test]
fn json_outcome() {
    let o = kinduct(&["verify", corpus("countdown_true.c").to_str().unwrap(), "--mode", "kind", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "true");
    assert_eq!(v["phase"], "inductive");
    assert_eq!(v["k_final"], 1);
    let phases: Vec<&str> = v["queries"].as_array().unwrap().iter().map(|q| q["phase"].as_str().unwrap()).collect();
    assert_eq!(phases, ["base", "forward", "inductive"]);
}

#[test]
fn bench_writes_reports() {
    let dir = scratch("bench");
    std::fs::create_dir_all(&dir).unwrap();
    for name in ["countdown_true.c", "off_by_one_false.c", "square_sum_true.c"] {
        std::fs::copy(corpus(name), dir.join(name)).unwrap();
    }
    let (json, csv) = (dir.join("r.json"), dir.join("r.csv"));
    let o = kinduct(&[
        "bench",
        dir.to_str().unwrap(),
        "--workers",
        "2",
        "--width-int",
        "8",
        "--width-long",
        "16",
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.contains("forward") && table.contains("inductive") && table.contains("base"), "{table}");

    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let tasks = v.as_array().unwrap();
    assert_eq!(tasks.len(), 3);
    for key in ["name", "verdict", "phase", "k", "time", "score"] {
        assert!(tasks.iter().all(|t| t.get(key).is_some()), "missing {key}: {v}");
    }
    let total: i64 = tasks.iter().map(|t| t["score"].as_i64().unwrap()).sum();
    assert_eq!(total, 2 + 1 + 2);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().take(2).collect::<Vec<_>>(), ["name", "verdict"]);
    assert_eq!(r.records().count(), 3);
}
