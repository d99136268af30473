//! Discharging VCs: SMT-LIB2 emission, an external solver process and an
//! exhaustive enumerator used as an exact oracle at small widths.

use crate::vcgen::term::{smt_symbol, Sort};
use crate::vcgen::{Compiled, Model, Vc};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};
use thiserror::Error;
use wait_timeout::ChildExt;

/// Environment variable overriding the default solver command.
pub const SOLVER_ENV: &str = "KINDUCT_SOLVER";
pub const DEFAULT_SOLVER: &str = "z3 -in -smt2";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownReason {
    Timeout,
    SolverError,
    Resource,
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnknownReason::Timeout => "timeout",
            UnknownReason::SolverError => "solver-error",
            UnknownReason::Resource => "resource",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverVerdict {
    /// Total over the VC's free symbols.
    Sat(Model),
    Unsat,
    Unknown(UnknownReason),
}

impl SolverVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolverVerdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolverVerdict::Unsat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    External,
    Enumerator,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Whitespace-separated command line; the script is written to stdin.
    pub command: String,
    pub timeout: Duration,
    pub logic: String,
    /// Largest total number of free bits the enumerator will search.
    pub enum_cap_bits: u32,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: std::env::var(SOLVER_ENV).unwrap_or_else(|_| DEFAULT_SOLVER.to_string()),
            timeout: Duration::from_secs(30),
            logic: "QF_BV".to_string(),
            enum_cap_bits: 24,
            backend: Backend::External,
        }
    }
}

impl SolverConfig {
    pub fn enumerator() -> Self {
        SolverConfig {
            backend: Backend::Enumerator,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver `{cmd}`: {source}")]
    Spawn { cmd: String, source: std::io::Error },
    #[error("solver I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed solver output: {0}")]
    Malformed(String),
}

/// Deterministic script for `vc` with the default logic.
pub fn emit_smtlib(vc: &Vc, get_model: bool) -> String {
    emit_smtlib_with(vc, "QF_BV", get_model)
}

pub fn emit_smtlib_with(vc: &Vc, logic: &str, get_model: bool) -> String {
    let mut s = String::new();
    if get_model {
        s.push_str("(set-option :produce-models true)\n");
    }
    let _ = writeln!(s, "(set-logic {logic})");
    for (n, sort) in &vc.free {
        let _ = writeln!(s, "(declare-fun {} () {sort})", smt_symbol(n));
    }
    // Only definitions the query depends on, in definition order.
    let mut used = std::collections::HashSet::new();
    let mut stack = Vec::new();
    vc.query.names(&mut stack);
    let by_name: std::collections::HashMap<&str, usize> =
        vc.defs.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
    while let Some(n) = stack.pop() {
        if let Some(&i) = by_name.get(n.as_str()) {
            if used.insert(i) {
                vc.defs[i].term.names(&mut stack);
            }
        }
    }
    for (i, d) in vc.defs.iter().enumerate() {
        if used.contains(&i) {
            let _ = writeln!(s, "(define-fun {} () {} {})", smt_symbol(&d.name), d.sort, d.term);
        }
    }
    let _ = writeln!(s, "(assert {})", vc.query);
    s.push_str("(check-sat)\n");
    if get_model {
        s.push_str("(get-model)\n");
    }
    s.push_str("(exit)\n");
    s
}

/// Decides the VC with the configured backend. Constant queries never reach
/// a solver.
pub fn check(vc: &Vc, cfg: &SolverConfig) -> SolverVerdict {
    if let Some(b) = vc.query.as_bool() {
        return if b {
            SolverVerdict::Sat(total_model(vc, Model::new()))
        } else {
            SolverVerdict::Unsat
        };
    }
    match cfg.backend {
        Backend::Enumerator => enumerate(vc, cfg.enum_cap_bits),
        Backend::External => match check_external(vc, cfg) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("{e}");
                SolverVerdict::Unknown(UnknownReason::SolverError)
            }
        },
    }
}

fn total_model(vc: &Vc, mut m: Model) -> Model {
    for (n, _) in &vc.free {
        m.entry(n.clone()).or_insert(0);
    }
    m.retain(|k, _| vc.free.iter().any(|(n, _)| n == k));
    m
}

/// Runs the external solver once, killing it at the configured timeout.
pub fn check_external(vc: &Vc, cfg: &SolverConfig) -> Result<SolverVerdict, SolverError> {
    let script = emit_smtlib_with(vc, &cfg.logic, true);
    let out = match run_solver(&cfg.command, &script, cfg.timeout)? {
        Some(out) => out,
        None => return Ok(SolverVerdict::Unknown(UnknownReason::Timeout)),
    };
    let mut lines = out.trim_start().splitn(2, '\n');
    let head = lines.next().unwrap_or("").trim();
    match head {
        "unsat" => Ok(SolverVerdict::Unsat),
        "unknown" => Ok(SolverVerdict::Unknown(UnknownReason::SolverError)),
        "sat" => {
            let model = total_model(vc, parse_model(lines.next().unwrap_or(""))?);
            if !vc.check_model(&model) {
                return Err(SolverError::Malformed("model does not satisfy the query".into()));
            }
            Ok(SolverVerdict::Sat(model))
        }
        _ => Err(SolverError::Malformed(first_line(&out))),
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("<empty>").chars().take(200).collect()
}

/// Output of the process, or `None` if it was killed at the timeout.
/// `{timeout}` in the command expands to the timeout in whole seconds.
fn run_solver(command: &str, script: &str, timeout: Duration) -> Result<Option<String>, SolverError> {
    let secs = timeout.as_secs() + u64::from(timeout.subsec_nanos() > 0);
    let command = &command.replace("{timeout}", &secs.max(1).to_string());
    let mut parts = command.split_whitespace();
    let prog = parts
        .next()
        .ok_or_else(|| SolverError::Malformed("empty solver command".into()))?;
    let mut child = Command::new(prog)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SolverError::Spawn {
            cmd: command.to_string(),
            source,
        })?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let script = script.to_string();
    let writer = std::thread::spawn(move || {
        // A solver that exits early closes the pipe; that is not our error.
        let _ = stdin.write_all(script.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let status = child.wait_timeout(timeout)?;
    if status.is_none() {
        let _ = child.kill();
        let _ = child.wait();
        let _ = writer.join();
        let _ = reader.join();
        return Ok(None);
    }
    let _ = writer.join();
    let out = reader
        .join()
        .map_err(|_| SolverError::Malformed("reader thread panicked".into()))??;
    Ok(Some(out))
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SolverError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    while i < chars.len() {
        let c = chars[i];
        match c {
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().unwrap();
                stack
                    .last_mut()
                    .ok_or_else(|| SolverError::Malformed("unbalanced `)`".into()))?
                    .push(Sexp::List(done));
                i += 1;
            }
            '|' => {
                let end = chars[i + 1..]
                    .iter()
                    .position(|&c| c == '|')
                    .ok_or_else(|| SolverError::Malformed("unterminated `|`".into()))?;
                let s: String = chars[i + 1..i + 1 + end].iter().collect();
                stack.last_mut().unwrap().push(Sexp::Atom(s));
                i += end + 2;
            }
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"()|;".contains(chars[i]) {
                    i += 1;
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(Sexp::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SolverError::Malformed("unbalanced `(`".into()));
    }
    Ok(stack.pop().unwrap())
}

fn parse_value(s: &Sexp) -> Option<u128> {
    match s {
        Sexp::Atom(a) => {
            if let Some(h) = a.strip_prefix("#x") {
                u128::from_str_radix(h, 16).ok()
            } else if let Some(b) = a.strip_prefix("#b") {
                u128::from_str_radix(b, 2).ok()
            } else {
                match a.as_str() {
                    "true" => Some(1),
                    "false" => Some(0),
                    _ => None,
                }
            }
        }
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(u), Sexp::Atom(bv), Sexp::Atom(_w)] if u == "_" => {
                bv.strip_prefix("bv").and_then(|d| d.parse().ok())
            }
            _ => None,
        },
    }
}

/// Parses a `(get-model)` response: a list of nullary `define-fun`s,
/// optionally wrapped in `(model ...)`.
pub fn parse_model(text: &str) -> Result<Model, SolverError> {
    let top = parse_sexps(text)?;
    let mut items = match top.into_iter().next() {
        Some(Sexp::List(items)) => items,
        Some(Sexp::Atom(a)) => return Err(SolverError::Malformed(format!("expected a model, got `{a}`"))),
        None => return Err(SolverError::Malformed("missing model".into())),
    };
    if matches!(items.first(), Some(Sexp::Atom(a)) if a == "model") {
        items.remove(0);
    }
    let mut m = Model::new();
    for it in &items {
        if let Sexp::List(parts) = it {
            if let [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(params), _sort, value] = parts.as_slice() {
                // Definitions come back as terms; only free symbols matter.
                if kw == "define-fun" && params.is_empty() {
                    if let Some(v) = parse_value(value) {
                        let name = name.strip_prefix('|').and_then(|n| n.strip_suffix('|')).unwrap_or(name);
                        m.insert(name.to_string(), v);
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Exhaustive search in lexicographic order with the first free symbol most
/// significant, so the witness found is the smallest one.
pub fn enumerate(vc: &Vc, cap_bits: u32) -> SolverVerdict {
    let bits = vc.free_bits();
    if bits > cap_bits {
        return SolverVerdict::Unknown(UnknownReason::Resource);
    }
    let compiled = Compiled::new(vc);
    let widths: Vec<u32> = vc
        .free
        .iter()
        .map(|(_, s)| match s {
            Sort::Bool => 1,
            Sort::Bv(w) => *w,
        })
        .collect();
    let decode = |mut n: usize| -> Vec<u128> {
        let mut vals = vec![0u128; widths.len()];
        for (i, w) in widths.iter().enumerate().rev() {
            vals[i] = (n & ((1usize << w) - 1)) as u128;
            n >>= w;
        }
        vals
    };
    let found = (0..1usize << bits)
        .into_par_iter()
        .with_min_len(1 << 10)
        .map_init(Vec::new, |slots, n| {
            let vals = decode(n);
            compiled.run(&vals, slots).then_some(vals)
        })
        .find_first(|r| r.is_some())
        .flatten();
    match found {
        Some(vals) => SolverVerdict::Sat(
            vc.free
                .iter()
                .map(|(n, _)| n.clone())
                .zip(vals)
                .collect(),
        ),
        None => SolverVerdict::Unsat,
    }
}

/// Timed wrapper for query logs.
pub fn check_timed(vc: &Vc, cfg: &SolverConfig) -> (SolverVerdict, Duration) {
    let start = Instant::now();
    let v = check(vc, cfg);
    (v, start.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;
    use crate::goto_ir;
    use crate::ir::Widths;
    use crate::vcgen::generate;

    fn vc_of(src: &str, widths: Widths) -> Vc {
        generate(&goto_ir::lower(&frontend::load(src, widths).unwrap()))
    }

    #[test]
    fn model_parsing() {
        let m = parse_model(
            "(\n  (define-fun |nondet!1| () (_ BitVec 32)\n    #x00000003)\n  (define-fun b () Bool true)\n  \
             (define-fun c () (_ BitVec 3) #b101) (define-fun f ((x Int)) Int x))",
        )
        .unwrap();
        assert_eq!(m["nondet!1"], 3);
        assert_eq!(m["b"], 1);
        assert_eq!(m["c"], 5);
        assert_eq!(m.len(), 3);
        let m = parse_model("(model (define-fun x () (_ BitVec 8) (_ bv200 8)))").unwrap();
        assert_eq!(m["x"], 200);
        // z3 reports definitions as terms over the free symbols.
        let m = parse_model("((define-fun nondet!1 () (_ BitVec 4) #x3) (define-fun i_3 () (_ BitVec 4) (bvadd nondet!1 #x1)))").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m["nondet!1"], 3);
        assert!(parse_model("(((").is_err());
    }

    #[test]
    fn constant_queries_skip_the_solver() {
        let bad = SolverConfig {
            command: "/nonexistent/solver".into(),
            ..SolverConfig::default()
        };
        let vc = vc_of("int main() { assert(1); }", Widths::default());
        assert!(emit_smtlib(&vc, false).contains("(assert false)"));
        assert_eq!(check(&vc, &bad), SolverVerdict::Unsat);
        let vc = vc_of("int main() { assert(0); }", Widths::default());
        assert_eq!(check(&vc, &bad), SolverVerdict::Sat(Model::new()));
        let vc = vc_of("int main() { int x = nondet_int(); assert(x); }", Widths::default());
        assert_eq!(check(&vc, &bad), SolverVerdict::Unknown(UnknownReason::SolverError));
    }

    #[test]
    fn enumerator_finds_smallest_witness() {
        let vc = vc_of(
            "int main() { int a = nondet_int(); int b = nondet_int(); assert(a + b != 5 || a < 2); }",
            Widths::oracle(4).unwrap(),
        );
        match enumerate(&vc, 24) {
            SolverVerdict::Sat(m) => {
                assert_eq!(m[&vc.free[0].0], 2);
                assert_eq!(m[&vc.free[1].0], 3);
            }
            v => panic!("{v:?}"),
        }
        let src: String = (0..30).map(|i| format!("int x{i} = nondet_int(); ")).collect();
        let vc = vc_of(
            &format!("int main() {{ {src} assert(x0 + x29 != 1); }}"),
            Widths::oracle(4).unwrap(),
        );
        assert_eq!(enumerate(&vc, 24), SolverVerdict::Unknown(UnknownReason::Resource));
    }

    #[test]
    fn timeout_kills_the_process() {
        let cfg = SolverConfig {
            command: "sleep 30".into(),
            timeout: Duration::from_millis(200),
            ..SolverConfig::default()
        };
        let vc = vc_of("int main() { int x = nondet_int(); assert(x); }", Widths::default());
        let start = Instant::now();
        assert_eq!(check(&vc, &cfg), SolverVerdict::Unknown(UnknownReason::Timeout));
        assert!(start.elapsed() < Duration::from_secs(5));
    }
}
