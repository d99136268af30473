//! The k-induction driver loop, plain BMC, counterexample reconstruction and
//! the benchmark harness.

use crate::frontend::{self, FrontendError, TypedProgram};
use crate::goto_ir;
use crate::interp::{self, Status};
use crate::invgen::{self, instrument::instrument, Inference};
use crate::ir::{AssertKind, Loc, Mark, Program, Widths};
use crate::kind::{make_phase, LoopFreeProgram, Phase};
use crate::solver::{check_timed, SolverConfig, SolverVerdict, UnknownReason};
use crate::vcgen::{generate, Model, Vc};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Interpreter steps allowed when replaying a counterexample.
const REPLAY_STEPS: usize = 1_000_000;
/// Smallest per-query solver timeout.
const MIN_QUERY_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("{0}")]
    Frontend(#[from] FrontendError),
    /// A counterexample did not replay on the reference interpreter.
    #[error("internal error: counterexample replay failed: {0}")]
    Replay(String),
    #[error("internal error: verdict {verdict} contradicts exhaustive exploration at {bits}-bit widths")]
    OracleMismatch { verdict: Verdict, bits: u32 },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Report(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Unwind until the unwinding assertion holds.
    Bmc,
    /// k-induction without invariants.
    Kind,
    /// k-induction with inferred invariants.
    #[default]
    KindInv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Why a task ended Unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownCause {
    /// `max_k` reached with every phase inconclusive.
    IterationLimit,
    /// The task budget ran out.
    Budget,
    /// Some phase query was Unknown at the last k tried.
    Solver(UnknownReason),
}

impl std::fmt::Display for UnknownCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownCause::IterationLimit => f.write_str("iteration limit"),
            UnknownCause::Budget => f.write_str("timeout"),
            UnknownCause::Solver(r) => write!(f, "solver {r}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub mode: Mode,
    pub max_k: usize,
    pub widths: Widths,
    pub solver: SolverConfig,
    /// Wall-clock budget of the whole task.
    pub budget: Duration,
    /// Solve the three phase queries of one iteration concurrently.
    pub parallel_phases: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            mode: Mode::default(),
            max_k: 100,
            widths: Widths::default(),
            solver: SolverConfig::default(),
            budget: Duration::from_secs(900),
            parallel_phases: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryResult {
    Sat,
    Unsat,
    Unknown,
}

/// One solver query, in the order the driver adjudicated it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRecord {
    pub phase: Phase,
    pub k: usize,
    pub result: QueryResult,
    pub seconds: f64,
}

/// A program state in a counterexample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct State {
    /// `loop L entry`, `loop L iteration j` or `violation`.
    pub label: String,
    pub values: Vec<(String, i128)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub states: Vec<State>,
    pub loc: Loc,
    /// Nondeterministic inputs in draw order.
    pub inputs: Vec<u128>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub verdict: Verdict,
    /// Proving phase; `None` for Unknown.
    pub phase: Option<Phase>,
    /// Iteration of the driver loop that decided the task, i.e. the number
    /// of base cases checked.
    pub k_final: usize,
    /// Unwinding depth passed to the deciding phase.
    pub phase_k: usize,
    pub counterexample: Option<Counterexample>,
    pub unknown: Option<UnknownCause>,
    /// Total solver time per phase, in seconds.
    pub timings: BTreeMap<Phase, f64>,
    pub queries: Vec<QueryRecord>,
    /// Invariant facts removed by validation, for reporting.
    #[serde(skip)]
    pub inference: Option<Inference>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome {
            verdict: Verdict::Unknown,
            phase: None,
            k_final: 0,
            phase_k: 0,
            counterexample: None,
            unknown: None,
            timings: BTreeMap::new(),
            queries: Vec::new(),
            inference: None,
        }
    }
}

/// Parses, types and checks `src`.
pub fn verify(src: &str, opts: &Options) -> Result<Outcome, DriverError> {
    let tp = frontend::load(src, opts.widths)?;
    verify_program(&tp, opts)
}

pub fn verify_program(tp: &TypedProgram, opts: &Options) -> Result<Outcome, DriverError> {
    match opts.mode {
        Mode::Bmc => verify_bmc(tp, opts),
        Mode::Kind => k_induction(tp, opts, false),
        Mode::KindInv => k_induction(tp, opts, true),
    }
}

/// Budget and query bookkeeping of one task.
struct Session<'a> {
    opts: &'a Options,
    start: Instant,
    out: Outcome,
    last_unknown: Option<UnknownReason>,
}

impl<'a> Session<'a> {
    fn new(opts: &'a Options) -> Self {
        Session {
            opts,
            start: Instant::now(),
            out: Outcome::new(),
            last_unknown: None,
        }
    }

    fn remaining(&self) -> Duration {
        self.opts.budget.saturating_sub(self.start.elapsed())
    }

    /// Solver settings for one query: an even share of the remaining budget
    /// over the queries still possible, at least the floor unless the budget
    /// is smaller. Overrides the configured solver timeout.
    fn config(&self, k: usize) -> Option<SolverConfig> {
        let left = self.remaining();
        if left.is_zero() {
            return None;
        }
        let queries = 3 * (self.opts.max_k + 1).saturating_sub(k).max(1) as u32;
        let share = (left / queries).max(MIN_QUERY_TIMEOUT).min(left);
        let mut cfg = self.opts.solver.clone();
        cfg.timeout = share;
        Some(cfg)
    }

    fn record(&mut self, phase: Phase, k: usize, verdict: &SolverVerdict, time: Duration) {
        let result = match verdict {
            SolverVerdict::Sat(_) => QueryResult::Sat,
            SolverVerdict::Unsat => QueryResult::Unsat,
            SolverVerdict::Unknown(r) => {
                self.last_unknown = Some(*r);
                QueryResult::Unknown
            }
        };
        log::debug!("{phase}({k}): {result:?} in {:.3}s", time.as_secs_f64());
        *self.out.timings.entry(phase).or_default() += time.as_secs_f64();
        self.out.queries.push(QueryRecord {
            phase,
            k,
            result,
            seconds: time.as_secs_f64(),
        });
    }

    fn unknown(mut self, k: usize) -> Outcome {
        self.out.verdict = Verdict::Unknown;
        self.out.k_final = k;
        self.out.unknown = Some(if self.remaining().is_zero() {
            UnknownCause::Budget
        } else if let Some(r) = self.last_unknown {
            UnknownCause::Solver(r)
        } else {
            UnknownCause::IterationLimit
        });
        self.out
    }

    fn decide(mut self, verdict: Verdict, phase: Phase, k_final: usize, phase_k: usize) -> Outcome {
        self.out.verdict = verdict;
        self.out.phase = Some(phase);
        self.out.k_final = k_final;
        self.out.phase_k = phase_k;
        self.out
    }
}

/// A phase program with its VC, restricted to the assertions it checks.
struct Query {
    lf: LoopFreeProgram,
    vc: Vc,
}

fn query(p: &Program, phase: Phase, k: usize, keep: fn(AssertKind) -> bool) -> Query {
    let lf = make_phase(p, phase, k);
    let vc = generate(&lf.program).restrict(|v| keep(v.kind));
    Query { lf, vc }
}

fn user(kind: AssertKind) -> bool {
    kind == AssertKind::User
}

fn any(_: AssertKind) -> bool {
    true
}

fn unwinding(kind: AssertKind) -> bool {
    kind == AssertKind::Unwinding
}

fn k_induction(tp: &TypedProgram, opts: &Options, use_invariants: bool) -> Result<Outcome, DriverError> {
    let mut s = Session::new(opts);
    let original = goto_ir::lower(tp);
    let program = if use_invariants {
        let Some(cfg) = s.config(1) else {
            return Ok(s.unknown(0));
        };
        let inference = invgen::infer(&original, &cfg);
        let p = instrument(&original, &inference.invariants);
        s.out.inference = Some(inference);
        p
    } else {
        original
    };
    let mut k = 1;
    while k <= opts.max_k {
        let iteration = k;
        let base = query(&program, Phase::Base, k, user);
        let (forward, inductive) = (
            query(&program, Phase::Forward, k + 1, any),
            query(&program, Phase::Inductive, k + 1, user),
        );
        let Some(cfg) = s.config(k) else {
            return Ok(s.unknown(iteration));
        };
        let mut results = if opts.parallel_phases {
            let (b, (f, i)) = rayon::join(
                || check_timed(&base.vc, &cfg),
                || rayon::join(|| check_timed(&forward.vc, &cfg), || check_timed(&inductive.vc, &cfg)),
            );
            vec![Some(b), Some(f), Some(i)]
        } else {
            vec![None, None, None]
        };
        // Adjudication follows the driver order whether or not the queries
        // ran concurrently.
        let mut solve = |s: &mut Session, idx: usize, q: &Query| -> Option<SolverVerdict> {
            let (v, t) = match results[idx].take() {
                Some(r) => r,
                None => {
                    let cfg = s.config(iteration)?;
                    check_timed(&q.vc, &cfg)
                }
            };
            s.record(q.lf.phase, q.lf.k, &v, t);
            Some(v)
        };
        let Some(b) = solve(&mut s, 0, &base) else {
            return Ok(s.unknown(iteration));
        };
        if let SolverVerdict::Sat(model) = b {
            let cex = reconstruct_trace(tp, &base.vc, &model)?;
            s.out.counterexample = Some(cex);
            return Ok(s.decide(Verdict::False, Phase::Base, iteration, k));
        }
        k += 1;
        let Some(f) = solve(&mut s, 1, &forward) else {
            return Ok(s.unknown(iteration));
        };
        if f.is_unsat() {
            return Ok(s.decide(Verdict::True, Phase::Forward, iteration, k));
        }
        let Some(i) = solve(&mut s, 2, &inductive) else {
            return Ok(s.unknown(iteration));
        };
        if i.is_unsat() {
            return Ok(s.decide(Verdict::True, Phase::Inductive, iteration, k));
        }
    }
    Ok(s.unknown(opts.max_k))
}

/// Plain bounded model checking: a bug in the first `k` iterations is
/// False; an unwinding assertion that holds at `k` is True.
pub fn verify_bmc(tp: &TypedProgram, opts: &Options) -> Result<Outcome, DriverError> {
    let mut s = Session::new(opts);
    let program = goto_ir::lower(tp);
    for k in 1..=opts.max_k {
        let bug = query(&program, Phase::Base, k, user);
        let Some(cfg) = s.config(k) else {
            return Ok(s.unknown(k));
        };
        let (v, t) = check_timed(&bug.vc, &cfg);
        s.record(Phase::Base, k, &v, t);
        if let SolverVerdict::Sat(model) = v {
            s.out.counterexample = Some(reconstruct_trace(tp, &bug.vc, &model)?);
            return Ok(s.decide(Verdict::False, Phase::Base, k, k));
        }
        let done = query(&program, Phase::Forward, k, unwinding);
        let Some(cfg) = s.config(k) else {
            return Ok(s.unknown(k));
        };
        let (v, t) = check_timed(&done.vc, &cfg);
        s.record(Phase::Forward, k, &v, t);
        if v.is_unsat() {
            return Ok(s.decide(Verdict::True, Phase::Forward, k, k));
        }
    }
    Ok(s.unknown(opts.max_k))
}

fn math_values(tp: &TypedProgram, vals: impl IntoIterator<Item = (String, u128)>) -> Vec<(String, i128)> {
    let mut out: Vec<(String, i128)> = vals.into_iter().map(|(n, v)| {
        let x = tp.symbols.ty(&n).to_math(v);
        (n, x)
    }).collect();
    out.sort_by_key(|(n, _)| tp.symbols.position(n));
    out
}

/// Maps a base-case model to per-iteration states and replays it on the
/// source interpreter. A replay that disagrees is an internal error.
pub fn reconstruct_trace(tp: &TypedProgram, vc: &Vc, model: &Model) -> Result<Counterexample, DriverError> {
    let env = vc.environment(model);
    let violated = vc
        .violations
        .iter()
        .find(|v| v.term.eval(&env).as_bool())
        .ok_or_else(|| DriverError::Replay("model violates no assertion".into()))?;
    let inputs = vc.inputs(model);
    let mut states = Vec::new();
    for m in &vc.ssa.marks {
        if !m.guard.eval(&env).as_bool() {
            continue;
        }
        let label = match m.mark {
            Mark::LoopEntry(l) => format!("loop {l} entry"),
            Mark::IterationEnd(l, j) => format!("loop {l} iteration {j}"),
        };
        let vals = m.values.iter().map(|(n, t)| (n.clone(), t.eval(&env).as_bv()));
        states.push(State {
            label,
            values: math_values(tp, vals),
        });
    }
    let run = interp::run_source(tp, &inputs, REPLAY_STEPS);
    match &run.status {
        Status::Violation { loc, kind } if *loc == violated.loc && *kind == violated.kind => {}
        other => {
            return Err(DriverError::Replay(format!(
                "expected a violation at {}, replay ended with {other:?}",
                violated.loc
            )))
        }
    }
    if run.snapshots.len() != states.len() {
        return Err(DriverError::Replay(format!(
            "{} loop states in the model, {} in the replay",
            states.len(),
            run.snapshots.len()
        )));
    }
    for (st, snap) in states.iter().zip(&run.snapshots) {
        let replayed: HashMap<&str, i128> = snap
            .env
            .iter()
            .map(|(n, v)| (n.as_str(), tp.symbols.ty(n).to_math(*v)))
            .collect();
        for (n, v) in &st.values {
            if let Some(r) = replayed.get(n.as_str()) {
                if r != v {
                    return Err(DriverError::Replay(format!("{}: {n} is {v} in the model, {r} in the replay", st.label)));
                }
            }
        }
    }
    states.push(State {
        label: "violation".into(),
        values: math_values(tp, run.env),
    });
    Ok(Counterexample {
        states,
        loc: violated.loc,
        inputs,
    })
}

/// Verdict of exhaustive exploration at `bits`-bit oracle widths, or `None`
/// if the run limits were hit.
pub fn oracle_verdict(src: &str, bits: u32, step_limit: usize, max_runs: usize) -> Result<Option<Verdict>, DriverError> {
    let widths = Widths::oracle(bits).map_err(DriverError::Report)?;
    let tp = frontend::load(src, widths)?;
    let ex = interp::explore_source(&tp, step_limit, max_runs);
    Ok(match (ex.violation, ex.complete) {
        (Some(_), _) => Some(Verdict::False),
        (None, true) => Some(Verdict::True),
        (None, false) => None,
    })
}

/// Verifies at oracle widths and cross-checks a definite verdict against
/// exhaustive exploration.
pub fn verify_with_oracle(src: &str, bits: u32, opts: &Options) -> Result<Outcome, DriverError> {
    let widths = Widths::oracle(bits).map_err(DriverError::Report)?;
    let opts = Options { widths, ..opts.clone() };
    let out = verify(src, &opts)?;
    if out.verdict != Verdict::Unknown {
        if let Some(expected) = oracle_verdict(src, bits, 100_000, 1 << 20)? {
            if expected != out.verdict {
                return Err(DriverError::OracleMismatch { verdict: out.verdict, bits });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Benchmark harness

/// Points per outcome class; wrong answers are penalties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScoreConfig {
    pub correct_true: i64,
    pub correct_false: i64,
    pub wrong_true: i64,
    pub wrong_false: i64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            correct_true: 2,
            correct_false: 1,
            wrong_true: -12,
            wrong_false: -6,
        }
    }
}

impl std::str::FromStr for ScoreConfig {
    type Err = String;

    /// `a,b,c,d` for correct-true, correct-false, wrong-true, wrong-false.
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<i64> = s
            .split(',')
            .map(|x| x.trim().parse::<i64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<_, _>>()?;
        let [a, b, c, d] = v[..] else {
            return Err(format!("expected four weights, got {}", v.len()));
        };
        if a < 0 || b < 0 || c > 0 || d > 0 {
            return Err("correct weights must be >= 0 and wrong weights <= 0".into());
        }
        Ok(ScoreConfig {
            correct_true: a,
            correct_false: b,
            wrong_true: c,
            wrong_false: d,
        })
    }
}

impl ScoreConfig {
    /// Wrong-true means True was reported for a task whose expected verdict
    /// is False.
    pub fn score(&self, expected: Verdict, obtained: Verdict) -> i64 {
        match (expected, obtained) {
            (Verdict::True, Verdict::True) => self.correct_true,
            (Verdict::False, Verdict::False) => self.correct_false,
            (Verdict::False, Verdict::True) => self.wrong_true,
            (Verdict::True, Verdict::False) => self.wrong_false,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskResult {
    pub name: String,
    pub expected: Verdict,
    pub verdict: Verdict,
    pub phase: Option<Phase>,
    pub k: usize,
    pub time: f64,
    pub score: i64,
    /// Set when the task failed with an error instead of a verdict.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub tasks: Vec<TaskResult>,
    pub total: i64,
    /// Number of decided tasks per phase.
    pub phases: BTreeMap<Phase, usize>,
}

/// Expected verdict from the `_true.c` / `_false.c` naming convention.
pub fn expected_verdict(path: &Path) -> Option<Verdict> {
    let name = path.file_name()?.to_str()?;
    if name.ends_with("_true.c") {
        Some(Verdict::True)
    } else if name.ends_with("_false.c") {
        Some(Verdict::False)
    } else {
        None
    }
}

/// Runs every `.c` task of `dir` on `workers` threads.
pub fn run_corpus(dir: &Path, opts: &Options, score: &ScoreConfig, workers: usize) -> Result<Report, DriverError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    files.sort();
    let tasks: Vec<(PathBuf, Verdict)> = files
        .into_iter()
        .filter_map(|f| match expected_verdict(&f) {
            Some(v) => Some((f, v)),
            None => {
                log::warn!("{}: no expected verdict in the file name; skipped", f.display());
                None
            }
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| DriverError::Report(e.to_string()))?;
    let results: Vec<TaskResult> = pool.install(|| {
        use rayon::prelude::*;
        tasks.par_iter().map(|(f, expected)| run_task(f, *expected, opts, score)).collect()
    });
    let mut report = Report::default();
    for r in results {
        report.total += r.score;
        if let Some(p) = r.phase {
            if r.verdict != Verdict::Unknown {
                *report.phases.entry(p).or_default() += 1;
            }
        }
        report.tasks.push(r);
    }
    Ok(report)
}

fn run_task(path: &Path, expected: Verdict, opts: &Options, score: &ScoreConfig) -> TaskResult {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let start = Instant::now();
    let outcome = std::fs::read_to_string(path).map_err(DriverError::from).and_then(|src| verify(&src, opts));
    let time = start.elapsed().as_secs_f64();
    match outcome {
        Ok(o) => TaskResult {
            name,
            expected,
            verdict: o.verdict,
            phase: o.phase,
            k: o.k_final,
            time,
            score: score.score(expected, o.verdict),
            error: None,
        },
        Err(e) => TaskResult {
            name,
            expected,
            verdict: Verdict::Unknown,
            phase: None,
            k: 0,
            time,
            score: 0,
            error: Some(e.to_string()),
        },
    }
}

impl Report {
    /// Human-readable table with totals and the phase distribution.
    pub fn table(&self) -> String {
        use std::fmt::Write;
        let width = self.tasks.iter().map(|t| t.name.len()).max().unwrap_or(4).max(4);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:<8} {:<8} {:<10} {:>4} {:>9} {:>6}", "task", "expected", "verdict", "phase", "k", "time(s)", "score");
        for t in &self.tasks {
            let phase = t.phase.map_or("-".to_string(), |p| p.to_string());
            let _ = writeln!(
                s,
                "{:<width$}  {:<8} {:<8} {:<10} {:>4} {:>9.3} {:>6}",
                t.name, t.expected, t.verdict, phase, t.k, t.time, t.score
            );
            if let Some(e) = &t.error {
                let _ = writeln!(s, "  error: {e}");
            }
        }
        let _ = writeln!(s, "total score: {}", self.total);
        let decided: usize = self.phases.values().sum();
        for p in [Phase::Base, Phase::Forward, Phase::Inductive] {
            let n = self.phases.get(&p).copied().unwrap_or(0);
            let pct = if decided == 0 { 0.0 } else { 100.0 * n as f64 / decided as f64 };
            let _ = writeln!(s, "{p:<10} {n:>4} ({pct:.0}%)");
        }
        s
    }

    pub fn to_json(&self) -> Result<String, DriverError> {
        let rows: Vec<_> = self.tasks.iter().map(Row::from).collect();
        serde_json::to_string_pretty(&rows).map_err(|e| DriverError::Report(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String, DriverError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.tasks {
            w.serialize(Row::from(t)).map_err(|e| DriverError::Report(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| DriverError::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| DriverError::Report(e.to_string()))
    }
}

/// Flat per-task record of the machine-readable reports.
#[derive(Serialize)]
struct Row<'a> {
    name: &'a str,
    verdict: Verdict,
    phase: String,
    k: usize,
    time: f64,
    score: i64,
}

impl<'a> From<&'a TaskResult> for Row<'a> {
    fn from(t: &'a TaskResult) -> Self {
        Row {
            name: &t.name,
            verdict: t.verdict,
            phase: t.phase.map_or("none".into(), |p| p.to_string()),
            k: t.k,
            time: t.time,
            score: t.score,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Backend;

    const COUNTDOWN: &str = "int main() { unsigned int x = nondet_uint(); while (x > 0) x--; assert(x == 0); }";

    fn opts(mode: Mode) -> Options {
        Options {
            mode,
            ..Options::default()
        }
    }

    #[test]
    fn countdown_inductive_at_first_iteration() {
        let o = verify(COUNTDOWN, &opts(Mode::Kind)).unwrap();
        assert_eq!(o.verdict, Verdict::True);
        assert_eq!(o.phase, Some(Phase::Inductive));
        assert_eq!((o.k_final, o.phase_k), (1, 2));
    }

    #[test]
    fn queries_follow_driver_order() {
        let src = "int main() { int i = 0; int n = nondet_int(); int s = 0; while (i < 3) { s = s + n; i++; } assert(i == 3); }";
        let o = verify(src, &opts(Mode::Kind)).unwrap();
        let order: Vec<(Phase, usize)> = o.queries.iter().map(|q| (q.phase, q.k)).collect();
        let expected: Vec<(Phase, usize)> = (1..)
            .flat_map(|k| [(Phase::Base, k), (Phase::Forward, k + 1), (Phase::Inductive, k + 1)])
            .take(order.len())
            .collect();
        assert_eq!(order, expected);
    }

    #[test]
    fn parallel_phases_adjudicate_identically() {
        let src = "int main() { int i = 0; while (i < 4) { i++; } assert(i == 4); }";
        let a = verify(src, &opts(Mode::Kind)).unwrap();
        let b = verify(
            src,
            &Options {
                parallel_phases: true,
                ..opts(Mode::Kind)
            },
        )
        .unwrap();
        assert_eq!((a.verdict, a.phase, a.k_final), (b.verdict, b.phase, b.k_final));
        let strip = |o: &Outcome| o.queries.iter().map(|q| (q.phase, q.k, q.result)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn bug_at_entry_has_single_state() {
        let o = verify("int main() { int x = 3; assert(x == 0); }", &opts(Mode::Kind)).unwrap();
        assert_eq!(o.verdict, Verdict::False);
        let cex = o.counterexample.unwrap();
        assert_eq!(cex.states.len(), 1);
        assert_eq!(cex.states[0].values, vec![("x".to_string(), 3)]);
    }

    #[test]
    fn wrong_model_trips_replay() {
        let tp = frontend::load("int main() { int x = nondet_int(); assert(x != 5); }", Widths::default()).unwrap();
        let p = goto_ir::lower(&tp);
        let vc = generate(&make_phase(&p, Phase::Base, 1).program);
        let (name, _) = vc.free[0].clone();
        // The query claims a violation; feed a model that is not one.
        let mut model = Model::new();
        model.insert(name.clone(), 5);
        assert!(reconstruct_trace(&tp, &vc, &model).is_ok());
        let mut forged = vc.clone();
        forged.violations[0].loc = Loc::new(99, 1);
        assert!(matches!(reconstruct_trace(&tp, &forged, &model), Err(DriverError::Replay(_))));
        model.insert(name, 4);
        assert!(matches!(reconstruct_trace(&tp, &vc, &model), Err(DriverError::Replay(_))));
    }

    #[test]
    fn bmc_needs_full_unwinding() {
        let src = "int main() { int i = 0; while (i < 10) { i++; } assert(i == 10); }";
        let o = verify(src, &opts(Mode::Bmc)).unwrap();
        assert_eq!((o.verdict, o.k_final), (Verdict::True, 10));
    }

    #[test]
    fn exhausted_budget_is_unknown() {
        let o = verify(
            COUNTDOWN,
            &Options {
                budget: Duration::ZERO,
                ..opts(Mode::Kind)
            },
        )
        .unwrap();
        assert_eq!(o.verdict, Verdict::Unknown);
        assert_eq!(o.unknown, Some(UnknownCause::Budget));
    }

    #[test]
    fn enumerator_agrees_on_countdown() {
        let o = verify(
            COUNTDOWN,
            &Options {
                widths: Widths::oracle(4).unwrap(),
                solver: SolverConfig::enumerator(),
                ..opts(Mode::Kind)
            },
        )
        .unwrap();
        assert_eq!(o.verdict, Verdict::True);
        assert_eq!(SolverConfig::enumerator().backend, Backend::Enumerator);
    }

    #[test]
    fn score_weights() {
        let w: ScoreConfig = "2,1,-12,-6".parse().unwrap();
        assert_eq!(w, ScoreConfig::default());
        assert_eq!(w.score(Verdict::True, Verdict::True), 2);
        assert_eq!(w.score(Verdict::False, Verdict::True), -12);
        assert_eq!(w.score(Verdict::True, Verdict::Unknown), 0);
        assert!("1,2,3".parse::<ScoreConfig>().is_err());
        assert!("1,1,1,-1".parse::<ScoreConfig>().is_err());
    }
}
