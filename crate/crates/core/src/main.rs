use clap::{Parser, Subcommand, ValueEnum};
use kinduct::driver::{self, DriverError, Mode, Options, Outcome, ScoreConfig, Verdict};
use kinduct::ir::Widths;
use kinduct::kind::{make_phase, Phase};
use kinduct::solver::{emit_smtlib, SolverConfig};
use kinduct::{frontend, goto_ir, invgen, vcgen};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

const EXIT_TRUE: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_FALSE: u8 = 10;

#[derive(Parser)]
#[command(name = "kinduct", version, about = "k-induction model checker for mini-C")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the assertions of one program.
    Verify(VerifyArgs),
    /// Run every `*_true.c` / `*_false.c` task of a directory and score it.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Base,
    Forward,
    Inductive,
}

impl From<PhaseArg> for Phase {
    fn from(p: PhaseArg) -> Phase {
        match p {
            PhaseArg::Base => Phase::Base,
            PhaseArg::Forward => Phase::Forward,
            PhaseArg::Inductive => Phase::Inductive,
        }
    }
}

#[derive(clap::Args)]
struct Common {
    #[arg(long, value_enum, default_value = "kind-inv")]
    mode: Mode,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    max_k: u64,
    #[arg(long, default_value_t = 32)]
    width_int: u32,
    #[arg(long, default_value_t = 64)]
    width_long: u32,
    /// Solver command line; the script goes to stdin and `{timeout}` expands
    /// to the per-query timeout in seconds. Defaults to $KINDUCT_SOLVER or
    /// `z3 -in -smt2`.
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Use the exhaustive enumerator instead of an external solver.
    #[arg(long)]
    enumerate: bool,
    /// Wall-clock budget per task, in seconds.
    #[arg(long, default_value_t = 900.0)]
    timeout: f64,
    /// Solve the phase queries of one iteration concurrently.
    #[arg(long)]
    parallel_phases: bool,
}

impl Common {
    fn options(&self) -> Result<Options, String> {
        let widths = Widths::with_int_long(self.width_int, self.width_long)?;
        let mut solver = if self.enumerate {
            SolverConfig::enumerator()
        } else {
            SolverConfig::default()
        };
        if let Some(cmd) = &self.solver_cmd {
            solver.command = cmd.clone();
        }
        if !(self.timeout.is_finite() && self.timeout >= 0.0) {
            return Err(format!("invalid timeout {}", self.timeout));
        }
        Ok(Options {
            mode: self.mode,
            max_k: self.max_k as usize,
            widths,
            solver,
            budget: Duration::from_secs_f64(self.timeout),
            parallel_phases: self.parallel_phases,
        })
    }
}

#[derive(clap::Args)]
struct VerifyArgs {
    file: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Print the GOTO program (or, with --phase, a phase program) and exit.
    #[arg(long, group = "dump")]
    dump_goto: bool,
    /// Print the validated invariants and exit.
    #[arg(long, group = "dump")]
    dump_inv: bool,
    /// Print the verification condition of --phase at --k and exit.
    #[arg(long, group = "dump")]
    dump_vc: bool,
    /// Print the complete solver script of --phase at --k and exit.
    #[arg(long, group = "dump")]
    dump_smt: bool,
    #[arg(long, value_enum)]
    phase: Option<PhaseArg>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Verify at this narrow `int` width and cross-check the verdict by
    /// exhaustive execution.
    #[arg(long)]
    oracle_width: Option<u32>,
    /// Print the outcome as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Points for correct-true, correct-false, wrong-true, wrong-false.
    #[arg(long, default_value = "2,1,-12,-6")]
    score_weights: ScoreConfig,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_TRUE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("kinduct: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn verify(a: VerifyArgs) -> Result<u8, DriverError> {
    let name = a.file.display().to_string();
    let src = std::fs::read_to_string(&a.file).map_err(|e| DriverError::Report(format!("{name}: {e}")))?;
    let mut opts = a.common.options().map_err(DriverError::Report)?;
    if let Some(bits) = a.oracle_width {
        opts.widths = Widths::oracle(bits).map_err(DriverError::Report)?;
    }
    if a.dump_goto || a.dump_inv || a.dump_vc || a.dump_smt {
        let tp = frontend::load(&src, opts.widths).map_err(|e| DriverError::Report(e.diagnostic(&name)))?;
        let p = goto_ir::lower(&tp);
        let p = if opts.mode == Mode::KindInv && !a.dump_inv {
            invgen::instrument::instrument(&p, &invgen::infer(&p, &opts.solver).invariants)
        } else {
            p
        };
        if a.dump_inv {
            emit(&invgen::dump(&invgen::infer(&p, &opts.solver).invariants));
            return Ok(EXIT_TRUE);
        }
        let phase = a.phase.map(Phase::from);
        if a.dump_goto {
            let prog = match phase {
                Some(ph) => make_phase(&p, ph, a.k as usize).program,
                None => p,
            };
            emit(&goto_ir::flatten(&prog).dump());
            return Ok(EXIT_TRUE);
        }
        let phase = phase.unwrap_or(Phase::Base);
        let vc = vcgen::generate(&make_phase(&p, phase, a.k as usize).program);
        emit(&emit_smtlib(&vc, a.dump_smt));
        return Ok(EXIT_TRUE);
    }
    let out = match a.oracle_width {
        Some(bits) => driver::verify_with_oracle(&src, bits, &opts),
        None => driver::verify(&src, &opts),
    };
    let out = match out {
        Err(DriverError::Frontend(e)) => return Err(DriverError::Report(e.diagnostic(&name))),
        other => other?,
    };
    if a.json {
        let json = serde_json::to_string_pretty(&out).map_err(|e| DriverError::Report(e.to_string()))?;
        emit(&format!("{json}\n"));
    } else {
        emit(&render_outcome(&out));
    }
    Ok(match out.verdict {
        Verdict::True => EXIT_TRUE,
        Verdict::False => EXIT_FALSE,
        Verdict::Unknown => EXIT_UNKNOWN,
    })
}

fn render_outcome(out: &Outcome) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    match (out.verdict, out.phase) {
        (Verdict::Unknown, _) => {
            let why = out.unknown.map_or(String::new(), |c| format!(" ({c})"));
            let _ = writeln!(s, "VERIFICATION UNKNOWN at k = {}{why}", out.k_final);
        }
        (v, Some(p)) => {
            let _ = writeln!(
                s,
                "VERIFICATION {} (phase {p}, k = {}, phase k = {})",
                if v == Verdict::True { "SUCCESSFUL" } else { "FAILED" },
                out.k_final,
                out.phase_k
            );
        }
        (_, None) => unreachable!("definite verdicts carry a phase"),
    }
    if let Some(cex) = &out.counterexample {
        let _ = writeln!(s, "counterexample (inputs {:?}):", cex.inputs);
        for (i, st) in cex.states.iter().enumerate() {
            let vals: Vec<String> = st.values.iter().map(|(n, v)| format!("{n}={v}")).collect();
            let _ = writeln!(s, "  s[{i}] {}: {}", st.label, vals.join(" "));
        }
        let _ = writeln!(s, "  assertion at {} violated", cex.loc);
    }
    for (p, t) in &out.timings {
        let _ = writeln!(s, "{p}: {t:.3}s");
    }
    s
}

/// Writes to stdout; a closed pipe is not an error worth a panic.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn bench(a: BenchArgs) -> Result<u8, DriverError> {
    let opts = a.common.options().map_err(DriverError::Report)?;
    let report = driver::run_corpus(&a.dir, &opts, &a.score_weights, a.workers)?;
    emit(&report.table());
    if let Some(p) = &a.json {
        std::fs::write(p, report.to_json()?)?;
    }
    if let Some(p) = &a.csv {
        std::fs::write(p, report.to_csv()?)?;
    }
    Ok(EXIT_TRUE)
}
