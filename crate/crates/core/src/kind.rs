//! The k-induction program transformations: bounded unrolling into nested
//! guarded copies, and the base-case, forward-condition and inductive-step
//! instrumentations of it.

use crate::goto_ir::{analyze_loops, flatten};
use crate::ir::{AssertKind, AssumeKind, Expr, LoopId, Mark, Program, StateVectorSpec, Stmt};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Base,
    Forward,
    Inductive,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Base => "base",
            Phase::Forward => "forward",
            Phase::Inductive => "inductive",
        })
    }
}

/// A program without loops, produced for one phase at one `k`.
#[derive(Clone, Debug)]
pub struct LoopFreeProgram {
    pub phase: Phase,
    pub k: usize,
    pub program: Program,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Unroll,
    Phase(Phase),
}

/// Replaces every loop by `k` nested copies of its body, each guarded by the
/// loop condition. No check follows the copies.
pub fn unroll(p: &Program, k: usize) -> Program {
    transform(p, k, Mode::Unroll)
}

pub fn make_base_case(p: &Program, k: usize) -> LoopFreeProgram {
    make_phase(p, Phase::Base, k)
}

pub fn make_forward_condition(p: &Program, k: usize) -> LoopFreeProgram {
    make_phase(p, Phase::Forward, k)
}

pub fn make_inductive_step(p: &Program, k: usize) -> LoopFreeProgram {
    make_phase(p, Phase::Inductive, k)
}

pub fn make_phase(p: &Program, phase: Phase, k: usize) -> LoopFreeProgram {
    LoopFreeProgram {
        phase,
        k,
        program: transform(p, k, Mode::Phase(phase)),
    }
}

fn transform(p: &Program, k: usize, mode: Mode) -> Program {
    assert!(k >= 1, "unwinding bound must be positive");
    let havoc: HashMap<LoopId, Vec<String>> = analyze_loops(&flatten(p))
        .into_iter()
        .map(|l| (l.id, l.havoc_vars))
        .collect();
    let mut t = Transformer {
        p,
        k,
        mode,
        havoc,
        state_vectors: Vec::new(),
    };
    let body = t.stmts(&p.body);
    let mut out = p.with_body(body);
    t.state_vectors.sort_by_key(|s| s.loop_id);
    out.state_vectors = t.state_vectors;
    out
}

struct Transformer<'a> {
    p: &'a Program,
    k: usize,
    mode: Mode,
    havoc: HashMap<LoopId, Vec<String>>,
    state_vectors: Vec<StateVectorSpec>,
}

impl Transformer<'_> {
    fn stmts(&mut self, stmts: &[Stmt]) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in stmts {
            match s {
                Stmt::While { id, cond, body, loc } => self.lower_loop(*id, cond, body, *loc, &mut out),
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    loc,
                } => out.push(Stmt::If {
                    cond: cond.clone(),
                    then_branch: self.stmts(then_branch),
                    else_branch: self.stmts(else_branch),
                    loc: *loc,
                }),
                _ => out.push(s.clone()),
            }
        }
        out
    }

    fn lower_loop(&mut self, id: LoopId, cond: &Expr, body: &[Stmt], loc: crate::ir::Loc, out: &mut Vec<Stmt>) {
        let body = self.stmts(body);
        let inductive = self.mode == Mode::Phase(Phase::Inductive);
        let fields = self.havoc.get(&id).cloned().unwrap_or_default();
        if inductive && !self.state_vectors.iter().any(|s| s.loop_id == id) {
            self.state_vectors.push(StateVectorSpec {
                loop_id: id,
                fields: fields.clone(),
                slots: self.k,
            });
        }
        if inductive {
            // A: arbitrary values for the havoc set; cs then holds that state.
            for v in &fields {
                let sym = self.p.symbols.get(v).expect("havoc variable is declared");
                out.push(Stmt::Assign {
                    var: v.clone(),
                    value: Expr::nondet(sym.ty, nondet_name(&sym.type_name)),
                    loc,
                });
            }
            out.push(Stmt::UpdateState { loop_id: id });
        }
        out.push(Stmt::Mark(Mark::LoopEntry(id)));
        let exit = Expr::not(cond.clone(), self.p.widths.int());
        let check = match self.mode {
            Mode::Unroll => None,
            Mode::Phase(Phase::Base) | Mode::Phase(Phase::Inductive) => Some(Stmt::Assume {
                cond: exit,
                loc,
                kind: AssumeKind::Unwinding,
            }),
            Mode::Phase(Phase::Forward) => Some(Stmt::Assert {
                cond: exit,
                loc,
                kind: AssertKind::Unwinding,
            }),
        };
        // Re-testing a condition that draws inputs after an early exit would
        // consume inputs the program never reads; such a check goes where the
        // (k+1)-th test happens, at the end of the last copy.
        let (mut innermost, after) = match check {
            Some(c) if cond.may_draw() => (Some(c), None),
            c => (None, c),
        };
        let mut next: Vec<Stmt> = Vec::new();
        for j in (1..=self.k).rev() {
            let mut copy = Vec::new();
            if inductive {
                copy.push(Stmt::SaveState {
                    loop_id: id,
                    slot: j - 1,
                });
            }
            copy.extend(body.iter().cloned());
            if inductive {
                copy.push(Stmt::UpdateState { loop_id: id });
                copy.push(Stmt::AssumeNewState {
                    loop_id: id,
                    slot: j - 1,
                });
            }
            copy.push(Stmt::Mark(Mark::IterationEnd(id, j)));
            copy.extend(innermost.take());
            copy.append(&mut next);
            next = vec![Stmt::If {
                cond: cond.clone(),
                then_branch: copy,
                else_branch: Vec::new(),
                loc,
            }];
        }
        out.append(&mut next);
        out.extend(after);
    }
}

/// Intrinsic producing a value of the spelled type, e.g. `nondet_uint` for
/// `unsigned int`.
pub(crate) fn nondet_name(type_name: &str) -> String {
    let words: Vec<&str> = type_name.split_whitespace().collect();
    let unsigned = words.contains(&"unsigned");
    let longs = words.iter().filter(|w| **w == "long").count();
    let base = if longs >= 2 {
        "longlong"
    } else if longs == 1 {
        "long"
    } else if words.contains(&"short") {
        "short"
    } else if words.contains(&"char") {
        "char"
    } else {
        "int"
    };
    format!("nondet_{}{base}", if unsigned { "u" } else { "" })
}

/// Number of loop-body copies in a loop-free program, counting each guarded
/// copy of every loop separately.
pub fn count_body_copies(stmts: &[Stmt], id: LoopId) -> usize {
    let mut n = 0;
    for s in stmts {
        match s {
            Stmt::Mark(Mark::IterationEnd(l, _)) if *l == id => n += 1,
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => n += count_body_copies(then_branch, id) + count_body_copies(else_branch, id),
            Stmt::While { body, .. } => n += count_body_copies(body, id),
            _ => {}
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;
    use crate::goto_ir::{self, count_backjumps};
    use crate::ir::Widths;

    const COUNTDOWN: &str = "int main() { unsigned int x = nondet_uint(); while (x > 0) x--; assert(x == 0); }";

    fn program(src: &str) -> Program {
        goto_ir::lower(&frontend::load(src, Widths::default()).unwrap())
    }

    #[test]
    fn nondet_names() {
        assert_eq!(nondet_name("unsigned int"), "nondet_uint");
        assert_eq!(nondet_name("long long int"), "nondet_longlong");
        assert_eq!(nondet_name("unsigned char"), "nondet_uchar");
        assert_eq!(nondet_name("int"), "nondet_int");
    }

    #[test]
    fn unroll_countdown_two_copies() {
        let p = unroll(&program(COUNTDOWN), 2);
        assert_eq!(count_backjumps(&flatten(&p)), 0);
        assert_eq!(count_body_copies(&p.body, 0), 2);
    }

    #[test]
    fn loop_free_unchanged() {
        let p = program("int main() { int x = 1; assert(x == 1); }");
        assert_eq!(unroll(&p, 3).body, p.body);
        assert_eq!(make_inductive_step(&p, 3).program.body, p.body);
    }

    #[test]
    fn nested_bodies_multiply() {
        let p = program(
            "int main() { int i = 0; int s = 0; while (i < 3) { int j = 0; while (j < 2) { s++; j++; } i++; } assert(s == 6); }",
        );
        let u = unroll(&p, 2);
        assert_eq!(count_body_copies(&u.body, 0), 2);
        assert_eq!(count_body_copies(&u.body, 1), 4);
    }

    #[test]
    fn drawing_condition_is_checked_once_per_test() {
        let p = program("int main() { int x = 0; while (nondet_uint() < 3) x++; assert(x < 2); }");
        for (phase, check) in [(Phase::Base, "assume(!("), (Phase::Forward, "assert(!(")] {
            let d = flatten(&make_phase(&p, phase, 2).program).dump();
            let lines: Vec<&str> = d.lines().collect();
            let at = lines.iter().position(|l| l.contains(check)).unwrap();
            // Inside the last copy: only the assertion and the end follow.
            assert_eq!(lines.len() - at, 3, "{d}");
            assert!(lines[at - 1].contains("x = x + 1"), "{d}");
        }
    }

    #[test]
    fn countdown_phase_tails() {
        let p = program(COUNTDOWN);
        let base = flatten(&make_base_case(&p, 1).program).dump();
        assert!(base.contains("assume(!(x > 0)); // unwinding assumption"), "{base}");
        let fwd = flatten(&make_forward_condition(&p, 1).program).dump();
        assert!(fwd.contains("assert(!(x > 0)); // unwinding assertion"), "{fwd}");
        let ind = make_inductive_step(&p, 1).program;
        assert_eq!(ind.state_vectors[0].fields, vec!["x".to_string()]);
        let d = flatten(&ind).dump();
        assert!(d.contains("x = nondet_uint();"), "{d}");
        assert!(d.contains("assume(sv[0] != cs);"), "{d}");
    }

    const SERIES_INDUCTIVE_K1: &str = "typedef struct {
  long long int i;
  long long int sn;
  unsigned int n;
} statet;
statet cs, sv[1];
      long long int i = 1;
      long long int sn = 0;
      unsigned int n;
      long long int a = 2;
      assume(n >= 1);
      i = nondet_longlong();
      sn = nondet_longlong();
      n = nondet_uint();
      cs.i = i; cs.sn = sn; cs.n = n;
      if (!(i <= n)) goto 15;
      sv[0] = cs;
      sn = sn + a;
      i = i + 1;
      cs.i = i; cs.sn = sn; cs.n = n;
      assume(sv[0] != cs);
  15: assume(!(i <= n)); // unwinding assumption
      assert(sn == n * a);
      end;
";

    #[test]
    fn series_inductive_step_shape() {
        let p = program(goto_ir::tests::SERIES);
        let d = flatten(&make_inductive_step(&p, 1).program).dump();
        assert_eq!(d, SERIES_INDUCTIVE_K1);
    }
}
