//! Lowering of the typed tree to while-only structured form, flattening into a
//! goto instruction list, and per-loop metadata.

use crate::frontend::TStmt;
use crate::frontend::TypedProgram;
use crate::ir::{
    AssertKind, AssumeKind, BinOp, CastKind, Expr, ExprKind, Loc, LoopId, Program, Stmt,
    SymbolTable,
};
use std::fmt::Write;

/// Rewrites `for` and `do-while` into `while`, inlines blocks and numbers
/// loops in pre-order.
pub fn lower(tp: &TypedProgram) -> Program {
    let mut body = lower_block(&tp.body);
    renumber_loops(&mut body, &mut 0);
    Program {
        symbols: tp.symbols.clone(),
        widths: tp.widths,
        body,
        state_vectors: Vec::new(),
    }
}

fn lower_block(stmts: &[TStmt]) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        lower_stmt(s, &mut out);
    }
    out
}

fn lower_stmt(s: &TStmt, out: &mut Vec<Stmt>) {
    match s {
        TStmt::Decl { var, init, loc } => out.push(Stmt::Decl {
            var: var.clone(),
            init: init.clone(),
            loc: *loc,
        }),
        TStmt::Assign { var, value, loc } => out.push(Stmt::Assign {
            var: var.clone(),
            value: value.clone(),
            loc: *loc,
        }),
        TStmt::Assume { cond, loc } => out.push(Stmt::Assume {
            cond: cond.clone(),
            loc: *loc,
            kind: AssumeKind::User,
        }),
        TStmt::Assert { cond, loc } => out.push(Stmt::Assert {
            cond: cond.clone(),
            loc: *loc,
            kind: AssertKind::User,
        }),
        TStmt::If {
            cond,
            then_branch,
            else_branch,
            loc,
        } => out.push(Stmt::If {
            cond: cond.clone(),
            then_branch: lower_block(then_branch),
            else_branch: lower_block(else_branch),
            loc: *loc,
        }),
        TStmt::While { cond, body, loc } => out.push(Stmt::While {
            id: 0,
            cond: cond.clone(),
            body: lower_block(body),
            loc: *loc,
        }),
        // The body runs once before the condition is first checked.
        TStmt::DoWhile { body, cond, loc } => {
            let body = lower_block(body);
            out.extend(body.iter().cloned());
            out.push(Stmt::While {
                id: 0,
                cond: cond.clone(),
                body,
                loc: *loc,
            });
        }
        TStmt::For {
            init,
            cond,
            step,
            body,
            loc,
        } => {
            out.extend(lower_block(init));
            let mut b = lower_block(body);
            b.extend(lower_block(step));
            out.push(Stmt::While {
                id: 0,
                cond: cond.clone(),
                body: b,
                loc: *loc,
            });
        }
        TStmt::Block(items) => {
            for s in items {
                lower_stmt(s, out);
            }
        }
    }
}

fn renumber_loops(stmts: &mut [Stmt], next: &mut LoopId) {
    for s in stmts {
        match s {
            Stmt::While { id, body, .. } => {
                *id = *next;
                *next += 1;
                renumber_loops(body, next);
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                renumber_loops(then_branch, next);
                renumber_loops(else_branch, next);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstrKind {
    Decl {
        var: String,
        init: Option<Expr>,
    },
    Assign {
        var: String,
        value: Expr,
    },
    Assume {
        cond: Expr,
        kind: AssumeKind,
    },
    Assert {
        cond: Expr,
        kind: AssertKind,
    },
    /// Jump to `target` when `guard` holds (always when `None`).
    Goto {
        guard: Option<Expr>,
        target: usize,
    },
    SaveState {
        loop_id: LoopId,
        slot: usize,
    },
    UpdateState {
        loop_id: LoopId,
    },
    AssumeNewState {
        loop_id: LoopId,
        slot: usize,
    },
    Skip,
    End,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub kind: InstrKind,
    pub loc: Loc,
}

/// Instruction indices of one flattened loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoopSpan {
    pub id: LoopId,
    /// The guarded exit jump evaluated before every iteration.
    pub head: usize,
    pub backjump: usize,
    pub exit: usize,
}

/// Flat goto form of a program. The structured form it was derived from is
/// kept alongside for the passes that work on trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GotoProgram {
    pub program: Program,
    pub instrs: Vec<Instruction>,
    pub loops: Vec<LoopSpan>,
}

pub fn flatten(p: &Program) -> GotoProgram {
    let mut f = Flattener {
        instrs: Vec::new(),
        loops: Vec::new(),
    };
    f.block(&p.body);
    f.push(InstrKind::End, Loc::NONE);
    f.loops.sort_by_key(|l| l.id);
    GotoProgram {
        program: p.clone(),
        instrs: f.instrs,
        loops: f.loops,
    }
}

/// Lower and flatten in one step.
pub fn build(tp: &TypedProgram) -> GotoProgram {
    flatten(&lower(tp))
}

struct Flattener {
    instrs: Vec<Instruction>,
    loops: Vec<LoopSpan>,
}

impl Flattener {
    fn push(&mut self, kind: InstrKind, loc: Loc) -> usize {
        self.instrs.push(Instruction { kind, loc });
        self.instrs.len() - 1
    }

    fn patch(&mut self, at: usize, to: usize) {
        if let InstrKind::Goto { target, .. } = &mut self.instrs[at].kind {
            *target = to;
        }
    }

    fn block(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Decl { var, init, loc } => {
                self.push(
                    InstrKind::Decl {
                        var: var.clone(),
                        init: init.clone(),
                    },
                    *loc,
                );
            }
            Stmt::Assign { var, value, loc } => {
                self.push(
                    InstrKind::Assign {
                        var: var.clone(),
                        value: value.clone(),
                    },
                    *loc,
                );
            }
            Stmt::Assume { cond, loc, kind } => {
                self.push(
                    InstrKind::Assume {
                        cond: cond.clone(),
                        kind: *kind,
                    },
                    *loc,
                );
            }
            Stmt::Assert { cond, loc, kind } => {
                self.push(
                    InstrKind::Assert {
                        cond: cond.clone(),
                        kind: *kind,
                    },
                    *loc,
                );
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                loc,
            } => {
                let skip_then = self.push(
                    InstrKind::Goto {
                        guard: Some(negate(cond)),
                        target: 0,
                    },
                    *loc,
                );
                self.block(then_branch);
                if else_branch.is_empty() {
                    let end = self.instrs.len();
                    self.patch(skip_then, end);
                } else {
                    let skip_else = self.push(
                        InstrKind::Goto {
                            guard: None,
                            target: 0,
                        },
                        *loc,
                    );
                    let else_start = self.instrs.len();
                    self.patch(skip_then, else_start);
                    self.block(else_branch);
                    let end = self.instrs.len();
                    self.patch(skip_else, end);
                }
            }
            Stmt::While {
                id,
                cond,
                body,
                loc,
            } => {
                let head = self.push(
                    InstrKind::Goto {
                        guard: Some(negate(cond)),
                        target: 0,
                    },
                    *loc,
                );
                self.block(body);
                let backjump = self.push(
                    InstrKind::Goto {
                        guard: None,
                        target: head,
                    },
                    *loc,
                );
                let exit = self.instrs.len();
                self.patch(head, exit);
                self.loops.push(LoopSpan {
                    id: *id,
                    head,
                    backjump,
                    exit,
                });
            }
            Stmt::SaveState { loop_id, slot } => {
                self.push(
                    InstrKind::SaveState {
                        loop_id: *loop_id,
                        slot: *slot,
                    },
                    Loc::NONE,
                );
            }
            Stmt::UpdateState { loop_id } => {
                self.push(InstrKind::UpdateState { loop_id: *loop_id }, Loc::NONE);
            }
            Stmt::AssumeNewState { loop_id, slot } => {
                self.push(
                    InstrKind::AssumeNewState {
                        loop_id: *loop_id,
                        slot: *slot,
                    },
                    Loc::NONE,
                );
            }
            Stmt::Mark(_) => {}
        }
    }
}

fn negate(cond: &Expr) -> Expr {
    Expr::not(cond.clone(), cond.ty)
}

/// Number of back edges (gotos to an earlier or the same instruction).
pub fn count_backjumps(gp: &GotoProgram) -> usize {
    gp.instrs
        .iter()
        .enumerate()
        .filter(|(i, ins)| matches!(ins.kind, InstrKind::Goto { target, .. } if target <= *i))
        .count()
}

impl GotoProgram {
    /// Stable text form, one instruction per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let syms = &self.program.symbols;
        for sv in &self.program.state_vectors {
            let (ty, cs, vec) = sv.names();
            let _ = writeln!(out, "typedef struct {{");
            for f in &sv.fields {
                let _ = writeln!(out, "  {} {};", syms.get(f).map(|s| s.type_name.as_str()).unwrap_or("int"), f);
            }
            let _ = writeln!(out, "}} {ty};");
            let _ = writeln!(out, "{ty} {cs}, {vec}[{}];", sv.slots);
        }
        let targets: Vec<usize> = self
            .instrs
            .iter()
            .filter_map(|i| match i.kind {
                InstrKind::Goto { target, .. } => Some(target),
                _ => None,
            })
            .collect();
        for (idx, ins) in self.instrs.iter().enumerate() {
            let label = if targets.contains(&idx) {
                format!("{idx}:")
            } else {
                String::new()
            };
            let _ = writeln!(out, "{label:>5} {}", self.instr_text(ins));
        }
        out
    }

    pub fn instr_text(&self, ins: &Instruction) -> String {
        let syms = &self.program.symbols;
        match &ins.kind {
            InstrKind::Decl { var, init } => {
                let ty = syms.get(var).map(|s| s.type_name.as_str()).unwrap_or("int");
                match init {
                    Some(e) => format!("{ty} {var} = {e};"),
                    None => format!("{ty} {var};"),
                }
            }
            InstrKind::Assign { var, value } => format!("{var} = {value};"),
            InstrKind::Assume { cond, kind } => {
                let note = match kind {
                    AssumeKind::User => "",
                    AssumeKind::Invariant => " // invariant",
                    AssumeKind::Unwinding => " // unwinding assumption",
                };
                format!("assume({cond});{note}")
            }
            InstrKind::Assert { cond, kind } => {
                let note = match kind {
                    AssertKind::User => String::new(),
                    AssertKind::Unwinding => " // unwinding assertion".to_string(),
                    AssertKind::Candidate(i) => format!(" // candidate {i}"),
                };
                format!("assert({cond});{note}")
            }
            InstrKind::Goto { guard: None, target } => format!("goto {target};"),
            InstrKind::Goto {
                guard: Some(g),
                target,
            } => format!("if ({g}) goto {target};"),
            InstrKind::SaveState { loop_id, slot } => {
                let (_, cs, sv) = self.program.state_vector(*loop_id).names();
                format!("{sv}[{slot}] = {cs};")
            }
            InstrKind::UpdateState { loop_id } => {
                let spec = self.program.state_vector(*loop_id);
                let (_, cs, _) = spec.names();
                spec.fields
                    .iter()
                    .map(|f| format!("{cs}.{f} = {f};"))
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            InstrKind::AssumeNewState { loop_id, slot } => {
                let (_, cs, sv) = self.program.state_vector(*loop_id).names();
                format!("assume({sv}[{slot}] != {cs});")
            }
            InstrKind::Skip => "skip;".to_string(),
            InstrKind::End => "end;".to_string(),
        }
    }
}

/// Per-loop metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopInfo {
    pub id: LoopId,
    pub head: usize,
    pub backjump: usize,
    pub exit: usize,
    /// Halt condition `c`: the loop runs while it holds.
    pub guard: Expr,
    /// Variables occurring in the loop.
    pub loop_vars: Vec<String>,
    /// Variables given fresh values by the inductive step.
    pub havoc_vars: Vec<String>,
    pub counter: Option<String>,
    /// Variables assigned on every path through one iteration.
    pub always_assigned: Vec<String>,
    /// 1 for outermost loops.
    pub nesting_depth: usize,
}

pub fn analyze_loops(gp: &GotoProgram) -> Vec<LoopInfo> {
    let mut out = Vec::new();
    collect_loops(&gp.program.body, 1, &gp.program.symbols, gp, &mut out);
    out.sort_by_key(|l| l.id);
    out
}

fn collect_loops(
    stmts: &[Stmt],
    depth: usize,
    syms: &SymbolTable,
    gp: &GotoProgram,
    out: &mut Vec<LoopInfo>,
) {
    for s in stmts {
        match s {
            Stmt::While { id, cond, body, .. } => {
                out.push(loop_info(*id, cond, body, depth, syms, gp));
                collect_loops(body, depth + 1, syms, gp, out);
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                collect_loops(then_branch, depth, syms, gp, out);
                collect_loops(else_branch, depth, syms, gp, out);
            }
            _ => {}
        }
    }
}

fn loop_info(
    id: LoopId,
    cond: &Expr,
    body: &[Stmt],
    depth: usize,
    syms: &SymbolTable,
    gp: &GotoProgram,
) -> LoopInfo {
    let span = gp
        .loops
        .iter()
        .find(|l| l.id == id)
        .copied()
        .unwrap_or(LoopSpan {
            id,
            head: 0,
            backjump: 0,
            exit: 0,
        });
    let mut loop_vars = cond.vars();
    Stmt::used_vars(body, &mut loop_vars);
    syms.sort_names(&mut loop_vars);

    let cond_vars = cond.vars();
    let counter = cond_vars
        .iter()
        .find(|v| {
            let mut assigns = Vec::new();
            assignments_to(body, v, &mut assigns);
            matches!(assigns[..], [Some(e)] if is_step(v, e))
        })
        .cloned();

    let always_assigned = must_assign(body);

    // Every variable the body may write is havocked: a variable written only
    // on some paths still takes values the hypothesis must not pin down.
    let mut havoc_vars = cond_vars;
    Stmt::assigned_vars(body, &mut havoc_vars);
    syms.sort_names(&mut havoc_vars);

    LoopInfo {
        id,
        head: span.head,
        backjump: span.backjump,
        exit: span.exit,
        guard: cond.clone(),
        loop_vars,
        havoc_vars,
        counter,
        always_assigned,
        nesting_depth: depth,
    }
}

/// Right-hand sides of every write to `v`; `None` for a nondet declaration.
fn assignments_to<'a>(stmts: &'a [Stmt], v: &str, out: &mut Vec<Option<&'a Expr>>) {
    for s in stmts {
        match s {
            Stmt::Assign { var, value, .. } if var == v => out.push(Some(value)),
            Stmt::Decl { var, init, .. } if var == v => out.push(init.as_ref()),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                assignments_to(then_branch, v, out);
                assignments_to(else_branch, v, out);
            }
            Stmt::While { body, .. } => assignments_to(body, v, out),
            _ => {}
        }
    }
}

fn strip_implicit(e: &Expr) -> &Expr {
    match &e.kind {
        ExprKind::Cast(inner, CastKind::Implicit) => strip_implicit(inner),
        _ => e,
    }
}

/// `v = v ± c` (or `v = c + v`).
fn is_step(v: &str, value: &Expr) -> bool {
    let is_v = |e: &Expr| matches!(&strip_implicit(e).kind, ExprKind::Var(n) if n == v);
    let is_c = |e: &Expr| strip_implicit(e).as_const().is_some();
    match &strip_implicit(value).kind {
        ExprKind::Binary(BinOp::Add, l, r) => (is_v(l) && is_c(r)) || (is_c(l) && is_v(r)),
        ExprKind::Binary(BinOp::Sub, l, r) => is_v(l) && is_c(r),
        _ => false,
    }
}

/// Variables assigned on every path through `stmts`.
fn must_assign(stmts: &[Stmt]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in stmts {
        let add: Vec<String> = match s {
            Stmt::Assign { var, .. } | Stmt::Decl { var, .. } => vec![var.clone()],
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                let t = must_assign(then_branch);
                let e = must_assign(else_branch);
                t.into_iter().filter(|v| e.contains(v)).collect()
            }
            _ => Vec::new(),
        };
        for v in add {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::frontend::load;
    use crate::ir::Widths;

    pub const SERIES: &str = "int main(int argc, char **argv) {
  long long int i = 1, sn = 0;
  unsigned int n;
  long long int a = 2;
  assume(n >= 1);
  while (i <= n) {
    sn = sn + a;
    i++;
  }
  assert(sn == n * a);
}";

    fn gp(src: &str) -> GotoProgram {
        build(&load(src, Widths::default()).unwrap())
    }

    #[test]
    fn series_loop_metadata() {
        let g = gp(SERIES);
        let loops = analyze_loops(&g);
        assert_eq!(loops.len(), 1);
        let l = &loops[0];
        assert_eq!(l.loop_vars, vec!["i", "sn", "n", "a"]);
        assert_eq!(l.havoc_vars, vec!["i", "sn", "n"]);
        assert_eq!(l.counter.as_deref(), Some("i"));
        assert!(l.backjump > l.head);
        assert_eq!(count_backjumps(&g), 1);
    }

    #[test]
    fn countdown_loop_metadata() {
        let g = gp("int main() { unsigned int x = nondet_uint(); while (x > 0) x--; assert(x == 0); }");
        let l = &analyze_loops(&g)[0];
        assert_eq!(l.loop_vars, vec!["x"]);
        assert_eq!(l.havoc_vars, vec!["x"]);
        assert_eq!(l.counter.as_deref(), Some("x"));
    }

    #[test]
    fn conditionally_written_variable_is_still_havocked() {
        let g = gp("int main() { int x = 0; int i = 0; int n; while (i < n) { if (i == 0) x = 1; i++; } assert(x == 0 || i < 3); }");
        let l = &analyze_loops(&g)[0];
        assert!(!l.always_assigned.contains(&"x".to_string()));
        assert!(l.havoc_vars.contains(&"x".to_string()));
    }

    #[test]
    fn backjump_counts() {
        assert_eq!(count_backjumps(&gp("int main() { int x = 1; x = x + 1; assert(x == 2); }")), 0);
        assert_eq!(
            count_backjumps(&gp("int main() { int x = 3; while (x > 0) x--; while (x < 3) x++; }")),
            2
        );
        let nested = gp("int main() { int i = 0, j; while (i < 3) { j = 0; while (j < 3) j++; i++; } }");
        assert_eq!(count_backjumps(&nested), 2);
        let loops = analyze_loops(&nested);
        assert_eq!(loops[1].nesting_depth, 2);
    }

    #[test]
    fn for_and_do_while_lowering() {
        let g = lower(&load("int main() { int s = 0; for (int i = 0; i < 3; i++) { s += 1; } }", Widths::default()).unwrap());
        let Stmt::While { body, .. } = &g.body[2] else { panic!("{:?}", g.body) };
        assert!(matches!(&body[1], Stmt::Assign { var, .. } if var == "i"));
        let d = lower(&load("int main() { int x = 2; do { x--; } while (x > 0); }", Widths::default()).unwrap());
        assert!(matches!(&d.body[1], Stmt::Assign { .. }));
        assert!(matches!(&d.body[2], Stmt::While { .. }));
    }

    #[test]
    fn straight_line_dump_is_stable() {
        let g = gp("int main() { int x = 1; if (x > 0) x = 2; else x = 3; assert(x == 2); }");
        let expected = "      int x = 1;
      if (!(x > 0)) goto 4;
      x = 2;
      goto 5;
   4: x = 3;
   5: assert(x == 2);
      end;
";
        assert_eq!(g.dump(), expected);
    }
}
