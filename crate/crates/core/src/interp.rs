//! Reference interpreters for the typed source tree and for goto programs, and
//! exhaustive exploration of nondeterministic inputs at narrow widths.
//!
//! Nondeterministic values are drawn from an input sequence in evaluation
//! order: operands left to right, a division or remainder by zero draws its
//! result after both operands. `&&` and `||` evaluate both operands; the
//! language has no side effects other than drawing inputs.

use crate::bv;
use crate::frontend::{TStmt, TypedProgram};
use crate::goto_ir::{GotoProgram, InstrKind};
use crate::ir::{AssertKind, Expr, ExprKind, IntType, Loc, LoopId, SymbolTable};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Completed,
    Violation { loc: Loc, kind: AssertKind },
    /// An assumption failed; the run is not a real execution.
    Blocked,
    /// The input sequence ran out; the next value has this type.
    NeedInput(IntType),
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub status: Status,
    pub inputs_used: usize,
    /// Variable values when the run stopped.
    pub env: HashMap<String, u128>,
    /// Values at the end of every loop iteration and on loop entry, in
    /// execution order. Only recorded by the source interpreter.
    pub snapshots: Vec<Snapshot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub loop_index: usize,
    pub iteration: usize,
    pub env: Vec<(String, u128)>,
}

enum Halt {
    Stop(Status),
}

struct Machine<'a> {
    inputs: &'a [u128],
    pos: usize,
    env: HashMap<String, u128>,
    steps: usize,
    limit: usize,
    order: Vec<String>,
    types: HashMap<String, IntType>,
    snapshots: Vec<Snapshot>,
}

impl<'a> Machine<'a> {
    fn new(inputs: &'a [u128], limit: usize, syms: &SymbolTable) -> Self {
        Machine {
            inputs,
            pos: 0,
            env: HashMap::new(),
            steps: 0,
            limit,
            order: syms.names(),
            types: syms.iter().map(|s| (s.name.clone(), s.ty)).collect(),
            snapshots: Vec::new(),
        }
    }

    fn draw(&mut self, ty: IntType) -> Result<u128, Halt> {
        match self.inputs.get(self.pos) {
            Some(v) => {
                self.pos += 1;
                Ok(v & ty.mask())
            }
            None => Err(Halt::Stop(Status::NeedInput(ty))),
        }
    }

    fn tick(&mut self) -> Result<(), Halt> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(Halt::Stop(Status::StepLimit));
        }
        Ok(())
    }

    fn eval(&mut self, e: &Expr) -> Result<u128, Halt> {
        Ok(match &e.kind {
            ExprKind::Const(v) => *v,
            ExprKind::Var(n) => *self.env.get(n).unwrap_or(&0),
            ExprKind::Nondet(_) => self.draw(e.ty)?,
            ExprKind::Unary(op, x) => {
                let v = self.eval(x)?;
                bv::unop(*op, x.ty, v)
            }
            ExprKind::Cast(x, _) => {
                let v = self.eval(x)?;
                bv::cast(x.ty, e.ty, v)
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                let ty = if op.is_logical() { e.ty } else { l.ty };
                let (a, b) = if op.is_logical() {
                    ((a & l.ty.mask() != 0) as u128, (b & r.ty.mask() != 0) as u128)
                } else {
                    (a, b)
                };
                match bv::binop(*op, ty, a, b) {
                    Some(v) => v,
                    None => self.draw(e.ty)?,
                }
            }
        })
    }

    fn truth(&mut self, e: &Expr) -> Result<bool, Halt> {
        Ok(self.eval(e)? & e.ty.mask() != 0)
    }

    fn snapshot(&mut self, loop_index: usize, iteration: usize) {
        let env = self
            .order
            .iter()
            .filter_map(|n| self.env.get(n).map(|v| (n.clone(), *v)))
            .collect();
        self.snapshots.push(Snapshot {
            loop_index,
            iteration,
            env,
        });
    }

    fn finish(self, status: Status) -> Run {
        Run {
            status,
            inputs_used: self.pos,
            env: self.env,
            snapshots: self.snapshots,
        }
    }
}

/// Runs the typed source program on an input sequence.
pub fn run_source(tp: &TypedProgram, inputs: &[u128], step_limit: usize) -> Run {
    let mut m = Machine::new(inputs, step_limit, &tp.symbols);
    let mut loops = 0;
    let status = match exec_block(&mut m, &tp.body, &mut loops) {
        Ok(()) => Status::Completed,
        Err(Halt::Stop(s)) => s,
    };
    m.finish(status)
}

fn exec_block(m: &mut Machine, stmts: &[TStmt], loops: &mut usize) -> Result<(), Halt> {
    for s in stmts {
        exec(m, s, loops)?;
    }
    Ok(())
}

fn run_loop(
    m: &mut Machine,
    cond: &Expr,
    body: &[TStmt],
    step: &[TStmt],
    first_unconditional: bool,
    loops: &mut usize,
) -> Result<(), Halt> {
    let index = *loops;
    *loops += 1;
    m.snapshot(index, 0);
    let mut iteration = 0;
    loop {
        m.tick()?;
        if !(first_unconditional && iteration == 0) && !m.truth(cond)? {
            return Ok(());
        }
        exec_block(m, body, loops)?;
        exec_block(m, step, loops)?;
        iteration += 1;
        m.snapshot(index, iteration);
    }
}

fn exec(m: &mut Machine, s: &TStmt, loops: &mut usize) -> Result<(), Halt> {
    m.tick()?;
    match s {
        TStmt::Decl { var, init, .. } => {
            let v = match init {
                Some(e) => m.eval(e)?,
                None => {
                    let ty = m.types[var];
                    m.draw(ty)?
                }
            };
            m.env.insert(var.clone(), v);
        }
        TStmt::Assign { var, value, .. } => {
            let v = m.eval(value)?;
            m.env.insert(var.clone(), v);
        }
        TStmt::Assume { cond, .. } => {
            if !m.truth(cond)? {
                return Err(Halt::Stop(Status::Blocked));
            }
        }
        TStmt::Assert { cond, loc } => {
            if !m.truth(cond)? {
                return Err(Halt::Stop(Status::Violation {
                    loc: *loc,
                    kind: AssertKind::User,
                }));
            }
        }
        TStmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            if m.truth(cond)? {
                exec_block(m, then_branch, loops)?;
            } else {
                exec_block(m, else_branch, loops)?;
            }
        }
        TStmt::While { cond, body, .. } => run_loop(m, cond, body, &[], false, loops)?,
        TStmt::DoWhile { body, cond, .. } => run_loop(m, cond, body, &[], true, loops)?,
        TStmt::For {
            init,
            cond,
            step,
            body,
            ..
        } => {
            exec_block(m, init, loops)?;
            run_loop(m, cond, body, step, false, loops)?;
        }
        TStmt::Block(items) => exec_block(m, items, loops)?,
    }
    Ok(())
}

/// Runs a goto program on an input sequence. Inductive-step bookkeeping is
/// executed on concrete records.
pub fn run_goto(gp: &GotoProgram, inputs: &[u128], step_limit: usize) -> Run {
    let syms = &gp.program.symbols;
    let mut m = Machine::new(inputs, step_limit, syms);
    let mut cs: HashMap<LoopId, Vec<u128>> = HashMap::new();
    let mut sv: HashMap<(LoopId, usize), Vec<u128>> = HashMap::new();
    let mut pc = 0;
    let status = loop {
        if let Err(Halt::Stop(s)) = m.tick() {
            break s;
        }
        let ins = &gp.instrs[pc];
        pc += 1;
        let r: Result<(), Halt> = (|| {
            match &ins.kind {
                InstrKind::Decl { var, init } => {
                    let v = match init {
                        Some(e) => m.eval(e)?,
                        None => m.draw(syms.ty(var))?,
                    };
                    m.env.insert(var.clone(), v);
                }
                InstrKind::Assign { var, value } => {
                    let v = m.eval(value)?;
                    m.env.insert(var.clone(), v);
                }
                InstrKind::Assume { cond, .. } => {
                    if !m.truth(cond)? {
                        return Err(Halt::Stop(Status::Blocked));
                    }
                }
                InstrKind::Assert { cond, kind } => {
                    if !m.truth(cond)? {
                        return Err(Halt::Stop(Status::Violation {
                            loc: ins.loc,
                            kind: *kind,
                        }));
                    }
                }
                InstrKind::Goto { guard, target } => {
                    let jump = match guard {
                        Some(g) => m.truth(g)?,
                        None => true,
                    };
                    if jump {
                        pc = *target;
                    }
                }
                InstrKind::SaveState { loop_id, slot } => {
                    let cur = cs.get(loop_id).cloned().unwrap_or_default();
                    sv.insert((*loop_id, *slot), cur);
                }
                InstrKind::UpdateState { loop_id } => {
                    let fields = &gp.program.state_vector(*loop_id).fields;
                    let vals = fields.iter().map(|f| *m.env.get(f).unwrap_or(&0)).collect();
                    cs.insert(*loop_id, vals);
                }
                InstrKind::AssumeNewState { loop_id, slot } => {
                    if sv.get(&(*loop_id, *slot)) == cs.get(loop_id) {
                        return Err(Halt::Stop(Status::Blocked));
                    }
                }
                InstrKind::Skip => {}
                InstrKind::End => return Err(Halt::Stop(Status::Completed)),
            }
            Ok(())
        })();
        if let Err(Halt::Stop(s)) = r {
            break s;
        }
    };
    m.finish(status)
}

/// Result of exploring every input sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exploration {
    /// Lexicographically first violating input sequence.
    pub violation: Option<(Vec<u128>, Loc)>,
    /// False when some run hit the step limit or the run budget ran out.
    pub complete: bool,
    pub runs: usize,
}

/// Depth-first enumeration of input sequences, in lexicographic order.
/// `run` returns the status for a given input prefix.
pub fn explore(mut run: impl FnMut(&[u128]) -> Status, max_runs: usize) -> Exploration {
    let mut stack: Vec<Vec<u128>> = vec![Vec::new()];
    let mut runs = 0;
    let mut complete = true;
    while let Some(prefix) = stack.pop() {
        if runs >= max_runs {
            complete = false;
            break;
        }
        runs += 1;
        match run(&prefix) {
            Status::Violation { loc, .. } => {
                return Exploration {
                    violation: Some((prefix, loc)),
                    complete,
                    runs,
                }
            }
            Status::NeedInput(ty) => {
                for v in (0..=ty.mask()).rev() {
                    let mut next = prefix.clone();
                    next.push(v);
                    stack.push(next);
                }
            }
            Status::StepLimit => complete = false,
            Status::Completed | Status::Blocked => {}
        }
    }
    Exploration {
        violation: None,
        complete,
        runs,
    }
}

/// Exhaustive check of a source program: does any execution violate an
/// assertion?
pub fn explore_source(tp: &TypedProgram, step_limit: usize, max_runs: usize) -> Exploration {
    explore(|inp| run_source(tp, inp, step_limit).status, max_runs)
}
