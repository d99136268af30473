//! Symbolic execution of a loop-free structured program into SSA definitions.

use super::term::{Sort, Term};
use crate::ir::{
    AssertKind, AssumeKind, BinOp, Expr, ExprKind, IntType, Loc, LoopId, Mark, Program, Stmt,
    UnOp,
};
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub sort: Sort,
    pub term: Term,
}

/// A nondeterministic value, drawn when `guard` holds. Records appear in
/// execution order, which is the order a replay feeds inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NondetRecord {
    pub name: String,
    pub ty: IntType,
    pub guard: Term,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Assume(AssumeKind),
    Assert(AssertKind),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub guard: Term,
    pub cond: Term,
    pub loc: Loc,
}

/// Values of the program variables at a trace marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkRecord {
    pub mark: Mark,
    pub guard: Term,
    pub values: Vec<(String, Term)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SsaProgram {
    /// Free symbols in creation order: nondet values and initial values of
    /// variables read before any write.
    pub free: Vec<(String, Sort)>,
    pub defs: Vec<Def>,
    pub nondets: Vec<NondetRecord>,
    /// Assumes and asserts in program order.
    pub events: Vec<Event>,
    pub marks: Vec<MarkRecord>,
    /// Program variable values at the end of the program.
    pub final_values: Vec<(String, Term)>,
    /// Set when an assumption is unconditionally false.
    pub vacuous: bool,
}

/// Converts a loop-free program. Panics if a `while` remains.
pub fn to_ssa(p: &Program) -> SsaProgram {
    let mut b = Builder {
        p,
        out: SsaProgram::default(),
        env: HashMap::new(),
        versions: HashMap::new(),
        nondet_count: 0,
        int: p.widths.int(),
    };
    b.block(&p.body, &Term::bool(true));
    let order = p.symbols.names();
    b.out.final_values = order
        .iter()
        .filter_map(|n| b.env.get(n).map(|t| (n.clone(), t.clone())))
        .collect();
    b.out
}

struct Builder<'a> {
    p: &'a Program,
    out: SsaProgram,
    env: HashMap<String, Term>,
    versions: HashMap<String, usize>,
    nondet_count: usize,
    int: IntType,
}

fn cs_field(loop_id: LoopId, f: &str) -> String {
    format!("cs!{loop_id}.{f}")
}

fn sv_field(loop_id: LoopId, slot: usize, f: &str) -> String {
    format!("sv!{loop_id}!{slot}.{f}")
}

impl Builder<'_> {
    fn var_type(&self, name: &str) -> IntType {
        let base = match name.rfind('.') {
            Some(i) if name.contains('!') => &name[i + 1..],
            _ => name,
        };
        self.p.symbols.ty(base)
    }

    fn read(&mut self, name: &str) -> Term {
        if let Some(t) = self.env.get(name) {
            return t.clone();
        }
        let sym = format!("{name}_0");
        let sort = Sort::Bv(self.var_type(name).width);
        if !self.out.free.iter().any(|(n, _)| *n == sym) {
            self.out.free.push((sym.clone(), sort));
        }
        let t = Term::var(sym, sort);
        self.env.insert(name.to_string(), t.clone());
        t
    }

    fn define(&mut self, var: &str, term: Term) {
        let v = self.versions.entry(var.to_string()).or_insert(0);
        *v += 1;
        let name = format!("{var}_{v}");
        let sort = term.sort();
        self.out.defs.push(Def {
            name: name.clone(),
            sort,
            term: term.clone(),
        });
        let value = if term.is_const() {
            term
        } else {
            Term::var(name, sort)
        };
        self.env.insert(var.to_string(), value);
    }

    fn fresh(&mut self, ty: IntType, guard: Term) -> Term {
        self.nondet_count += 1;
        let name = format!("nondet!{}", self.nondet_count);
        let sort = Sort::Bv(ty.width);
        self.out.free.push((name.clone(), sort));
        self.out.nondets.push(NondetRecord {
            name: name.clone(),
            ty,
            guard,
        });
        Term::var(name, sort)
    }

    fn block(&mut self, stmts: &[Stmt], guard: &Term) {
        for s in stmts {
            if guard.as_bool() == Some(false) {
                return;
            }
            self.stmt(s, guard);
        }
    }

    fn stmt(&mut self, s: &Stmt, guard: &Term) {
        match s {
            Stmt::Decl { var, init, .. } => {
                let t = match init {
                    Some(e) => self.bv(e, guard),
                    None => {
                        let ty = self.p.symbols.ty(var);
                        self.fresh(ty, guard.clone())
                    }
                };
                self.define(var, t);
            }
            Stmt::Assign { var, value, .. } => {
                let t = self.bv(value, guard);
                self.define(var, t);
            }
            Stmt::Assume { cond, loc, kind } => {
                let c = self.boolean(cond, guard);
                self.event(EventKind::Assume(*kind), guard, c, *loc);
            }
            Stmt::Assert { cond, loc, kind } => {
                let c = self.boolean(cond, guard);
                self.event(EventKind::Assert(*kind), guard, c, *loc);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                let c = self.boolean(cond, guard);
                let g_then = Term::and(vec![guard.clone(), c.clone()]);
                let g_else = Term::and(vec![guard.clone(), Term::not(c.clone())]);
                let before = self.env.clone();
                self.block(then_branch, &g_then);
                let after_then = std::mem::replace(&mut self.env, before);
                self.block(else_branch, &g_else);
                let after_else = std::mem::take(&mut self.env);
                self.merge(&c, after_then, after_else);
            }
            Stmt::While { .. } => panic!("to_ssa requires a loop-free program"),
            Stmt::SaveState { loop_id, slot } => {
                for f in self.p.state_vector(*loop_id).fields.clone() {
                    let v = self.read(&cs_field(*loop_id, &f));
                    self.env.insert(sv_field(*loop_id, *slot, &f), v);
                }
            }
            Stmt::UpdateState { loop_id } => {
                for f in self.p.state_vector(*loop_id).fields.clone() {
                    let v = self.read(&f);
                    self.env.insert(cs_field(*loop_id, &f), v);
                }
            }
            Stmt::AssumeNewState { loop_id, slot } => {
                let mut differs = Vec::new();
                for f in self.p.state_vector(*loop_id).fields.clone() {
                    let a = self.read(&sv_field(*loop_id, *slot, &f));
                    let b = self.read(&cs_field(*loop_id, &f));
                    differs.push(Term::not(Term::eq(a, b)));
                }
                let c = Term::or(differs);
                self.event(EventKind::Assume(AssumeKind::User), guard, c, Loc::NONE);
            }
            Stmt::Mark(mark) => {
                let values = self
                    .p
                    .symbols
                    .names()
                    .into_iter()
                    .filter_map(|n| self.env.get(&n).map(|t| (n, t.clone())))
                    .collect();
                self.out.marks.push(MarkRecord {
                    mark: *mark,
                    guard: guard.clone(),
                    values,
                });
            }
        }
    }

    fn event(&mut self, kind: EventKind, guard: &Term, cond: Term, loc: Loc) {
        self.out.events.push(Event {
            kind,
            guard: guard.clone(),
            cond,
            loc,
        });
    }

    fn merge(&mut self, c: &Term, t: HashMap<String, Term>, e: HashMap<String, Term>) {
        let mut keys: BTreeMap<&String, ()> = BTreeMap::new();
        for k in t.keys().chain(e.keys()) {
            keys.insert(k, ());
        }
        let mut merged = Vec::new();
        for k in keys.keys() {
            match (t.get(*k), e.get(*k)) {
                (Some(a), Some(b)) if a == b => self.env.insert((*k).clone(), a.clone()),
                (Some(a), Some(b)) => {
                    merged.push(((*k).clone(), Term::ite(c.clone(), a.clone(), b.clone())));
                    None
                }
                (Some(a), None) | (None, Some(a)) => self.env.insert((*k).clone(), a.clone()),
                (None, None) => None,
            };
        }
        // Program variables first, in declaration order, for readable dumps.
        let order = self.p.symbols.names();
        merged.sort_by_key(|(k, _)| (order.iter().position(|n| n == k).unwrap_or(usize::MAX), k.clone()));
        for (k, term) in merged {
            self.define(&k, term);
        }
    }

    /// Translation to a bit-vector term of the expression's type.
    fn bv(&mut self, e: &Expr, guard: &Term) -> Term {
        match &e.kind {
            ExprKind::Const(v) => Term::bv(*v, e.ty.width),
            ExprKind::Var(n) => self.read(n),
            ExprKind::Nondet(_) => self.fresh(e.ty, guard.clone()),
            ExprKind::Unary(UnOp::Neg, x) => Term::neg(self.bv(x, guard)),
            ExprKind::Cast(x, _) => {
                let t = self.bv(x, guard);
                Term::convert(t, x.ty, e.ty)
            }
            ExprKind::Binary(op, l, r) if !op.is_comparison() && !op.is_logical() => {
                let a = self.bv(l, guard);
                let b = self.bv(r, guard);
                match op {
                    BinOp::Div | BinOp::Rem => {
                        let zero = Term::eq(b.clone(), Term::bv(0, l.ty.width));
                        let g = Term::and(vec![guard.clone(), zero.clone()]);
                        let q = Term::source_binop(*op, l.ty, a, b);
                        if g.as_bool() == Some(false) {
                            q
                        } else {
                            let f = self.fresh(e.ty, g);
                            Term::ite(zero, f, q)
                        }
                    }
                    _ => Term::source_binop(*op, l.ty, a, b),
                }
            }
            // Comparisons, logical operators and `!` produce 0 or 1.
            _ => {
                let c = self.boolean(e, guard);
                Term::ite(c, Term::bv(1, e.ty.width), Term::bv(0, e.ty.width))
            }
        }
    }

    /// Translation to a Bool term: true iff the expression is nonzero.
    fn boolean(&mut self, e: &Expr, guard: &Term) -> Term {
        match &e.kind {
            ExprKind::Unary(UnOp::Not, x) => Term::not(self.boolean(x, guard)),
            ExprKind::Binary(op, l, r) if op.is_logical() => {
                let a = self.boolean(l, guard);
                let b = self.boolean(r, guard);
                Term::source_binop(*op, self.int, a, b)
            }
            ExprKind::Binary(op, l, r) if op.is_comparison() => {
                let a = self.bv(l, guard);
                let b = self.bv(r, guard);
                Term::source_binop(*op, l.ty, a, b)
            }
            _ => {
                let t = self.bv(e, guard);
                let w = t.width();
                Term::not(Term::eq(t, Term::bv(0, w)))
            }
        }
    }
}
