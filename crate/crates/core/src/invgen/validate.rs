//! Houdini-style validation of inferred loop facts with the solver.
//!
//! Every loop is replaced by an abstraction that asserts the entry and cut
//! candidates, havocs the loop's variables, assumes the cut and checks that
//! one body iteration re-establishes it. Candidates violated by a model are
//! dropped until the remaining set is inductive.

use super::instrument::constraint_expr;
use super::linear::Constraint;
use super::polyhedron::Polyhedron;
use super::propagate::{derive_points, Invariants};
use crate::goto_ir::{analyze_loops, flatten};
use crate::ir::{AssertKind, AssumeKind, Expr, LoopId, Program, Stmt};
use crate::kind::nondet_name;
use crate::solver::{check, SolverConfig, SolverVerdict};
use crate::vcgen::generate;
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Point {
    Entry,
    Cut,
}

#[derive(Clone, Debug)]
struct Candidate {
    loop_id: LoopId,
    point: Point,
    constraint: Constraint,
    expr: Expr,
}

/// A candidate removed during validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejected {
    pub loop_id: LoopId,
    pub point: Point,
    pub constraint: Constraint,
    /// Round of the refinement loop, starting at 0.
    pub round: usize,
}

/// Keeps the largest subset of the candidate facts that the solver proves
/// inductive, and rederives head and exit facts from it.
pub fn validate(p: &Program, invs: &Invariants, cfg: &SolverConfig) -> (Invariants, Vec<Rejected>) {
    let int = p.widths.int();
    let mut cands = Vec::new();
    let mut rejected = Vec::new();
    for (id, inv) in invs {
        for (point, poly) in [(Point::Entry, &inv.entry), (Point::Cut, &inv.cut)] {
            // A bottom fact would need `assume(0)`; it is kept only if proven.
            let cs: Vec<Constraint> = if poly.is_bottom() {
                vec![Constraint::le(super::linear::LinExpr::constant(1))]
            } else {
                poly.constraints().to_vec()
            };
            for c in cs {
                let expr = if c.expr.is_constant() {
                    Some(Expr::constant(i128::from(c.holds(&HashMap::new()) == Some(true)), int))
                } else {
                    constraint_expr(&c, &p.symbols, int)
                };
                match expr {
                    Some(expr) => cands.push(Candidate {
                        loop_id: *id,
                        point,
                        constraint: c,
                        expr,
                    }),
                    None => rejected.push(Rejected {
                        loop_id: *id,
                        point,
                        constraint: c,
                        round: 0,
                    }),
                }
            }
        }
    }
    let havoc: HashMap<LoopId, Vec<String>> = analyze_loops(&flatten(p)).into_iter().map(|l| (l.id, l.havoc_vars)).collect();
    let mut alive: BTreeSet<usize> = (0..cands.len()).collect();
    let mut round = 0;
    while !alive.is_empty() {
        let ctx = Ctx {
            p,
            cands: &cands,
            alive: &alive,
            havoc: &havoc,
        };
        let prog = p.with_body(ctx.stmts(&p.body));
        let vc = generate(&prog);
        let dropped: Vec<usize> = match check(&vc, cfg) {
            SolverVerdict::Unsat => break,
            SolverVerdict::Sat(model) => {
                let env = vc.environment(&model);
                let bad: Vec<usize> = vc
                    .violations
                    .iter()
                    .filter(|v| v.term.eval(&env).as_bool())
                    .filter_map(|v| match v.kind {
                        AssertKind::Candidate(i) => Some(i),
                        _ => None,
                    })
                    .collect();
                if bad.is_empty() {
                    log::warn!("validation model violates no candidate; dropping all");
                    alive.iter().copied().collect()
                } else {
                    bad
                }
            }
            SolverVerdict::Unknown(reason) => {
                log::warn!("validation query unknown ({reason}); dropping all candidates");
                alive.iter().copied().collect()
            }
        };
        for i in dropped {
            if alive.remove(&i) {
                let c = &cands[i];
                rejected.push(Rejected {
                    loop_id: c.loop_id,
                    point: c.point,
                    constraint: c.constraint.clone(),
                    round,
                });
            }
        }
        round += 1;
    }
    let mut out = Invariants::new();
    for id in invs.keys() {
        let keep = |point: Point| {
            let cs: Vec<Constraint> = alive
                .iter()
                .map(|i| &cands[*i])
                .filter(|c| c.loop_id == *id && c.point == point)
                .map(|c| c.constraint.clone())
                .collect();
            Polyhedron::from_constraints(cs)
        };
        if let Some(inv) = derive_points(p, *id, keep(Point::Entry), keep(Point::Cut)) {
            out.insert(*id, inv);
        }
    }
    (out, rejected)
}

struct Ctx<'a> {
    p: &'a Program,
    cands: &'a [Candidate],
    alive: &'a BTreeSet<usize>,
    havoc: &'a HashMap<LoopId, Vec<String>>,
}

impl Ctx<'_> {
    fn facts(&self, id: LoopId, point: Point) -> impl Iterator<Item = (usize, &Candidate)> {
        self.alive
            .iter()
            .map(|i| (*i, &self.cands[*i]))
            .filter(move |(_, c)| c.loop_id == id && c.point == point)
    }

    fn asserts(&self, id: LoopId, point: Point, loc: crate::ir::Loc, out: &mut Vec<Stmt>) {
        for (i, c) in self.facts(id, point) {
            out.push(Stmt::Assert {
                cond: c.expr.clone(),
                loc,
                kind: AssertKind::Candidate(i),
            });
        }
    }

    fn stmts(&self, ss: &[Stmt]) -> Vec<Stmt> {
        let int = self.p.widths.int();
        let mut out = Vec::new();
        for s in ss {
            match s {
                // Only candidate assertions are checked here.
                Stmt::Assert {
                    kind: AssertKind::User, ..
                } => {}
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
                Stmt::While { id, cond, body, loc } => {
                    self.asserts(*id, Point::Entry, *loc, &mut out);
                    for v in self.havoc.get(id).into_iter().flatten() {
                        let sym = self.p.symbols.get(v).expect("havoc variable is declared");
                        out.push(Stmt::Assign {
                            var: v.clone(),
                            value: Expr::nondet(sym.ty, nondet_name(&sym.type_name)),
                            loc: *loc,
                        });
                    }
                    for (_, c) in self.facts(*id, Point::Cut) {
                        out.push(Stmt::Assume {
                            cond: c.expr.clone(),
                            loc: *loc,
                            kind: AssumeKind::Invariant,
                        });
                    }
                    let mut b = self.stmts(body);
                    self.asserts(*id, Point::Cut, *loc, &mut b);
                    b.push(Stmt::Assume {
                        cond: Expr::constant(0, int),
                        loc: *loc,
                        kind: AssumeKind::Invariant,
                    });
                    out.push(Stmt::If {
                        cond: cond.clone(),
                        then_branch: b,
                        else_branch: Vec::new(),
                        loc: *loc,
                    });
                    out.push(Stmt::Assume {
                        cond: Expr::not(cond.clone(), int),
                        loc: *loc,
                        kind: AssumeKind::Invariant,
                    });
                }
                _ => out.push(s.clone()),
            }
        }
        out
    }
}
