//! Turning polyhedra into `assume` statements of the program.

use super::linear::{Constraint, Rel};
use super::polyhedron::Polyhedron;
use super::propagate::Invariants;
use crate::ir::{AssumeKind, BinOp, CastKind, Expr, IntType, Loc, Program, Stmt, SymbolTable};

/// Signed type wide enough that evaluating `c` cannot wrap.
fn wide_type(c: &Constraint, syms: &SymbolTable) -> Option<IntType> {
    let mut bound: u128 = c.expr.constant.unsigned_abs();
    for (v, k) in &c.expr.coeffs {
        let ty = syms.get(v)?.ty;
        let mag = ty.min_value().unsigned_abs().max(ty.max_value().unsigned_abs());
        bound = bound.checked_add(k.unsigned_abs().checked_mul(mag)?)?;
    }
    // Both sides stay below 2^(w-1) in magnitude.
    let bits = 128 - bound.leading_zeros() + 2;
    (bits <= 128).then(|| IntType::new(bits, true))
}

/// `c` as a C expression in source-like form (`2 * j <= 5 * t - 1`), or
/// `None` if it mentions non-program variables or is too wide to encode.
pub fn constraint_expr(c: &Constraint, syms: &SymbolTable, int: IntType) -> Option<Expr> {
    let w = wide_type(c, syms)?;
    let mut terms: Vec<(&String, i128)> = c.expr.coeffs.iter().map(|(v, k)| (v, *k)).collect();
    terms.sort_by_key(|(v, _)| syms.position(v));
    let term = |v: &str, k: i128| -> Expr {
        let var = Expr::cast(Expr::var(v, syms.ty(v)), w, CastKind::Implicit);
        if k == 1 {
            var
        } else {
            Expr::binary(BinOp::Mul, Expr::constant(k, w), var, w)
        }
    };
    let side = |ts: &[(&String, i128)], k: i128| -> Expr {
        let mut e: Option<Expr> = None;
        for (v, c) in ts {
            let t = term(v, *c);
            e = Some(match e {
                None => t,
                Some(acc) => Expr::binary(BinOp::Add, acc, t, w),
            });
        }
        match e {
            None => Expr::constant(k, w),
            Some(acc) if k > 0 => Expr::binary(BinOp::Add, acc, Expr::constant(k, w), w),
            Some(acc) if k < 0 => Expr::binary(BinOp::Sub, acc, Expr::constant(-k, w), w),
            Some(acc) => acc,
        }
    };
    let mut lhs: Vec<(&String, i128)> = terms.iter().filter(|(_, k)| *k > 0).cloned().collect();
    let mut rhs: Vec<(&String, i128)> = terms.iter().filter(|(_, k)| *k < 0).map(|(v, k)| (*v, -k)).collect();
    if c.rel == Rel::Eq && lhs.is_empty() {
        std::mem::swap(&mut lhs, &mut rhs);
    }
    let k = c.expr.constant;
    let op = match c.rel {
        Rel::Le => BinOp::Le,
        Rel::Eq => BinOp::Eq,
    };
    let (l, r) = if rhs.is_empty() {
        (side(&lhs, 0), Expr::constant(-k, w))
    } else if lhs.is_empty() {
        (Expr::constant(k, w), side(&rhs, 0))
    } else {
        (side(&lhs, 0), side(&rhs, -k))
    };
    Some(Expr::binary(op, l, r, int))
}

/// Conjunction of the expressible constraints of `p`; `None` for Top.
pub fn polyhedron_expr(p: &Polyhedron, syms: &SymbolTable, int: IntType) -> Option<Expr> {
    if p.is_bottom() {
        return Some(Expr::constant(0, int));
    }
    let mut cs: Vec<&Constraint> = p.constraints().iter().collect();
    cs.sort_by_key(|c| {
        let mut pos: Vec<usize> = c.expr.coeffs.keys().filter_map(|v| syms.position(v)).collect();
        pos.sort();
        (pos, c.rel)
    });
    cs.into_iter()
        .filter_map(|c| constraint_expr(c, syms, int))
        .reduce(|a, b| Expr::and(a, b, int))
}

fn assume(e: Option<Expr>, loc: Loc, out: &mut Vec<Stmt>) {
    if let Some(cond) = e {
        out.push(Stmt::Assume {
            cond,
            loc,
            kind: AssumeKind::Invariant,
        });
    }
}

/// Inserts each loop's entry, head and exit facts as assumes before the
/// loop, at the top of its body and right after it.
pub fn instrument(p: &Program, invs: &Invariants) -> Program {
    let body = stmts(p, invs, &p.body);
    p.with_body(body)
}

fn stmts(p: &Program, invs: &Invariants, ss: &[Stmt]) -> Vec<Stmt> {
    let int = p.widths.int();
    let mut out = Vec::new();
    for s in ss {
        match s {
            Stmt::While { id, cond, body, loc } => {
                let inner = stmts(p, invs, body);
                match invs.get(id) {
                    Some(inv) => {
                        assume(polyhedron_expr(&inv.entry, &p.symbols, int), *loc, &mut out);
                        let mut b = Vec::new();
                        assume(polyhedron_expr(&inv.head, &p.symbols, int), *loc, &mut b);
                        b.extend(inner);
                        out.push(Stmt::While {
                            id: *id,
                            cond: cond.clone(),
                            body: b,
                            loc: *loc,
                        });
                        assume(polyhedron_expr(&inv.exit, &p.symbols, int), *loc, &mut out);
                    }
                    None => out.push(Stmt::While {
                        id: *id,
                        cond: cond.clone(),
                        body: inner,
                        loc: *loc,
                    }),
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                loc,
            } => out.push(Stmt::If {
                cond: cond.clone(),
                then_branch: stmts(p, invs, then_branch),
                else_branch: stmts(p, invs, else_branch),
                loc: *loc,
            }),
            _ => out.push(s.clone()),
        }
    }
    out
}
