//! Affine transformers: relations between the pre-state (`v#init`) and the
//! post-state (`v`) of a statement.

use super::linear::{Constraint, LinExpr};
use super::polyhedron::Polyhedron;
use crate::ir::{BinOp, CastKind, Expr, ExprKind, IntType, Stmt, SymbolTable, UnOp};
use std::collections::BTreeSet;

pub fn init_name(v: &str) -> String {
    format!("{v}#init")
}

fn mid_name(v: &str) -> String {
    format!("{v}#mid")
}

/// `rel` relates `v#init` to `v` for each variable in `modified`; any other
/// variable it mentions is unchanged and denotes both its pre and post value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineTransformer {
    pub modified: BTreeSet<String>,
    pub rel: Polyhedron,
}

impl AffineTransformer {
    pub fn identity() -> AffineTransformer {
        AffineTransformer {
            modified: BTreeSet::new(),
            rel: Polyhedron::top(),
        }
    }

    /// `target := value`, with `None` for a value the domain cannot express.
    pub fn assign(target: &str, value: Option<&LinExpr>) -> AffineTransformer {
        let rel = match value {
            Some(e) => {
                let pre = e.rename(&|v| if v == target { init_name(v) } else { v.to_string() });
                match LinExpr::var(target).sub(&pre) {
                    Some(d) => Polyhedron::from_constraints([Constraint::eq(d)]),
                    None => Polyhedron::top(),
                }
            }
            None => Polyhedron::top(),
        };
        AffineTransformer {
            modified: [target.to_string()].into_iter().collect(),
            rel,
        }
    }

    /// Keeps states satisfying `guard`, changing nothing.
    pub fn filter(guard: Polyhedron) -> AffineTransformer {
        AffineTransformer {
            modified: BTreeSet::new(),
            rel: guard,
        }
    }

    /// The relation with explicit frames `v = v#init` for every variable of
    /// `universe` this transformer does not modify.
    fn expand(&self, universe: &BTreeSet<String>) -> Polyhedron {
        let frames = universe.difference(&self.modified).filter_map(|v| {
            LinExpr::var(v.clone())
                .sub(&LinExpr::var(init_name(v)))
                .map(Constraint::eq)
        });
        self.rel.meet(frames)
    }

    /// `self` followed by `then`.
    pub fn compose(&self, then: &AffineTransformer) -> AffineTransformer {
        let m: BTreeSet<String> = self.modified.union(&then.modified).cloned().collect();
        let first = self
            .expand(&m)
            .rename(&|v| if m.contains(v) { mid_name(v) } else { v.to_string() });
        let second = then.expand(&m).rename(&|v| match v.strip_suffix("#init") {
            Some(base) if m.contains(base) => mid_name(base),
            _ => v.to_string(),
        });
        let mids: Vec<String> = m.iter().map(|v| mid_name(v)).collect();
        // A bottom relation has no constraints to meet with.
        let rel = if second.is_bottom() {
            Polyhedron::bottom()
        } else {
            first.meet(second.constraints().iter().cloned()).project(&mids)
        };
        AffineTransformer { modified: m, rel }
    }

    /// Image of `p`.
    pub fn apply(&self, p: &Polyhedron) -> Polyhedron {
        if p.is_bottom() || self.rel.is_bottom() {
            return Polyhedron::bottom();
        }
        let m = &self.modified;
        let pre = p.rename(&|v| if m.contains(v) { init_name(v) } else { v.to_string() });
        let inits: Vec<String> = m.iter().map(|v| init_name(v)).collect();
        pre.meet(self.rel.constraints().iter().cloned()).project(&inits)
    }

    /// Equality as relations over the union of modified variables.
    pub fn equivalent(&self, other: &AffineTransformer) -> bool {
        let m: BTreeSet<String> = self.modified.union(&other.modified).cloned().collect();
        self.expand(&m).equivalent(&other.expand(&m))
    }
}

/// Context for translating expressions: variable types, and optionally the
/// current state, which is used to prove that no intermediate result wraps.
pub struct Linearizer<'a> {
    pub symbols: &'a SymbolTable,
    pub state: Option<&'a Polyhedron>,
}

impl Linearizer<'_> {
    fn range(ty: IntType) -> (i128, i128) {
        (ty.min_value(), ty.max_value())
    }

    /// Whether `e` provably lies within `ty` in the current state. Without a
    /// state, arithmetic is taken to be mathematical.
    pub fn fits(&self, e: &LinExpr, ty: IntType) -> bool {
        let Some(state) = self.state else {
            return true;
        };
        let (lo, hi) = Self::range(ty);
        if let Some(c) = e.is_constant().then_some(e.constant) {
            return lo <= c && c <= hi;
        }
        // Other variables' ranges matter too: `sn <= 2*n` bounds `sn` only
        // through the range of `n`.
        let mut ranges = Vec::new();
        for v in e.coeffs.keys().chain(state.vars().iter()).collect::<std::collections::BTreeSet<_>>() {
            let Some(sym) = self.symbols.get(v) else {
                return false;
            };
            let (l, h) = Self::range(sym.ty);
            ranges.push(Constraint::le(LinExpr::constant(l).sub(&LinExpr::var(v.clone())).expect("in range")));
            ranges.push(Constraint::le(LinExpr::var(v.clone()).sub(&LinExpr::constant(h)).expect("in range")));
        }
        let (elo, ehi) = state.meet(ranges).bounds(e);
        matches!((elo, ehi), (Some(a), Some(b)) if lo <= a && b <= hi)
    }

    /// The mathematical value of `e`, provided it equals the machine value.
    /// The caller must check that the result fits the type of `e`.
    pub fn linearize(&self, e: &Expr) -> Option<LinExpr> {
        match &e.kind {
            ExprKind::Const(bits) => Some(LinExpr::constant(e.ty.to_math(*bits))),
            ExprKind::Var(v) => Some(LinExpr::var(v.clone())),
            ExprKind::Nondet(_) => None,
            ExprKind::Unary(UnOp::Neg, x) => self.linearize(x)?.scale(-1),
            ExprKind::Unary(UnOp::Not, _) => None,
            ExprKind::Binary(op, l, r) => {
                let (a, b) = (self.linearize(l)?, self.linearize(r)?);
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul if a.is_constant() => b.scale(a.constant),
                    BinOp::Mul if b.is_constant() => a.scale(b.constant),
                    _ => None,
                }
            }
            ExprKind::Cast(x, _) => {
                let inner = self.linearize(x)?;
                // Wrapping commutes with +, − and constant ×, and truncation
                // preserves it; widening needs the operand's exact value.
                if e.ty.width > x.ty.width && !matches!(x.kind, ExprKind::Var(_)) && !self.fits(&inner, x.ty) {
                    return None;
                }
                Some(inner)
            }
        }
    }

    /// `linearize` plus the final range check against the type of `e`.
    pub fn value(&self, e: &Expr) -> Option<LinExpr> {
        let l = self.linearize(e)?;
        self.fits(&l, e.ty).then_some(l)
    }

    /// States of `p` in which `cond` evaluates to `truth`.
    pub fn constrain(&self, p: &Polyhedron, cond: &Expr, truth: bool) -> Polyhedron {
        match &cond.kind {
            ExprKind::Const(v) => {
                if (*v != 0) == truth {
                    p.clone()
                } else {
                    Polyhedron::bottom()
                }
            }
            ExprKind::Unary(UnOp::Not, x) => self.constrain(p, x, !truth),
            ExprKind::Cast(x, CastKind::Implicit) if x.ty.width <= cond.ty.width => self.constrain(p, x, truth),
            ExprKind::Binary(BinOp::And, l, r) | ExprKind::Binary(BinOp::Or, l, r) => {
                let conj = matches!(cond.kind, ExprKind::Binary(BinOp::And, ..)) == truth;
                if conj {
                    let q = self.constrain(p, l, truth);
                    self.constrain(&q, r, truth)
                } else {
                    self.constrain(p, l, truth).join(&self.constrain(p, r, truth))
                }
            }
            ExprKind::Binary(op, l, r) if op.is_comparison() => {
                let (Some(a), Some(b)) = (self.value(l), self.value(r)) else {
                    return p.clone();
                };
                let op = if truth { *op } else { negate(*op) };
                let one = LinExpr::constant(1);
                let c = match op {
                    BinOp::Lt => a.sub(&b).and_then(|d| d.add(&one)).map(Constraint::le),
                    BinOp::Le => a.sub(&b).map(Constraint::le),
                    BinOp::Gt => b.sub(&a).and_then(|d| d.add(&one)).map(Constraint::le),
                    BinOp::Ge => b.sub(&a).map(Constraint::le),
                    BinOp::Eq => a.sub(&b).map(Constraint::eq),
                    _ => None,
                };
                match c {
                    Some(c) => p.meet([c]),
                    None => p.clone(),
                }
            }
            _ if !truth => {
                // A scalar tested for truth is false exactly when it is zero.
                match self.value(cond) {
                    Some(a) => p.meet([Constraint::eq(a)]),
                    None => p.clone(),
                }
            }
            _ => p.clone(),
        }
    }
}

fn negate(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Ge,
        BinOp::Le => BinOp::Gt,
        BinOp::Gt => BinOp::Le,
        BinOp::Ge => BinOp::Lt,
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        other => other,
    }
}

/// Transformer of a basic statement: exact for affine assignments and
/// conditions, unconstrained target otherwise. Loops and branches are not
/// basic statements and yield the identity.
pub fn transformer_of(stmt: &Stmt, lin: &Linearizer<'_>) -> AffineTransformer {
    match stmt {
        Stmt::Decl { var, init, .. } => {
            let v = init.as_ref().and_then(|e| lin.value(e));
            AffineTransformer::assign(var, v.as_ref())
        }
        Stmt::Assign { var, value, .. } => {
            let v = lin.value(value);
            AffineTransformer::assign(var, v.as_ref())
        }
        Stmt::Assume { cond, .. } => {
            AffineTransformer::filter(lin.constrain(&Polyhedron::top(), cond, true))
        }
        _ => AffineTransformer::identity(),
    }
}
