//! Quantifier-free bit-vector terms with constant folding, evaluation and
//! SMT-LIB2 printing.

use crate::bv;
use crate::ir::{mask, BinOp, IntType};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Bool,
    Bv(u32),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::Bv(w) => write!(f, "(_ BitVec {w})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Not,
    And,
    Or,
    Ite,
    Eq,
    BvNeg,
    BvAdd,
    BvSub,
    BvMul,
    BvUDiv,
    BvSDiv,
    BvURem,
    BvSRem,
    BvUlt,
    BvUle,
    BvSlt,
    BvSle,
    ZeroExt(u32),
    SignExt(u32),
    Extract(u32, u32),
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Bool(bool),
    Bv(u128, u32),
    /// Free symbol or defined name.
    Var(String, Sort),
    App(Op, Vec<Term>, Sort),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term(Arc<Node>);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Bv(u128),
}

impl Value {
    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Bv(v) => v != 0,
        }
    }

    pub fn as_bv(self) -> u128 {
        match self {
            Value::Bool(b) => b as u128,
            Value::Bv(v) => v,
        }
    }
}

impl Term {
    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Identity of the shared node, for memoization.
    pub fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn sort(&self) -> Sort {
        match &*self.0 {
            Node::Bool(_) => Sort::Bool,
            Node::Bv(_, w) => Sort::Bv(*w),
            Node::Var(_, s) | Node::App(_, _, s) => *s,
        }
    }

    pub fn width(&self) -> u32 {
        match self.sort() {
            Sort::Bv(w) => w,
            Sort::Bool => panic!("width of a Bool term"),
        }
    }

    pub fn bool(b: bool) -> Term {
        Term(Arc::new(Node::Bool(b)))
    }

    pub fn bv(value: u128, width: u32) -> Term {
        Term(Arc::new(Node::Bv(value & mask(width), width)))
    }

    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term(Arc::new(Node::Var(name.into(), sort)))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match &*self.0 {
            Node::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_bv(&self) -> Option<u128> {
        match &*self.0 {
            Node::Bv(v, _) => Some(*v),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(&*self.0, Node::Bool(_) | Node::Bv(..))
    }

    fn app(op: Op, args: Vec<Term>, sort: Sort) -> Term {
        let t = Term(Arc::new(Node::App(op, args, sort)));
        if t.args().iter().all(|a| a.is_const()) {
            return match t.eval(&HashMap::new()) {
                Value::Bool(b) => Term::bool(b),
                Value::Bv(v) => Term::bv(v, sort_width(sort)),
            };
        }
        t
    }

    fn args(&self) -> &[Term] {
        match &*self.0 {
            Node::App(_, a, _) => a,
            _ => &[],
        }
    }

    pub fn not(a: Term) -> Term {
        if let Node::App(Op::Not, args, _) = &*a.0 {
            return args[0].clone();
        }
        Term::app(Op::Not, vec![a], Sort::Bool)
    }

    pub fn and(items: Vec<Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t.as_bool() {
                Some(false) => return Term::bool(false),
                Some(true) => {}
                None => {
                    if let Node::App(Op::And, inner, _) = &*t.0 {
                        out.extend(inner.iter().cloned());
                    } else {
                        out.push(t)
                    }
                }
            }
        }
        match out.len() {
            0 => Term::bool(true),
            1 => out.pop().unwrap(),
            _ => Term::app(Op::And, out, Sort::Bool),
        }
    }

    pub fn or(items: Vec<Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t.as_bool() {
                Some(true) => return Term::bool(true),
                Some(false) => {}
                None => {
                    if let Node::App(Op::Or, inner, _) = &*t.0 {
                        out.extend(inner.iter().cloned());
                    } else {
                        out.push(t)
                    }
                }
            }
        }
        match out.len() {
            0 => Term::bool(false),
            1 => out.pop().unwrap(),
            _ => Term::app(Op::Or, out, Sort::Bool),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::or(vec![Term::not(a), b])
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        match c.as_bool() {
            Some(true) => return t,
            Some(false) => return e,
            None => {}
        }
        if t == e {
            return t;
        }
        if t.sort() == Sort::Bool {
            match (t.as_bool(), e.as_bool()) {
                (Some(true), Some(false)) => return c,
                (Some(false), Some(true)) => return Term::not(c),
                _ => {}
            }
        }
        let s = t.sort();
        Term::app(Op::Ite, vec![c, t, e], s)
    }

    pub fn eq(a: Term, b: Term) -> Term {
        if a == b {
            return Term::bool(true);
        }
        Term::app(Op::Eq, vec![a, b], Sort::Bool)
    }

    pub fn bin(op: Op, a: Term, b: Term) -> Term {
        let sort = match op {
            Op::BvUlt | Op::BvUle | Op::BvSlt | Op::BvSle => Sort::Bool,
            _ => a.sort(),
        };
        Term::app(op, vec![a, b], sort)
    }

    pub fn neg(a: Term) -> Term {
        let s = a.sort();
        Term::app(Op::BvNeg, vec![a], s)
    }

    /// Resize a bit-vector term between the given types.
    pub fn convert(a: Term, from: IntType, to: IntType) -> Term {
        match to.width.cmp(&from.width) {
            std::cmp::Ordering::Equal => a,
            std::cmp::Ordering::Greater => {
                let n = to.width - from.width;
                let op = if from.signed {
                    Op::SignExt(n)
                } else {
                    Op::ZeroExt(n)
                };
                Term::app(op, vec![a], Sort::Bv(to.width))
            }
            std::cmp::Ordering::Less => {
                Term::app(Op::Extract(to.width - 1, 0), vec![a], Sort::Bv(to.width))
            }
        }
    }

    /// Operator application following the source-level semantics of `op` on
    /// operands of type `ty`. Division is left to the caller.
    pub fn source_binop(op: BinOp, ty: IntType, a: Term, b: Term) -> Term {
        let s = ty.signed;
        match op {
            BinOp::Add => Term::bin(Op::BvAdd, a, b),
            BinOp::Sub => Term::bin(Op::BvSub, a, b),
            BinOp::Mul => Term::bin(Op::BvMul, a, b),
            BinOp::Div => Term::bin(if s { Op::BvSDiv } else { Op::BvUDiv }, a, b),
            BinOp::Rem => Term::bin(if s { Op::BvSRem } else { Op::BvURem }, a, b),
            BinOp::Lt => Term::bin(if s { Op::BvSlt } else { Op::BvUlt }, a, b),
            BinOp::Le => Term::bin(if s { Op::BvSle } else { Op::BvUle }, a, b),
            BinOp::Gt => Term::bin(if s { Op::BvSlt } else { Op::BvUlt }, b, a),
            BinOp::Ge => Term::bin(if s { Op::BvSle } else { Op::BvUle }, b, a),
            BinOp::Eq => Term::eq(a, b),
            BinOp::Ne => Term::not(Term::eq(a, b)),
            BinOp::And => Term::and(vec![a, b]),
            BinOp::Or => Term::or(vec![a, b]),
        }
    }

    /// Evaluates under an environment of free-symbol and definition values.
    /// Missing symbols evaluate to zero.
    pub fn eval(&self, env: &HashMap<String, Value>) -> Value {
        match &*self.0 {
            Node::Bool(b) => Value::Bool(*b),
            Node::Bv(v, _) => Value::Bv(*v),
            Node::Var(n, s) => env.get(n).copied().unwrap_or(match s {
                Sort::Bool => Value::Bool(false),
                Sort::Bv(_) => Value::Bv(0),
            }),
            Node::App(op, args, sort) => {
                let bvw = |t: &Term| IntType::new(t.width(), false);
                let sbw = |t: &Term| IntType::new(t.width(), true);
                match op {
                    Op::Not => Value::Bool(!args[0].eval(env).as_bool()),
                    Op::And => Value::Bool(args.iter().all(|a| a.eval(env).as_bool())),
                    Op::Or => Value::Bool(args.iter().any(|a| a.eval(env).as_bool())),
                    Op::Ite => {
                        if args[0].eval(env).as_bool() {
                            args[1].eval(env)
                        } else {
                            args[2].eval(env)
                        }
                    }
                    Op::Eq => Value::Bool(args[0].eval(env) == args[1].eval(env)),
                    Op::BvNeg => Value::Bv(bv::unop(crate::ir::UnOp::Neg, bvw(&args[0]), args[0].eval(env).as_bv())),
                    Op::ZeroExt(_) => Value::Bv(args[0].eval(env).as_bv()),
                    Op::SignExt(_) => Value::Bv(bv::cast(
                        sbw(&args[0]),
                        IntType::new(sort_width(*sort), true),
                        args[0].eval(env).as_bv(),
                    )),
                    Op::Extract(hi, lo) => {
                        Value::Bv((args[0].eval(env).as_bv() >> lo) & mask(hi - lo + 1))
                    }
                    _ => {
                        let a = args[0].eval(env).as_bv();
                        let b = args[1].eval(env).as_bv();
                        let w = args[0].width();
                        let (bop, signed) = match op {
                            Op::BvAdd => (BinOp::Add, false),
                            Op::BvSub => (BinOp::Sub, false),
                            Op::BvMul => (BinOp::Mul, false),
                            Op::BvUDiv => (BinOp::Div, false),
                            Op::BvSDiv => (BinOp::Div, true),
                            Op::BvURem => (BinOp::Rem, false),
                            Op::BvSRem => (BinOp::Rem, true),
                            Op::BvUlt => (BinOp::Lt, false),
                            Op::BvUle => (BinOp::Le, false),
                            Op::BvSlt => (BinOp::Lt, true),
                            Op::BvSle => (BinOp::Le, true),
                            _ => unreachable!(),
                        };
                        let ty = IntType::new(w, signed);
                        let r = match bv::binop(bop, ty, a, b) {
                            Some(r) => r,
                            // SMT-LIB total semantics for division by zero.
                            None => smt_div_by_zero(op, ty, a),
                        };
                        if *sort == Sort::Bool {
                            Value::Bool(r != 0)
                        } else {
                            Value::Bv(r)
                        }
                    }
                }
            }
        }
    }

    /// Free and defined names referenced by the term.
    pub fn names(&self, out: &mut Vec<String>) {
        match &*self.0 {
            Node::Var(n, _) => {
                if !out.contains(n) {
                    out.push(n.clone())
                }
            }
            Node::App(_, args, _) => args.iter().for_each(|a| a.names(out)),
            _ => {}
        }
    }
}

fn sort_width(s: Sort) -> u32 {
    match s {
        Sort::Bv(w) => w,
        Sort::Bool => 1,
    }
}

fn smt_div_by_zero(op: &Op, ty: IntType, a: u128) -> u128 {
    match op {
        Op::BvUDiv => ty.mask(),
        Op::BvSDiv => {
            if ty.to_math(a) < 0 {
                1
            } else {
                ty.mask()
            }
        }
        _ => a,
    }
}

/// SMT-LIB symbol, quoted when it is not a plain identifier.
pub fn smt_symbol(name: &str) -> String {
    let plain = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if plain {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub fn bv_literal(v: u128, w: u32) -> String {
    if w.is_multiple_of(4) {
        format!("#x{:0width$x}", v, width = (w / 4) as usize)
    } else {
        format!("#b{:0width$b}", v, width = w as usize)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Bool(b) => write!(f, "{b}"),
            Node::Bv(v, w) => write!(f, "{}", bv_literal(*v, *w)),
            Node::Var(n, _) => write!(f, "{}", smt_symbol(n)),
            Node::App(op, args, _) => {
                let name = match op {
                    Op::Not => "not".to_string(),
                    Op::And => "and".to_string(),
                    Op::Or => "or".to_string(),
                    Op::Ite => "ite".to_string(),
                    Op::Eq => "=".to_string(),
                    Op::BvNeg => "bvneg".to_string(),
                    Op::BvAdd => "bvadd".to_string(),
                    Op::BvSub => "bvsub".to_string(),
                    Op::BvMul => "bvmul".to_string(),
                    Op::BvUDiv => "bvudiv".to_string(),
                    Op::BvSDiv => "bvsdiv".to_string(),
                    Op::BvURem => "bvurem".to_string(),
                    Op::BvSRem => "bvsrem".to_string(),
                    Op::BvUlt => "bvult".to_string(),
                    Op::BvUle => "bvule".to_string(),
                    Op::BvSlt => "bvslt".to_string(),
                    Op::BvSle => "bvsle".to_string(),
                    Op::ZeroExt(n) => format!("(_ zero_extend {n})"),
                    Op::SignExt(n) => format!("(_ sign_extend {n})"),
                    Op::Extract(h, l) => format!("(_ extract {h} {l})"),
                };
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let x = Term::var("x", Sort::Bv(4));
        assert_eq!(Term::bin(Op::BvAdd, Term::bv(7, 4), Term::bv(9, 4)), Term::bv(0, 4));
        assert_eq!(Term::and(vec![Term::bool(true), Term::bool(false)]), Term::bool(false));
        assert_eq!(Term::eq(x.clone(), x.clone()), Term::bool(true));
        assert_eq!(Term::ite(Term::bool(true), x.clone(), Term::bv(0, 4)), x);
        assert_eq!(
            Term::convert(Term::bv(15, 4), IntType::new(4, true), IntType::new(8, true)),
            Term::bv(0xff, 8)
        );
    }

    #[test]
    fn printing() {
        let x = Term::var("n_1", Sort::Bv(32));
        let t = Term::bin(Op::BvUlt, Term::bv(1, 32), x);
        assert_eq!(t.to_string(), "(bvult #x00000001 n_1)");
        assert_eq!(smt_symbol("nondet!1"), "|nondet!1|");
        assert_eq!(bv_literal(5, 4), "#x5");
        assert_eq!(bv_literal(5, 3), "#b101");
    }
}
