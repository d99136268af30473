//! Straight-line compiled form of a VC for fast repeated evaluation (model
//! checking and exhaustive enumeration).

use super::term::{Node, Op, Sort, Term};
use super::Vc;
use crate::bv;
use crate::ir::{mask, BinOp, IntType, UnOp};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug)]
enum Operand {
    Slot(usize),
    Const(u128),
}

#[derive(Clone, Debug)]
struct Ins {
    op: Op,
    args: Vec<Operand>,
    /// Width of the first operand (bit-vector ops) or of the result (`ite`).
    width: u32,
    out_width: u32,
}

/// Slots `0..free.len()` hold the free symbols; the rest are computed in
/// order.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub free: Vec<(String, u32)>,
    code: Vec<(usize, Ins)>,
    slots: usize,
    names: HashMap<String, Operand>,
    query: Operand,
}

impl Compiled {
    pub fn new(vc: &Vc) -> Compiled {
        let mut c = Compiler {
            names: HashMap::new(),
            memo: HashMap::new(),
            code: Vec::new(),
            slots: 0,
        };
        let mut free = Vec::new();
        for (n, s) in &vc.free {
            let w = match s {
                Sort::Bv(w) => *w,
                Sort::Bool => 1,
            };
            free.push((n.clone(), w));
            let slot = c.slots;
            c.slots += 1;
            c.names.insert(n.clone(), Operand::Slot(slot));
        }
        for d in &vc.defs {
            let o = c.compile(&d.term);
            c.names.insert(d.name.clone(), o);
        }
        let query = c.compile(&vc.query);
        Compiled {
            free,
            code: c.code,
            slots: c.slots,
            names: c.names,
            query,
        }
    }

    /// Evaluates every slot for the given free-symbol values (by position).
    pub fn run(&self, free_values: &[u128], slots: &mut Vec<u128>) -> bool {
        slots.clear();
        slots.resize(self.slots, 0);
        for (i, (_, w)) in self.free.iter().enumerate() {
            slots[i] = free_values.get(i).copied().unwrap_or(0) & mask(*w);
        }
        for (out, ins) in &self.code {
            slots[*out] = exec(ins, slots);
        }
        get(self.query, slots) != 0
    }

    /// Value of a free symbol or definition after [`Compiled::run`].
    pub fn value(&self, name: &str, slots: &[u128]) -> Option<u128> {
        self.names.get(name).map(|o| get(*o, slots))
    }

    /// Free-symbol values from a model, in slot order; missing ones are 0.
    pub fn free_values(&self, model: &HashMap<String, u128>) -> Vec<u128> {
        self.free
            .iter()
            .map(|(n, _)| model.get(n).copied().unwrap_or(0))
            .collect()
    }
}

fn get(o: Operand, slots: &[u128]) -> u128 {
    match o {
        Operand::Slot(i) => slots[i],
        Operand::Const(v) => v,
    }
}

fn exec(ins: &Ins, slots: &[u128]) -> u128 {
    let a = |i: usize| get(ins.args[i], slots);
    let w = ins.width;
    match ins.op {
        Op::Not => (a(0) == 0) as u128,
        Op::And => ins.args.iter().all(|o| get(*o, slots) != 0) as u128,
        Op::Or => ins.args.iter().any(|o| get(*o, slots) != 0) as u128,
        Op::Ite => {
            if a(0) != 0 {
                a(1)
            } else {
                a(2)
            }
        }
        Op::Eq => (a(0) == a(1)) as u128,
        Op::BvNeg => bv::unop(UnOp::Neg, IntType::new(w, false), a(0)),
        Op::ZeroExt(_) => a(0),
        Op::SignExt(_) => bv::cast(IntType::new(w, true), IntType::new(ins.out_width, true), a(0)),
        Op::Extract(hi, lo) => (a(0) >> lo) & mask(hi - lo + 1),
        op => {
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
            match bv::binop(bop, ty, a(0), a(1)) {
                Some(r) => r,
                None => {
                    // SMT-LIB total semantics; only reachable from guarded
                    // branches whose value is discarded.
                    let t = Term::bin(op, Term::bv(a(0), w), Term::bv(0, w));
                    t.as_bv().unwrap_or(0)
                }
            }
        }
    }
}

struct Compiler {
    names: HashMap<String, Operand>,
    memo: HashMap<usize, Operand>,
    code: Vec<(usize, Ins)>,
    slots: usize,
}

impl Compiler {
    fn compile(&mut self, t: &Term) -> Operand {
        if let Some(o) = self.memo.get(&t.ptr_id()) {
            return *o;
        }
        let o = match t.node() {
            Node::Bool(b) => Operand::Const(*b as u128),
            Node::Bv(v, _) => Operand::Const(*v),
            Node::Var(n, _) => *self
                .names
                .get(n)
                .unwrap_or_else(|| panic!("undefined name {n} in VC")),
            Node::App(op, args, sort) => {
                let ops: Vec<Operand> = args.iter().map(|a| self.compile(a)).collect();
                let width = match op {
                    Op::Ite => match sort {
                        Sort::Bv(w) => *w,
                        Sort::Bool => 1,
                    },
                    Op::Not | Op::And | Op::Or => 1,
                    _ => match args[0].sort() {
                        Sort::Bv(w) => w,
                        Sort::Bool => 1,
                    },
                };
                let out_width = match sort {
                    Sort::Bv(w) => *w,
                    Sort::Bool => 1,
                };
                let slot = self.slots;
                self.slots += 1;
                self.code.push((
                    slot,
                    Ins {
                        op: *op,
                        args: ops,
                        width,
                        out_width,
                    },
                ));
                Operand::Slot(slot)
            }
        };
        self.memo.insert(t.ptr_id(), o);
        o
    }
}
