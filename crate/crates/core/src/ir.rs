//! Typed intermediate representation shared by every pass: integer types,
//! typed expressions, the symbol table and the structured statement form
//! that loop transformations operate on.

use std::collections::HashMap;
use std::fmt;

/// Source position, 1-based. `Loc::NONE` marks synthesized code.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub const NONE: Loc = Loc { line: 0, col: 0 };

    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }

    pub fn is_none(&self) -> bool {
        self.line == 0
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Fixed-width two's-complement integer type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntType {
    pub width: u32,
    pub signed: bool,
}

impl IntType {
    /// Widest type the IR can represent; only used internally for exact
    /// evaluation of invariant constraints.
    pub const MAX_WIDTH: u32 = 128;

    pub const fn new(width: u32, signed: bool) -> Self {
        IntType { width, signed }
    }

    pub fn mask(&self) -> u128 {
        mask(self.width)
    }

    /// Reduce a mathematical value modulo 2^width.
    pub fn wrap(&self, value: i128) -> u128 {
        (value as u128) & self.mask()
    }

    /// Interpret a bit pattern of this type as a mathematical integer.
    pub fn to_math(&self, bits: u128) -> i128 {
        let bits = bits & self.mask();
        if self.signed && self.width < 128 && bits >> (self.width - 1) & 1 == 1 {
            (bits | !self.mask()) as i128
        } else {
            bits as i128
        }
    }

    pub fn min_value(&self) -> i128 {
        if self.signed {
            if self.width == 128 {
                i128::MIN
            } else {
                -(1i128 << (self.width - 1))
            }
        } else {
            0
        }
    }

    pub fn max_value(&self) -> i128 {
        match (self.signed, self.width) {
            (true, 128) => i128::MAX,
            (true, w) => (1i128 << (w - 1)) - 1,
            (false, w) if w >= 127 => i128::MAX,
            (false, w) => (1i128 << w) - 1,
        }
    }
}

impl fmt::Display for IntType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.signed { "i" } else { "u" }, self.width)
    }
}

pub fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// Bit widths assigned to the C integer type names.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Widths {
    pub char_bits: u32,
    pub short_bits: u32,
    pub int_bits: u32,
    pub long_bits: u32,
}

impl Default for Widths {
    fn default() -> Self {
        Widths {
            char_bits: 8,
            short_bits: 16,
            int_bits: 32,
            long_bits: 64,
        }
    }
}

impl Widths {
    pub const ALLOWED: [u32; 5] = [4, 8, 16, 32, 64];

    /// Widths with `int` and `long` overridden; `char` and `short` are
    /// clamped so they never exceed `int`.
    pub fn with_int_long(int_bits: u32, long_bits: u32) -> Result<Self, String> {
        for w in [int_bits, long_bits] {
            if !Self::ALLOWED.contains(&w) {
                return Err(format!("width {w} not in {:?}", Self::ALLOWED));
            }
        }
        if long_bits < int_bits {
            return Err(format!(
                "long width {long_bits} must not be smaller than int width {int_bits}"
            ));
        }
        Ok(Widths {
            char_bits: 8.min(int_bits),
            short_bits: 16.min(int_bits),
            int_bits,
            long_bits,
        })
    }

    /// Narrow widths used by the exhaustive oracle: `int` at `bits`, `long`
    /// at twice that (capped at 64).
    pub fn oracle(bits: u32) -> Result<Self, String> {
        Self::with_int_long(bits, (bits * 2).min(64))
    }

    pub fn int(&self) -> IntType {
        IntType::new(self.int_bits, true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// C binding strength, higher binds tighter.
    pub fn precedence(&self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_logical(&self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CastKind {
    /// Inserted by the type checker or by invariant instrumentation; not printed.
    Implicit,
    /// Written in the source with the given type spelling.
    Explicit(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    /// Bit pattern of `ty`.
    Const(u128),
    Var(String),
    /// Fresh nondeterministic value; the string is the intrinsic name used
    /// when printing (e.g. `nondet_uint`).
    Nondet(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cast(Box<Expr>, CastKind),
}

/// Typed expression. Arithmetic and comparison operands always share a
/// type (the checker inserts casts); logical operands need not.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: IntType,
}

impl Expr {
    pub fn constant(value: i128, ty: IntType) -> Expr {
        Expr {
            kind: ExprKind::Const(ty.wrap(value)),
            ty,
        }
    }

    pub fn var(name: impl Into<String>, ty: IntType) -> Expr {
        Expr {
            kind: ExprKind::Var(name.into()),
            ty,
        }
    }

    pub fn nondet(ty: IntType, name: impl Into<String>) -> Expr {
        Expr {
            kind: ExprKind::Nondet(name.into()),
            ty,
        }
    }

    pub fn unary(op: UnOp, e: Expr, ty: IntType) -> Expr {
        Expr {
            kind: ExprKind::Unary(op, Box::new(e)),
            ty,
        }
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr, ty: IntType) -> Expr {
        Expr {
            kind: ExprKind::Binary(op, Box::new(l), Box::new(r)),
            ty,
        }
    }

    pub fn cast(e: Expr, ty: IntType, kind: CastKind) -> Expr {
        if e.ty == ty && kind == CastKind::Implicit {
            return e;
        }
        Expr {
            kind: ExprKind::Cast(Box::new(e), kind),
            ty,
        }
    }

    /// Logical negation typed as `int`.
    pub fn not(e: Expr, int: IntType) -> Expr {
        Expr::unary(UnOp::Not, e, int)
    }

    pub fn and(l: Expr, r: Expr, int: IntType) -> Expr {
        Expr::binary(BinOp::And, l, r, int)
    }

    pub fn or(l: Expr, r: Expr, int: IntType) -> Expr {
        Expr::binary(BinOp::Or, l, r, int)
    }

    pub fn as_const(&self) -> Option<u128> {
        match self.kind {
            ExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_true_literal(&self) -> bool {
        matches!(self.kind, ExprKind::Const(v) if v != 0)
    }

    pub fn has_nondet(&self) -> bool {
        match &self.kind {
            ExprKind::Nondet(_) => true,
            ExprKind::Const(_) | ExprKind::Var(_) => false,
            ExprKind::Unary(_, e) | ExprKind::Cast(e, _) => e.has_nondet(),
            ExprKind::Binary(_, l, r) => l.has_nondet() || r.has_nondet(),
        }
    }

    /// Whether evaluation can consume an input: a nondet call, or a division
    /// or remainder whose divisor may be zero.
    pub fn may_draw(&self) -> bool {
        match &self.kind {
            ExprKind::Nondet(_) => true,
            ExprKind::Const(_) | ExprKind::Var(_) => false,
            ExprKind::Unary(_, e) | ExprKind::Cast(e, _) => e.may_draw(),
            ExprKind::Binary(op, l, r) => matches!(op, BinOp::Div | BinOp::Rem) || l.may_draw() || r.may_draw(),
        }
    }

    /// Variables read by the expression, in first-occurrence order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            ExprKind::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            ExprKind::Const(_) | ExprKind::Nondet(_) => {}
            ExprKind::Unary(_, e) | ExprKind::Cast(e, _) => e.collect_vars(out),
            ExprKind::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    fn prec(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary(op, _, _) => op.precedence(),
            ExprKind::Cast(e, CastKind::Implicit) => e.prec(),
            ExprKind::Unary(..) | ExprKind::Cast(..) => 7,
            _ => 8,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.prec();
        let paren = p < min;
        if paren {
            write!(f, "(")?;
        }
        match &self.kind {
            ExprKind::Const(v) => write!(f, "{}", self.ty.to_math(*v))?,
            ExprKind::Var(v) => write!(f, "{v}")?,
            ExprKind::Nondet(name) => write!(f, "{name}()")?,
            ExprKind::Unary(op, e) => {
                write!(f, "{}", if *op == UnOp::Neg { "-" } else { "!" })?;
                e.fmt_prec(f, 7)?;
            }
            ExprKind::Cast(e, CastKind::Implicit) => e.fmt_prec(f, min.max(p))?,
            ExprKind::Cast(e, CastKind::Explicit(name)) => {
                write!(f, "({name})")?;
                e.fmt_prec(f, 7)?;
            }
            ExprKind::Binary(op, l, r) => {
                l.fmt_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_prec(f, p + 1)?;
            }
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub ty: IntType,
    /// Type as spelled for printing, e.g. `long long int`.
    pub type_name: String,
    pub is_const: bool,
}

/// Variables of the (single) entry function, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    index: HashMap<String, usize>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sym: Symbol) -> usize {
        if let Some(&i) = self.index.get(&sym.name) {
            return i;
        }
        let i = self.symbols.len();
        self.index.insert(sym.name.clone(), i);
        self.symbols.push(sym);
        i
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.index.get(name).map(|&i| &self.symbols[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn ty(&self, name: &str) -> IntType {
        self.get(name)
            .map(|s| s.ty)
            .unwrap_or_else(|| panic!("unknown variable {name}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter()
    }

    pub fn names(&self) -> Vec<String> {
        self.symbols.iter().map(|s| s.name.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Sort names by declaration order.
    pub fn sort_names(&self, names: &mut [String]) {
        names.sort_by_key(|n| self.position(n).unwrap_or(usize::MAX));
    }
}

pub type LoopId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssumeKind {
    User,
    /// Inferred invariant inserted by instrumentation.
    Invariant,
    /// Negated loop guard after an unrolled loop (base case, inductive step).
    Unwinding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssertKind {
    User,
    /// Negated loop guard after an unrolled loop (forward condition, BMC).
    Unwinding,
    /// Candidate invariant constraint being validated.
    Candidate(usize),
}

/// Trace bookkeeping markers; no semantics, ignored by printers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mark {
    LoopEntry(LoopId),
    IterationEnd(LoopId, usize),
}

/// Structured statement form: only `while` loops remain after lowering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    /// `init == None` declares the variable with a nondeterministic value.
    Decl {
        var: String,
        init: Option<Expr>,
        loc: Loc,
    },
    Assign {
        var: String,
        value: Expr,
        loc: Loc,
    },
    Assume {
        cond: Expr,
        loc: Loc,
        kind: AssumeKind,
    },
    Assert {
        cond: Expr,
        loc: Loc,
        kind: AssertKind,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
        loc: Loc,
    },
    While {
        id: LoopId,
        cond: Expr,
        body: Vec<Stmt>,
        loc: Loc,
    },
    /// `sv[slot] = cs` for the loop's state record.
    SaveState { loop_id: LoopId, slot: usize },
    /// `cs.v = v` for every field of the loop's state record.
    UpdateState { loop_id: LoopId },
    /// `assume(sv[slot] != cs)`: some field differs.
    AssumeNewState { loop_id: LoopId, slot: usize },
    Mark(Mark),
}

impl Stmt {
    /// Variables assigned anywhere inside the statement (including nested loops).
    pub fn assigned_vars(stmts: &[Stmt], out: &mut Vec<String>) {
        for s in stmts {
            match s {
                Stmt::Decl { var, .. } | Stmt::Assign { var, .. } => {
                    if !out.contains(var) {
                        out.push(var.clone());
                    }
                }
                Stmt::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    Self::assigned_vars(then_branch, out);
                    Self::assigned_vars(else_branch, out);
                }
                Stmt::While { body, .. } => Self::assigned_vars(body, out),
                _ => {}
            }
        }
    }

    /// Variables read or written anywhere inside the statements.
    pub fn used_vars(stmts: &[Stmt], out: &mut Vec<String>) {
        let add = |vs: Vec<String>, out: &mut Vec<String>| {
            for v in vs {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        for s in stmts {
            match s {
                Stmt::Decl { var, init, .. } => {
                    add(vec![var.clone()], out);
                    if let Some(e) = init {
                        add(e.vars(), out);
                    }
                }
                Stmt::Assign { var, value, .. } => {
                    add(vec![var.clone()], out);
                    add(value.vars(), out);
                }
                Stmt::Assume { cond, .. } | Stmt::Assert { cond, .. } => add(cond.vars(), out),
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    ..
                } => {
                    add(cond.vars(), out);
                    Self::used_vars(then_branch, out);
                    Self::used_vars(else_branch, out);
                }
                Stmt::While { cond, body, .. } => {
                    add(cond.vars(), out);
                    Self::used_vars(body, out);
                }
                _ => {}
            }
        }
    }

    /// Visit every `while` loop in pre-order.
    pub fn visit_loops<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
        for s in stmts {
            match s {
                Stmt::While { body, .. } => {
                    f(s);
                    Self::visit_loops(body, f);
                }
                Stmt::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    Self::visit_loops(then_branch, f);
                    Self::visit_loops(else_branch, f);
                }
                _ => {}
            }
        }
    }
}

/// Bookkeeping record of one loop in the inductive step: the `statet`
/// fields (the loop's havoc set) and the number of state-vector slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVectorSpec {
    pub loop_id: LoopId,
    pub fields: Vec<String>,
    pub slots: usize,
}

impl StateVectorSpec {
    /// Names used in dumps; the first loop gets the bare names.
    pub fn names(&self) -> (String, String, String) {
        if self.loop_id == 0 {
            ("statet".into(), "cs".into(), "sv".into())
        } else {
            let i = self.loop_id;
            (format!("statet{i}"), format!("cs{i}"), format!("sv{i}"))
        }
    }
}

/// A whole program in structured form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub symbols: SymbolTable,
    pub widths: Widths,
    pub body: Vec<Stmt>,
    /// Present only in inductive-step programs.
    pub state_vectors: Vec<StateVectorSpec>,
}

impl Program {
    pub fn state_vector(&self, loop_id: LoopId) -> &StateVectorSpec {
        self.state_vectors
            .iter()
            .find(|s| s.loop_id == loop_id)
            .unwrap_or_else(|| panic!("no state vector for loop {loop_id}"))
    }

    pub fn with_body(&self, body: Vec<Stmt>) -> Program {
        Program {
            symbols: self.symbols.clone(),
            widths: self.widths,
            body,
            state_vectors: self.state_vectors.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_and_math_roundtrip() {
        let u4 = IntType::new(4, false);
        let i4 = IntType::new(4, true);
        assert_eq!(u4.wrap(-1), 15);
        assert_eq!(i4.to_math(15), -1);
        assert_eq!(i4.to_math(7), 7);
        assert_eq!(u4.to_math(15), 15);
        assert_eq!(i4.min_value(), -8);
        assert_eq!(u4.max_value(), 15);
        let i128t = IntType::new(128, true);
        assert_eq!(i128t.to_math(i128t.wrap(-5)), -5);
    }

    #[test]
    fn printing_hides_implicit_casts() {
        let i = IntType::new(32, true);
        let l = IntType::new(64, true);
        let e = Expr::binary(
            BinOp::Le,
            Expr::cast(Expr::var("n", i), l, CastKind::Implicit),
            Expr::binary(BinOp::Add, Expr::var("x", l), Expr::constant(1, l), l),
            i,
        );
        assert_eq!(e.to_string(), "n <= x + 1");
        let m = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::var("a", i), Expr::var("b", i), i),
            Expr::var("c", i),
            i,
        );
        assert_eq!(m.to_string(), "(a + b) * c");
    }

    #[test]
    fn widths_validation() {
        assert!(Widths::with_int_long(4, 8).is_ok());
        assert!(Widths::with_int_long(5, 8).is_err());
        assert!(Widths::with_int_long(32, 16).is_err());
        assert_eq!(Widths::oracle(4).unwrap().long_bits, 8);
    }
}
