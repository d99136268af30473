//! Untyped syntax tree produced by the parser.

use crate::ir::{BinOp, Loc, UnOp};

/// C integer type keyword combination, before widths are assigned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseType {
    Char,
    Short,
    Int,
    Long,
    LongLong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TypeSpec {
    pub base: BaseType,
    pub unsigned: bool,
    pub is_const: bool,
}

impl TypeSpec {
    /// Canonical spelling, without qualifiers.
    pub fn name(&self) -> String {
        let base = match self.base {
            BaseType::Char => "char",
            BaseType::Short => "short",
            BaseType::Int => "int",
            BaseType::Long => "long",
            BaseType::LongLong => "long long int",
        };
        if self.unsigned {
            format!("unsigned {base}")
        } else {
            base.to_string()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    /// Literal value with its `u`/`l` suffix flags and radix (for typing).
    Int {
        value: u128,
        unsigned_suffix: bool,
        long_suffix: bool,
        decimal: bool,
    },
    Ident(String),
    /// Call to a nondeterministic intrinsic such as `nondet_uint`.
    Nondet(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cast(TypeSpec, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declarator {
    pub name: String,
    pub init: Option<Expr>,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl AssignOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Rem => "%=",
        }
    }

    pub fn binop(&self) -> Option<BinOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
            AssignOp::Rem => Some(BinOp::Rem),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Decl {
        ty: TypeSpec,
        items: Vec<Declarator>,
        loc: Loc,
    },
    Assign {
        target: String,
        op: AssignOp,
        value: Expr,
        loc: Loc,
    },
    /// `x++` / `x--` / `++x` / `--x` at statement level.
    Step {
        target: String,
        increment: bool,
        loc: Loc,
    },
    Assume {
        cond: Expr,
        loc: Loc,
    },
    Assert {
        cond: Expr,
        loc: Loc,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
        loc: Loc,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
        loc: Loc,
    },
    DoWhile {
        body: Box<Stmt>,
        cond: Expr,
        loc: Loc,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Box<Stmt>,
        loc: Loc,
    },
    Block(Vec<Stmt>, Loc),
    Empty(Loc),
    /// `return e;`, only accepted as the last statement of the entry function.
    Return(Option<Expr>, Loc),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MainParams {
    Empty,
    Void,
    ArgcArgv,
}

/// A whole translation unit: global declarations plus the entry function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub globals: Vec<Stmt>,
    pub returns_int: bool,
    pub params: MainParams,
    pub body: Vec<Stmt>,
}

impl SourceProgram {
    /// Copy with every location reset, for structural comparison.
    pub fn without_locs(&self) -> SourceProgram {
        SourceProgram {
            globals: self.globals.iter().map(strip_stmt).collect(),
            returns_int: self.returns_int,
            params: self.params,
            body: self.body.iter().map(strip_stmt).collect(),
        }
    }
}

fn strip_expr(e: &Expr) -> Expr {
    let kind = match &e.kind {
        ExprKind::Unary(op, x) => ExprKind::Unary(*op, Box::new(strip_expr(x))),
        ExprKind::Binary(op, l, r) => {
            ExprKind::Binary(*op, Box::new(strip_expr(l)), Box::new(strip_expr(r)))
        }
        ExprKind::Cast(t, x) => ExprKind::Cast(*t, Box::new(strip_expr(x))),
        k => k.clone(),
    };
    Expr {
        kind,
        loc: Loc::NONE,
    }
}

fn strip_stmt(s: &Stmt) -> Stmt {
    let n = Loc::NONE;
    let bx = |s: &Stmt| Box::new(strip_stmt(s));
    match s {
        Stmt::Decl { ty, items, .. } => Stmt::Decl {
            ty: *ty,
            items: items
                .iter()
                .map(|d| Declarator {
                    name: d.name.clone(),
                    init: d.init.as_ref().map(strip_expr),
                    loc: n,
                })
                .collect(),
            loc: n,
        },
        Stmt::Assign {
            target, op, value, ..
        } => Stmt::Assign {
            target: target.clone(),
            op: *op,
            value: strip_expr(value),
            loc: n,
        },
        Stmt::Step {
            target, increment, ..
        } => Stmt::Step {
            target: target.clone(),
            increment: *increment,
            loc: n,
        },
        Stmt::Assume { cond, .. } => Stmt::Assume {
            cond: strip_expr(cond),
            loc: n,
        },
        Stmt::Assert { cond, .. } => Stmt::Assert {
            cond: strip_expr(cond),
            loc: n,
        },
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => Stmt::If {
            cond: strip_expr(cond),
            then_branch: bx(then_branch),
            else_branch: else_branch.as_deref().map(bx),
            loc: n,
        },
        Stmt::While { cond, body, .. } => Stmt::While {
            cond: strip_expr(cond),
            body: bx(body),
            loc: n,
        },
        Stmt::DoWhile { body, cond, .. } => Stmt::DoWhile {
            body: bx(body),
            cond: strip_expr(cond),
            loc: n,
        },
        Stmt::For {
            init,
            cond,
            step,
            body,
            ..
        } => Stmt::For {
            init: init.as_deref().map(bx),
            cond: cond.as_ref().map(strip_expr),
            step: step.as_deref().map(bx),
            body: bx(body),
            loc: n,
        },
        Stmt::Block(b, _) => Stmt::Block(b.iter().map(strip_stmt).collect(), n),
        Stmt::Empty(_) => Stmt::Empty(n),
        Stmt::Return(e, _) => Stmt::Return(e.as_ref().map(strip_expr), n),
    }
}
