//! Type checking: resolves names to symbols, assigns widths, applies the C
//! integer conversions as explicit casts and lowers assignment sugar.

use super::ast::{self, BaseType, TypeSpec};
use super::parser::{nondet_intrinsic, nondet_name_for};
use super::FrontendError;
use crate::ir::{BinOp, CastKind, Expr, IntType, Loc, Symbol, SymbolTable, UnOp, Widths};
use std::collections::HashMap;

/// Typed statement tree. Keeps the source loop forms so that it can be
/// interpreted independently of lowering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TStmt {
    /// `init == None` means a nondeterministic initial value.
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
    },
    Assert {
        cond: Expr,
        loc: Loc,
    },
    If {
        cond: Expr,
        then_branch: Vec<TStmt>,
        else_branch: Vec<TStmt>,
        loc: Loc,
    },
    While {
        cond: Expr,
        body: Vec<TStmt>,
        loc: Loc,
    },
    DoWhile {
        body: Vec<TStmt>,
        cond: Expr,
        loc: Loc,
    },
    For {
        init: Vec<TStmt>,
        cond: Expr,
        step: Vec<TStmt>,
        body: Vec<TStmt>,
        loc: Loc,
    },
    Block(Vec<TStmt>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedProgram {
    pub symbols: SymbolTable,
    /// Global declarations followed by the entry function body.
    pub body: Vec<TStmt>,
    pub widths: Widths,
}

pub fn type_of_spec(ts: &TypeSpec, w: &Widths) -> IntType {
    let width = match ts.base {
        BaseType::Char => w.char_bits,
        BaseType::Short => w.short_bits,
        BaseType::Int => w.int_bits,
        BaseType::Long | BaseType::LongLong => w.long_bits,
    };
    IntType::new(width, !ts.unsigned)
}

/// Integer promotion with width as the rank proxy.
pub fn promote(t: IntType, w: &Widths) -> IntType {
    if t.width < w.int_bits {
        w.int()
    } else {
        t
    }
}

/// Common type of the usual arithmetic conversions.
pub fn common_type(a: IntType, b: IntType, w: &Widths) -> IntType {
    let (a, b) = (promote(a, w), promote(b, w));
    if a.width != b.width {
        if a.width > b.width {
            a
        } else {
            b
        }
    } else {
        IntType::new(a.width, a.signed && b.signed)
    }
}

pub fn typecheck(p: &ast::SourceProgram, widths: Widths) -> Result<TypedProgram, FrontendError> {
    let mut c = Checker {
        w: widths,
        symbols: SymbolTable::new(),
        specs: HashMap::new(),
        scopes: vec![Vec::new()],
    };
    let mut body = Vec::new();
    for g in &p.globals {
        c.stmt(g, true, &mut body)?;
    }
    c.scopes.push(Vec::new());
    for s in &p.body {
        c.stmt(s, false, &mut body)?;
    }
    Ok(TypedProgram {
        symbols: c.symbols,
        body,
        widths,
    })
}

struct Checker {
    w: Widths,
    symbols: SymbolTable,
    specs: HashMap<String, TypeSpec>,
    scopes: Vec<Vec<String>>,
}

impl Checker {
    fn visible(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.iter().any(|n| n == name))
    }

    fn declare(&mut self, name: &str, ts: TypeSpec, loc: Loc) -> Result<(), FrontendError> {
        if self.scopes.last().unwrap().iter().any(|n| n == name) {
            return Err(FrontendError::type_error(loc, format!("redeclaration of `{name}`")));
        }
        if self.visible(name) {
            return Err(FrontendError::unsupported(loc, "shadowed declaration"));
        }
        match self.specs.get(name) {
            Some(old) if *old != ts => {
                return Err(FrontendError::unsupported(
                    loc,
                    "redeclaration with a different type in another scope",
                ))
            }
            Some(_) => {}
            None => {
                self.specs.insert(name.to_string(), ts);
                self.symbols.insert(Symbol {
                    name: name.to_string(),
                    ty: type_of_spec(&ts, &self.w),
                    type_name: ts.name(),
                    is_const: ts.is_const,
                });
            }
        }
        self.scopes.last_mut().unwrap().push(name.to_string());
        Ok(())
    }

    fn lookup(&self, name: &str, loc: Loc) -> Result<IntType, FrontendError> {
        if !self.visible(name) {
            return Err(FrontendError::UnknownIdent {
                loc,
                name: name.to_string(),
            });
        }
        Ok(self.symbols.ty(name))
    }

    fn scoped<T>(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<T, FrontendError>,
    ) -> Result<T, FrontendError> {
        self.scopes.push(Vec::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    fn sub(&mut self, s: &ast::Stmt) -> Result<Vec<TStmt>, FrontendError> {
        self.scoped(|c| {
            let mut out = Vec::new();
            match s {
                ast::Stmt::Block(items, _) => {
                    for s in items {
                        c.stmt(s, false, &mut out)?;
                    }
                }
                _ => c.stmt(s, false, &mut out)?,
            }
            Ok(out)
        })
    }

    fn stmt(&mut self, s: &ast::Stmt, global: bool, out: &mut Vec<TStmt>) -> Result<(), FrontendError> {
        match s {
            ast::Stmt::Decl { ty, items, .. } => {
                let t = type_of_spec(ty, &self.w);
                for d in items {
                    // The initializer is checked before the name is in scope.
                    let init = match &d.init {
                        Some(e) => Some(self.convert(self.expr(e, Some(ty))?, t)),
                        None if global => Some(Expr::constant(0, t)),
                        None => None,
                    };
                    self.declare(&d.name, *ty, d.loc)?;
                    out.push(TStmt::Decl {
                        var: d.name.clone(),
                        init,
                        loc: d.loc,
                    });
                }
            }
            ast::Stmt::Assign {
                target,
                op,
                value,
                loc,
            } => {
                let (t, spec) = self.assignable(target, *loc)?;
                let rhs = self.expr(value, Some(&spec))?;
                let value = match op.binop() {
                    None => self.convert(rhs, t),
                    Some(bop) => {
                        let lhs = Expr::var(target.clone(), t);
                        self.convert(self.arith(bop, lhs, rhs), t)
                    }
                };
                out.push(TStmt::Assign {
                    var: target.clone(),
                    value,
                    loc: *loc,
                });
            }
            ast::Stmt::Step {
                target,
                increment,
                loc,
            } => {
                let (t, _) = self.assignable(target, *loc)?;
                let op = if *increment { BinOp::Add } else { BinOp::Sub };
                let value = self.arith(op, Expr::var(target.clone(), t), Expr::constant(1, self.w.int()));
                out.push(TStmt::Assign {
                    var: target.clone(),
                    value: self.convert(value, t),
                    loc: *loc,
                });
            }
            ast::Stmt::Assume { cond, loc } => out.push(TStmt::Assume {
                cond: self.expr(cond, None)?,
                loc: *loc,
            }),
            ast::Stmt::Assert { cond, loc } => out.push(TStmt::Assert {
                cond: self.expr(cond, None)?,
                loc: *loc,
            }),
            ast::Stmt::If {
                cond,
                then_branch,
                else_branch,
                loc,
            } => {
                let cond = self.expr(cond, None)?;
                let then_branch = self.sub(then_branch)?;
                let else_branch = match else_branch {
                    Some(e) => self.sub(e)?,
                    None => Vec::new(),
                };
                out.push(TStmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    loc: *loc,
                });
            }
            ast::Stmt::While { cond, body, loc } => {
                let cond = self.expr(cond, None)?;
                let body = self.sub(body)?;
                out.push(TStmt::While {
                    cond,
                    body,
                    loc: *loc,
                });
            }
            ast::Stmt::DoWhile { body, cond, loc } => {
                let body = self.sub(body)?;
                let cond = self.expr(cond, None)?;
                out.push(TStmt::DoWhile {
                    body,
                    cond,
                    loc: *loc,
                });
            }
            ast::Stmt::For {
                init,
                cond,
                step,
                body,
                loc,
            } => {
                let s = self.scoped(|c| {
                    let mut init_out = Vec::new();
                    if let Some(i) = init {
                        c.stmt(i, false, &mut init_out)?;
                    }
                    let cond = match cond {
                        Some(e) => c.expr(e, None)?,
                        None => Expr::constant(1, c.w.int()),
                    };
                    let mut step_out = Vec::new();
                    if let Some(st) = step {
                        c.stmt(st, false, &mut step_out)?;
                    }
                    let body = c.sub(body)?;
                    Ok(TStmt::For {
                        init: init_out,
                        cond,
                        step: step_out,
                        body,
                        loc: *loc,
                    })
                })?;
                out.push(s);
            }
            ast::Stmt::Block(items, _) => {
                let items = self.scoped(|c| {
                    let mut v = Vec::new();
                    for s in items {
                        c.stmt(s, false, &mut v)?;
                    }
                    Ok(v)
                })?;
                out.push(TStmt::Block(items));
            }
            ast::Stmt::Empty(_) => {}
            // Only accepted as the last statement; the value is irrelevant.
            ast::Stmt::Return(e, _) => {
                if let Some(e) = e {
                    self.expr(e, None)?;
                }
            }
        }
        Ok(())
    }

    fn assignable(&self, name: &str, loc: Loc) -> Result<(IntType, TypeSpec), FrontendError> {
        let t = self.lookup(name, loc)?;
        let spec = self.specs[name];
        if spec.is_const {
            return Err(FrontendError::type_error(
                loc,
                format!("assignment to const variable `{name}`"),
            ));
        }
        Ok((t, spec))
    }

    fn convert(&self, e: Expr, t: IntType) -> Expr {
        Expr::cast(e, t, CastKind::Implicit)
    }

    fn arith(&self, op: BinOp, l: Expr, r: Expr) -> Expr {
        let t = common_type(l.ty, r.ty, &self.w);
        let (l, r) = (self.convert(l, t), self.convert(r, t));
        let result = if op.is_comparison() { self.w.int() } else { t };
        Expr::binary(op, l, r, result)
    }

    fn literal(&self, e: &ast::Expr) -> Result<Expr, FrontendError> {
        let ast::ExprKind::Int {
            value,
            unsigned_suffix,
            long_suffix,
            decimal,
        } = e.kind
        else {
            unreachable!()
        };
        let int = self.w.int_bits;
        let long = self.w.long_bits;
        let candidates: Vec<IntType> = match (unsigned_suffix, long_suffix, decimal) {
            (false, false, true) => vec![IntType::new(int, true), IntType::new(long, true)],
            (false, false, false) => vec![
                IntType::new(int, true),
                IntType::new(int, false),
                IntType::new(long, true),
                IntType::new(long, false),
            ],
            (true, false, _) => vec![IntType::new(int, false), IntType::new(long, false)],
            (false, true, true) => vec![IntType::new(long, true)],
            (false, true, false) => vec![IntType::new(long, true), IntType::new(long, false)],
            (true, true, _) => vec![IntType::new(long, false)],
        };
        for t in candidates {
            if (value as i128) <= t.max_value() {
                return Ok(Expr::constant(value as i128, t));
            }
        }
        Err(FrontendError::type_error(
            e.loc,
            format!("integer literal {value} does not fit any type at the configured widths"),
        ))
    }

    /// `hint` is the declared type of the assignment target, used to type a
    /// bare `*` initializer.
    fn expr(&self, e: &ast::Expr, hint: Option<&TypeSpec>) -> Result<Expr, FrontendError> {
        Ok(match &e.kind {
            ast::ExprKind::Int { .. } => self.literal(e)?,
            ast::ExprKind::Ident(n) => Expr::var(n.clone(), self.lookup(n, e.loc)?),
            ast::ExprKind::Nondet(name) if name.is_empty() => {
                let spec = hint.copied().ok_or_else(|| {
                    FrontendError::syntax(e.loc, "`*` is only allowed as a whole initializer")
                })?;
                let spec = TypeSpec {
                    is_const: false,
                    ..spec
                };
                Expr::nondet(type_of_spec(&spec, &self.w), nondet_name_for(&spec))
            }
            ast::ExprKind::Nondet(name) => {
                let spec = nondet_intrinsic(name).expect("parser accepts only known intrinsics");
                let t = type_of_spec(&spec, &self.w);
                if name.ends_with("nondet_bool") {
                    let int = self.w.int();
                    Expr::binary(
                        BinOp::Ne,
                        Expr::nondet(int, name.clone()),
                        Expr::constant(0, int),
                        int,
                    )
                } else {
                    Expr::nondet(t, name.clone())
                }
            }
            ast::ExprKind::Unary(UnOp::Neg, x) => {
                let x = self.expr(x, None)?;
                let t = promote(x.ty, &self.w);
                Expr::unary(UnOp::Neg, self.convert(x, t), t)
            }
            ast::ExprKind::Unary(UnOp::Not, x) => {
                Expr::not(self.expr(x, None)?, self.w.int())
            }
            ast::ExprKind::Binary(op, l, r) => {
                let (l, r) = (self.expr(l, None)?, self.expr(r, None)?);
                if op.is_logical() {
                    Expr::binary(*op, l, r, self.w.int())
                } else {
                    self.arith(*op, l, r)
                }
            }
            ast::ExprKind::Cast(ts, x) => {
                let x = self.expr(x, None)?;
                let t = type_of_spec(ts, &self.w);
                let name = TypeSpec {
                    is_const: false,
                    ..*ts
                }
                .name();
                Expr::cast(x, t, CastKind::Explicit(name))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use crate::ir::ExprKind;

    fn check(src: &str) -> Result<TypedProgram, FrontendError> {
        typecheck(&parse(src)?, Widths::default())
    }

    #[test]
    fn series_sum_is_long_long() {
        let p = check(
            "int main(int argc, char **argv) { long long int a = 2; long long int i = 1, sn = 0; unsigned int n = nondet_uint(); assume(n >= 1); while (i <= n) { sn = sn + a; i++; } assert(sn == n * a); }",
        )
        .unwrap();
        let TStmt::While { cond, body, .. } = &p.body[5] else { panic!("{:?}", p.body[5]) };
        let TStmt::Assign { value, .. } = &body[0] else { panic!() };
        assert_eq!(value.ty, IntType::new(64, true));
        // i <= n compares at the wider type: n is widened.
        let ExprKind::Binary(BinOp::Le, _, r) = &cond.kind else { panic!() };
        assert!(matches!(&r.kind, ExprKind::Cast(inner, CastKind::Implicit) if inner.ty == IntType::new(32, false)));
        assert_eq!(r.ty, IntType::new(64, true));
    }

    #[test]
    fn negative_literal_wraps_into_unsigned() {
        let p = check("int main() { unsigned int n; n = -1; }").unwrap();
        let TStmt::Assign { value, .. } = &p.body[1] else { panic!() };
        assert_eq!(value.ty, IntType::new(32, false));
    }

    #[test]
    fn unsigned_wins_at_equal_width() {
        let w = Widths::default();
        assert_eq!(
            common_type(IntType::new(32, true), IntType::new(32, false), &w),
            IntType::new(32, false)
        );
        assert_eq!(
            common_type(IntType::new(8, false), IntType::new(16, false), &w),
            IntType::new(32, true)
        );
    }

    #[test]
    fn scope_errors() {
        assert!(matches!(check("int main() { x = 1; }"), Err(FrontendError::UnknownIdent { .. })));
        assert!(matches!(check("int main() { const int c = 1; c = 2; }"), Err(FrontendError::Type { .. })));
        assert!(matches!(
            check("int main() { int x; { int x; } }"),
            Err(FrontendError::Unsupported { .. })
        ));
        assert!(check("int main() { { int x = 1; } { int x = 2; } }").is_ok());
        assert!(matches!(check("int main() { { int x; } x = 1; }"), Err(FrontendError::UnknownIdent { .. })));
    }

    #[test]
    fn literal_typing_follows_widths() {
        let w = Widths::oracle(4).unwrap();
        let p = typecheck(&parse("int main() { int x = 9; }").unwrap(), w).unwrap();
        let TStmt::Decl { init: Some(e), .. } = &p.body[0] else { panic!() };
        // 9 does not fit a 4-bit int, so the literal is long; the init casts back.
        assert!(matches!(&e.kind, ExprKind::Cast(inner, _) if inner.ty == IntType::new(8, true)));
        assert!(typecheck(&parse("int main() { int x = 300; }").unwrap(), w).is_err());
    }

    #[test]
    fn globals_default_to_zero() {
        let p = check("int g; int main() { int l; }").unwrap();
        assert!(matches!(&p.body[0], TStmt::Decl { init: Some(_), .. }));
        assert!(matches!(&p.body[1], TStmt::Decl { init: None, .. }));
    }
}
