//! Source pretty-printer. Output re-parses to the same tree (up to locations),
//! except for an `if` without `else` used unbraced as the `then` branch of an
//! `if` with `else`, which C itself cannot express.

use super::ast::*;
use crate::ir::UnOp;
use std::fmt::Write;

pub fn print_program(p: &SourceProgram) -> String {
    let mut out = String::new();
    for g in &p.globals {
        print_stmt(g, 0, &mut out);
    }
    let ret = if p.returns_int { "int" } else { "void" };
    let params = match p.params {
        MainParams::Empty => "",
        MainParams::Void => "void",
        MainParams::ArgcArgv => "int argc, char **argv",
    };
    let _ = writeln!(out, "{ret} main({params}) {{");
    for s in &p.body {
        print_stmt(s, 1, &mut out);
    }
    out.push_str("}\n");
    out
}

fn type_text(ty: &TypeSpec) -> String {
    if ty.is_const {
        format!("const {}", ty.name())
    } else {
        ty.name()
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr_prec(e, 0, &mut s);
    s
}

fn is_atomic(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Int { .. } | ExprKind::Ident(_) | ExprKind::Nondet(_)
    )
}

fn expr_prec(e: &Expr, min: u8, out: &mut String) {
    match &e.kind {
        ExprKind::Int {
            value,
            unsigned_suffix,
            long_suffix,
            decimal,
        } => {
            if *decimal {
                let _ = write!(out, "{value}");
            } else {
                let _ = write!(out, "0x{value:x}");
            }
            if *unsigned_suffix {
                out.push('u');
            }
            if *long_suffix {
                out.push('l');
            }
        }
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Nondet(n) if n.is_empty() => out.push('*'),
        ExprKind::Nondet(n) => {
            let _ = write!(out, "{n}()");
        }
        ExprKind::Unary(op, x) => {
            out.push(if *op == UnOp::Neg { '-' } else { '!' });
            operand(x, out);
        }
        ExprKind::Cast(ty, x) => {
            let _ = write!(out, "({})", type_text(ty));
            operand(x, out);
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            if p < min {
                out.push('(');
            }
            expr_prec(l, p, out);
            let _ = write!(out, " {} ", op.symbol());
            expr_prec(r, p + 1, out);
            if p < min {
                out.push(')');
            }
        }
    }
}

fn operand(x: &Expr, out: &mut String) {
    if is_atomic(x) {
        expr_prec(x, 0, out);
    } else {
        out.push('(');
        expr_prec(x, 0, out);
        out.push(')');
    }
}

fn indent(n: usize, out: &mut String) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

fn decl_text(ty: &TypeSpec, items: &[Declarator]) -> String {
    let parts: Vec<String> = items
        .iter()
        .map(|d| match &d.init {
            Some(e) => format!("{} = {}", d.name, print_expr(e)),
            None => d.name.clone(),
        })
        .collect();
    format!("{} {};", type_text(ty), parts.join(", "))
}

/// Statement without indentation or trailing `;`, for `for` headers.
fn simple_text(s: &Stmt) -> String {
    match s {
        Stmt::Assign {
            target, op, value, ..
        } => format!("{target} {} {}", op.symbol(), print_expr(value)),
        Stmt::Step {
            target, increment, ..
        } => format!("{target}{}", if *increment { "++" } else { "--" }),
        Stmt::Assume { cond, .. } => format!("assume({})", print_expr(cond)),
        Stmt::Assert { cond, .. } => format!("assert({})", print_expr(cond)),
        other => panic!("not a simple statement: {other:?}"),
    }
}

fn print_stmt(s: &Stmt, depth: usize, out: &mut String) {
    indent(depth, out);
    print_stmt_inline(s, depth, out);
}

// Prints a statement starting at the current column.
fn print_stmt_inline(s: &Stmt, depth: usize, out: &mut String) {
    match s {
        Stmt::Decl { ty, items, .. } => {
            out.push_str(&decl_text(ty, items));
            out.push('\n');
        }
        Stmt::Assign { .. } | Stmt::Step { .. } | Stmt::Assume { .. } | Stmt::Assert { .. } => {
            let _ = writeln!(out, "{};", simple_text(s));
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            let _ = write!(out, "if ({})", print_expr(cond));
            branch(then_branch, depth, out);
            if let Some(e) = else_branch {
                indent(depth, out);
                out.push_str("else");
                if matches!(**e, Stmt::If { .. }) {
                    out.push(' ');
                    print_stmt_inline(e, depth, out);
                } else {
                    branch(e, depth, out);
                }
            }
        }
        Stmt::While { cond, body, .. } => {
            let _ = write!(out, "while ({})", print_expr(cond));
            branch(body, depth, out);
        }
        Stmt::DoWhile { body, cond, .. } => {
            out.push_str("do");
            branch(body, depth, out);
            indent(depth, out);
            let _ = writeln!(out, "while ({});", print_expr(cond));
        }
        Stmt::For {
            init,
            cond,
            step,
            body,
            ..
        } => {
            out.push_str("for (");
            match init.as_deref() {
                Some(Stmt::Decl { ty, items, .. }) => out.push_str(&decl_text(ty, items)),
                Some(s) => {
                    out.push_str(&simple_text(s));
                    out.push(';');
                }
                None => out.push(';'),
            }
            if let Some(c) = cond {
                out.push(' ');
                out.push_str(&print_expr(c));
            }
            out.push(';');
            if let Some(s) = step {
                out.push(' ');
                out.push_str(&simple_text(s));
            }
            out.push(')');
            branch(body, depth, out);
        }
        Stmt::Block(items, _) => {
            out.push_str("{\n");
            for s in items {
                print_stmt(s, depth + 1, out);
            }
            indent(depth, out);
            out.push_str("}\n");
        }
        Stmt::Empty(_) => out.push_str(";\n"),
        Stmt::Return(e, _) => match e {
            Some(e) => {
                let _ = writeln!(out, "return {};", print_expr(e));
            }
            None => out.push_str("return;\n"),
        },
    }
}

fn branch(s: &Stmt, depth: usize, out: &mut String) {
    if let Stmt::Block(..) = s {
        out.push(' ');
        print_stmt_inline(s, depth, out);
    } else {
        out.push('\n');
        print_stmt(s, depth + 1, out);
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn roundtrip(src: &str) {
        let a = parse(src).unwrap();
        let text = print_program(&a);
        let b = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(a.without_locs(), b.without_locs(), "{text}");
    }

    #[test]
    fn roundtrips() {
        roundtrip("int main() { unsigned int x = nondet_uint(); while (x > 0) x--; assert(x == 0); }");
        roundtrip("int g; int main(int argc, char **argv) { long long int i = 1, sn = 0; unsigned int n = *; assume(n >= 1); for (i = 1; i <= n; i++) { sn = sn + 2; } do { i -= 1; } while (i > 0 && !(i == 3)); if (i) ; else if (sn) i = -(-i); else { } assert((long)(n - 1) * 2 >= 0u); return 0; }");
    }
}
