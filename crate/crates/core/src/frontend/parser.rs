//! Recursive-descent parser for the mini-C input language.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;
use crate::ir::{BinOp, Loc, UnOp};

const MAX_DEPTH: usize = 200;

/// Intrinsic returning a nondeterministic value, mapped to its result type.
pub fn nondet_intrinsic(name: &str) -> Option<TypeSpec> {
    let base = name.strip_prefix("__VERIFIER_").unwrap_or(name);
    let suffix = base.strip_prefix("nondet_")?;
    let (base, unsigned) = match suffix {
        "int" => (BaseType::Int, false),
        "uint" | "unsigned" => (BaseType::Int, true),
        "long" => (BaseType::Long, false),
        "ulong" => (BaseType::Long, true),
        "longlong" => (BaseType::LongLong, false),
        "ulonglong" => (BaseType::LongLong, true),
        "short" => (BaseType::Short, false),
        "ushort" => (BaseType::Short, true),
        "char" => (BaseType::Char, false),
        "uchar" => (BaseType::Char, true),
        "bool" => (BaseType::Int, false),
        _ => return None,
    };
    Some(TypeSpec {
        base,
        unsigned,
        is_const: false,
    })
}

/// Intrinsic name that yields values of `ty`, used to desugar `*` initializers.
pub fn nondet_name_for(ty: &TypeSpec) -> &'static str {
    match (ty.base, ty.unsigned) {
        (BaseType::Int, false) => "nondet_int",
        (BaseType::Int, true) => "nondet_uint",
        (BaseType::Long, false) => "nondet_long",
        (BaseType::Long, true) => "nondet_ulong",
        (BaseType::LongLong, false) => "nondet_longlong",
        (BaseType::LongLong, true) => "nondet_ulonglong",
        (BaseType::Short, false) => "nondet_short",
        (BaseType::Short, true) => "nondet_ushort",
        (BaseType::Char, false) => "nondet_char",
        (BaseType::Char, true) => "nondet_uchar",
    }
}

const TYPE_WORDS: &[&str] = &[
    "int", "unsigned", "signed", "long", "short", "char", "const", "_Bool", "volatile",
];
const UNSUPPORTED_WORDS: &[&str] = &[
    "struct", "union", "enum", "float", "double", "typedef", "break", "continue", "goto",
    "switch", "case", "sizeof",
];

pub fn parse(src: &str) -> Result<SourceProgram, FrontendError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(q) if q == s)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<Loc, FrontendError> {
        let loc = self.loc();
        if self.eat_punct(p) {
            Ok(loc)
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Loc), FrontendError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok((s, loc))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn unexpected(&self, wanted: &str) -> FrontendError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int { value, .. } => format!("`{value}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        };
        FrontendError::syntax(self.loc(), format!("expected {wanted}, found {found}"))
    }

    fn enter(&mut self) -> Result<(), FrontendError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(FrontendError::syntax(self.loc(), "nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if TYPE_WORDS.contains(&s.as_str()))
    }

    fn program(&mut self) -> Result<SourceProgram, FrontendError> {
        let mut globals = Vec::new();
        loop {
            if *self.peek() == Tok::Eof {
                return Err(FrontendError::syntax(self.loc(), "no entry function `main`"));
            }
            if self.is_ident("extern") {
                self.skip_extern()?;
                continue;
            }
            if self.eat_punct(";") {
                continue;
            }
            if self.is_ident("static") {
                self.advance();
            }
            let returns_int = if self.is_ident("void") {
                self.advance();
                false
            } else {
                let loc = self.loc();
                let ty = self.type_spec()?;
                if self.is_punct("*") {
                    return Err(FrontendError::unsupported(self.loc(), "pointer"));
                }
                if matches!(self.peek_at(1), Tok::Punct("(")) {
                    if ty.base != BaseType::Int || ty.unsigned {
                        return Err(FrontendError::unsupported(loc, "non-int entry function"));
                    }
                    true
                } else {
                    globals.push(self.declaration_rest(ty, loc)?);
                    continue;
                }
            };
            let (name, loc) = self.expect_ident()?;
            if name != "main" {
                return Err(FrontendError::unsupported(loc, "function definition"));
            }
            let params = self.main_params()?;
            let body_loc = self.expect_punct("{")?;
            let body = self.block_items(body_loc)?;
            if let Some(pos) = body.iter().position(|s| matches!(s, Stmt::Return(..))) {
                if pos + 1 != body.len() {
                    let loc = match &body[pos] {
                        Stmt::Return(_, l) => *l,
                        _ => unreachable!(),
                    };
                    return Err(FrontendError::unsupported(loc, "early return"));
                }
            }
            while self.eat_punct(";") {}
            if *self.peek() != Tok::Eof {
                return Err(FrontendError::unsupported(
                    self.loc(),
                    "declarations after the entry function",
                ));
            }
            return Ok(SourceProgram {
                globals,
                returns_int,
                params,
                body,
            });
        }
    }

    fn skip_extern(&mut self) -> Result<(), FrontendError> {
        let mut parens = 0i32;
        loop {
            match self.peek() {
                Tok::Eof => return Err(self.unexpected("`;`")),
                Tok::Punct("(") => parens += 1,
                Tok::Punct(")") => parens -= 1,
                Tok::Punct("{") => {
                    return Err(FrontendError::unsupported(self.loc(), "function definition"))
                }
                Tok::Punct(";") if parens <= 0 => {
                    self.advance();
                    return Ok(());
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn main_params(&mut self) -> Result<MainParams, FrontendError> {
        self.expect_punct("(")?;
        if self.eat_punct(")") {
            return Ok(MainParams::Empty);
        }
        if self.is_ident("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.advance();
            self.advance();
            return Ok(MainParams::Void);
        }
        // int argc, char **argv  |  int argc, char *argv[]
        let ty = self.type_spec()?;
        if ty.base != BaseType::Int {
            return Err(self.unexpected("`int argc`"));
        }
        self.expect_ident()?;
        self.expect_punct(",")?;
        let ty = self.type_spec()?;
        if ty.base != BaseType::Char {
            return Err(self.unexpected("`char **argv`"));
        }
        let mut stars = 0;
        while self.eat_punct("*") {
            stars += 1;
        }
        self.expect_ident()?;
        if self.eat_punct("[") {
            self.expect_punct("]")?;
            stars += 1;
        }
        if stars != 2 {
            return Err(self.unexpected("`char **argv`"));
        }
        self.expect_punct(")")?;
        Ok(MainParams::ArgcArgv)
    }

    fn type_spec(&mut self) -> Result<TypeSpec, FrontendError> {
        let loc = self.loc();
        let (mut unsigned, mut signed, mut is_const) = (false, false, false);
        let (mut longs, mut int, mut short, mut chr, mut boolean) = (0, false, false, false, false);
        let mut any = false;
        while let Tok::Ident(w) = self.peek().clone() {
            match w.as_str() {
                "unsigned" => unsigned = true,
                "signed" => signed = true,
                "const" => is_const = true,
                "volatile" => {}
                "long" => longs += 1,
                "int" => int = true,
                "short" => short = true,
                "char" => chr = true,
                "_Bool" => boolean = true,
                _ => break,
            }
            any = true;
            self.advance();
        }
        if !any {
            return Err(self.unexpected("type"));
        }
        if (unsigned && signed) || longs > 2 || (short && (longs > 0 || chr)) || (chr && longs > 0)
        {
            return Err(FrontendError::syntax(loc, "invalid type specifier combination"));
        }
        let base = if chr {
            BaseType::Char
        } else if short {
            BaseType::Short
        } else if longs == 2 {
            BaseType::LongLong
        } else if longs == 1 {
            BaseType::Long
        } else {
            let _ = int;
            BaseType::Int
        };
        if boolean && (chr || short || longs > 0 || unsigned) {
            return Err(FrontendError::syntax(loc, "invalid type specifier combination"));
        }
        Ok(TypeSpec {
            base,
            unsigned,
            is_const,
        })
    }

    fn declaration(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.loc();
        let ty = self.type_spec()?;
        self.declaration_rest(ty, loc)
    }

    fn declaration_rest(&mut self, ty: TypeSpec, loc: Loc) -> Result<Stmt, FrontendError> {
        let mut items = Vec::new();
        loop {
            if self.is_punct("*") {
                return Err(FrontendError::unsupported(self.loc(), "pointer"));
            }
            let (name, dloc) = self.expect_ident()?;
            if self.is_punct("[") {
                return Err(FrontendError::unsupported(self.loc(), "array"));
            }
            if self.is_punct("(") {
                return Err(FrontendError::unsupported(dloc, "function declaration"));
            }
            let init = if self.eat_punct("=") {
                Some(self.initializer(&ty)?)
            } else {
                None
            };
            items.push(Declarator {
                name,
                init,
                loc: dloc,
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(Stmt::Decl { ty, items, loc })
    }

    /// Initializer or assignment right-hand side; a bare `*` means "any value".
    fn initializer(&mut self, ty: &TypeSpec) -> Result<Expr, FrontendError> {
        let loc = self.loc();
        if self.is_punct("*") && matches!(self.peek_at(1), Tok::Punct(";") | Tok::Punct(",")) {
            self.advance();
            return Ok(Expr {
                kind: ExprKind::Nondet(nondet_name_for(ty).to_string()),
                loc,
            });
        }
        self.expr()
    }

    fn block_items(&mut self, open: Loc) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::new();
        loop {
            if self.eat_punct("}") {
                return Ok(out);
            }
            if *self.peek() == Tok::Eof {
                return Err(FrontendError::syntax(open, "unclosed `{`"));
            }
            out.push(self.statement()?);
        }
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        self.enter()?;
        let r = self.statement_inner();
        self.leave();
        r
    }

    fn statement_inner(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.loc();
        if self.eat_punct("{") {
            return Ok(Stmt::Block(self.block_items(loc)?, loc));
        }
        if self.eat_punct(";") {
            return Ok(Stmt::Empty(loc));
        }
        if self.at_type() {
            return self.declaration();
        }
        if self.is_punct("++") || self.is_punct("--") {
            let increment = self.is_punct("++");
            self.advance();
            let (target, _) = self.expect_ident()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Step {
                target,
                increment,
                loc,
            });
        }
        let word = match self.peek().clone() {
            Tok::Ident(w) => w,
            Tok::Punct("*") => return Err(FrontendError::unsupported(loc, "pointer")),
            _ => return Err(self.unexpected("statement")),
        };
        if UNSUPPORTED_WORDS.contains(&word.as_str()) {
            return Err(FrontendError::unsupported(loc, &word));
        }
        match word.as_str() {
            "if" => {
                self.advance();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_branch = Box::new(self.statement()?);
                let else_branch = if self.is_ident("else") {
                    self.advance();
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    loc,
                })
            }
            "while" => {
                self.advance();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let body = Box::new(self.statement()?);
                Ok(Stmt::While { cond, body, loc })
            }
            "do" => {
                self.advance();
                let body = Box::new(self.statement()?);
                if !self.is_ident("while") {
                    return Err(self.unexpected("`while`"));
                }
                self.advance();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(Stmt::DoWhile { body, cond, loc })
            }
            "for" => {
                self.advance();
                self.expect_punct("(")?;
                let init = if self.eat_punct(";") {
                    None
                } else if self.at_type() {
                    Some(Box::new(self.declaration()?))
                } else {
                    let s = self.simple_statement()?;
                    self.expect_punct(";")?;
                    Some(Box::new(s))
                };
                let cond = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(";")?;
                let step = if self.is_punct(")") {
                    None
                } else {
                    Some(Box::new(self.simple_statement()?))
                };
                self.expect_punct(")")?;
                let body = Box::new(self.statement()?);
                Ok(Stmt::For {
                    init,
                    cond,
                    step,
                    body,
                    loc,
                })
            }
            "return" => {
                self.advance();
                let value = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(";")?;
                Ok(Stmt::Return(value, loc))
            }
            "else" => Err(self.unexpected("statement")),
            _ => {
                let s = self.simple_statement()?;
                self.expect_punct(";")?;
                Ok(s)
            }
        }
    }

    /// Assignment, increment or intrinsic call, without the trailing `;`.
    fn simple_statement(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.loc();
        if self.is_punct("++") || self.is_punct("--") {
            let increment = self.is_punct("++");
            self.advance();
            let (target, _) = self.expect_ident()?;
            return Ok(Stmt::Step {
                target,
                increment,
                loc,
            });
        }
        let (name, _) = self.expect_ident()?;
        if self.is_punct("(") {
            return self.intrinsic_call(name, loc);
        }
        if self.is_punct("++") || self.is_punct("--") {
            let increment = self.is_punct("++");
            self.advance();
            return Ok(Stmt::Step {
                target: name,
                increment,
                loc,
            });
        }
        let op = match self.peek() {
            Tok::Punct("=") => AssignOp::Set,
            Tok::Punct("+=") => AssignOp::Add,
            Tok::Punct("-=") => AssignOp::Sub,
            Tok::Punct("*=") => AssignOp::Mul,
            Tok::Punct("/=") => AssignOp::Div,
            Tok::Punct("%=") => AssignOp::Rem,
            Tok::Punct("[") => return Err(FrontendError::unsupported(self.loc(), "array")),
            Tok::Punct("<<=") | Tok::Punct(">>=") | Tok::Punct("&=") | Tok::Punct("|=")
            | Tok::Punct("^=") => {
                return Err(FrontendError::unsupported(self.loc(), "bitwise operator"))
            }
            Tok::Punct(".") | Tok::Punct("->") => {
                return Err(FrontendError::unsupported(self.loc(), "member access"))
            }
            _ => return Err(self.unexpected("assignment")),
        };
        self.advance();
        let value = if op == AssignOp::Set
            && self.is_punct("*")
            && matches!(self.peek_at(1), Tok::Punct(";"))
        {
            // `x = *;` needs the declared type; the checker resolves the name.
            let l = self.loc();
            self.advance();
            Expr {
                kind: ExprKind::Nondet(String::new()),
                loc: l,
            }
        } else {
            self.expr()?
        };
        Ok(Stmt::Assign {
            target: name,
            op,
            value,
            loc,
        })
    }

    fn intrinsic_call(&mut self, name: String, loc: Loc) -> Result<Stmt, FrontendError> {
        match name.as_str() {
            "assume" | "__VERIFIER_assume" | "assert" | "__VERIFIER_assert" => {
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                if name.ends_with("assume") {
                    Ok(Stmt::Assume { cond, loc })
                } else {
                    Ok(Stmt::Assert { cond, loc })
                }
            }
            "__VERIFIER_error" | "reach_error" => {
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                Ok(Stmt::Assert {
                    cond: Expr {
                        kind: ExprKind::Int {
                            value: 0,
                            unsigned_suffix: false,
                            long_suffix: false,
                            decimal: true,
                        },
                        loc,
                    },
                    loc,
                })
            }
            _ => Err(FrontendError::unsupported(loc, "function call")),
        }
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.enter()?;
        let r = self.binary(1);
        self.leave();
        r
    }

    fn binop_here(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Punct("||") => BinOp::Or,
            Tok::Punct("&&") => BinOp::And,
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            Tok::Punct("+") => BinOp::Add,
            Tok::Punct("-") => BinOp::Sub,
            Tok::Punct("*") => BinOp::Mul,
            Tok::Punct("/") => BinOp::Div,
            Tok::Punct("%") => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            if let Tok::Punct(p) = self.peek() {
                if ["&", "|", "^", "<<", ">>"].contains(p) {
                    return Err(FrontendError::unsupported(self.loc(), "bitwise operator"));
                }
                if *p == "?" {
                    return Err(FrontendError::unsupported(self.loc(), "conditional operator"));
                }
                if *p == "=" || p.ends_with("=") && p.len() == 2 && !["==", "!=", "<=", ">="].contains(p) {
                    return Err(FrontendError::unsupported(
                        self.loc(),
                        "assignment inside expression",
                    ));
                }
                if *p == "++" || *p == "--" {
                    return Err(FrontendError::unsupported(
                        self.loc(),
                        "increment inside expression",
                    ));
                }
            }
            let Some(op) = self.binop_here() else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let loc = self.loc();
            self.advance();
            self.enter()?;
            let rhs = self.binary(prec + 1);
            self.leave();
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs?)),
                loc,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        self.enter()?;
        let r = self.unary_inner();
        self.leave();
        r
    }

    fn unary_inner(&mut self) -> Result<Expr, FrontendError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Punct("-") => {
                self.advance();
                let e = self.unary()?;
                Ok(Expr {
                    kind: ExprKind::Unary(UnOp::Neg, Box::new(e)),
                    loc,
                })
            }
            Tok::Punct("!") => {
                self.advance();
                let e = self.unary()?;
                Ok(Expr {
                    kind: ExprKind::Unary(UnOp::Not, Box::new(e)),
                    loc,
                })
            }
            Tok::Punct("+") => {
                self.advance();
                self.unary()
            }
            Tok::Punct("*") | Tok::Punct("&") => Err(FrontendError::unsupported(loc, "pointer")),
            Tok::Punct("~") => Err(FrontendError::unsupported(loc, "bitwise operator")),
            Tok::Punct("++") | Tok::Punct("--") => {
                Err(FrontendError::unsupported(loc, "increment inside expression"))
            }
            Tok::Punct("(") => {
                if matches!(self.peek_at(1), Tok::Ident(s) if TYPE_WORDS.contains(&s.as_str())) {
                    self.advance();
                    let ty = self.type_spec()?;
                    if self.is_punct("*") {
                        return Err(FrontendError::unsupported(self.loc(), "pointer"));
                    }
                    self.expect_punct(")")?;
                    let e = self.unary()?;
                    return Ok(Expr {
                        kind: ExprKind::Cast(ty, Box::new(e)),
                        loc,
                    });
                }
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Int {
                value,
                unsigned_suffix,
                long_suffix,
                decimal,
            } => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Int {
                        value,
                        unsigned_suffix,
                        long_suffix,
                        decimal,
                    },
                    loc,
                })
            }
            Tok::Ident(name) => {
                if UNSUPPORTED_WORDS.contains(&name.as_str()) {
                    return Err(FrontendError::unsupported(loc, &name));
                }
                if is_keyword(&name) {
                    return Err(self.unexpected("expression"));
                }
                self.advance();
                if self.is_punct("(") {
                    if nondet_intrinsic(&name).is_some() {
                        self.advance();
                        if self.is_ident("void") {
                            self.advance();
                        }
                        self.expect_punct(")")?;
                        return Ok(Expr {
                            kind: ExprKind::Nondet(name),
                            loc,
                        });
                    }
                    return Err(FrontendError::unsupported(loc, "function call"));
                }
                match self.peek() {
                    Tok::Punct("[") => Err(FrontendError::unsupported(self.loc(), "array")),
                    Tok::Punct(".") | Tok::Punct("->") => {
                        Err(FrontendError::unsupported(self.loc(), "member access"))
                    }
                    _ => Ok(Expr {
                        kind: ExprKind::Ident(name),
                        loc,
                    }),
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    TYPE_WORDS.contains(&s)
        || UNSUPPORTED_WORDS.contains(&s)
        || matches!(
            s,
            "if" | "else" | "while" | "do" | "for" | "return" | "void" | "extern" | "static"
        )
}
