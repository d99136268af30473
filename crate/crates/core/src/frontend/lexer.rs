use super::FrontendError;
use crate::ir::Loc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int {
        value: u128,
        unsigned_suffix: bool,
        long_suffix: bool,
        decimal: bool,
    },
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
    "<=", ">=", "==", "!=", "&&", "||", "->", "+", "-", "*", "/", "%", "<", ">", "=", "!", "(",
    ")", "{", "}", "[", "]", ";", ",", "&", "|", "^", "~", "?", ":", ".",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut at_line_start = true;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
                at_line_start = true;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let loc = Loc::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(FrontendError::syntax(loc, "unterminated comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c == '#' && at_line_start {
            return Err(FrontendError::unsupported(loc, "preprocessor directive"));
        }
        at_line_start = false;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                loc,
            });
            continue;
        }
        if c.is_ascii_digit() {
            out.push(Token {
                tok: lex_number(&chars, &mut i, &mut col, loc)?,
                loc,
            });
            continue;
        }
        if c == '\'' || c == '"' {
            return Err(FrontendError::unsupported(loc, "character or string literal"));
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                for _ in 0..p.len() {
                    bump!();
                }
                out.push(Token {
                    tok: Tok::Punct(p),
                    loc,
                });
            }
            None => {
                return Err(FrontendError::syntax(
                    loc,
                    format!("unexpected character {c:?}"),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: Loc::new(line, col),
    });
    Ok(out)
}

fn lex_number(chars: &[char], i: &mut usize, col: &mut u32, loc: Loc) -> Result<Tok, FrontendError> {
    let start = *i;
    let mut radix = 10;
    if chars[*i] == '0' && matches!(chars.get(*i + 1), Some('x') | Some('X')) {
        radix = 16;
        *i += 2;
    } else if chars[*i] == '0' && chars.get(*i + 1).is_some_and(|c| c.is_ascii_digit()) {
        radix = 8;
        *i += 1;
    }
    let digits_start = *i;
    while *i < chars.len() && chars[*i].is_digit(radix) {
        *i += 1;
    }
    let digits: String = chars[digits_start..*i].iter().collect();
    let (mut unsigned_suffix, mut long_suffix) = (false, false);
    while *i < chars.len() && matches!(chars[*i], 'u' | 'U' | 'l' | 'L') {
        if matches!(chars[*i], 'u' | 'U') {
            unsigned_suffix = true;
        } else {
            long_suffix = true;
        }
        *i += 1;
    }
    if *i < chars.len() && (chars[*i].is_ascii_alphanumeric() || chars[*i] == '_' || chars[*i] == '.') {
        *col += (*i - start) as u32;
        return Err(FrontendError::syntax(loc, "malformed integer literal"));
    }
    *col += (*i - start) as u32;
    if digits.is_empty() {
        return Err(FrontendError::syntax(loc, "malformed integer literal"));
    }
    let value = u64::from_str_radix(&digits, radix)
        .map_err(|_| FrontendError::syntax(loc, "integer literal out of range"))?;
    Ok(Tok::Int {
        value: value as u128,
        unsigned_suffix,
        long_suffix,
        decimal: radix == 10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_locations() {
        let toks = tokenize("x <= 10u; // c\n  y++").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("x".into()));
        assert_eq!(toks[1].tok, Tok::Punct("<="));
        assert!(matches!(
            toks[2].tok,
            Tok::Int {
                value: 10,
                unsigned_suffix: true,
                ..
            }
        ));
        assert_eq!(toks[4].loc, Loc::new(2, 3));
        assert_eq!(toks[5].tok, Tok::Punct("++"));
    }

    #[test]
    fn hex_and_octal() {
        let toks = tokenize("0x1F 017").unwrap();
        assert!(matches!(toks[0].tok, Tok::Int { value: 31, decimal: false, .. }));
        assert!(matches!(toks[1].tok, Tok::Int { value: 15, decimal: false, .. }));
    }

    #[test]
    fn rejects_preprocessor_and_bad_literals() {
        assert!(matches!(
            tokenize("#include <stdio.h>"),
            Err(FrontendError::Unsupported { .. })
        ));
        assert!(tokenize("123abc").is_err());
        assert!(tokenize("99999999999999999999999").is_err());
        assert!(tokenize("/* open").is_err());
    }
}
