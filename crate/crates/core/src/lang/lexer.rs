use super::ast::Span;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Cap(String),
    Int(BigInt),
    Rat(BigRational),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Cap(s) => write!(f, "constructor `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Rat(r) => write!(f, "rational `{r}`"),
            Tok::Kw(k) => write!(f, "`{k}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "let", "rec", "in", "if", "then", "else", "match", "with", "type", "of", "opaque", "axiom",
    "import", "verify", "instance", "decompose", "assuming", "basis", "true", "false", "not",
    "div", "mod", "int", "rat", "bool", "list",
];

// Longest match first.
const SYMBOLS: &[&str] = &[
    "==>", "<>", "<=", ">=", "->", "::", "&&", "||", "=", "<", ">", "+", "-", "*", "/", ";",
    ":", ",", ".", "(", ")", "{", "}", "[", "]", "|", "_",
];

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let span_at = |start: usize, end: usize, line: u32, line_start: usize| Span {
        start,
        end,
        line,
        col: (src[line_start..start].chars().count() + 1) as u32,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'(' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            let (sl, sls) = (line, line_start);
            let mut depth = 0usize;
            loop {
                if i >= bytes.len() {
                    return Err(LexError {
                        message: "unterminated comment".into(),
                        span: span_at(start, i, sl, sls),
                    });
                }
                if bytes[i] == b'(' && bytes.get(i + 1) == Some(&b'*') {
                    depth += 1;
                    i += 2;
                } else if bytes[i] == b'*' && bytes.get(i + 1) == Some(&b')') {
                    depth -= 1;
                    i += 2;
                    if depth == 0 {
                        break;
                    }
                } else {
                    if bytes[i] == b'\n' {
                        line += 1;
                        line_start = i + 1;
                    }
                    i += 1;
                }
            }
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                i += 1;
            }
            let int_part: String = src[start..i].chars().filter(|c| *c != '_').collect();
            let is_frac = i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit();
            let tok = if is_frac {
                i += 1;
                let fs = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let frac = &src[fs..i];
                let num: BigInt = format!("{int_part}{frac}").parse().unwrap();
                let den = num_traits::pow(BigInt::from(10), frac.len());
                Tok::Rat(BigRational::new(num, den))
            } else {
                Tok::Int(int_part.parse().unwrap())
            };
            out.push(Token { tok, span: span_at(start, i, line, line_start) });
            continue;
        }
        if c.is_ascii_alphabetic() || (c == b'_' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')) {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'') {
                i += 1;
            }
            let word = &src[start..i];
            let tok = if let Some(k) = KEYWORDS.iter().find(|k| **k == word) {
                Tok::Kw(k)
            } else if c.is_ascii_uppercase() {
                Tok::Cap(word.to_string())
            } else {
                Tok::Ident(word.to_string())
            };
            out.push(Token { tok, span: span_at(start, i, line, line_start) });
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                i += s.len();
                out.push(Token { tok: Tok::Sym(s), span: span_at(start, i, line, line_start) });
            }
            None => {
                let ch = src[i..].chars().next().unwrap();
                return Err(LexError {
                    message: format!("unexpected character `{ch}`"),
                    span: span_at(start, start + ch.len_utf8(), line, line_start),
                });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: span_at(bytes.len(), bytes.len(), line, line_start) });
    Ok(out)
}
