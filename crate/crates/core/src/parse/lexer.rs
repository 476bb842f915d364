//! Tokenizer shared by the module and property parsers.

use super::diag::{DiagCode, DiagSink};
use crate::hdl::Base;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `$past`, `$error`, ...
    System(String),
    /// Backtick name left over after preprocessing.
    Directive(String),
    Int(u64),
    Based { width: Option<u32>, base: Base, value: u64 },
    /// `'` directly before `(`, as in `30'(x)`.
    Tick,
    Str(String),
    Op(&'static str),
    Unknown(char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        matches!(&self.tok, Tok::Op(o) if *o == op)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Ident(s) if s == kw)
    }
}

// longest first so a prefix never shadows a longer operator
const OPS: &[&str] = &[
    "|->", "|=>", "===", "!==", "<<<", ">>>", "##", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "->", "::",
    "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "#", "@", "?", "!", "~", "&", "|", "^", "+", "-", "*", "/",
    "%", "<", ">", "=",
];

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$'
}

fn base_of(c: u8) -> Option<Base> {
    match c.to_ascii_lowercase() {
        b'b' => Some(Base::Bin),
        b'h' => Some(Base::Hex),
        b'd' => Some(Base::Dec),
        _ => None,
    }
}

fn parse_digits(digits: &str, base: Base) -> Option<u64> {
    let radix = match base {
        Base::Bin => 2,
        Base::Hex => 16,
        Base::Dec | Base::Fill => 10,
    };
    let clean: String = digits.chars().filter(|c| *c != '_').collect();
    if clean.is_empty() {
        return None;
    }
    u64::from_str_radix(&clean, radix).ok()
}

pub fn lex(src: &str, diags: &mut DiagSink) -> Vec<Token> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            while i + 1 < b.len() && !(b[i] == b'*' && b[i + 1] == b'/') {
                i += 1;
            }
            if i + 1 >= b.len() {
                diags.error(DiagCode::Syntax, start, "unterminated block comment");
                i = b.len();
            } else {
                i += 2;
            }
            continue;
        }
        let start = i;
        if is_ident_start(c) {
            while i < b.len() && is_ident_char(b[i]) {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), start, end: i });
            continue;
        }
        if c == b'$' || c == b'`' {
            i += 1;
            while i < b.len() && is_ident_char(b[i]) {
                i += 1;
            }
            let name = src[start + 1..i].to_string();
            let tok = if c == b'$' { Tok::System(name) } else { Tok::Directive(name) };
            out.push(Token { tok, start, end: i });
            continue;
        }
        if c == b'"' {
            i += 1;
            while i < b.len() && b[i] != b'"' && b[i] != b'\n' {
                if b[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            if i >= b.len() || b[i] != b'"' {
                diags.error(DiagCode::Syntax, start, "unterminated string");
                out.push(Token { tok: Tok::Str(src[start + 1..i.min(b.len())].to_string()), start, end: i });
                continue;
            }
            i += 1;
            out.push(Token { tok: Tok::Str(src[start + 1..i - 1].to_string()), start, end: i });
            continue;
        }
        if c.is_ascii_digit() || c == b'\'' {
            let mut width = None;
            if c.is_ascii_digit() {
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                    i += 1;
                }
                let text = &src[start..i];
                let based = b.get(i) == Some(&b'\'')
                    && b.get(i + 1).is_some_and(|&n| base_of(n).is_some() || n == b's' || n == b'S');
                if !based {
                    match parse_digits(text, Base::Dec) {
                        Some(v) => out.push(Token { tok: Tok::Int(v), start, end: i }),
                        None => {
                            diags.error(DiagCode::BadLiteral, start, format!("number `{text}` out of range"));
                            out.push(Token { tok: Tok::Int(0), start, end: i });
                        }
                    }
                    continue;
                }
                match parse_digits(text, Base::Dec) {
                    Some(w) if w >= 1 && w <= u32::MAX as u64 => width = Some(w as u32),
                    _ => diags.error(DiagCode::BadLiteral, start, format!("bad literal width `{text}`")),
                }
            }
            // at the tick
            let tick = i;
            i += 1;
            match b.get(i) {
                Some(b'0') | Some(b'1') if width.is_none() && !b.get(i + 1).is_some_and(|&n| is_ident_char(n)) => {
                    let value = (b[i] - b'0') as u64;
                    i += 1;
                    out.push(Token { tok: Tok::Based { width: None, base: Base::Fill, value }, start, end: i });
                }
                Some(&n) if base_of(n).is_some() || ((n == b's' || n == b'S') && b.get(i + 1).is_some_and(|&m| base_of(m).is_some())) => {
                    if n == b's' || n == b'S' {
                        i += 1;
                    }
                    let base = base_of(b[i]).unwrap();
                    i += 1;
                    while i < b.len() && b[i] == b' ' {
                        i += 1;
                    }
                    let ds = i;
                    while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'?') {
                        i += 1;
                    }
                    let digits = &src[ds..i];
                    let value = match parse_digits(digits, base) {
                        Some(v) => v,
                        None => {
                            diags.error(
                                DiagCode::BadLiteral,
                                start,
                                format!("bad digits `{digits}` in literal `{}`", &src[start..i]),
                            );
                            0
                        }
                    };
                    out.push(Token { tok: Tok::Based { width, base, value }, start, end: i });
                }
                _ => {
                    if let Some(w) = width {
                        out.push(Token { tok: Tok::Int(w as u64), start, end: tick });
                    }
                    out.push(Token { tok: Tok::Tick, start: tick, end: tick + 1 });
                }
            }
            continue;
        }
        if let Some(op) = OPS.iter().find(|op| src[i..].starts_with(**op)) {
            i += op.len();
            out.push(Token { tok: Tok::Op(op), start, end: i });
            continue;
        }
        let ch = src[i..].chars().next().unwrap();
        diags.error(DiagCode::UnknownToken, start, format!("unknown character `{ch}`"));
        i += ch.len_utf8();
        out.push(Token { tok: Tok::Unknown(ch), start, end: i });
    }
    out
}
