//! Token cursor and the expression grammar.

use super::diag::{DiagCode, DiagSink};
use super::lexer::{Tok, Token};
use crate::hdl::{BinaryOp, Expr, Ident, UnaryOp};

/// Raised once a diagnostic has been recorded; callers resynchronize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bail;

pub type PResult<T> = Result<T, Bail>;

pub struct Cursor<'a> {
    pub toks: &'a [Token],
    pub pos: usize,
    pub diags: &'a mut DiagSink,
    pub src_len: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token], diags: &'a mut DiagSink, src_len: usize) -> Self {
        Cursor { toks, pos: 0, diags, src_len }
    }

    pub fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    pub fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    /// Offset of the next token, or end of input.
    pub fn offset(&self) -> usize {
        self.peek().map_or(self.src_len, |t| t.start)
    }

    /// End offset of the last consumed token.
    pub fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    pub fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    pub fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    pub fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(t) => match &t.tok {
                Tok::Ident(s) => format!("`{s}`"),
                Tok::System(s) => format!("`${s}`"),
                Tok::Directive(s) => format!("`{s}"),
                Tok::Int(v) => format!("`{v}`"),
                Tok::Based { .. } => "literal".to_string(),
                Tok::Tick => "`'`".to_string(),
                Tok::Str(_) => "string".to_string(),
                Tok::Op(o) => format!("`{o}`"),
                Tok::Unknown(c) => format!("`{c}`"),
            },
        }
    }

    pub fn fail<T>(&mut self, code: DiagCode, msg: impl Into<String>) -> PResult<T> {
        let off = self.offset();
        self.diags.error(code, off, msg);
        Err(Bail)
    }

    pub fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            let found = self.describe();
            let code = if op == ")" { DiagCode::UnbalancedParens } else { DiagCode::Syntax };
            self.fail(code, format!("expected `{op}`, found {found}"))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            let found = self.describe();
            self.fail(DiagCode::Syntax, format!("expected `{kw}`, found {found}"))
        }
    }

    pub fn expect_ident(&mut self) -> PResult<String> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Ident(s)) if !is_reserved(s) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => {
                let found = self.describe();
                self.fail(DiagCode::Syntax, format!("expected identifier, found {found}"))
            }
        }
    }

    pub fn expect_int(&mut self) -> PResult<u64> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(*v)
            }
            Some(Tok::Based { value, .. }) => {
                self.pos += 1;
                Ok(*value)
            }
            _ => {
                let found = self.describe();
                self.fail(DiagCode::Syntax, format!("expected number, found {found}"))
            }
        }
    }

    /// Skips a balanced `(...)`, `[...]` or `{...}` group starting at the
    /// current token.
    pub fn skip_group(&mut self) -> PResult<()> {
        let open = match self.peek().map(|t| &t.tok) {
            Some(Tok::Op(o)) if matches!(*o, "(" | "[" | "{") => *o,
            _ => return Ok(()),
        };
        let close = match open {
            "(" => ")",
            "[" => "]",
            _ => "}",
        };
        let start = self.offset();
        let mut depth = 0usize;
        while let Some(t) = self.bump() {
            if t.is_op(open) {
                depth += 1;
            } else if t.is_op(close) {
                depth -= 1;
                if depth == 0 {
                    return Ok(());
                }
            }
        }
        self.diags.error(DiagCode::UnbalancedParens, start, format!("`{open}` is never closed"));
        Err(Bail)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.eat_op("?") {
            let then = self.expr()?;
            self.expect_op(":")?;
            let other = self.expr()?;
            return Ok(Expr::Ternary { cond: Box::new(cond), then: Box::new(then), other: Box::new(other) });
        }
        Ok(cond)
    }

    fn binop(&self) -> Option<(BinaryOp, usize)> {
        let t = self.peek()?;
        let op = match &t.tok {
            Tok::Op(o) => *o,
            _ => return None,
        };
        let bin = match op {
            "||" => BinaryOp::LogOr,
            "&&" => BinaryOp::LogAnd,
            "|" => BinaryOp::BitOr,
            "^" => BinaryOp::BitXor,
            "&" => BinaryOp::BitAnd,
            "==" | "===" => BinaryOp::Eq,
            "!=" | "!==" => BinaryOp::Neq,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            _ => return None,
        };
        Some((bin, bin.precedence() as usize))
    }

    fn binary(&mut self, min: usize) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if let Some(t) = self.peek() {
                if matches!(&t.tok, Tok::Op(o) if matches!(*o, "*" | "/" | "%" | "<<" | ">>" | "<<<" | ">>>")) {
                    let found = self.describe();
                    return self.fail(DiagCode::Unsupported, format!("operator {found} is not supported"));
                }
            }
            let Some((op, prec)) = self.binop() else { break };
            if prec < min {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek().map(|t| &t.tok) {
            Some(Tok::Op("!")) => Some(UnaryOp::LogNot),
            Some(Tok::Op("~")) => Some(UnaryOp::BitNot),
            Some(Tok::Op("|")) => Some(UnaryOp::RedOr),
            Some(Tok::Op("-")) => Some(UnaryOp::Neg),
            Some(Tok::Op("+")) => {
                self.pos += 1;
                return self.unary();
            }
            Some(Tok::Op("&")) | Some(Tok::Op("^")) => {
                let found = self.describe();
                return self.fail(DiagCode::Unsupported, format!("reduction {found} is not supported"));
            }
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::unary(op, inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek() else {
            return self.fail(DiagCode::Syntax, "expected expression, found end of input");
        };
        match &t.tok {
            Tok::Ident(name) if !is_reserved(name) => {
                self.pos += 1;
                let mut id = Ident::new(name.clone());
                if self.at_op("[") {
                    self.pos += 1;
                    let ix = self.expr()?;
                    if self.at_op(":") || self.at_op("+") && self.peek_at(1).is_some_and(|t| t.is_op(":")) {
                        return self.fail(DiagCode::Unsupported, "part-selects are not supported");
                    }
                    self.expect_op("]")?;
                    id.index = Some(Box::new(ix));
                }
                if self.at_op("::") || self.at_op(".") {
                    return self.fail(DiagCode::Unsupported, "scoped names are not supported");
                }
                Ok(Expr::Ident(id))
            }
            Tok::Based { width, base, value } => {
                self.pos += 1;
                Ok(Expr::Literal { width: *width, base: *base, value: *value })
            }
            Tok::Int(v) => {
                let v = *v;
                self.pos += 1;
                if self.at_op_tick() {
                    self.pos += 1;
                    self.expect_op("(")?;
                    let inner = self.expr()?;
                    self.expect_op(")")?;
                    if v == 0 || v > 64 {
                        let at = t.start;
                        self.diags.error(DiagCode::BadLiteral, at, format!("cast width {v} out of range"));
                        return Err(Bail);
                    }
                    return Ok(Expr::Cast { width: v as u32, inner: Box::new(inner) });
                }
                Ok(Expr::Literal { width: None, base: crate::hdl::Base::Dec, value: v })
            }
            Tok::Op("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(")")?;
                Ok(e)
            }
            Tok::Op("{") => self.fail(DiagCode::Unsupported, "concatenation is not supported"),
            Tok::System(name) => {
                let name = name.clone();
                self.pos += 1;
                match name.as_str() {
                    "past" => {
                        self.expect_op("(")?;
                        let inner = self.expr()?;
                        let mut depth = 1;
                        if self.eat_op(",") {
                            let at = self.offset();
                            let d = self.expect_int()?;
                            if d == 0 || d > u32::MAX as u64 {
                                self.diags.error(DiagCode::Syntax, at, "$past depth must be at least 1");
                                return Err(Bail);
                            }
                            depth = d as u32;
                        }
                        self.expect_op(")")?;
                        Ok(Expr::Past { inner: Box::new(inner), depth })
                    }
                    "stable" => {
                        self.expect_op("(")?;
                        let inner = self.expr()?;
                        self.expect_op(")")?;
                        Ok(Expr::Stable { inner: Box::new(inner) })
                    }
                    other => {
                        self.pos -= 1;
                        self.fail(DiagCode::Unsupported, format!("system function `${other}` is not supported"))
                    }
                }
            }
            Tok::Unknown(c) => {
                let c = *c;
                self.fail(DiagCode::UnknownToken, format!("unexpected character `{c}`"))
            }
            _ => {
                let found = self.describe();
                self.fail(DiagCode::Syntax, format!("expected expression, found {found}"))
            }
        }
    }

    fn at_op_tick(&self) -> bool {
        matches!(self.peek().map(|t| &t.tok), Some(Tok::Tick))
    }
}

const RESERVED: &[&str] = &[
    "always", "always_comb", "always_ff", "always_latch", "and", "assert", "assign", "assume", "begin", "bit",
    "case", "casex", "casez", "cover", "default", "disable", "else", "end", "endcase", "endfunction", "endgenerate",
    "endmodule", "endproperty", "endsequence", "endtask", "enum", "for", "function", "generate", "genvar", "if",
    "iff", "initial", "inout", "input", "int", "integer", "localparam", "logic", "module", "negedge", "not", "or",
    "output", "parameter", "posedge", "priority", "property", "reg", "sequence", "signed", "task", "typedef",
    "unique", "unique0", "unsigned", "while", "wire",
];

/// Reserved words of the supported subset.
pub fn is_reserved(s: &str) -> bool {
    RESERVED.binary_search(&s).is_ok()
}

pub fn reserved_words() -> &'static [&'static str] {
    RESERVED
}

#[cfg(test)]
mod tests {
    use super::super::lexer::lex;
    use super::*;
    use crate::hdl::print_expr;

    fn parse(src: &str) -> Expr {
        let mut d = DiagSink::new(src);
        let toks = lex(src, &mut d);
        let mut c = Cursor::new(&toks, &mut d, src.len());
        let e = c.expr().unwrap();
        assert!(c.at_end());
        e
    }

    #[test]
    fn reserved_sorted() {
        let mut v = RESERVED.to_vec();
        v.sort();
        assert_eq!(v, RESERVED);
    }

    #[test]
    fn precedence() {
        assert_eq!(print_expr(&parse("a && b || c")), "(a && b) || c");
        assert_eq!(print_expr(&parse("a || b && c")), "a || (b && c)");
        assert_eq!(print_expr(&parse("x == y - 1'b1")), "x == (y - 1'b1)");
        assert_eq!(print_expr(&parse("a != b || c != d")), "a != b || c != d");
    }

    #[test]
    fn left_assoc() {
        let e = parse("a - b - c");
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Sub,
                Expr::binary(BinaryOp::Sub, Expr::ident("a"), Expr::ident("b")),
                Expr::ident("c")
            )
        );
    }

    #[test]
    fn select_cast_past() {
        assert_eq!(print_expr(&parse("mr_sel[i]")), "mr_sel[i]");
        assert_eq!(print_expr(&parse("30'(t)")), "30'(t)");
        assert_eq!(print_expr(&parse("$past(a, 2)")), "$past(a, 2)");
        assert_eq!(print_expr(&parse("!(|x)")), "!|x");
    }

    #[test]
    fn case_equality_aliases() {
        assert_eq!(parse("a !== b"), parse("a != b"));
        assert_eq!(parse("a === b"), parse("a == b"));
    }
}
