//! `property ... endproperty` and `assert property (...)` units.

use super::diag::{normalize, DiagCode, DiagSink, Diagnostic};
use super::expr::{is_reserved, Bail, Cursor, PResult};
use super::lexer::{lex, Tok};
use crate::hdl::{Clocking, Edge, Expr, Property, Span};
use serde::Serialize;
use std::collections::HashSet;

/// One declared unit and whether it parsed cleanly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnitOutcome {
    pub name: String,
    pub offset: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct PropertyParse {
    pub properties: Vec<Property>,
    /// Every opener seen, accepted or not.
    pub units: Vec<UnitOutcome>,
    pub diagnostics: Vec<Diagnostic>,
}

impl PropertyParse {
    pub fn declared(&self) -> usize {
        self.units.len()
    }
}

pub fn parse_properties(src: &str) -> PropertyParse {
    parse_properties_bytes(src.as_bytes())
}

pub fn parse_properties_bytes(bytes: &[u8]) -> PropertyParse {
    let text = normalize(bytes);
    let mut diags = DiagSink::new(&text);
    let toks = lex(&text, &mut diags);
    let mut properties = Vec::new();
    let mut units = Vec::new();
    {
        let mut cur = Cursor::new(&toks, &mut diags, text.len());
        let mut names: HashSet<String> = HashSet::new();
        let mut stray_reported = false;
        while !cur.at_end() {
            let start = cur.offset();
            let diags_before = cur.diags.items.len();
            let labelled = matches!(cur.peek().map(|t| &t.tok), Some(Tok::Ident(s)) if !is_reserved(s))
                && cur.peek_at(1).is_some_and(|t| t.is_op(":"))
                && cur.peek_at(2).is_some_and(|t| t.is_kw("assert") || t.is_kw("assume") || t.is_kw("cover"));
            let outcome = if cur.at_kw("property") {
                Some(named_unit(&mut cur))
            } else if labelled || is_assert_opener(&cur) {
                let label = if labelled {
                    let l = cur.expect_ident().ok();
                    cur.bump();
                    l
                } else {
                    None
                };
                if is_reference(&cur, &names) {
                    // `assert property (P);` re-uses a declared unit
                    skip_to_semicolon(&mut cur);
                    None
                } else {
                    let fallback = format!("assert_{}", units.len());
                    Some(assert_unit(&mut cur, label.unwrap_or(fallback)))
                }
            } else {
                if !stray_reported {
                    let found = cur.describe();
                    cur.diags.warn(DiagCode::Skipped, start, format!("skipping {found} outside any property"));
                    stray_reported = true;
                }
                cur.bump();
                None
            };
            let Some((name, result)) = outcome else { continue };
            // lexer errors were recorded up front, so also look inside the unit's range
            let end = cur.prev_end().max(start + 1);
            let clean = !cur.diags.items[diags_before..].iter().any(|d| d.is_error())
                && !cur.diags.items.iter().any(|d| d.is_error() && d.offset >= start && d.offset < end);
            let accepted = match result {
                Ok(p) if clean => {
                    if !names.insert(p.name.clone()) {
                        cur.diags.warn(DiagCode::DuplicateName, start, format!("property `{}` declared again", p.name));
                    }
                    properties.push(p);
                    true
                }
                _ => false,
            };
            units.push(UnitOutcome { name, offset: start, accepted });
        }
    }
    PropertyParse { properties, units, diagnostics: diags.finish() }
}

fn is_assert_opener(cur: &Cursor) -> bool {
    (cur.at_kw("assert") || cur.at_kw("assume") || cur.at_kw("cover"))
        && cur.peek_at(1).is_some_and(|t| t.is_kw("property"))
}

fn is_reference(cur: &Cursor, names: &HashSet<String>) -> bool {
    // assert property ( NAME ) ;
    matches!(cur.peek_at(3).map(|t| &t.tok), Some(Tok::Ident(n)) if names.contains(n))
        && cur.peek_at(2).is_some_and(|t| t.is_op("("))
        && cur.peek_at(4).is_some_and(|t| t.is_op(")"))
}

fn skip_to_semicolon(cur: &mut Cursor) {
    let mut depth = 0i32;
    while let Some(t) = cur.bump() {
        if t.is_op("(") {
            depth += 1;
        } else if t.is_op(")") {
            depth -= 1;
        } else if depth <= 0 && t.is_op(";") {
            return;
        }
    }
}

fn at_unit_start(cur: &Cursor) -> bool {
    cur.at_kw("property") || is_assert_opener(cur)
}

/// Token index range up to the closing keyword, used for the paren check.
fn parens_balanced(cur: &Cursor, until: impl Fn(&super::lexer::Token) -> bool) -> Option<usize> {
    let mut depth = 0i64;
    let mut i = cur.pos;
    let mut first_open = None;
    while let Some(t) = cur.toks.get(i) {
        if until(t) {
            break;
        }
        if t.is_op("(") {
            depth += 1;
            first_open.get_or_insert(t.start);
        } else if t.is_op(")") {
            depth -= 1;
            if depth < 0 {
                return Some(t.start);
            }
        }
        i += 1;
    }
    if depth != 0 {
        first_open.or(Some(cur.offset()))
    } else {
        None
    }
}

fn named_unit(cur: &mut Cursor) -> (String, PResult<Property>) {
    let open_at = cur.offset();
    cur.bump();
    let name = match cur.expect_ident() {
        Ok(n) => n,
        Err(Bail) => {
            recover_named(cur);
            return ("<unnamed>".to_string(), Err(Bail));
        }
    };
    let r = named_body(cur, name.clone(), open_at);
    if r.is_err() {
        recover_named(cur);
    }
    (name, r)
}

fn named_body(cur: &mut Cursor, name: String, open_at: usize) -> PResult<Property> {
    if cur.at_op("(") {
        cur.skip_group()?;
    }
    cur.expect_op(";")?;
    if let Some(at) = parens_balanced(cur, |t| t.is_kw("endproperty") || t.is_kw("property")) {
        cur.diags.error(DiagCode::UnbalancedParens, at, "unbalanced parentheses in property");
        return Err(Bail);
    }
    let p = body(cur, name, &[";"])?;
    cur.expect_op(";")?;
    if !cur.eat_kw("endproperty") {
        // pinned to this unit's last character, not the next unit
        let at = cur.prev_end().saturating_sub(1);
        cur.diags.error(DiagCode::MissingEndproperty, at, format!("property opened at offset {open_at} lacks `endproperty`"));
        return Err(Bail);
    }
    if cur.eat_op(":") {
        cur.expect_ident()?;
    }
    Ok(p)
}

fn recover_named(cur: &mut Cursor) {
    while let Some(t) = cur.peek() {
        if t.is_kw("endproperty") {
            cur.bump();
            if cur.eat_op(":") {
                let _ = cur.expect_ident();
            }
            return;
        }
        if at_unit_start(cur) {
            // the next unit starts before this one closed
            let at = cur.prev_end().saturating_sub(1);
            if !cur.diags.items.iter().any(|d| d.code == DiagCode::MissingEndproperty && d.offset == at) {
                cur.diags.error(DiagCode::MissingEndproperty, at, "property lacks `endproperty`");
            }
            return;
        }
        cur.bump();
    }
    let at = cur.offset();
    if !cur.diags.items.iter().any(|d| d.code == DiagCode::MissingEndproperty) {
        cur.diags.error(DiagCode::MissingEndproperty, at, "property lacks `endproperty`");
    }
}

fn assert_unit(cur: &mut Cursor, name: String) -> (String, PResult<Property>) {
    let r = assert_body(cur, name.clone());
    if r.is_err() {
        // resynchronize on the statement end or the next unit
        let mut depth = 0i32;
        while let Some(t) = cur.peek() {
            if depth <= 0 && at_unit_start(cur) {
                break;
            }
            cur.bump();
            if t.is_op("(") {
                depth += 1;
            } else if t.is_op(")") {
                depth -= 1;
            } else if depth <= 0 && t.is_op(";") {
                break;
            }
        }
    }
    (name, r)
}

fn assert_body(cur: &mut Cursor, name: String) -> PResult<Property> {
    cur.bump();
    cur.bump();
    if !cur.at_op("(") {
        let found = cur.describe();
        return cur.fail(DiagCode::Syntax, format!("expected `(` after `assert property`, found {found}"));
    }
    if let Some(at) = parens_balanced(cur, |t| t.is_op(";") || t.is_kw("property") || t.is_kw("assert")) {
        cur.diags.error(DiagCode::UnbalancedParens, at, "unbalanced parentheses in assertion");
        return Err(Bail);
    }
    cur.bump();
    let p = body(cur, name, &[")"])?;
    cur.expect_op(")")?;
    if cur.eat_kw("else") {
        match cur.peek().map(|t| &t.tok) {
            Some(Tok::System(_)) => {
                cur.bump();
                if cur.at_op("(") {
                    cur.skip_group()?;
                }
            }
            Some(Tok::Ident(kw)) if kw == "begin" => {
                let mut depth = 0;
                while let Some(t) = cur.bump() {
                    if t.is_kw("begin") {
                        depth += 1;
                    } else if t.is_kw("end") {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                }
                return Ok(p);
            }
            _ => {
                let found = cur.describe();
                return cur.fail(DiagCode::Syntax, format!("expected action after `else`, found {found}"));
            }
        }
    }
    cur.expect_op(";")?;
    Ok(p)
}

/// `[@(edge sig)] [disable iff (e)] ante (|->|=>) [##N] cons`, stopping at
/// any token in `stop`.
fn body(cur: &mut Cursor, name: String, stop: &[&str]) -> PResult<Property> {
    let mut clocking = None;
    if cur.eat_op("@") {
        cur.expect_op("(")?;
        let edge = if cur.eat_kw("posedge") {
            Edge::Posedge
        } else if cur.eat_kw("negedge") {
            Edge::Negedge
        } else {
            return cur.fail(DiagCode::Unsupported, "clocking event needs `posedge` or `negedge`");
        };
        let signal = cur.expect_ident()?;
        cur.expect_op(")")?;
        clocking = Some(Clocking { edge, signal });
    }
    let mut disable_iff = None;
    if cur.eat_kw("disable") {
        cur.expect_kw("iff")?;
        cur.expect_op("(")?;
        disable_iff = Some(checked_expr(cur)?);
        cur.expect_op(")")?;
    }
    let first = checked_expr(cur)?;
    if cur.at_op("=") {
        return cur.fail(DiagCode::AssignInAntecedent, "`=` is an assignment, not a comparison");
    }
    let mut antecedent = None;
    let mut delay = 0u32;
    let mut consequent = first;
    while cur.at_op("|->") || cur.at_op("|=>") {
        let at = cur.offset();
        let nonoverlap = cur.at_op("|=>");
        cur.bump();
        if delay > 0 {
            cur.diags.error(DiagCode::Unsupported, at, "implication after a delayed consequent is not supported");
            return Err(Bail);
        }
        if nonoverlap {
            cur.diags.warn(DiagCode::NonoverlapImplication, at, "`|=>` read as `|-> ##1`");
            delay += 1;
        }
        if cur.eat_op("##") {
            let at = cur.offset();
            if cur.at_op("[") {
                return cur.fail(DiagCode::Unsupported, "delay ranges are not supported");
            }
            let n = cur.expect_int()?;
            if n > u32::MAX as u64 / 2 {
                cur.diags.error(DiagCode::BadLiteral, at, "delay too large");
                return Err(Bail);
            }
            delay += n as u32;
        }
        // chained implications fold into one antecedent
        antecedent = Some(match antecedent {
            None => consequent,
            Some(a) => Expr::and(a, consequent),
        });
        consequent = checked_expr(cur)?;
        if cur.at_op("=") {
            return cur.fail(DiagCode::AssignInConsequent, "`=` is an assignment, not a comparison");
        }
    }
    if !stop.iter().any(|s| cur.at_op(s)) {
        let found = cur.describe();
        let code = if matches!(cur.peek().map(|t| &t.tok), Some(Tok::Unknown(_))) {
            DiagCode::UnknownToken
        } else {
            DiagCode::Syntax
        };
        return cur.fail(code, format!("unexpected {found} in property"));
    }
    let antecedent = antecedent.unwrap_or_else(|| Expr::bit(true));
    let p = Property { name, clocking, disable_iff, antecedent, delay, consequent };
    Ok(p)
}

fn checked_expr(cur: &mut Cursor) -> PResult<Expr> {
    let start = cur.offset();
    let e = cur.expr()?;
    if e.contains_ternary() {
        cur.diags.error(DiagCode::TernaryInProperty, start, "ternary operators are not allowed in properties");
        return Err(Bail);
    }
    Ok(e)
}

/// Span of each declared unit, for callers that echo source text.
pub fn unit_spans(parse: &PropertyParse, text_len: usize) -> Vec<Span> {
    let mut out = Vec::new();
    for (i, u) in parse.units.iter().enumerate() {
        let end = parse.units.get(i + 1).map_or(text_len, |n| n.offset);
        out.push(Span::new(u.offset, end));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{print_property, BinaryOp};

    const RESET_TIMER: &str = "property ResetTimer1; @(posedge clk_aon_i) (!rst_aon_ni)|->wakeup_timer_cnt_q=1'b0; endproperty
property ResetTimer2;
@(posedge clk_aon_i)(wakeup_timer_cnt_clr||cfg_fsm_rst_i||trigger_h2l)|->wakeup_timer_cnt_q=='0;
endproperty
";

    #[test]
    fn assignment_in_consequent() {
        let r = parse_properties(RESET_TIMER);
        assert_eq!(r.declared(), 2);
        assert_eq!(r.properties.len(), 1);
        assert_eq!(r.properties[0].name, "ResetTimer2");
        let errs: Vec<_> = r.diagnostics.iter().filter(|d| d.is_error()).collect();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, DiagCode::AssignInConsequent);
        assert_eq!(errs[0].line, 1);
    }

    #[test]
    fn nonoverlap_becomes_delay() {
        let r = parse_properties("assert property (@(posedge clk_i) (rst_ni && (wr_state_d !== IDLE)) |=> (wr_state_q == wr_state_d)) else $error(\"x\");");
        assert_eq!(r.properties.len(), 1);
        assert_eq!(r.properties[0].delay, 1);
        assert!(r.diagnostics.iter().any(|d| d.code == DiagCode::NonoverlapImplication && !d.is_error()));
    }

    #[test]
    fn missing_endproperty() {
        let r = parse_properties("property A; (a) |-> b == 1'b1;\nproperty B; (a) |-> b == 1'b0; endproperty\n");
        assert_eq!(r.declared(), 2);
        assert_eq!(r.properties.len(), 1);
        assert!(r.diagnostics.iter().any(|d| d.code == DiagCode::MissingEndproperty));
    }

    #[test]
    fn unbalanced_parens() {
        let r = parse_properties("property A; ((a) |-> b; endproperty");
        assert!(r.properties.is_empty());
        assert_eq!(r.diagnostics[0].code, DiagCode::UnbalancedParens);
    }

    #[test]
    fn ternary_rejected() {
        let r = parse_properties("property A; @(posedge c) a |-> q == (b ? 1'b1 : 1'b0); endproperty");
        assert!(r.properties.is_empty());
        assert!(r.diagnostics.iter().any(|d| d.code == DiagCode::TernaryInProperty));
    }

    #[test]
    fn round_trip_with_delay() {
        let src = "property X; @(posedge clk_i) ( a ) && ( b || c ) |-> ##2 q == $past(d) ; endproperty";
        let r = parse_properties(src);
        assert_eq!(r.properties.len(), 1);
        assert_eq!(print_property(&r.properties[0]), src);
    }

    #[test]
    fn chained_implication_folds() {
        let r = parse_properties("property X; a |-> b |-> c; endproperty");
        let p = &r.properties[0];
        assert_eq!(p.antecedent, Expr::and(Expr::ident("a"), Expr::ident("b")));
        assert_eq!(p.consequent, Expr::ident("c"));
    }

    #[test]
    fn diagnostics_sorted() {
        let r = parse_properties("property A; a |-> b = c; endproperty\nproperty B; a |-> 4'b2 == b; endproperty\n");
        let offs: Vec<usize> = r.diagnostics.iter().map(|d| d.offset).collect();
        let mut sorted = offs.clone();
        sorted.sort();
        assert_eq!(offs, sorted);
        assert_eq!(r.declared(), 2);
        assert!(r.properties.is_empty());
    }

    #[test]
    fn bare_consequent_gets_true_antecedent() {
        let r = parse_properties("assert property (@(posedge c) q != 1'b0);");
        assert_eq!(r.properties[0].antecedent, Expr::bit(true));
        assert!(matches!(r.properties[0].consequent, Expr::Binary { op: BinaryOp::Neq, .. }));
    }
}
