//! Canonical text for modules, statements, expressions and properties.
//!
//! Output re-parses to a structurally equal tree.

use super::ast::*;
use std::fmt::Write;

const INDENT: &str = "  ";

pub fn print_literal(width: Option<u32>, base: Base, value: u64) -> String {
    match (width, base) {
        (_, Base::Fill) => format!("'{}", value & 1),
        (Some(w), Base::Bin) => format!("{w}'b{:0>pad$b}", value, pad = w.min(64) as usize),
        (Some(w), Base::Hex) => {
            format!("{w}'h{:0>pad$x}", value, pad = w.min(64).div_ceil(4) as usize)
        }
        (Some(w), Base::Dec) => format!("{w}'d{value}"),
        (None, Base::Bin) => format!("'b{value:b}"),
        (None, Base::Hex) => format!("'h{value:x}"),
        (None, Base::Dec) => format!("{value}"),
    }
}

fn needs_parens(parent: BinaryOp, child: &Expr, right: bool) -> bool {
    match child {
        Expr::Ternary { .. } => true,
        Expr::Binary { op, .. } => {
            let (pp, cp) = (parent.precedence(), op.precedence());
            if cp < pp || (right && cp == pp) {
                return true;
            }
            // readability: mixed logical operators and arithmetic under a
            // comparison always get explicit grouping
            if parent.is_logical() && op.is_logical() && *op != parent {
                return true;
            }
            parent.is_relational() && cp != pp
        }
        _ => false,
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Ident(id) => {
            out.push_str(&id.name);
            if let Some(ix) = &id.index {
                out.push('[');
                write_expr(out, ix);
                out.push(']');
            }
        }
        Expr::Literal { width, base, value } => out.push_str(&print_literal(*width, *base, *value)),
        Expr::Cast { width, inner } => {
            let _ = write!(out, "{width}'(");
            write_expr(out, inner);
            out.push(')');
        }
        Expr::Unary { op, inner } => {
            out.push_str(op.symbol());
            let wrap = matches!(inner.as_ref(), Expr::Binary { .. } | Expr::Ternary { .. })
                || (*op == UnaryOp::Neg && matches!(inner.as_ref(), Expr::Unary { op: UnaryOp::Neg, .. }))
                || (*op == UnaryOp::RedOr && matches!(inner.as_ref(), Expr::Unary { op: UnaryOp::RedOr, .. }));
            if wrap {
                out.push('(');
                write_expr(out, inner);
                out.push(')');
            } else {
                write_expr(out, inner);
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let lp = needs_parens(*op, lhs, false);
            let rp = needs_parens(*op, rhs, true);
            if lp {
                out.push('(');
            }
            write_expr(out, lhs);
            if lp {
                out.push(')');
            }
            let _ = write!(out, " {} ", op.symbol());
            if rp {
                out.push('(');
            }
            write_expr(out, rhs);
            if rp {
                out.push(')');
            }
        }
        Expr::Ternary { cond, then, other } => {
            for (i, part) in [cond, then, other].into_iter().enumerate() {
                if i == 1 {
                    out.push_str(" ? ");
                } else if i == 2 {
                    out.push_str(" : ");
                }
                let wrap = matches!(part.as_ref(), Expr::Ternary { .. });
                if wrap {
                    out.push('(');
                }
                write_expr(out, part);
                if wrap {
                    out.push(')');
                }
            }
        }
        Expr::Past { inner, depth } => {
            out.push_str("$past(");
            write_expr(out, inner);
            if *depth != 1 {
                let _ = write!(out, ", {depth}");
            }
            out.push(')');
        }
        Expr::Stable { inner } => {
            out.push_str("$stable(");
            write_expr(out, inner);
            out.push(')');
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_body(out: &mut String, body: &[Stmt], depth: usize) {
    out.push_str("begin\n");
    for s in body {
        write_stmt(out, s, depth + 1);
    }
    out.push_str(&INDENT.repeat(depth));
    out.push_str("end");
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    out.push_str(&pad);
    match s {
        Stmt::Assign(a) => {
            let mut lhs = String::new();
            write_expr(&mut lhs, &Expr::Ident(a.lhs.clone()));
            let op = if a.nonblocking { "<=" } else { "=" };
            let _ = writeln!(out, "{lhs} {op} {};", print_expr(&a.rhs));
        }
        Stmt::If(i) => {
            for (n, arm) in i.arms.iter().enumerate() {
                if n > 0 {
                    out.push_str(" else ");
                }
                let _ = write!(out, "if ({}) ", print_expr(&arm.cond));
                write_body(out, &arm.body, depth);
            }
            if let Some(e) = &i.else_arm {
                out.push_str(" else ");
                write_body(out, &e.body, depth);
            }
            out.push('\n');
        }
        Stmt::Case(c) => {
            let _ = writeln!(out, "case ({})", print_expr(&c.selector));
            let inner = INDENT.repeat(depth + 1);
            for arm in &c.arms {
                let labels: Vec<String> = arm.labels.iter().map(print_expr).collect();
                let _ = write!(out, "{inner}{}: ", labels.join(", "));
                write_body(out, &arm.body, depth + 1);
                out.push('\n');
            }
            if let Some(d) = &c.default {
                let _ = write!(out, "{inner}default: ");
                write_body(out, &d.body, depth + 1);
                out.push('\n');
            }
            let _ = writeln!(out, "{pad}endcase");
        }
        Stmt::Block(b) => {
            write_body(out, b, depth);
            out.push('\n');
        }
    }
}

pub fn print_stmt(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, 0);
    out
}

fn write_always(out: &mut String, b: &AlwaysBlock, depth: usize) {
    out.push_str(&INDENT.repeat(depth));
    out.push_str(b.kind.keyword());
    if b.kind != AlwaysKind::AlwaysComb || !b.sensitivity.is_empty() {
        let items: Vec<String> = b
            .sensitivity
            .iter()
            .map(|s| match s.edge {
                Edge::Level => s.signal.clone(),
                e => format!("{} {}", e.keyword(), s.signal),
            })
            .collect();
        let _ = write!(out, " @({})", items.join(" or "));
    }
    out.push(' ');
    write_body(out, &b.body, depth);
    out.push('\n');
}

pub fn print_always(b: &AlwaysBlock) -> String {
    let mut out = String::new();
    write_always(&mut out, b, 0);
    out
}

fn range(width: u32) -> String {
    if width <= 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

pub fn print_module(m: &RtlModule) -> String {
    let ports: Vec<&Decl> = m.decls.iter().filter(|d| d.direction != Direction::Internal).collect();
    let internals: Vec<&Decl> = m.decls.iter().filter(|d| d.direction == Direction::Internal).collect();
    let empty = ports.is_empty()
        && internals.is_empty()
        && m.params.is_empty()
        && m.always_blocks.is_empty()
        && m.instances.is_empty();
    if empty {
        return format!("module {}; endmodule\n", m.name);
    }
    let mut out = String::new();
    if ports.is_empty() {
        let _ = writeln!(out, "module {};", m.name);
    } else {
        let _ = writeln!(out, "module {} (", m.name);
        for (i, d) in ports.iter().enumerate() {
            let dir = if d.direction == Direction::Input { "input" } else { "output" };
            let sep = if i + 1 == ports.len() { "" } else { "," };
            let _ = writeln!(out, "{INDENT}{dir} logic {}{}{sep}", range(d.width), d.name);
        }
        out.push_str(");\n");
    }
    for p in &m.params {
        let _ = writeln!(out, "{INDENT}localparam logic {}{} = {};", range(p.width), p.name, print_expr(&p.value));
    }
    for d in internals {
        let _ = writeln!(out, "{INDENT}logic {}{};", range(d.width), d.name);
    }
    for b in &m.always_blocks {
        write_always(&mut out, b, 1);
    }
    for inst in &m.instances {
        let _ = writeln!(out, "{INDENT}{}", inst.text.trim());
    }
    out.push_str("endmodule\n");
    out
}

pub fn print_property(p: &Property) -> String {
    let mut out = format!("property {}; ", p.name);
    if let Some(c) = &p.clocking {
        let _ = write!(out, "@({} {}) ", c.edge.keyword(), c.signal);
    }
    if let Some(d) = &p.disable_iff {
        let _ = write!(out, "disable iff ({}) ", print_expr(d));
    }
    let terms: Vec<String> = p.antecedent.conjuncts().into_iter().map(|t| format!("( {} )", print_expr(t))).collect();
    out.push_str(&terms.join(" && "));
    out.push_str(" |-> ");
    if p.delay > 0 {
        let _ = write!(out, "##{} ", p.delay);
    }
    out.push_str(&print_expr(&p.consequent));
    out.push_str(" ; endproperty");
    out
}

/// Properties one per paragraph, newline-terminated.
pub fn print_properties(props: &[Property]) -> String {
    let mut out = String::new();
    for (i, p) in props.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_property(p));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reset_prop() -> Property {
        Property {
            name: "P".into(),
            clocking: Some(Clocking { edge: Edge::Posedge, signal: "clk_i".into() }),
            disable_iff: None,
            antecedent: Expr::unary(UnaryOp::BitNot, Expr::ident("rst_ni")),
            delay: 0,
            consequent: Expr::and(
                Expr::eq(Expr::ident("wr_state_q"), Expr::ident("IDLE")),
                Expr::eq(Expr::ident("wr_cnt_q"), Expr::fill(false)),
            ),
        }
    }

    #[test]
    fn sync_reset_property_text() {
        assert_eq!(
            print_property(&reset_prop()),
            "property P; @(posedge clk_i) ( ~rst_ni ) |-> wr_state_q == IDLE && wr_cnt_q == '0 ; endproperty"
        );
    }

    #[test]
    fn delay_two() {
        let mut p = reset_prop();
        p.delay = 2;
        assert!(print_property(&p).contains("|-> ##2 wr_state_q"));
    }

    #[test]
    fn empty_module() {
        assert_eq!(print_module(&RtlModule::new("m")).trim(), "module m; endmodule");
    }

    #[test]
    fn literals() {
        assert_eq!(print_literal(Some(5), Base::Bin, 0b10011), "5'b10011");
        assert_eq!(print_literal(Some(7), Base::Hex, 0x26), "7'h26");
        assert_eq!(print_literal(None, Base::Fill, 0), "'0");
        assert_eq!(print_literal(Some(4), Base::Dec, 9), "4'd9");
    }

    #[test]
    fn grouping() {
        let e = Expr::or(Expr::and(Expr::ident("a"), Expr::ident("b")), Expr::ident("c"));
        assert_eq!(print_expr(&e), "(a && b) || c");
        let e = Expr::eq(Expr::ident("q"), Expr::binary(BinaryOp::Sub, Expr::ident("q"), Expr::bit(true)));
        assert_eq!(print_expr(&e), "q == (q - 1'b1)");
        let e = Expr::Cast { width: 30, inner: Box::new(Expr::ident("t")) };
        assert_eq!(print_expr(&e), "30'(t)");
    }
}
