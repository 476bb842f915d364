//! Syntax trees for the synthesizable RTL subset and for SVA properties.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Byte range into the text a node was parsed from.
///
/// Spans never take part in equality: two trees compare equal when their
/// structure matches, wherever they came from.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn cover(&self, other: &Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Base {
    Bin,
    Hex,
    Dec,
    /// `'0` / `'1`: every bit of the context width set to the value.
    Fill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    LogNot,
    BitNot,
    RedOr,
    Neg,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::LogNot => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::RedOr => "|",
            UnaryOp::Neg => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    LogAnd,
    LogOr,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    BitAnd,
    BitOr,
    BitXor,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
            BinaryOp::Eq => "==",
            BinaryOp::Neq => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::LogOr => 1,
            BinaryOp::LogAnd => 2,
            BinaryOp::BitOr => 3,
            BinaryOp::BitXor => 4,
            BinaryOp::BitAnd => 5,
            BinaryOp::Eq | BinaryOp::Neq => 6,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Add | BinaryOp::Sub => 8,
        }
    }

    pub fn is_relational(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Neq | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::LogAnd | BinaryOp::LogOr)
    }
}

/// A signal reference with an optional bit-select.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ident {
    pub name: String,
    pub index: Option<Box<Expr>>,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident { name: name.into(), index: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Ident(Ident),
    Literal { width: Option<u32>, base: Base, value: u64 },
    /// Size cast, `30'(x)`.
    Cast { width: u32, inner: Box<Expr> },
    Unary { op: UnaryOp, inner: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Ternary { cond: Box<Expr>, then: Box<Expr>, other: Box<Expr> },
    Past { inner: Box<Expr>, depth: u32 },
    Stable { inner: Box<Expr> },
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(Ident::new(name))
    }

    pub fn sized(width: u32, base: Base, value: u64) -> Expr {
        Expr::Literal { width: Some(width), base, value }
    }

    pub fn bit(value: bool) -> Expr {
        Expr::sized(1, Base::Bin, value as u64)
    }

    pub fn fill(ones: bool) -> Expr {
        Expr::Literal { width: None, base: Base::Fill, value: ones as u64 }
    }

    pub fn unary(op: UnaryOp, inner: Expr) -> Expr {
        Expr::Unary { op, inner: Box::new(inner) }
    }

    pub fn not(inner: Expr) -> Expr {
        Expr::unary(UnaryOp::LogNot, inner)
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::LogAnd, lhs, rhs)
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::LogOr, lhs, rhs)
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Eq, lhs, rhs)
    }

    /// Left-folded `&&` over `terms`; `None` when empty.
    pub fn conjunction<I: IntoIterator<Item = Expr>>(terms: I) -> Option<Expr> {
        terms.into_iter().reduce(Expr::and)
    }

    pub fn disjunction<I: IntoIterator<Item = Expr>>(terms: I) -> Option<Expr> {
        terms.into_iter().reduce(Expr::or)
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Expr::Literal { .. })
    }

    /// Terms of the left spine of a `&&` chain: `(a && b) && c` gives `[a, b, c]`.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Expr::Binary { op: BinaryOp::LogAnd, lhs, rhs } = cur {
            out.push(rhs.as_ref());
            cur = lhs;
        }
        out.push(cur);
        out.reverse();
        out
    }

    /// Every identifier name read by the expression, in first-seen order.
    pub fn idents(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Ident(id) = e {
                if !out.contains(&id.name) {
                    out.push(id.name.clone());
                }
            }
        });
        out
    }

    /// Pre-order visit of every sub-expression, bit-select indices included.
    pub fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Ident(id) => {
                if let Some(ix) = &id.index {
                    ix.visit(f);
                }
            }
            Expr::Literal { .. } => {}
            Expr::Cast { inner, .. }
            | Expr::Unary { inner, .. }
            | Expr::Past { inner, .. }
            | Expr::Stable { inner } => inner.visit(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            Expr::Ternary { cond, then, other } => {
                cond.visit(f);
                then.visit(f);
                other.visit(f);
            }
        }
    }

    pub fn contains_ternary(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Ternary { .. }));
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    Posedge,
    Negedge,
    Level,
}

impl Edge {
    pub fn keyword(self) -> &'static str {
        match self {
            Edge::Posedge => "posedge",
            Edge::Negedge => "negedge",
            Edge::Level => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assign {
    pub lhs: Ident,
    pub rhs: Expr,
    pub nonblocking: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfArm {
    pub cond: Expr,
    pub body: Vec<Stmt>,
    /// Range of the guard expression.
    pub cond_span: Span,
    /// Range of the whole arm, guard through the end of the body.
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElseArm {
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfStmt {
    pub arms: Vec<IfArm>,
    pub else_arm: Option<ElseArm>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Vec<Stmt>,
    pub labels_span: Span,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseStmt {
    pub selector: Expr,
    pub arms: Vec<CaseArm>,
    pub default: Option<ElseArm>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stmt {
    Assign(Assign),
    If(IfStmt),
    Case(CaseStmt),
    Block(Vec<Stmt>),
}

impl Stmt {
    pub fn span(&self) -> Option<Span> {
        match self {
            Stmt::Assign(a) => Some(a.span),
            Stmt::If(s) => Some(s.span),
            Stmt::Case(s) => Some(s.span),
            Stmt::Block(b) => {
                let spans: Vec<Span> = b.iter().filter_map(Stmt::span).collect();
                spans.iter().copied().reduce(|a, b| a.cover(&b))
            }
        }
    }

    /// Every assignment in the subtree, in source order.
    pub fn assigns(&self) -> Vec<&Assign> {
        let mut out = Vec::new();
        collect_assigns(std::slice::from_ref(self), &mut out);
        out
    }
}

pub fn collect_assigns<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a Assign>) {
    for s in stmts {
        match s {
            Stmt::Assign(a) => out.push(a),
            Stmt::If(i) => {
                for arm in &i.arms {
                    collect_assigns(&arm.body, out);
                }
                if let Some(e) = &i.else_arm {
                    collect_assigns(&e.body, out);
                }
            }
            Stmt::Case(c) => {
                for arm in &c.arms {
                    collect_assigns(&arm.body, out);
                }
                if let Some(d) = &c.default {
                    collect_assigns(&d.body, out);
                }
            }
            Stmt::Block(b) => collect_assigns(b, out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlwaysKind {
    Always,
    AlwaysFf,
    AlwaysComb,
}

impl AlwaysKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AlwaysKind::Always => "always",
            AlwaysKind::AlwaysFf => "always_ff",
            AlwaysKind::AlwaysComb => "always_comb",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensItem {
    pub edge: Edge,
    pub signal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlwaysBlock {
    pub kind: AlwaysKind,
    pub sensitivity: Vec<SensItem>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl AlwaysBlock {
    /// Edge-triggered blocks update state at a clock edge; the rest settle
    /// combinationally.
    pub fn is_clocked(&self) -> bool {
        self.sensitivity.iter().any(|s| s.edge != Edge::Level)
    }

    /// First posedge entry, taken as the clock.
    pub fn clock(&self) -> Option<(Edge, &str)> {
        self.sensitivity
            .iter()
            .find(|s| s.edge == Edge::Posedge)
            .or_else(|| self.sensitivity.iter().find(|s| s.edge == Edge::Negedge))
            .map(|s| (s.edge, s.signal.as_str()))
    }

    /// Negedge entries other than the clock, taken as active-low resets.
    pub fn resets(&self) -> Vec<&str> {
        let clock = self.clock().map(|c| c.1);
        self.sensitivity
            .iter()
            .filter(|s| s.edge == Edge::Negedge && Some(s.signal.as_str()) != clock)
            .map(|s| s.signal.as_str())
            .collect()
    }

    pub fn assigns(&self) -> Vec<&Assign> {
        let mut out = Vec::new();
        collect_assigns(&self.body, &mut out);
        out
    }

    /// Names assigned anywhere in the block, first-seen order.
    pub fn targets(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in self.assigns() {
            if !out.contains(&a.lhs.name) {
                out.push(a.lhs.name.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decl {
    pub name: String,
    pub width: u32,
    pub direction: Direction,
}

/// `localparam` / `parameter` constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub width: u32,
    pub value: Expr,
}

/// Module instantiation, kept as raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocRegion {
    pub macro_name: String,
    pub taken: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtlModule {
    pub name: String,
    pub params: Vec<Param>,
    pub decls: Vec<Decl>,
    pub always_blocks: Vec<AlwaysBlock>,
    pub instances: Vec<Instance>,
    pub preproc_regions: Vec<PreprocRegion>,
}

impl RtlModule {
    pub fn new(name: impl Into<String>) -> Self {
        RtlModule {
            name: name.into(),
            params: Vec::new(),
            decls: Vec::new(),
            always_blocks: Vec::new(),
            instances: Vec::new(),
            preproc_regions: Vec::new(),
        }
    }

    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.decl(name)
            .map(|d| d.width)
            .or_else(|| self.params.iter().find(|p| p.name == name).map(|p| p.width))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clocking {
    pub edge: Edge,
    pub signal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub name: String,
    pub clocking: Option<Clocking>,
    pub disable_iff: Option<Expr>,
    pub antecedent: Expr,
    pub delay: u32,
    pub consequent: Expr,
}

impl Property {
    /// Names compared by `==`/`!=` on the left of consequent conjuncts.
    pub fn consequent_targets(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in self.consequent.conjuncts() {
            let lhs = match c {
                Expr::Binary { op, lhs, .. } if op.is_relational() => lhs.as_ref(),
                other => other,
            };
            for n in lhs.idents() {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::hdl::print::print_expr(self))
    }
}
