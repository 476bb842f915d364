//! Oracle properties from the branch structure of an always block.
//!
//! Each execution path through an if/case region becomes one property:
//! the antecedent ANDs every guard on the way down, earlier arms negated,
//! and the consequent checks the path's assignments with `==`.

use crate::hdl::*;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("clocked block has no posedge/negedge clock")]
    NoClockFound,
    #[error("unsupported statement: {0}")]
    UnsupportedStmt(String),
    #[error("span {0}..{1} is not on an assignment path")]
    SpanNotOnPath(usize, usize),
}

#[derive(Debug, Clone, Default)]
pub struct SynthOptions {
    pub clock_hint: Option<Clocking>,
    /// Seeds the property-name suffixes.
    pub seed: u64,
    /// Also assert that signals a path leaves alone keep their value.
    pub stability: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Assignment,
    /// One-cycle-later check on a register copied from an assigned signal.
    Delayed,
    Stability,
}

#[derive(Debug, Clone)]
pub struct PathAssertion {
    pub kind: PathKind,
    pub path_condition: Expr,
    pub assignments: Vec<(Ident, Expr)>,
    /// Cover of the arm the path ends in; `None` for paths through a
    /// missing else or default.
    pub source_span: Option<Span>,
    /// Every guard or label range the path condition was built from.
    pub guard_spans: Vec<Span>,
    pub assign_spans: Vec<Span>,
    /// Top-level statement index of the enclosing region; `None` for
    /// unconditional statements.
    pub region: Option<usize>,
    pub block: usize,
    pub property: Property,
}

impl PathAssertion {
    /// Whether `site` falls on the path's guards or in its own arm.
    pub fn touches(&self, site: &Span) -> bool {
        self.source_span.is_some_and(|s| s.overlaps(site)) || self.guard_spans.iter().any(|g| g.overlaps(site))
    }
}

/// Logical negation with `!` pushed inward where the result stays readable.
pub fn negate(e: &Expr) -> Expr {
    match e {
        Expr::Unary { op: UnaryOp::LogNot, inner } => (**inner).clone(),
        Expr::Unary { op: UnaryOp::BitNot, inner } if matches!(**inner, Expr::Ident(_)) => (**inner).clone(),
        Expr::Binary { op: BinaryOp::LogAnd, lhs, rhs } => Expr::or(negate(lhs), negate(rhs)),
        Expr::Binary { op: BinaryOp::LogOr, lhs, rhs } => Expr::and(negate(lhs), negate(rhs)),
        Expr::Binary { op, lhs, rhs } if op.is_relational() => {
            let flipped = match op {
                BinaryOp::Eq => BinaryOp::Neq,
                BinaryOp::Neq => BinaryOp::Eq,
                BinaryOp::Lt => BinaryOp::Ge,
                BinaryOp::Ge => BinaryOp::Lt,
                BinaryOp::Gt => BinaryOp::Le,
                _ => BinaryOp::Gt,
            };
            Expr::Binary { op: flipped, lhs: lhs.clone(), rhs: rhs.clone() }
        }
        Expr::Literal { base: Base::Fill, value, .. } => Expr::fill(*value == 0),
        Expr::Literal { value, .. } => Expr::bit(*value == 0),
        _ => Expr::not(e.clone()),
    }
}

struct RawPath<'a> {
    terms: Vec<Expr>,
    assigns: Vec<&'a Assign>,
    guard_spans: Vec<Span>,
    body_span: Option<Span>,
    in_case: bool,
    region: Option<usize>,
    /// Targets that may be written elsewhere on this execution.
    excluded: HashSet<String>,
}

fn direct_and_nested(body: &[Stmt]) -> (Vec<&Assign>, Vec<&Stmt>) {
    let mut direct = Vec::new();
    let mut nested = Vec::new();
    fn go<'a>(body: &'a [Stmt], direct: &mut Vec<&'a Assign>, nested: &mut Vec<&'a Stmt>) {
        for s in body {
            match s {
                Stmt::Assign(a) => direct.push(a),
                Stmt::Block(b) => go(b, direct, nested),
                other => nested.push(other),
            }
        }
    }
    go(body, &mut direct, &mut nested);
    (direct, nested)
}

fn targets_of(stmts: &[&Stmt]) -> HashSet<String> {
    stmts.iter().flat_map(|s| s.assigns()).map(|a| a.lhs.name.clone()).collect()
}

fn walk_body<'a>(
    body: &'a [Stmt],
    terms: &[Expr],
    spans: &[Span],
    excluded: &HashSet<String>,
    body_span: Option<Span>,
    in_case: bool,
    region: Option<usize>,
    emit_empty: bool,
    out: &mut Vec<RawPath<'a>>,
) {
    let (direct, nested) = direct_and_nested(body);
    if !direct.is_empty() || (nested.is_empty() && emit_empty) {
        let mut ex = excluded.clone();
        ex.extend(targets_of(&nested));
        out.push(RawPath {
            terms: terms.to_vec(),
            assigns: direct.clone(),
            guard_spans: spans.to_vec(),
            body_span,
            in_case,
            region,
            excluded: ex,
        });
    }
    for (k, stmt) in nested.iter().enumerate() {
        let mut ex = excluded.clone();
        ex.extend(direct.iter().map(|a| a.lhs.name.clone()));
        let others: Vec<&Stmt> = nested.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, s)| *s).collect();
        ex.extend(targets_of(&others));
        walk_stmt(stmt, terms, spans, &ex, in_case, region, out);
    }
}

fn walk_stmt<'a>(
    stmt: &'a Stmt,
    terms: &[Expr],
    spans: &[Span],
    excluded: &HashSet<String>,
    in_case: bool,
    region: Option<usize>,
    out: &mut Vec<RawPath<'a>>,
) {
    match stmt {
        Stmt::If(s) => {
            let mut t = terms.to_vec();
            let mut sp = spans.to_vec();
            for arm in &s.arms {
                let mut arm_terms = t.clone();
                arm_terms.push(arm.cond.clone());
                let mut arm_spans = sp.clone();
                arm_spans.push(arm.cond_span);
                walk_body(&arm.body, &arm_terms, &arm_spans, excluded, Some(arm.span), in_case, region, true, out);
                t.push(negate(&arm.cond));
                sp.push(arm.cond_span);
            }
            match &s.else_arm {
                Some(e) => walk_body(&e.body, &t, &sp, excluded, Some(e.span), in_case, region, true, out),
                None => out.push(RawPath {
                    terms: t,
                    assigns: Vec::new(),
                    guard_spans: sp,
                    body_span: None,
                    in_case,
                    region,
                    excluded: excluded.clone(),
                }),
            }
        }
        Stmt::Case(c) => {
            let mut all_labels = Vec::new();
            for arm in &c.arms {
                let term = Expr::disjunction(arm.labels.iter().map(|l| Expr::eq(c.selector.clone(), l.clone())))
                    .unwrap_or_else(|| Expr::bit(false));
                let mut arm_terms = terms.to_vec();
                arm_terms.push(term);
                let mut arm_spans = spans.to_vec();
                arm_spans.push(arm.labels_span);
                walk_body(&arm.body, &arm_terms, &arm_spans, excluded, Some(arm.span), true, region, true, out);
                all_labels.extend(arm.labels.iter().cloned());
            }
            let mut t = terms.to_vec();
            t.extend(all_labels.into_iter().map(|l| Expr::binary(BinaryOp::Neq, c.selector.clone(), l)));
            let mut sp = spans.to_vec();
            sp.extend(c.arms.iter().map(|a| a.labels_span));
            match &c.default {
                Some(d) => walk_body(&d.body, &t, &sp, excluded, Some(d.span), true, region, true, out),
                None => out.push(RawPath {
                    terms: t,
                    assigns: Vec::new(),
                    guard_spans: sp,
                    body_span: None,
                    in_case: true,
                    region,
                    excluded: excluded.clone(),
                }),
            }
        }
        Stmt::Block(b) => walk_body(b, terms, spans, excluded, stmt.span(), in_case, region, false, out),
        Stmt::Assign(_) => unreachable!("assignments are collected by walk_body"),
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn suffix(mut h: u64) -> String {
    const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";
    (0..6)
        .map(|_| {
            let c = DIGITS[(h % 36) as usize] as char;
            h /= 36;
            c
        })
        .collect()
}

struct Namer {
    seed: u64,
    counter: u64,
    used: HashSet<String>,
}

impl Namer {
    fn next(&mut self, stem: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("{stem}{}", suffix(splitmix(self.seed ^ splitmix(self.counter))));
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn is_reset_name(n: &str) -> bool {
    let l = n.to_ascii_lowercase();
    l.contains("rst") || l.contains("reset")
}

fn stem(clocked: bool, cond: &Expr, targets: &[String], in_case: bool, resets: &[&str]) -> String {
    let sync = if clocked { "Sync" } else { "Async" };
    let idents = cond.idents();
    let kind = if idents.iter().any(|n| resets.contains(&n.as_str()) || is_reset_name(n)) {
        "Reset"
    } else if in_case {
        "Case"
    } else if targets.iter().any(|t| t.to_ascii_lowercase().contains("err")) {
        "Err"
    } else {
        "Cond"
    };
    format!("{sync}{kind}")
}

fn last_writes<'a>(assigns: &[&'a Assign]) -> Vec<&'a Assign> {
    let mut out: Vec<&Assign> = Vec::new();
    for a in assigns {
        if let Some(slot) = out.iter_mut().find(|b| b.lhs == a.lhs) {
            *slot = a;
        } else {
            out.push(a);
        }
    }
    out
}

fn ident_expr(id: &Ident) -> Expr {
    Expr::Ident(id.clone())
}

/// Properties for every path of one block.
pub fn synthesize(block: &AlwaysBlock, opts: &SynthOptions) -> Result<Vec<PathAssertion>, SynthError> {
    let mut namer = Namer { seed: opts.seed, counter: 0, used: HashSet::new() };
    synthesize_block(block, 0, opts, &mut namer)
}

/// Properties for every always block of `m`, names unique across blocks.
pub fn synthesize_module(m: &RtlModule, opts: &SynthOptions) -> Result<Vec<PathAssertion>, SynthError> {
    let mut namer = Namer { seed: opts.seed, counter: 0, used: HashSet::new() };
    let mut out = Vec::new();
    for (i, b) in m.always_blocks.iter().enumerate() {
        out.extend(synthesize_block(b, i, opts, &mut namer)?);
    }
    Ok(out)
}

fn synthesize_block(
    block: &AlwaysBlock,
    block_ix: usize,
    opts: &SynthOptions,
    namer: &mut Namer,
) -> Result<Vec<PathAssertion>, SynthError> {
    let clocked = block.is_clocked() || block.kind == AlwaysKind::AlwaysFf;
    let clocking = if clocked {
        match block.clock() {
            Some((edge, sig)) => Some(Clocking { edge, signal: sig.to_string() }),
            None => Some(opts.clock_hint.clone().ok_or(SynthError::NoClockFound)?),
        }
    } else {
        None
    };
    for a in block.assigns() {
        if a.rhs.contains_ternary() {
            return Err(SynthError::UnsupportedStmt(format!("ternary assigned to `{}`", a.lhs.name)));
        }
    }
    let resets = block.resets();
    let block_targets: HashSet<String> = block.targets().into_iter().collect();

    let mut raw: Vec<RawPath> = Vec::new();
    let (direct, _) = direct_and_nested(&block.body);
    let top_targets: HashSet<String> = direct.iter().map(|a| a.lhs.name.clone()).collect();
    if !direct.is_empty() {
        let nested_all: Vec<&Stmt> = block.body.iter().filter(|s| !matches!(s, Stmt::Assign(_))).collect();
        raw.push(RawPath {
            terms: Vec::new(),
            assigns: direct,
            guard_spans: Vec::new(),
            body_span: None,
            in_case: false,
            region: None,
            excluded: targets_of(&nested_all),
        });
    }
    let mut region_targets: Vec<(usize, HashSet<String>)> = Vec::new();
    for (r, stmt) in block.body.iter().enumerate() {
        if matches!(stmt, Stmt::Assign(_)) {
            continue;
        }
        let others: Vec<&Stmt> = block.body.iter().enumerate().filter(|(j, _)| *j != r).map(|(_, s)| s).collect();
        let mut ex = targets_of(&others);
        ex.extend(top_targets.iter().cloned());
        match stmt {
            Stmt::Block(b) => walk_body(b, &[], &[], &ex, stmt.span(), false, Some(r), false, &mut raw),
            _ => walk_stmt(stmt, &[], &[], &ex, false, Some(r), &mut raw),
        }
        region_targets.push((r, targets_of(&[stmt])));
    }

    let mut out = Vec::new();
    let build = |name: String, cond: Expr, delay: u32, consequent: Expr| Property {
        name,
        clocking: clocking.clone(),
        disable_iff: None,
        antecedent: cond,
        delay,
        consequent,
    };
    for p in &raw {
        let cond = Expr::conjunction(p.terms.iter().cloned()).unwrap_or_else(|| Expr::bit(true));
        let writes = last_writes(&p.assigns);
        let targets: Vec<String> = writes.iter().map(|a| a.lhs.name.clone()).collect();
        let st = stem(clocked, &cond, &targets, p.in_case, &resets);
        if !writes.is_empty() {
            let consequent = Expr::conjunction(writes.iter().map(|a| Expr::eq(ident_expr(&a.lhs), a.rhs.clone()))).unwrap();
            out.push(PathAssertion {
                kind: PathKind::Assignment,
                path_condition: cond.clone(),
                assignments: writes.iter().map(|a| (a.lhs.clone(), a.rhs.clone())).collect(),
                source_span: p.body_span,
                guard_spans: p.guard_spans.clone(),
                assign_spans: p.assigns.iter().map(|a| a.span).collect(),
                region: p.region,
                block: block_ix,
                property: build(namer.next(&st), cond.clone(), 0, consequent),
            });
        }
        if opts.stability {
            let Some(r) = p.region else { continue };
            let region_set = &region_targets.iter().find(|(i, _)| *i == r).unwrap().1;
            let mut held: Vec<&String> = region_set
                .iter()
                .filter(|t| !targets.contains(t) && !p.excluded.contains(*t))
                .collect();
            held.sort();
            if let Some(consequent) = Expr::conjunction(held.iter().map(|t| {
                let id = Expr::ident(t.as_str());
                Expr::eq(id.clone(), Expr::Past { inner: Box::new(id), depth: 1 })
            })) {
                out.push(PathAssertion {
                    kind: PathKind::Stability,
                    path_condition: cond.clone(),
                    assignments: Vec::new(),
                    source_span: p.body_span,
                    guard_spans: p.guard_spans.clone(),
                    assign_spans: Vec::new(),
                    region: p.region,
                    block: block_ix,
                    property: build(namer.next(&st), cond, 0, consequent),
                });
            }
        }
    }

    if clocked {
        let delayed = delayed_checks(block, &out, &block_targets);
        for (src, consequent) in delayed {
            let p = &out[src];
            let targets = [String::new()];
            let st = stem(clocked, &p.path_condition, &targets, false, &resets);
            let mut d = p.clone();
            d.kind = PathKind::Delayed;
            d.property = build(namer.next(&st), p.path_condition.clone(), 1, consequent);
            out.push(d);
        }
    }
    Ok(out)
}

/// Registers copied under a guard from a signal assigned elsewhere in the
/// block: `if (en) r <= q;`. A path writing `q <= e` then implies that one
/// cycle later either the guard is off or `r` holds the old `e`.
fn delayed_checks(block: &AlwaysBlock, paths: &[PathAssertion], targets: &HashSet<String>) -> Vec<(usize, Expr)> {
    let mut out = Vec::new();
    for (r, stmt) in block.body.iter().enumerate() {
        let Stmt::If(s) = stmt else { continue };
        if s.arms.len() != 1 || s.else_arm.is_some() {
            continue;
        }
        let arm = &s.arms[0];
        let (direct, nested) = direct_and_nested(&arm.body);
        if direct.len() != 1 || !nested.is_empty() || !direct[0].nonblocking {
            continue;
        }
        let copy = direct[0];
        let Expr::Ident(Ident { name: q, index: None }) = &copy.rhs else { continue };
        if arm.cond.idents().iter().any(|n| targets.contains(n)) {
            continue;
        }
        for (i, p) in paths.iter().enumerate() {
            if p.kind != PathKind::Assignment || p.region == Some(r) {
                continue;
            }
            let Some((_, e)) = p.assignments.iter().find(|(lhs, _)| &lhs.name == q && lhs.index.is_none()) else {
                continue;
            };
            if e.idents().iter().any(|n| targets.contains(n)) {
                continue;
            }
            let nb = p.assign_spans.iter().all(|sp| {
                block.assigns().iter().any(|a| a.span.start == sp.start && a.span.end == sp.end && a.nonblocking)
            });
            if !nb {
                continue;
            }
            let old = if e.is_literal() { e.clone() } else { Expr::Past { inner: Box::new(e.clone()), depth: 1 } };
            let consequent = Expr::or(negate(&arm.cond), Expr::eq(ident_expr(&copy.lhs), old));
            out.push((i, consequent));
        }
    }
    out
}

/// Path condition of the assignment path containing `span`.
pub fn oracle_antecedent(block: &AlwaysBlock, span: Span) -> Result<Expr, SynthError> {
    let paths = synthesize(block, &SynthOptions { clock_hint: Some(Clocking { edge: Edge::Posedge, signal: "clk".into() }), ..Default::default() })?;
    paths
        .iter()
        .filter(|p| p.kind == PathKind::Assignment)
        .find(|p| p.assign_spans.iter().any(|s| s.overlaps(&span) || span.contains(s) && span.start != span.end))
        .map(|p| p.path_condition.clone())
        .ok_or(SynthError::SpanNotOnPath(span.start, span.end))
}

/// The properties alone, in path order.
pub fn properties(paths: &[PathAssertion]) -> Vec<Property> {
    paths.iter().map(|p| p.property.clone()).collect()
}
