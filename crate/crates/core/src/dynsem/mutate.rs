//! Single-site mutants of a module.

use crate::hdl::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutOp {
    NegateCond,
    RelOpSwap,
    LogicOpSwap,
    ConstPerturb,
    BranchAssignSwap,
    StuckTrue,
    StuckFalse,
}

pub const ALL_OPS: [MutOp; 7] = [
    MutOp::NegateCond,
    MutOp::RelOpSwap,
    MutOp::LogicOpSwap,
    MutOp::ConstPerturb,
    MutOp::BranchAssignSwap,
    MutOp::StuckTrue,
    MutOp::StuckFalse,
];

impl MutOp {
    pub fn name(self) -> &'static str {
        match self {
            MutOp::NegateCond => "NegateCond",
            MutOp::RelOpSwap => "RelOpSwap",
            MutOp::LogicOpSwap => "LogicOpSwap",
            MutOp::ConstPerturb => "ConstPerturb",
            MutOp::BranchAssignSwap => "BranchAssignSwap",
            MutOp::StuckTrue => "StuckTrue",
            MutOp::StuckFalse => "StuckFalse",
        }
    }
}

impl fmt::Display for MutOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutOp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ALL_OPS
            .iter()
            .copied()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mutation operator `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct Mutant {
    pub operator: MutOp,
    pub site: Span,
    pub module: RtlModule,
}

/// Walks sites of one operator; applies the edit at site number `target`.
struct Walker {
    op: MutOp,
    target: usize,
    seen: usize,
    hit: Option<Span>,
}

impl Walker {
    /// Counts a site; true when it is the one to edit.
    fn take(&mut self, site: Span) -> bool {
        let now = self.seen == self.target && self.hit.is_none();
        self.seen += 1;
        if now {
            self.hit = Some(site);
        }
        now
    }

    fn expr(&mut self, e: &mut Expr, site: Span) {
        match e {
            Expr::Binary { op, .. } if self.op == MutOp::RelOpSwap && op.is_relational() => {
                if self.take(site) {
                    *op = match op {
                        BinaryOp::Eq => BinaryOp::Neq,
                        BinaryOp::Neq => BinaryOp::Eq,
                        BinaryOp::Lt => BinaryOp::Ge,
                        BinaryOp::Ge => BinaryOp::Lt,
                        BinaryOp::Gt => BinaryOp::Le,
                        _ => BinaryOp::Gt,
                    };
                }
            }
            Expr::Binary { op, .. } if self.op == MutOp::LogicOpSwap && op.is_logical() => {
                if self.take(site) {
                    *op = if *op == BinaryOp::LogAnd { BinaryOp::LogOr } else { BinaryOp::LogAnd };
                }
            }
            Expr::Literal { width, base, value } if self.op == MutOp::ConstPerturb => {
                if self.take(site) {
                    *value = match base {
                        Base::Fill => *value ^ 1,
                        _ => (*value ^ 1) & mask(width.unwrap_or(32)),
                    };
                }
            }
            _ => {}
        }
        match e {
            Expr::Ident(id) => {
                if let Some(ix) = &mut id.index {
                    self.expr(ix, site);
                }
            }
            Expr::Literal { .. } => {}
            Expr::Cast { inner, .. } | Expr::Unary { inner, .. } | Expr::Past { inner, .. } | Expr::Stable { inner } => {
                self.expr(inner, site)
            }
            Expr::Binary { lhs, rhs, .. } => {
                self.expr(lhs, site);
                self.expr(rhs, site);
            }
            Expr::Ternary { cond, then, other } => {
                self.expr(cond, site);
                self.expr(then, site);
                self.expr(other, site);
            }
        }
    }

    fn guard(&mut self, cond: &mut Expr, site: Span) {
        match self.op {
            MutOp::NegateCond | MutOp::StuckTrue | MutOp::StuckFalse => {
                if self.take(site) {
                    *cond = match self.op {
                        MutOp::NegateCond => Expr::not(cond.clone()),
                        MutOp::StuckTrue => Expr::bit(true),
                        _ => Expr::bit(false),
                    };
                }
            }
            _ => self.expr(cond, site),
        }
    }

    fn body(&mut self, body: &mut [Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn swap_arms(&mut self, bodies: &mut [&mut Vec<Stmt>]) {
        if self.op != MutOp::BranchAssignSwap {
            return;
        }
        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                let (left, right) = bodies.split_at_mut(j);
                let a = direct_assigns(left[i]);
                let b = direct_assigns(right[0]);
                let mut names: Vec<String> = Vec::new();
                for x in &a {
                    if !names.contains(&x.lhs.name) {
                        names.push(x.lhs.name.clone());
                    }
                }
                for name in names {
                    let (Some(x), Some(y)) = (
                        a.iter().find(|x| x.lhs.name == name && x.lhs.index.is_none()),
                        b.iter().find(|y| y.lhs.name == name && y.lhs.index.is_none()),
                    ) else {
                        continue;
                    };
                    if x.rhs == y.rhs {
                        continue;
                    }
                    let site = x.span.cover(&y.span);
                    if self.take(site) {
                        let (xr, yr) = (x.rhs.clone(), y.rhs.clone());
                        set_rhs(left[i], &name, yr);
                        set_rhs(right[0], &name, xr);
                        return;
                    }
                }
            }
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        match s {
            Stmt::Assign(a) => {
                let site = a.span;
                if let Some(ix) = &mut a.lhs.index {
                    self.expr(ix, site);
                }
                self.expr(&mut a.rhs, site);
            }
            Stmt::If(i) => {
                for arm in &mut i.arms {
                    let site = arm.cond_span;
                    self.guard(&mut arm.cond, site);
                    self.body(&mut arm.body);
                }
                if let Some(e) = &mut i.else_arm {
                    self.body(&mut e.body);
                }
                let mut bodies: Vec<&mut Vec<Stmt>> =
                    i.arms.iter_mut().map(|a| &mut a.body).chain(i.else_arm.iter_mut().map(|e| &mut e.body)).collect();
                self.swap_arms(&mut bodies);
            }
            Stmt::Case(c) => {
                let span = c.span;
                self.expr(&mut c.selector, span);
                for arm in &mut c.arms {
                    let site = arm.labels_span;
                    for l in &mut arm.labels {
                        self.expr(l, site);
                    }
                    self.body(&mut arm.body);
                }
                if let Some(d) = &mut c.default {
                    self.body(&mut d.body);
                }
                let mut bodies: Vec<&mut Vec<Stmt>> =
                    c.arms.iter_mut().map(|a| &mut a.body).chain(c.default.iter_mut().map(|e| &mut e.body)).collect();
                self.swap_arms(&mut bodies);
            }
            Stmt::Block(b) => self.body(b),
        }
    }
}

fn direct_assigns(body: &[Stmt]) -> Vec<Assign> {
    let mut out = Vec::new();
    for s in body {
        match s {
            Stmt::Assign(a) => out.push(a.clone()),
            Stmt::Block(b) => out.extend(direct_assigns(b)),
            _ => {}
        }
    }
    out
}

/// Replaces the right side of the first direct assignment to `name`.
fn set_rhs(body: &mut [Stmt], name: &str, rhs: Expr) -> bool {
    for s in body {
        match s {
            Stmt::Assign(a) if a.lhs.name == name && a.lhs.index.is_none() => {
                a.rhs = rhs;
                return true;
            }
            Stmt::Block(b) => {
                if set_rhs(b, name, rhs.clone()) {
                    return true;
                }
            }
            _ => {}
        }
    }
    false
}

fn run(m: &mut RtlModule, op: MutOp, target: usize) -> (usize, Option<Span>) {
    let mut w = Walker { op, target, seen: 0, hit: None };
    for b in &mut m.always_blocks {
        w.body(&mut b.body);
    }
    (w.seen, w.hit)
}

/// Number of sites `op` can edit in `m`.
pub fn site_count(m: &RtlModule, op: MutOp) -> usize {
    run(&mut m.clone(), op, usize::MAX).0
}

/// Every single-site mutant for `ops`, ordered by site start, then
/// operator name, then traversal order.
pub fn mutate(m: &RtlModule, ops: &[MutOp]) -> Vec<Mutant> {
    let mut ops: Vec<MutOp> = ops.to_vec();
    ops.sort_by_key(|o| o.name());
    ops.dedup();
    let mut keyed = Vec::new();
    for op in ops {
        for k in 0..site_count(m, op) {
            let mut module = m.clone();
            let (_, hit) = run(&mut module, op, k);
            let site = hit.expect("site counted above");
            keyed.push((site.start, op.name(), k, Mutant { operator: op, site, module }));
        }
    }
    keyed.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    keyed.into_iter().map(|x| x.3).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_module;

    fn module(src: &str) -> RtlModule {
        let p = parse_module(src, &Default::default());
        assert!(!p.has_errors(), "{:?}", p.diagnostics);
        p.module.unwrap()
    }

    #[test]
    fn canonical_fixture() {
        let m = module(
            "module t(input logic clk, input logic a, output logic q);
             always_ff @(posedge clk) if (a) q <= 1'b1; else q <= 1'b0;
             endmodule",
        );
        let ms = mutate(&m, &ALL_OPS);
        let mut ops: Vec<&str> = ms.iter().map(|x| x.operator.name()).collect();
        ops.sort();
        assert_eq!(ops, vec!["BranchAssignSwap", "ConstPerturb", "ConstPerturb", "NegateCond", "StuckFalse", "StuckTrue"]);
        for x in &ms {
            assert_ne!(x.module, m);
        }
    }

    #[test]
    fn nothing_to_mutate() {
        let m = module("module t(input logic a, output logic q); always_comb q = a; endmodule");
        assert!(mutate(&m, &ALL_OPS).is_empty());
    }

    #[test]
    fn relational_swaps() {
        let m = module(
            "module t(input logic [2:0] s, output logic q);
             always_comb if (s > 3'd2) q = 1'b1; else q = 1'b0;
             endmodule",
        );
        let ms = mutate(&m, &[MutOp::RelOpSwap]);
        assert_eq!(ms.len(), 1);
        let Stmt::If(i) = &ms[0].module.always_blocks[0].body[0] else { panic!() };
        assert!(matches!(i.arms[0].cond, Expr::Binary { op: BinaryOp::Le, .. }));
    }
}
