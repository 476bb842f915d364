//! Expressions lowered to slot-indexed trees with widths fixed up front.
//! Semantics match `hdl::eval`; this form just avoids name lookups.

use crate::hdl::{mask, Base, BinaryOp, Expr, UnaryOp};

/// Which sample of a trace cycle a signal read refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pre,
    Post,
}

#[derive(Debug, Clone)]
pub enum CExpr {
    Sig { slot: usize, phase: Phase, back: u32 },
    Bit { slot: usize, width: u32, phase: Phase, back: u32, index: Box<CExpr> },
    Const(u64),
    ConstBit { value: u64, width: u32, index: Box<CExpr> },
    Not(Box<CExpr>),
    BitNot(Box<CExpr>, u32),
    Truthy(Box<CExpr>),
    Neg(Box<CExpr>, u32),
    Resize(Box<CExpr>, u32),
    Bin { op: BinaryOp, lhs: Box<CExpr>, rhs: Box<CExpr>, width: u32 },
    Ternary(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Stable(Box<CExpr>, Box<CExpr>),
}

/// Signal values seen by a compiled expression. `None` means the sample
/// lies before the start of a trace.
pub trait Reader {
    fn read(&self, slot: usize, phase: Phase, back: u32) -> Option<u64>;
}

impl Reader for [u64] {
    #[inline]
    fn read(&self, slot: usize, _: Phase, back: u32) -> Option<u64> {
        if back == 0 {
            Some(self[slot])
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileError {
    Unknown(String),
    /// `$past`/`$stable` where no history exists.
    History,
}

/// Resolves a name to a slot and width, or to a constant.
pub enum Resolved {
    Slot(usize, u32),
    Const(u64, u32),
}

pub struct Compiler<'a> {
    pub resolve: &'a dyn Fn(&str) -> Option<Resolved>,
    pub history: bool,
}

fn is_fill(e: &Expr) -> bool {
    matches!(e, Expr::Literal { base: Base::Fill, .. })
}

impl Compiler<'_> {
    /// Lowers `e` read at `phase`, `back` cycles ago. `ctx` is the width an
    /// unsized fill literal takes when no sibling fixes it. Returns the
    /// tree and its result width.
    pub fn compile(&self, e: &Expr, phase: Phase, back: u32, ctx: u32) -> Result<(CExpr, u32), CompileError> {
        Ok(match e {
            Expr::Ident(id) => match (self.resolve)(&id.name).ok_or_else(|| CompileError::Unknown(id.name.clone()))? {
                Resolved::Const(v, w) => match &id.index {
                    None => (CExpr::Const(v & mask(w)), w),
                    Some(ix) => {
                        let (index, _) = self.compile(ix, phase, back, 1)?;
                        (CExpr::ConstBit { value: v, width: w, index: Box::new(index) }, 1)
                    }
                },
                Resolved::Slot(slot, width) => match &id.index {
                    None => (CExpr::Sig { slot, phase, back }, width),
                    Some(ix) => {
                        let (index, _) = self.compile(ix, phase, back, 1)?;
                        (CExpr::Bit { slot, width, phase, back, index: Box::new(index) }, 1)
                    }
                },
            },
            Expr::Literal { width, base, value } => match (width, base) {
                (_, Base::Fill) => {
                    let w = ctx.max(1);
                    (CExpr::Const(if value & 1 == 1 { mask(w) } else { 0 }), w)
                }
                (Some(w), _) => (CExpr::Const(value & mask(*w)), (*w).clamp(1, 64)),
                (None, _) => (CExpr::Const(value & mask(32)), 32),
            },
            Expr::Cast { width, inner } => {
                let (c, _) = self.compile(inner, phase, back, *width)?;
                (CExpr::Resize(Box::new(c), *width), (*width).clamp(1, 64))
            }
            Expr::Unary { op, inner } => {
                let (c, w) = self.compile(inner, phase, back, ctx)?;
                match op {
                    UnaryOp::LogNot => (CExpr::Not(Box::new(c)), 1),
                    UnaryOp::RedOr => (CExpr::Truthy(Box::new(c)), 1),
                    UnaryOp::BitNot => (CExpr::BitNot(Box::new(c), w), w),
                    UnaryOp::Neg => (CExpr::Neg(Box::new(c), w), w),
                }
            }
            Expr::Binary { op, lhs, rhs } => {
                if op.is_logical() {
                    let (l, _) = self.compile(lhs, phase, back, 1)?;
                    let (r, _) = self.compile(rhs, phase, back, 1)?;
                    return Ok((CExpr::Bin { op: *op, lhs: Box::new(l), rhs: Box::new(r), width: 1 }, 1));
                }
                let ((l, lw), (r, rw)) = if is_fill(lhs) && !is_fill(rhs) {
                    let r = self.compile(rhs, phase, back, ctx)?;
                    (self.compile(lhs, phase, back, r.1)?, r)
                } else if is_fill(rhs) {
                    let l = self.compile(lhs, phase, back, ctx)?;
                    let w = l.1;
                    (l, self.compile(rhs, phase, back, w)?)
                } else {
                    (self.compile(lhs, phase, back, ctx)?, self.compile(rhs, phase, back, ctx)?)
                };
                let w = lw.max(rw);
                let out_w = if op.is_relational() { 1 } else { w };
                (CExpr::Bin { op: *op, lhs: Box::new(l), rhs: Box::new(r), width: w }, out_w)
            }
            Expr::Ternary { cond, then, other } => {
                let (c, _) = self.compile(cond, phase, back, 1)?;
                let (t, tw) = self.compile(then, phase, back, ctx)?;
                let (o, ow) = self.compile(other, phase, back, ctx)?;
                (CExpr::Ternary(Box::new(c), Box::new(t), Box::new(o)), tw.max(ow))
            }
            Expr::Past { inner, depth } => {
                if !self.history {
                    return Err(CompileError::History);
                }
                self.compile(inner, Phase::Post, back + depth, ctx)?
            }
            Expr::Stable { inner } => {
                if !self.history {
                    return Err(CompileError::History);
                }
                let (now, _) = self.compile(inner, phase, back, ctx)?;
                let (before, _) = self.compile(inner, Phase::Post, back + 1, ctx)?;
                (CExpr::Stable(Box::new(now), Box::new(before)), 1)
            }
        })
    }
}

impl CExpr {
    #[inline]
    pub fn eval<R: Reader + ?Sized>(&self, r: &R) -> Option<u64> {
        Some(match self {
            CExpr::Sig { slot, phase, back } => r.read(*slot, *phase, *back)?,
            CExpr::Bit { slot, width, phase, back, index } => {
                let v = r.read(*slot, *phase, *back)?;
                let i = index.eval(r)?;
                (i < *width as u64 && (v >> i) & 1 == 1) as u64
            }
            CExpr::Const(v) => *v,
            CExpr::ConstBit { value, width, index } => {
                let i = index.eval(r)?;
                (i < *width as u64 && (value >> i) & 1 == 1) as u64
            }
            CExpr::Not(x) => (x.eval(r)? == 0) as u64,
            CExpr::Truthy(x) => (x.eval(r)? != 0) as u64,
            CExpr::BitNot(x, w) => !x.eval(r)? & mask(*w),
            CExpr::Neg(x, w) => x.eval(r)?.wrapping_neg() & mask(*w),
            CExpr::Resize(x, w) => x.eval(r)? & mask(*w),
            CExpr::Bin { op, lhs, rhs, width } => {
                let a = lhs.eval(r)?;
                let b = rhs.eval(r)?;
                match op {
                    BinaryOp::LogAnd => (a != 0 && b != 0) as u64,
                    BinaryOp::LogOr => (a != 0 || b != 0) as u64,
                    BinaryOp::Eq => (a == b) as u64,
                    BinaryOp::Neq => (a != b) as u64,
                    BinaryOp::Lt => (a < b) as u64,
                    BinaryOp::Le => (a <= b) as u64,
                    BinaryOp::Gt => (a > b) as u64,
                    BinaryOp::Ge => (a >= b) as u64,
                    BinaryOp::Add => a.wrapping_add(b) & mask(*width),
                    BinaryOp::Sub => a.wrapping_sub(b) & mask(*width),
                    BinaryOp::BitAnd => a & b,
                    BinaryOp::BitOr => a | b,
                    BinaryOp::BitXor => a ^ b,
                }
            }
            CExpr::Ternary(c, t, o) => {
                let c = c.eval(r)?;
                let t = t.eval(r)?;
                let o = o.eval(r)?;
                if c != 0 {
                    t
                } else {
                    o
                }
            }
            CExpr::Stable(now, before) => (now.eval(r)? == before.eval(r)?) as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{eval_expr_in, Value};
    use std::collections::HashMap;

    fn check(e: &Expr, vals: &[(&str, u64, u32)], ctx: u32) {
        let env: HashMap<String, Value> = vals.iter().map(|(n, v, w)| (n.to_string(), Value::new(*v, *w))).collect();
        let expect = eval_expr_in(e, &env, ctx).unwrap();
        let slots: Vec<u64> = vals.iter().map(|(_, v, w)| v & mask(*w)).collect();
        let resolve = |n: &str| vals.iter().position(|(m, _, _)| *m == n).map(|i| Resolved::Slot(i, vals[i].2));
        let c = Compiler { resolve: &resolve, history: false };
        let (ce, w) = c.compile(e, Phase::Pre, 0, ctx).unwrap();
        assert_eq!(ce.eval(slots.as_slice()), Some(expect.bits), "{e}");
        assert_eq!(w, expect.width, "{e}");
    }

    #[test]
    fn matches_reference_evaluator() {
        let x = Expr::ident("x");
        let y = Expr::ident("y");
        let vals = [("x", 5, 3), ("y", 7, 3)];
        check(&Expr::binary(BinaryOp::Sub, x.clone(), Expr::bit(true)), &vals, 1);
        check(&Expr::binary(BinaryOp::Add, x.clone(), y.clone()), &vals, 1);
        check(&Expr::binary(BinaryOp::Neq, x.clone(), Expr::fill(false)), &vals, 1);
        check(&Expr::unary(UnaryOp::BitNot, x.clone()), &vals, 1);
        check(&Expr::Cast { width: 30, inner: Box::new(y.clone()) }, &vals, 1);
        check(&Expr::fill(true), &vals, 4);
    }
}
