//! Two-valued expression evaluation over fixed-width unsigned vectors.

use super::ast::*;
use thiserror::Error;

/// Unsized decimal literals are 32 bits wide.
pub const UNSIZED_WIDTH: u32 = 32;
pub const MAX_WIDTH: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Value {
    pub bits: u64,
    pub width: u32,
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Value {
    pub fn new(bits: u64, width: u32) -> Self {
        let width = width.clamp(1, MAX_WIDTH);
        Value { bits: bits & mask(width), width }
    }

    pub fn bool(b: bool) -> Self {
        Value::new(b as u64, 1)
    }

    pub fn truthy(self) -> bool {
        self.bits != 0
    }

    pub fn resize(self, width: u32) -> Self {
        Value::new(self.bits, width)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("$past depth {depth} reaches before the first cycle")]
    PastDepthExceedsTrace { depth: u32 },
}

/// Name resolution for [`eval_expr`].
pub trait Env {
    fn lookup(&self, name: &str) -> Option<Value>;

    /// Value of `inner` sampled `depth` cycles back.
    fn past(&self, inner: &Expr, depth: u32) -> Result<Value, EvalError> {
        let _ = inner;
        Err(EvalError::PastDepthExceedsTrace { depth })
    }
}

impl Env for std::collections::HashMap<String, Value> {
    fn lookup(&self, name: &str) -> Option<Value> {
        self.get(name).copied()
    }
}

impl Env for std::collections::BTreeMap<String, Value> {
    fn lookup(&self, name: &str) -> Option<Value> {
        self.get(name).copied()
    }
}

fn literal_value(width: Option<u32>, base: Base, value: u64, ctx: u32) -> Value {
    match (width, base) {
        (_, Base::Fill) => {
            let w = ctx.max(1);
            Value::new(if value & 1 == 1 { mask(w) } else { 0 }, w)
        }
        (Some(w), _) => Value::new(value, w),
        (None, _) => Value::new(value, UNSIZED_WIDTH),
    }
}

fn is_fill(e: &Expr) -> bool {
    matches!(e, Expr::Literal { base: Base::Fill, .. })
}

pub fn eval_expr(e: &Expr, env: &dyn Env) -> Result<Value, EvalError> {
    eval_ctx(e, env, 1)
}

/// Evaluates with `ctx` as the width a fill literal takes when it has no
/// sibling operand to follow, e.g. the target width of an assignment.
pub fn eval_expr_in(e: &Expr, env: &dyn Env, ctx: u32) -> Result<Value, EvalError> {
    eval_ctx(e, env, ctx)
}

fn eval_ctx(e: &Expr, env: &dyn Env, ctx: u32) -> Result<Value, EvalError> {
    Ok(match e {
        Expr::Ident(id) => {
            let v = env.lookup(&id.name).ok_or_else(|| EvalError::UnboundIdentifier(id.name.clone()))?;
            match &id.index {
                None => v,
                Some(ix) => {
                    let i = eval_ctx(ix, env, 1)?.bits;
                    Value::bool(i < v.width as u64 && (v.bits >> i) & 1 == 1)
                }
            }
        }
        Expr::Literal { width, base, value } => literal_value(*width, *base, *value, ctx),
        Expr::Cast { width, inner } => eval_ctx(inner, env, *width)?.resize(*width),
        Expr::Unary { op, inner } => {
            let v = eval_ctx(inner, env, ctx)?;
            match op {
                UnaryOp::LogNot => Value::bool(!v.truthy()),
                UnaryOp::BitNot => Value::new(!v.bits, v.width),
                UnaryOp::RedOr => Value::bool(v.truthy()),
                UnaryOp::Neg => Value::new(v.bits.wrapping_neg(), v.width),
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            if op.is_logical() {
                let l = eval_ctx(lhs, env, 1)?.truthy();
                // both sides are evaluated so unbound names surface either way
                let r = eval_ctx(rhs, env, 1)?.truthy();
                return Ok(Value::bool(match op {
                    BinaryOp::LogAnd => l && r,
                    _ => l || r,
                }));
            }
            let (l, r) = if is_fill(lhs) && !is_fill(rhs) {
                let r = eval_ctx(rhs, env, ctx)?;
                (eval_ctx(lhs, env, r.width)?, r)
            } else if is_fill(rhs) {
                let l = eval_ctx(lhs, env, ctx)?;
                (l, eval_ctx(rhs, env, l.width)?)
            } else {
                (eval_ctx(lhs, env, ctx)?, eval_ctx(rhs, env, ctx)?)
            };
            let w = l.width.max(r.width);
            let (a, b) = (l.bits, r.bits);
            match op {
                BinaryOp::Eq => Value::bool(a == b),
                BinaryOp::Neq => Value::bool(a != b),
                BinaryOp::Lt => Value::bool(a < b),
                BinaryOp::Le => Value::bool(a <= b),
                BinaryOp::Gt => Value::bool(a > b),
                BinaryOp::Ge => Value::bool(a >= b),
                BinaryOp::Add => Value::new(a.wrapping_add(b), w),
                BinaryOp::Sub => Value::new(a.wrapping_sub(b), w),
                BinaryOp::BitAnd => Value::new(a & b, w),
                BinaryOp::BitOr => Value::new(a | b, w),
                BinaryOp::BitXor => Value::new(a ^ b, w),
                BinaryOp::LogAnd | BinaryOp::LogOr => unreachable!(),
            }
        }
        Expr::Ternary { cond, then, other } => {
            let c = eval_ctx(cond, env, 1)?.truthy();
            let t = eval_ctx(then, env, ctx)?;
            let o = eval_ctx(other, env, ctx)?;
            let w = t.width.max(o.width);
            if c {
                t.resize(w)
            } else {
                o.resize(w)
            }
        }
        Expr::Past { inner, depth } => env.past(inner, *depth)?,
        Expr::Stable { inner } => {
            let now = eval_ctx(inner, env, ctx)?;
            let before = env.past(inner, 1)?;
            Value::bool(now.bits == before.bits)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(pairs: &[(&str, u64, u32)]) -> HashMap<String, Value> {
        pairs.iter().map(|(n, v, w)| (n.to_string(), Value::new(*v, *w))).collect()
    }

    #[test]
    fn logical_and_of_bits() {
        let e = Expr::and(Expr::bit(true), Expr::bit(false));
        assert_eq!(eval_expr(&e, &env(&[])).unwrap(), Value::bool(false));
    }

    #[test]
    fn sized_equality() {
        let e = Expr::eq(Expr::sized(5, Base::Bin, 0b10011), Expr::sized(5, Base::Bin, 0b10011));
        assert_eq!(eval_expr(&e, &env(&[])).unwrap().bits, 1);
    }

    #[test]
    fn or_of_inequalities() {
        let e = Expr::or(
            Expr::binary(BinaryOp::Neq, Expr::ident("a"), Expr::ident("b")),
            Expr::binary(BinaryOp::Neq, Expr::ident("c"), Expr::ident("d")),
        );
        let v = eval_expr(&e, &env(&[("a", 1, 4), ("b", 1, 4), ("c", 2, 4), ("d", 3, 4)])).unwrap();
        assert_eq!(v.bits, 1);
    }

    #[test]
    fn zero_extension_and_fill() {
        let e = Expr::eq(Expr::ident("x"), Expr::sized(2, Base::Bin, 3));
        assert_eq!(eval_expr(&e, &env(&[("x", 3, 8)])).unwrap().bits, 1);
        let e = Expr::eq(Expr::ident("x"), Expr::fill(true));
        assert_eq!(eval_expr(&e, &env(&[("x", 0xff, 8)])).unwrap().bits, 1);
        assert_eq!(eval_expr(&e, &env(&[("x", 0x7f, 8)])).unwrap().bits, 0);
    }

    #[test]
    fn unbound_and_past_errors() {
        assert_eq!(
            eval_expr(&Expr::ident("nope"), &env(&[])),
            Err(EvalError::UnboundIdentifier("nope".into()))
        );
        let p = Expr::Past { inner: Box::new(Expr::ident("a")), depth: 2 };
        assert_eq!(eval_expr(&p, &env(&[("a", 0, 1)])), Err(EvalError::PastDepthExceedsTrace { depth: 2 }));
    }

    #[test]
    fn wraparound_subtract() {
        let e = Expr::binary(BinaryOp::Sub, Expr::ident("c"), Expr::bit(true));
        assert_eq!(eval_expr(&e, &env(&[("c", 0, 4)])).unwrap(), Value::new(15, 4));
    }
}
