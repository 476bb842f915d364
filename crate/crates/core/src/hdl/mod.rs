//! RTL and property syntax trees, canonical printing and evaluation.

pub mod ast;
pub mod eval;
pub mod print;

pub use ast::*;
pub use eval::{eval_expr, eval_expr_in, mask, Env, EvalError, Value};
pub use print::{print_always, print_expr, print_module, print_properties, print_property, print_stmt};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("property `{0}` contains a ternary")]
    TernaryInProperty(String),
    #[error("{0} block needs at least one edge in its sensitivity list")]
    MissingEdge(&'static str),
    #[error("always_comb takes no sensitivity list")]
    CombWithSensitivity,
    #[error("$past depth must be at least 1")]
    ZeroPastDepth,
}

fn check_past(e: &Expr) -> Result<(), ShapeError> {
    let mut bad = false;
    e.visit(&mut |x| bad |= matches!(x, Expr::Past { depth: 0, .. }));
    if bad {
        Err(ShapeError::ZeroPastDepth)
    } else {
        Ok(())
    }
}

impl Property {
    pub fn validate(&self) -> Result<(), ShapeError> {
        let parts = [Some(&self.antecedent), Some(&self.consequent), self.disable_iff.as_ref()];
        for e in parts.into_iter().flatten() {
            if e.contains_ternary() {
                return Err(ShapeError::TernaryInProperty(self.name.clone()));
            }
            check_past(e)?;
        }
        Ok(())
    }
}

impl AlwaysBlock {
    pub fn validate(&self) -> Result<(), ShapeError> {
        match self.kind {
            AlwaysKind::AlwaysComb if !self.sensitivity.is_empty() => Err(ShapeError::CombWithSensitivity),
            AlwaysKind::AlwaysFf if !self.is_clocked() => Err(ShapeError::MissingEdge("always_ff")),
            _ => Ok(()),
        }
    }
}
