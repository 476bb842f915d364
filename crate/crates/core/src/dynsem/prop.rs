//! Checking properties against simulated traces.
//!
//! Clocked properties read the antecedent just before the edge at cycle
//! `c`. The consequent is read at `c + delay`: left-hand sides of
//! comparisons after the edge, everything else before it, so `q == d`
//! states that `q` takes the value `d` had when the edge arrived.
//! Non-relational consequent terms read after the edge. `$past(x, n)`
//! reads `x` after the edge `n` cycles back. Unclocked properties read
//! everything before the edge.

use super::compile::{CExpr, CompileError, Compiler, Phase, Resolved};
use super::sim::{At, Trace};
use crate::hdl::{Expr, Property};
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropError {
    #[error("property `{property}` reads `{signal}`, which the trace lacks")]
    SignalMissing { property: String, signal: String },
    #[error("property `{0}` uses $past/$stable outside a trace")]
    History(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub failures: Vec<usize>,
    /// Cycles whose antecedent held and whose consequent could be checked.
    pub triggered: usize,
}

/// A property lowered against one trace layout.
#[derive(Debug, Clone)]
pub struct CompiledProperty {
    antecedent: CExpr,
    disable: Option<CExpr>,
    consequent: Vec<CExpr>,
    delay: usize,
}

/// Names and widths of a trace, plus constants such as localparams.
pub struct Layout<'a> {
    pub names: &'a [String],
    pub widths: &'a [u32],
    pub consts: &'a HashMap<String, (u64, u32)>,
}

impl<'a> Layout<'a> {
    pub fn of(t: &'a Trace) -> Self {
        Layout { names: &t.names, widths: &t.widths, consts: &t.consts }
    }
}

impl CompiledProperty {
    pub fn new(p: &Property, layout: &Layout) -> Result<CompiledProperty, PropError> {
        let index: HashMap<&str, usize> = layout.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let resolve = |n: &str| {
            index
                .get(n)
                .map(|&i| Resolved::Slot(i, layout.widths[i]))
                .or_else(|| layout.consts.get(n).map(|&(v, w)| Resolved::Const(v, w)))
        };
        let c = Compiler { resolve: &resolve, history: true };
        let err = |e: CompileError| match e {
            CompileError::Unknown(signal) => PropError::SignalMissing { property: p.name.clone(), signal },
            CompileError::History => PropError::History(p.name.clone()),
        };
        let clocked = p.clocking.is_some();
        let late = if clocked { Phase::Post } else { Phase::Pre };
        let antecedent = c.compile(&p.antecedent, Phase::Pre, 0, 1).map_err(err)?.0;
        let disable = match &p.disable_iff {
            Some(d) => Some(c.compile(d, Phase::Pre, 0, 1).map_err(err)?.0),
            None => None,
        };
        let mut consequent = Vec::new();
        for term in p.consequent.conjuncts() {
            let lowered = match term {
                Expr::Binary { op, lhs, rhs } if op.is_relational() => {
                    let (l, lw) = c.compile(lhs, late, 0, 1).map_err(err)?;
                    let (r, rw) = c.compile(rhs, Phase::Pre, 0, lw).map_err(err)?;
                    CExpr::Bin { op: *op, lhs: Box::new(l), rhs: Box::new(r), width: lw.max(rw) }
                }
                other => c.compile(other, late, 0, 1).map_err(err)?.0,
            };
            consequent.push(lowered);
        }
        Ok(CompiledProperty { antecedent, disable, consequent, delay: p.delay as usize })
    }

    pub fn check(&self, t: &Trace) -> Verdict {
        let cycles = t.cycles();
        let mut failures = Vec::new();
        let mut triggered = 0;
        for c in 0..cycles {
            let end = c + self.delay;
            if end >= cycles {
                break;
            }
            let now = At { trace: t, cycle: c };
            if let Some(d) = &self.disable {
                if d.eval(&now) != Some(0) {
                    continue;
                }
            }
            match self.antecedent.eval(&now) {
                Some(0) | None => continue,
                Some(_) => {}
            }
            let later = At { trace: t, cycle: end };
            let mut ok = true;
            let mut known = true;
            for term in &self.consequent {
                match term.eval(&later) {
                    None => known = false,
                    Some(0) => ok = false,
                    Some(_) => {}
                }
            }
            if !known && ok {
                continue;
            }
            triggered += 1;
            if !ok {
                failures.push(c);
            }
        }
        Verdict { holds: failures.is_empty(), failures, triggered }
    }
}

pub fn eval_property(p: &Property, t: &Trace) -> Result<Verdict, PropError> {
    Ok(CompiledProperty::new(p, &Layout::of(t))?.check(t))
}
