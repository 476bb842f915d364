//! Two-valued cycle simulator for one clock domain.

use super::compile::{CExpr, CompileError, Compiler, Phase, Reader, Resolved};
use crate::hdl::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Fixpoint iterations allowed for combinational settling.
pub const COMB_ITERATION_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("combinational logic did not settle in cycle {cycle}")]
    CombLoopDetected { cycle: usize },
    #[error("module does not elaborate: {0}")]
    UnelaboratedModule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusPlan {
    pub cycles: usize,
    pub seed: u64,
    /// Chance per cycle, after the first two, that reset is pulled low.
    pub reset_rate: f64,
}

impl Default for StimulusPlan {
    fn default() -> Self {
        StimulusPlan { cycles: 1000, seed: 0, reset_rate: 0.05 }
    }
}

impl StimulusPlan {
    pub fn new(cycles: usize, seed: u64) -> Self {
        StimulusPlan { cycles: cycles.max(1), seed, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
enum CStmt {
    Assign { slot: usize, bit: Option<CExpr>, rhs: CExpr, width: u32, nonblocking: bool },
    If { arms: Vec<(CExpr, Vec<CStmt>)>, other: Vec<CStmt> },
    Case { sel: CExpr, arms: Vec<(Vec<CExpr>, Vec<CStmt>)>, default: Vec<CStmt> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Drive {
    Random,
    Reset,
    Clock,
    Logic,
}

/// A module lowered for simulation.
#[derive(Debug, Clone)]
pub struct Design {
    pub names: Vec<String>,
    pub widths: Vec<u32>,
    index: HashMap<String, usize>,
    params: HashMap<String, (u64, u32)>,
    drive: Vec<Drive>,
    comb: Vec<Vec<CStmt>>,
    clocked: Vec<Vec<CStmt>>,
    /// Signals written by edge-triggered blocks.
    pub registered: Vec<bool>,
}

struct Env<'a>(&'a HashMap<String, (u64, u32)>);

impl crate::hdl::Env for Env<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        self.0.get(name).map(|&(v, w)| Value::new(v, w))
    }
}

impl Design {
    pub fn new(m: &RtlModule) -> Result<Design, SimError> {
        let mut d = Design {
            names: Vec::new(),
            widths: Vec::new(),
            index: HashMap::new(),
            params: HashMap::new(),
            drive: Vec::new(),
            comb: Vec::new(),
            clocked: Vec::new(),
            registered: Vec::new(),
        };
        for p in &m.params {
            let v = eval_expr_in(&p.value, &Env(&d.params), p.width)
                .map_err(|e| SimError::UnelaboratedModule(format!("parameter `{}`: {e}", p.name)))?;
            d.params.insert(p.name.clone(), (v.bits & mask(p.width), p.width));
        }
        let mut clocks = Vec::new();
        let mut resets = Vec::new();
        for b in &m.always_blocks {
            if let Some((_, c)) = b.clock() {
                clocks.push(c.to_string());
            }
            resets.extend(b.resets().into_iter().map(String::from));
        }
        for decl in &m.decls {
            if d.index.contains_key(&decl.name) {
                continue;
            }
            d.index.insert(decl.name.clone(), d.names.len());
            d.names.push(decl.name.clone());
            d.widths.push(decl.width.clamp(1, 64));
            d.drive.push(if clocks.contains(&decl.name) {
                Drive::Clock
            } else if resets.contains(&decl.name) {
                Drive::Reset
            } else if decl.direction == Direction::Input {
                Drive::Random
            } else {
                Drive::Logic
            });
        }
        d.registered = vec![false; d.names.len()];
        for b in &m.always_blocks {
            let body = d.lower_body(&b.body)?;
            if b.is_clocked() {
                for a in b.assigns() {
                    if let Some(&i) = d.index.get(&a.lhs.name) {
                        d.registered[i] = true;
                    }
                }
                d.clocked.push(body);
            } else {
                d.comb.push(body);
            }
        }
        Ok(d)
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn resolve(&self, name: &str) -> Option<Resolved> {
        if let Some(&i) = self.index.get(name) {
            Some(Resolved::Slot(i, self.widths[i]))
        } else {
            self.params.get(name).map(|&(v, w)| Resolved::Const(v, w))
        }
    }

    fn expr(&self, e: &Expr, ctx: u32) -> Result<(CExpr, u32), SimError> {
        let resolve = |n: &str| self.resolve(n);
        let c = Compiler { resolve: &resolve, history: false };
        c.compile(e, Phase::Pre, 0, ctx).map_err(|err| match err {
            CompileError::Unknown(n) => SimError::UnelaboratedModule(format!("undeclared `{n}`")),
            CompileError::History => SimError::UnelaboratedModule("$past/$stable in RTL".into()),
        })
    }

    fn lower_body(&self, body: &[Stmt]) -> Result<Vec<CStmt>, SimError> {
        let mut out = Vec::new();
        for s in body {
            self.lower_stmt(s, &mut out)?;
        }
        Ok(out)
    }

    fn lower_stmt(&self, s: &Stmt, out: &mut Vec<CStmt>) -> Result<(), SimError> {
        match s {
            Stmt::Assign(a) => {
                let slot = self
                    .slot(&a.lhs.name)
                    .ok_or_else(|| SimError::UnelaboratedModule(format!("undeclared `{}`", a.lhs.name)))?;
                let width = self.widths[slot];
                let bit = match &a.lhs.index {
                    Some(ix) => Some(self.expr(ix, 1)?.0),
                    None => None,
                };
                let ctx = if bit.is_some() { 1 } else { width };
                let (rhs, _) = self.expr(&a.rhs, ctx)?;
                out.push(CStmt::Assign { slot, bit, rhs, width, nonblocking: a.nonblocking });
            }
            Stmt::If(i) => {
                let mut arms = Vec::new();
                for arm in &i.arms {
                    arms.push((self.expr(&arm.cond, 1)?.0, self.lower_body(&arm.body)?));
                }
                let other = match &i.else_arm {
                    Some(e) => self.lower_body(&e.body)?,
                    None => Vec::new(),
                };
                out.push(CStmt::If { arms, other });
            }
            Stmt::Case(c) => {
                let (sel, sw) = self.expr(&c.selector, 1)?;
                let mut arms = Vec::new();
                for arm in &c.arms {
                    let labels = arm.labels.iter().map(|l| self.expr(l, sw).map(|x| x.0)).collect::<Result<_, _>>()?;
                    arms.push((labels, self.lower_body(&arm.body)?));
                }
                let default = match &c.default {
                    Some(d) => self.lower_body(&d.body)?,
                    None => Vec::new(),
                };
                out.push(CStmt::Case { sel, arms, default });
            }
            Stmt::Block(b) => {
                for s in b {
                    self.lower_stmt(s, out)?;
                }
            }
        }
        Ok(())
    }
}

fn write(state: &mut [u64], slot: usize, bit: Option<u64>, value: u64, width: u32) {
    match bit {
        None => state[slot] = value & mask(width),
        Some(i) if i < width as u64 => {
            state[slot] = (state[slot] & !(1u64 << i)) | ((value & 1) << i);
        }
        Some(_) => {}
    }
}

/// Runs statements; blocking writes land in `state` at once, nonblocking
/// ones are queued in `nba`.
fn exec(stmts: &[CStmt], state: &mut Vec<u64>, nba: &mut Vec<(usize, Option<u64>, u64, u32)>) {
    for s in stmts {
        match s {
            CStmt::Assign { slot, bit, rhs, width, nonblocking } => {
                let v = rhs.eval(state.as_slice()).unwrap_or(0);
                let b = bit.as_ref().map(|b| b.eval(state.as_slice()).unwrap_or(0));
                if *nonblocking {
                    nba.push((*slot, b, v, *width));
                } else {
                    write(state, *slot, b, v, *width);
                }
            }
            CStmt::If { arms, other } => {
                let hit = arms.iter().find(|(c, _)| c.eval(state.as_slice()).unwrap_or(0) != 0);
                match hit {
                    Some((_, body)) => exec(body, state, nba),
                    None => exec(other, state, nba),
                }
            }
            CStmt::Case { sel, arms, default } => {
                let v = sel.eval(state.as_slice()).unwrap_or(0);
                let hit = arms.iter().find(|(labels, _)| labels.iter().any(|l| l.eval(state.as_slice()) == Some(v)));
                match hit {
                    Some((_, body)) => exec(body, state, nba),
                    None => exec(default, state, nba),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub names: Vec<String>,
    pub widths: Vec<u32>,
    /// `pre[signal][cycle]`: settled values just before the clock edge.
    pub pre: Vec<Vec<u64>>,
    /// `post[signal][cycle]`: settled values just after it.
    pub post: Vec<Vec<u64>>,
    pub registered: Vec<bool>,
    /// Parameter values, readable by properties.
    pub consts: HashMap<String, (u64, u32)>,
}

impl Trace {
    pub fn cycles(&self) -> usize {
        self.pre.first().map_or(0, Vec::len)
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn post_of(&self, name: &str) -> Option<&[u64]> {
        self.slot(name).map(|i| self.post[i].as_slice())
    }

    /// Columnar dump, one line per cycle. Registered signals show
    /// `pre>post`.
    pub fn dump(&self) -> String {
        let mut out = String::from("cycle");
        for n in &self.names {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
        for c in 0..self.cycles() {
            let _ = write!(out, "{c}");
            for i in 0..self.names.len() {
                if self.registered[i] {
                    let _ = write!(out, " {:x}>{:x}", self.pre[i][c], self.post[i][c]);
                } else {
                    let _ = write!(out, " {:x}", self.post[i][c]);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// A trace read at a fixed cycle, for property evaluation.
pub struct At<'t> {
    pub trace: &'t Trace,
    pub cycle: usize,
}

impl Reader for At<'_> {
    #[inline]
    fn read(&self, slot: usize, phase: Phase, back: u32) -> Option<u64> {
        let c = self.cycle.checked_sub(back as usize)?;
        Some(match phase {
            Phase::Pre => self.trace.pre[slot][c],
            Phase::Post => self.trace.post[slot][c],
        })
    }
}

fn settle(d: &Design, state: &mut Vec<u64>, cycle: usize) -> Result<(), SimError> {
    if d.comb.is_empty() {
        return Ok(());
    }
    let mut nba = Vec::new();
    for _ in 0..COMB_ITERATION_CAP {
        let before = state.clone();
        for b in &d.comb {
            exec(b, state, &mut nba);
            // nonblocking writes in combinational blocks settle like blocking ones
            for (slot, bit, v, w) in nba.drain(..) {
                write(state, slot, bit, v, w);
            }
        }
        if *state == before {
            return Ok(());
        }
    }
    Err(SimError::CombLoopDetected { cycle })
}

pub fn simulate(m: &RtlModule, plan: &StimulusPlan) -> Result<Trace, SimError> {
    simulate_design(&Design::new(m)?, plan)
}

pub fn simulate_design(d: &Design, plan: &StimulusPlan) -> Result<Trace, SimError> {
    let n = d.names.len();
    let cycles = plan.cycles.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut state = vec![0u64; n];
    let mut pre = vec![Vec::with_capacity(cycles); n];
    let mut post = vec![Vec::with_capacity(cycles); n];
    let mut nba = Vec::new();
    for c in 0..cycles {
        for i in 0..n {
            match d.drive[i] {
                Drive::Random => state[i] = rng.gen::<u64>() & mask(d.widths[i]),
                Drive::Reset => {
                    let low = c < 2 || rng.gen_bool(plan.reset_rate);
                    state[i] = if low { 0 } else { mask(d.widths[i]) };
                }
                Drive::Clock | Drive::Logic => {}
            }
        }
        settle(d, &mut state, c)?;
        for (i, v) in state.iter().enumerate() {
            pre[i].push(*v);
        }
        for b in &d.clocked {
            exec(b, &mut state, &mut nba);
        }
        for (slot, bit, v, w) in nba.drain(..) {
            write(&mut state, slot, bit, v, w);
        }
        settle(d, &mut state, c)?;
        for (i, v) in state.iter().enumerate() {
            post[i].push(*v);
        }
    }
    Ok(Trace { names: d.names.clone(), widths: d.widths.clone(), pre, post, registered: d.registered.clone(), consts: d.params.clone() })
}
