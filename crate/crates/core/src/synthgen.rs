//! Random condition blocks and the prompt/response dataset built on them.

use crate::assertsynth::{properties, synthesize, SynthError, SynthOptions};
use crate::hdl::*;
use crate::identifiers::IdentifierPool;
use crate::logic;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::str::FromStr;
use thiserror::Error;

pub const CLOCK: &str = "clk_i";
pub const RESET: &str = "rst_ni";
/// Smallest probability of any path under uniform inputs.
pub const MIN_PATH_PROBABILITY: f64 = 1.0 / 64.0;
const MAX_ATTEMPTS: u64 = 2000;
const REDRAWS: usize = 24;
pub const MIN_POOL: usize = 8;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("identifier pool is empty")]
    EmptyPool,
    #[error("identifier pool has {have} usable names, need at least {need}")]
    PoolTooSmall { have: usize, need: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("no block with reachable paths found for seed {0}")]
    Unreachable(u64),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    IfElse,
    CaseStmt,
    Combined,
}

pub const CATEGORIES: [Category; 3] = [Category::IfElse, Category::CaseStmt, Category::Combined];

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::IfElse => "if_else",
            Category::CaseStmt => "case_stmt",
            Category::Combined => "combined",
        }
    }
}

impl FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        CATEGORIES.iter().copied().find(|c| c.name() == s).ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub sample_count: usize,
    /// if_else, case_stmt, combined.
    pub ratios: [f64; 3],
    pub sync_fraction: f64,
    pub max_nesting: usize,
    pub long_condition_min_atoms: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            sample_count: 20000,
            ratios: [0.52, 0.28, 0.20],
            sync_fraction: 0.5,
            max_nesting: 3,
            long_condition_min_atoms: 4,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.ratios.iter().any(|r| *r < 0.0) {
            return Err(GenError::BadConfig(format!("ratios must be non-negative and sum to 1, got {sum}")));
        }
        if !(0.0..=1.0).contains(&self.sync_fraction) {
            return Err(GenError::BadConfig("sync fraction must lie in [0, 1]".into()));
        }
        if self.max_nesting < 3 {
            return Err(GenError::BadConfig("max nesting must be at least 3".into()));
        }
        if self.long_condition_min_atoms < 1 {
            return Err(GenError::BadConfig("long conditions need at least one atom".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub category: Category,
    pub sync: bool,
    pub seed: u64,
    pub n_assertions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSample {
    pub prompt: String,
    pub response: String,
    pub meta: SampleMeta,
}

/// Ground truth recorded while generating: one entry per leaf path.
#[derive(Debug, Clone, Default)]
pub struct GenTrace {
    pub paths: Vec<TracePath>,
}

#[derive(Debug, Clone)]
pub struct TracePath {
    /// Guards along the path, earlier arms wrapped in `!( )`.
    pub condition: Expr,
    pub assignments: Vec<(String, Expr)>,
}

pub fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of sample `index` under `master`.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    splitmix(master ^ splitmix(index.wrapping_add(0x5eed)))
}

fn pick_literal(rng: &mut ChaCha8Rng, width: u32) -> Expr {
    let value = rng.gen::<u64>() & mask(width);
    literal(rng, width, value)
}

fn literal(rng: &mut ChaCha8Rng, width: u32, value: u64) -> Expr {
    let base = if width == 1 {
        Base::Bin
    } else {
        [Base::Bin, Base::Hex, Base::Dec][rng.gen_range(0..3)]
    };
    Expr::sized(width, base, value)
}

fn atom(rng: &mut ChaCha8Rng, inputs: &[(String, u32)]) -> Expr {
    let (name, width) = &inputs[rng.gen_range(0..inputs.len())];
    let id = Expr::ident(name.as_str());
    if *width == 1 {
        if rng.gen_bool(0.5) {
            id
        } else {
            Expr::not(id)
        }
    } else {
        let op = if rng.gen_bool(0.5) { BinaryOp::Eq } else { BinaryOp::Neq };
        let lit = pick_literal(rng, *width);
        Expr::binary(op, id, lit)
    }
}

fn condition(rng: &mut ChaCha8Rng, inputs: &[(String, u32)], atoms: usize) -> Expr {
    if atoms <= 1 {
        return atom(rng, inputs);
    }
    let left = rng.gen_range(1..atoms);
    let op = if rng.gen_bool(0.5) { BinaryOp::LogAnd } else { BinaryOp::LogOr };
    let l = condition(rng, inputs, left);
    let r = condition(rng, inputs, atoms - left);
    Expr::binary(op, l, r)
}

/// A random boolean condition over pool names with exactly `atoms` leaves.
/// Each name gets a width of 1 to 4 bits for its comparisons.
pub fn gen_condition(pool: &IdentifierPool, atoms: usize, seed: u64) -> Result<Expr, GenError> {
    if pool.is_empty() {
        return Err(GenError::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<(String, u32)> = pool.entries.iter().map(|e| (e.name.clone(), rng.gen_range(1..=4))).collect();
    Ok(condition(&mut rng, &inputs, atoms.max(1)))
}

/// Number of leaves of a condition built by [`gen_condition`].
pub fn atom_count(e: &Expr) -> usize {
    match e {
        Expr::Binary { op, lhs, rhs } if op.is_logical() => atom_count(lhs) + atom_count(rhs),
        _ => 1,
    }
}

struct Names {
    targets: Vec<(String, u32)>,
    selector: Option<(String, u32)>,
    inputs: Vec<(String, u32)>,
    data: Vec<(String, u32)>,
    delayed: Option<(String, String)>,
}

struct Builder<'c> {
    rng: ChaCha8Rng,
    cfg: &'c GenConfig,
    names: Names,
    sync: bool,
    trace: GenTrace,
    data_used: Vec<String>,
    widths: HashMap<String, u32>,
}

impl Builder<'_> {
    fn cond(&mut self) -> Expr {
        let atoms = if self.rng.gen_bool(0.2) {
            self.rng.gen_range(self.cfg.long_condition_min_atoms..=self.cfg.long_condition_min_atoms + 2)
        } else {
            self.rng.gen_range(1..=3)
        };
        condition(&mut self.rng, &self.names.inputs, atoms)
    }

    fn probability(&self, terms: &[&Expr]) -> f64 {
        let widths = |n: &str| self.widths.get(n).copied();
        logic::probability_all(terms, &widths).unwrap_or(0.0)
    }

    /// Redraws a guard a few times so both it and its complement stay
    /// likely enough under `path`.
    fn reachable_cond(&mut self, path: &[Expr], need_arm: f64, need_rest: f64) -> Expr {
        let whole = self.probability(&path.iter().collect::<Vec<_>>());
        let mut cond = self.cond();
        for _ in 0..REDRAWS {
            let terms: Vec<&Expr> = path.iter().chain([&cond]).collect();
            let p = self.probability(&terms);
            if p >= need_arm - 1e-12 && whole - p >= need_rest - 1e-12 {
                break;
            }
            cond = self.cond();
        }
        cond
    }

    fn rhs(&mut self, target: &(String, u32)) -> Expr {
        let data: Vec<&(String, u32)> = self.names.data.iter().filter(|d| d.1 == target.1).collect();
        // one data-driven arm per target keeps every path observable by a mutant
        if !data.is_empty() && !self.data_used.contains(&target.0) && self.rng.gen_bool(0.4) {
            self.data_used.push(target.0.clone());
            Expr::ident(data[self.rng.gen_range(0..data.len())].0.as_str())
        } else {
            pick_literal(&mut self.rng, target.1)
        }
    }

    fn assign(&self, lhs: &str, rhs: Expr) -> Stmt {
        Stmt::Assign(Assign { lhs: Ident::new(lhs), rhs, nonblocking: self.sync, span: Span::default() })
    }

    /// Assignments to all targets or a random non-empty subset.
    fn assigns(&mut self, path: &[Expr]) -> Vec<Stmt> {
        let targets = self.names.targets.clone();
        let chosen: Vec<(String, u32)> = if targets.len() == 1 || self.rng.gen_bool(0.7) {
            targets
        } else {
            vec![targets[self.rng.gen_range(0..targets.len())].clone()]
        };
        let mut out = Vec::new();
        let mut rec = Vec::new();
        for t in &chosen {
            let rhs = self.rhs(t);
            rec.push((t.0.clone(), rhs.clone()));
            out.push(self.assign(&t.0, rhs));
        }
        self.record(path, rec);
        out
    }

    fn record(&mut self, path: &[Expr], assignments: Vec<(String, Expr)>) {
        let condition = Expr::conjunction(path.iter().cloned()).unwrap_or_else(|| Expr::bit(true));
        self.trace.paths.push(TracePath { condition, assignments });
    }

    /// If chain whose arm `nest_at` (when given) holds a deeper chain.
    fn if_chain(&mut self, path: &[Expr], level: usize, depth: usize) -> IfStmt {
        let n_arms = self.rng.gen_range(1..=4);
        let has_else = self.rng.gen_bool(0.5);
        let slots = n_arms + has_else as usize;
        let nest_at = (level < depth).then(|| self.rng.gen_range(0..slots));
        let mut arms = Vec::new();
        let mut prior: Vec<Expr> = Vec::new();
        for i in 0..n_arms {
            let mut p = path.to_vec();
            p.extend(prior.iter().cloned());
            // a nested chain needs room for its own arms
            let nest_share = (1u32 << (depth - level).min(8)) as f64;
            let share = |slot: usize| if nest_at == Some(slot) { nest_share } else { 1.0 };
            let need_arm = share(i) * MIN_PATH_PROBABILITY;
            let need_rest = (i + 1..=n_arms).map(share).sum::<f64>() * MIN_PATH_PROBABILITY;
            let cond = self.reachable_cond(&p, need_arm, need_rest);
            p.push(cond.clone());
            let body = self.arm_body(&p, nest_at == Some(i), level, depth);
            prior.push(Expr::not(cond.clone()));
            arms.push(IfArm { cond, body, cond_span: Span::default(), span: Span::default() });
        }
        let mut p = path.to_vec();
        p.extend(prior);
        let else_arm = if has_else {
            let body = self.arm_body(&p, nest_at == Some(n_arms), level, depth);
            Some(ElseArm { body, span: Span::default() })
        } else {
            self.record(&p, Vec::new());
            None
        };
        IfStmt { arms, else_arm, span: Span::default() }
    }

    fn arm_body(&mut self, path: &[Expr], nest: bool, level: usize, depth: usize) -> Vec<Stmt> {
        if nest {
            vec![Stmt::If(self.if_chain(path, level + 1, depth))]
        } else {
            self.assigns(path)
        }
    }

    fn case_stmt(&mut self, path: &[Expr], with_ifs: bool) -> CaseStmt {
        let (sel, width) = self.names.selector.clone().expect("case samples draw a selector");
        let n_arms = if with_ifs { self.rng.gen_range(2..=4) } else { self.rng.gen_range(2..=6) };
        let mut values: Vec<u64> = (0..(1u64 << width)).collect();
        values.shuffle(&mut self.rng);
        let mut values = values.into_iter();
        let sel_e = Expr::ident(sel.as_str());
        let mut arms = Vec::new();
        let mut all_labels = Vec::new();
        for _ in 0..n_arms {
            let n_labels = if self.rng.gen_bool(0.15) { 2 } else { 1 };
            let labels: Vec<Expr> = (0..n_labels)
                .filter_map(|_| values.next())
                .map(|v| literal(&mut self.rng, width, v))
                .collect();
            if labels.is_empty() {
                break;
            }
            let term = Expr::disjunction(labels.iter().map(|l| Expr::eq(sel_e.clone(), l.clone()))).unwrap();
            let mut p = path.to_vec();
            p.push(term);
            let body = if with_ifs && self.rng.gen_bool(0.6) {
                vec![Stmt::If(self.if_chain(&p, 1, 1))]
            } else {
                self.assigns(&p)
            };
            all_labels.extend(labels.iter().cloned());
            arms.push(CaseArm { labels, body, labels_span: Span::default(), span: Span::default() });
        }
        let mut p = path.to_vec();
        p.extend(all_labels.into_iter().map(|l| Expr::binary(BinaryOp::Neq, sel_e.clone(), l)));
        let default = if self.rng.gen_bool(0.5) {
            Some(ElseArm { body: self.assigns(&p), span: Span::default() })
        } else {
            self.record(&p, Vec::new());
            None
        };
        CaseStmt { selector: sel_e, arms, default, span: Span::default() }
    }
}

fn take_names(pool: &IdentifierPool) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    pool.entries
        .iter()
        .map(|e| e.name.clone())
        .filter(|n| n != CLOCK && n != RESET && seen.insert(n.clone()))
        .collect()
}

/// One module holding one always block, plus the path ground truth.
pub fn gen_block(
    category: Category,
    sync: bool,
    pool: &IdentifierPool,
    seed: u64,
    cfg: &GenConfig,
) -> Result<(RtlModule, GenTrace), GenError> {
    let names = take_names(pool);
    if names.len() < MIN_POOL {
        return Err(GenError::PoolTooSmall { have: names.len(), need: MIN_POOL });
    }
    // decisions that survive rejection
    let mut first = ChaCha8Rng::seed_from_u64(seed);
    let deep = category == Category::IfElse && first.gen_bool(0.45);
    let depth = if deep { first.gen_range(3..=cfg.max_nesting.min(4)) } else { first.gen_range(1..=2) };
    let reset = sync && first.gen_bool(0.5);
    let delayed = sync && !reset && first.gen_bool(0.2);
    for attempt in 0..MAX_ATTEMPTS {
        let sub = if attempt == 0 { splitmix(seed) } else { splitmix(seed ^ splitmix(attempt)) };
        let Some((m, trace)) = build(category, sync, reset, delayed, depth, &names, sub, cfg) else {
            continue;
        };
        let widths = |n: &str| m.width_of(n);
        let ok = trace.paths.iter().all(|p| {
            logic::probability(&p.condition, &widths).map(|q| q >= MIN_PATH_PROBABILITY - 1e-12).unwrap_or(false)
        });
        if ok {
            let mut trace = trace;
            trace.paths.retain(|p| !p.assignments.is_empty());
            return Ok((m, trace));
        }
    }
    Err(GenError::Unreachable(seed))
}

#[allow(clippy::too_many_arguments)]
fn build(
    category: Category,
    sync: bool,
    reset: bool,
    delayed: bool,
    depth: usize,
    pool_names: &[String],
    seed: u64,
    cfg: &GenConfig,
) -> Option<(RtlModule, GenTrace)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<String> = pool_names.to_vec();
    pool.shuffle(&mut rng);
    let mut it = pool.into_iter();
    let mut next = || it.next();
    let n_targets = rng.gen_range(1..=2);
    let targets: Vec<(String, u32)> =
        (0..n_targets).filter_map(|_| next()).map(|n| (n, rng.gen_range(1..=32))).collect();
    let delayed_names = if delayed {
        match (next(), next()) {
            (Some(en), Some(r)) => Some((en, r)),
            _ => None,
        }
    } else {
        None
    };
    let selector = match category {
        Category::IfElse => None,
        Category::CaseStmt => next().map(|n| (n, rng.gen_range(3..=6))),
        // arms holding if chains need room to split further
        Category::Combined => next().map(|n| (n, rng.gen_range(3..=4))),
    };
    let n_inputs = rng.gen_range(2..=5);
    let inputs: Vec<(String, u32)> = (0..n_inputs).filter_map(|_| next()).map(|n| (n, rng.gen_range(1..=4))).collect();
    let mut data = Vec::new();
    for t in &targets {
        if rng.gen_bool(0.5) {
            if let Some(n) = next() {
                data.push((n, t.1));
            }
        }
    }
    let names = Names { targets, selector, inputs, data, delayed: delayed_names };
    let widths = names
        .targets
        .iter()
        .chain(&names.inputs)
        .chain(&names.data)
        .chain(&names.selector)
        .map(|(n, w)| (n.clone(), *w))
        .chain(names.delayed.iter().map(|(en, _)| (en.clone(), 1)))
        .chain([(RESET.to_string(), 1)])
        .collect();
    let mut b = Builder { rng, cfg, names, sync, trace: GenTrace::default(), data_used: Vec::new(), widths };

    let reset_cond = Expr::unary(UnaryOp::BitNot, Expr::ident(RESET));
    let mut top: Vec<Expr> = Vec::new();
    let mut reset_arm = None;
    if reset {
        let mut stmts = Vec::new();
        let mut rec = Vec::new();
        for t in b.names.targets.clone() {
            let v = if b.rng.gen_bool(0.5) { Expr::fill(false) } else { Expr::sized(t.1, Base::Dec, 0) };
            rec.push((t.0.clone(), v.clone()));
            stmts.push(b.assign(&t.0, v));
        }
        b.record(std::slice::from_ref(&reset_cond), rec);
        reset_arm = Some(IfArm { cond: reset_cond.clone(), body: stmts, cond_span: Span::default(), span: Span::default() });
        top.push(Expr::not(reset_cond.clone()));
    }
    let main: Stmt = match category {
        Category::IfElse => {
            let mut chain = b.if_chain(&top, 1, depth);
            if let Some(arm) = reset_arm.take() {
                chain.arms.insert(0, arm);
            }
            Stmt::If(chain)
        }
        Category::CaseStmt | Category::Combined => {
            let case = Stmt::Case(b.case_stmt(&top, category == Category::Combined));
            match reset_arm.take() {
                Some(arm) => Stmt::If(IfStmt {
                    arms: vec![arm],
                    else_arm: Some(ElseArm { body: vec![case], span: Span::default() }),
                    span: Span::default(),
                }),
                None => case,
            }
        }
    };
    let mut body = vec![main];
    // the copied target must change over time for the copy to be observable
    let varying = b.names.targets.iter().position(|(t, _)| {
        let rhs: Vec<&Expr> =
            b.trace.paths.iter().flat_map(|p| &p.assignments).filter(|(l, _)| l == t).map(|(_, r)| r).collect();
        rhs.iter().any(|r| *r != rhs[0] || !r.is_literal())
    });
    if b.names.delayed.is_some() && varying.is_none() {
        return None;
    }
    let copy_src = varying.unwrap_or(0);
    if let Some((en, r)) = &b.names.delayed {
        let q = b.names.targets[copy_src].0.clone();
        let copy = b.assign(r, Expr::ident(q.as_str()));
        let en_e = Expr::ident(en.as_str());
        b.record(std::slice::from_ref(&en_e), vec![(r.clone(), Expr::ident(q.as_str()))]);
        b.record(&[Expr::not(en_e.clone())], Vec::new());
        body.push(Stmt::If(IfStmt {
            arms: vec![IfArm { cond: en_e, body: vec![copy], cond_span: Span::default(), span: Span::default() }],
            else_arm: None,
            span: Span::default(),
        }));
    }

    let mut m = RtlModule::new("cond_block");
    let input = |name: &str, width: u32| Decl { name: name.to_string(), width, direction: Direction::Input };
    let output = |name: &str, width: u32| Decl { name: name.to_string(), width, direction: Direction::Output };
    let mut sensitivity = Vec::new();
    if sync {
        m.decls.push(input(CLOCK, 1));
        sensitivity.push(SensItem { edge: Edge::Posedge, signal: CLOCK.into() });
    }
    if reset {
        m.decls.push(input(RESET, 1));
        sensitivity.push(SensItem { edge: Edge::Negedge, signal: RESET.into() });
    }
    if let Some((s, w)) = &b.names.selector {
        m.decls.push(input(s, *w));
    }
    for (n, w) in b.names.inputs.iter().chain(&b.names.data) {
        m.decls.push(input(n, *w));
    }
    if let Some((en, _)) = &b.names.delayed {
        m.decls.push(input(en, 1));
    }
    for (n, w) in &b.names.targets {
        m.decls.push(output(n, *w));
    }
    if let Some((_, r)) = &b.names.delayed {
        m.decls.push(output(r, b.names.targets[copy_src].1));
    }
    let kind = if !sync {
        AlwaysKind::AlwaysComb
    } else if b.rng.gen_bool(0.5) {
        AlwaysKind::AlwaysFf
    } else {
        AlwaysKind::Always
    };
    m.always_blocks.push(AlwaysBlock { kind, sensitivity, body, span: Span::default() });
    Some((m, b.trace))
}

pub fn prompt_for(code: &str, sync: bool) -> String {
    if sync {
        format!("Generate a list of synchronous SystemVerilog assertions executing at (posedge {CLOCK}) from the following code:\n{code}")
    } else {
        format!("Generate a list of asynchronous SystemVerilog Assertions from the following code:\n{code}")
    }
}

/// Largest-remainder apportionment of `total` by `weights`.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if total == 0 || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let mut left = total.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Category and sync flag of every sample index.
pub fn schedule(cfg: &GenConfig) -> Vec<(Category, bool)> {
    let per_cat = apportion(cfg.sample_count, &cfg.ratios);
    let mut slots = Vec::with_capacity(cfg.sample_count);
    for (cat, n) in CATEGORIES.iter().zip(per_cat) {
        let split = apportion(n, &[cfg.sync_fraction, 1.0 - cfg.sync_fraction]);
        slots.extend(std::iter::repeat_n((*cat, true), split[0]));
        slots.extend(std::iter::repeat_n((*cat, false), split[1]));
    }
    slots.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    slots
}

/// Builds sample `index` of a dataset. The module is the parse of the
/// prompt code, so spans refer to that text.
pub fn gen_sample(
    cfg: &GenConfig,
    pool: &IdentifierPool,
    index: usize,
    category: Category,
    sync: bool,
) -> Result<(DatasetSample, RtlModule, GenTrace), GenError> {
    let seed = sample_seed(cfg.seed, index as u64);
    let (m, trace) = gen_block(category, sync, pool, seed, cfg)?;
    // reparse so every statement carries its span in the printed text
    let m = crate::parse::parse_module(&print_module(&m), &Default::default()).module.unwrap_or(m);
    let paths = synthesize(&m.always_blocks[0], &SynthOptions { seed, ..Default::default() })?;
    let props = properties(&paths);
    let sample = DatasetSample {
        prompt: prompt_for(&print_module(&m), sync),
        response: print_properties(&props),
        meta: SampleMeta { category, sync, seed, n_assertions: props.len() },
    };
    Ok((sample, m, trace))
}

pub fn assemble(cfg: &GenConfig, pool: &IdentifierPool) -> Result<Vec<DatasetSample>, GenError> {
    cfg.validate()?;
    if cfg.sample_count == 0 {
        return Ok(Vec::new());
    }
    let slots = schedule(cfg);
    slots
        .par_iter()
        .enumerate()
        .map(|(i, &(cat, sync))| gen_sample(cfg, pool, i, cat, sync).map(|x| x.0))
        .collect()
}

/// Sample counts keyed by category name, then sync flag.
pub fn composition(samples: &[DatasetSample]) -> BTreeMap<String, (usize, usize)> {
    let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in samples {
        let e = out.entry(s.meta.category.name().to_string()).or_default();
        if s.meta.sync {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    out
}

pub fn write_jsonl<W: Write>(samples: &[DatasetSample], mut w: W) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Widths of every declared name, for the logic module.
pub fn width_map(m: &RtlModule) -> HashMap<String, u32> {
    m.decls.iter().map(|d| (d.name.clone(), d.width)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identifiers::synthesize as synth_pool;

    #[test]
    fn apportion_default_split() {
        assert_eq!(apportion(20000, &[0.52, 0.28, 0.20]), vec![10400, 5600, 4000]);
        assert_eq!(apportion(7, &[0.5, 0.5]), vec![4, 3]);
        assert_eq!(apportion(0, &[0.5, 0.5]), vec![0, 0]);
    }

    #[test]
    fn single_atom() {
        let pool = synth_pool(10, 1).unwrap();
        for s in 0..50 {
            let c = gen_condition(&pool, 1, s).unwrap();
            assert_eq!(atom_count(&c), 1);
            assert!(!matches!(c, Expr::Binary { op: BinaryOp::LogAnd | BinaryOp::LogOr, .. }));
        }
        assert_eq!(atom_count(&gen_condition(&pool, 6, 3).unwrap()), 6);
    }

    #[test]
    fn small_pool_rejected() {
        let pool = synth_pool(5, 1).unwrap();
        assert!(matches!(
            gen_block(Category::IfElse, true, &pool, 1, &GenConfig::default()),
            Err(GenError::PoolTooSmall { .. })
        ));
    }

    #[test]
    fn async_blocks_are_comb() {
        let pool = synth_pool(40, 2).unwrap();
        for s in 0..20 {
            let (m, _) = gen_block(Category::Combined, false, &pool, s, &GenConfig::default()).unwrap();
            assert_eq!(m.always_blocks[0].kind, AlwaysKind::AlwaysComb);
            assert!(m.always_blocks[0].assigns().iter().all(|a| !a.nonblocking));
        }
    }

    fn check_sample(cat: Category, sync: bool, seed: u64) {
        let cfg = GenConfig::default();
        let pool = synth_pool(60, 9).unwrap();
        let (m, trace) = gen_block(cat, sync, &pool, seed, &cfg).unwrap();
        let text = print_module(&m);
        let reparsed = crate::parse::parse_module(&text, &Default::default());
        assert!(!reparsed.has_errors(), "{text}\n{:?}", reparsed.diagnostics);
        let paths = synthesize(&reparsed.module.unwrap().always_blocks[0], &SynthOptions::default()).unwrap();
        let widths = |n: &str| m.width_of(n);
        let assigned: Vec<_> = paths.iter().filter(|p| p.kind == crate::assertsynth::PathKind::Assignment).collect();
        assert_eq!(assigned.len(), trace.paths.len(), "{text}");
        for t in &trace.paths {
            let hit = assigned.iter().any(|p| {
                logic::equivalent(&p.path_condition, &t.condition, &widths).unwrap_or(false)
                    && p.assignments.iter().map(|(l, r)| (l.name.clone(), r.clone())).collect::<Vec<_>>() == t.assignments
            });
            assert!(hit, "no synthesized path for {}\n{text}", print_expr(&t.condition));
            let q = logic::probability(&t.condition, &widths).unwrap();
            assert!(q >= MIN_PATH_PROBABILITY - 1e-12);
        }
        let response = print_properties(&properties(&paths));
        let parsed = crate::parse::parse_properties(&response);
        assert!(parsed.diagnostics.iter().all(|d| !d.is_error()), "{response}");
        assert_eq!(parsed.properties.len(), paths.len());
    }

    #[test]
    fn trace_matches_synthesis() {
        for seed in 0..40 {
            for cat in CATEGORIES {
                check_sample(cat, seed % 2 == 0, seed);
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = GenConfig { sample_count: 60, seed: 11, ..Default::default() };
        let pool = synth_pool(50, 3).unwrap();
        let a = assemble(&cfg, &pool).unwrap();
        assert_eq!(a, assemble(&cfg, &pool).unwrap());
        let c = composition(&a);
        assert_eq!(c["if_else"].0 + c["if_else"].1, 31);
        assert_eq!(c["case_stmt"].0 + c["case_stmt"].1, 17);
        assert_eq!(c["combined"].0 + c["combined"].1, 12);
        let other = assemble(&GenConfig { seed: 12, ..cfg }, &pool).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn sync_prompt() {
        assert!(prompt_for("x", true).starts_with("Generate a list of synchronous SystemVerilog assertions executing at (posedge clk_i)"));
    }
}
