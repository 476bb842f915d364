//! Propositional view of guard expressions, decided by enumeration.
//!
//! A signal compared against constants is split into the value intervals
//! those constants induce, so `s == 3'd2` and `s == 3'd5` are known to be
//! exclusive. Comparisons between two signals, arithmetic and `$past` become
//! opaque boolean atoms. Each interval carries its size, which gives exact
//! probabilities under uniformly random inputs.

use crate::hdl::{mask, print_expr, Base, BinaryOp, Expr, UnaryOp};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Largest number of assignments enumerated, the same as 20 free boolean atoms.
pub const ENUMERATION_BUDGET: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("{assignments} assignments exceed the enumeration budget")]
    AtomBudgetExceeded { assignments: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone)]
enum Formula {
    Const(bool),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Cmp { var: usize, op: Cmp, value: u64 },
    Truthy(usize),
    Opaque(usize),
}

#[derive(Debug, Clone)]
struct Var {
    width: u32,
    consts: BTreeSet<u64>,
}

/// Shared atom table for a set of expressions.
pub struct Abstraction<'w> {
    widths: &'w dyn Fn(&str) -> Option<u32>,
    vars: Vec<Var>,
    var_ix: HashMap<String, usize>,
    opaque_ix: HashMap<String, usize>,
}

fn is_term(e: &Expr) -> bool {
    matches!(e, Expr::Ident(_))
}

fn const_of(e: &Expr, width: u32) -> Option<u64> {
    match e {
        Expr::Literal { base: Base::Fill, value, .. } => Some(if *value & 1 == 1 { mask(width) } else { 0 }),
        Expr::Literal { width: Some(w), value, .. } => Some(value & mask(*w)),
        Expr::Literal { width: None, value, .. } => Some(*value & mask(32)),
        _ => None,
    }
}

fn flip(op: Cmp) -> Cmp {
    match op {
        Cmp::Lt => Cmp::Gt,
        Cmp::Le => Cmp::Ge,
        Cmp::Gt => Cmp::Lt,
        Cmp::Ge => Cmp::Le,
        other => other,
    }
}

impl<'w> Abstraction<'w> {
    pub fn new(widths: &'w dyn Fn(&str) -> Option<u32>) -> Self {
        Abstraction { widths, vars: Vec::new(), var_ix: HashMap::new(), opaque_ix: HashMap::new() }
    }

    fn term_width(&self, e: &Expr) -> u32 {
        match e {
            Expr::Ident(id) if id.index.is_some() => 1,
            Expr::Ident(id) => (self.widths)(&id.name).unwrap_or(32),
            _ => 32,
        }
    }

    fn var(&mut self, e: &Expr) -> usize {
        if let Expr::Ident(id) = e {
            if let Some(&i) = id.index.is_none().then(|| self.var_ix.get(&id.name)).flatten() {
                return i;
            }
        }
        let key = match e {
            Expr::Ident(id) if id.index.is_none() => id.name.clone(),
            _ => print_expr(e),
        };
        if let Some(&i) = self.var_ix.get(&key) {
            return i;
        }
        let width = self.term_width(e);
        self.vars.push(Var { width, consts: BTreeSet::new() });
        self.var_ix.insert(key, self.vars.len() - 1);
        self.vars.len() - 1
    }

    fn opaque(&mut self, key: String) -> usize {
        let n = self.opaque_ix.len();
        *self.opaque_ix.entry(key).or_insert(n)
    }

    fn lower(&mut self, e: &Expr) -> Formula {
        match e {
            Expr::Binary { op: BinaryOp::LogAnd, lhs, rhs } => {
                Formula::And(Box::new(self.lower(lhs)), Box::new(self.lower(rhs)))
            }
            Expr::Binary { op: BinaryOp::LogOr, lhs, rhs } => {
                Formula::Or(Box::new(self.lower(lhs)), Box::new(self.lower(rhs)))
            }
            Expr::Unary { op: UnaryOp::LogNot, inner } => Formula::Not(Box::new(self.lower(inner))),
            Expr::Unary { op: UnaryOp::BitNot, inner } if is_term(inner) && self.term_width(inner) == 1 => {
                Formula::Not(Box::new(self.lower(inner)))
            }
            Expr::Unary { op: UnaryOp::RedOr, inner } if is_term(inner) => self.lower(inner),
            Expr::Literal { .. } => Formula::Const(const_of(e, 64).unwrap_or(0) != 0),
            Expr::Ident(_) => {
                let v = self.var(e);
                Formula::Truthy(v)
            }
            Expr::Binary { op, lhs, rhs } if op.is_relational() => {
                let cmp = match op {
                    BinaryOp::Eq => Cmp::Eq,
                    BinaryOp::Neq => Cmp::Ne,
                    BinaryOp::Lt => Cmp::Lt,
                    BinaryOp::Le => Cmp::Le,
                    BinaryOp::Gt => Cmp::Gt,
                    _ => Cmp::Ge,
                };
                let (term, lit, cmp) = if is_term(lhs) && rhs.is_literal() {
                    (lhs.as_ref(), rhs.as_ref(), cmp)
                } else if is_term(rhs) && lhs.is_literal() {
                    (rhs.as_ref(), lhs.as_ref(), flip(cmp))
                } else {
                    return self.opaque_relation(cmp, lhs, rhs);
                };
                let var = self.var(term);
                let width = self.vars[var].width;
                let value = const_of(lit, width).unwrap_or(0);
                if value > mask(width) {
                    // constant outside the signal's range
                    return Formula::Const(match cmp {
                        Cmp::Eq | Cmp::Gt | Cmp::Ge => false,
                        Cmp::Ne | Cmp::Lt | Cmp::Le => true,
                    });
                }
                self.vars[var].consts.insert(value);
                Formula::Cmp { var, op: cmp, value }
            }
            _ => {
                let k = self.opaque(print_expr(e));
                Formula::Opaque(k)
            }
        }
    }

    /// Relations between non-constant operands: one atom per unordered pair
    /// so `a == b`, `b != a` and friends line up.
    fn opaque_relation(&mut self, cmp: Cmp, lhs: &Expr, rhs: &Expr) -> Formula {
        let (l, r) = (print_expr(lhs), print_expr(rhs));
        match cmp {
            Cmp::Eq | Cmp::Ne => {
                let key = if l <= r { format!("{l}=={r}") } else { format!("{r}=={l}") };
                let atom = Formula::Opaque(self.opaque(key));
                if cmp == Cmp::Eq {
                    atom
                } else {
                    Formula::Not(Box::new(atom))
                }
            }
            Cmp::Lt => Formula::Opaque(self.opaque(format!("{l}<{r}"))),
            Cmp::Ge => Formula::Not(Box::new(Formula::Opaque(self.opaque(format!("{l}<{r}"))))),
            Cmp::Gt => Formula::Opaque(self.opaque(format!("{r}<{l}"))),
            Cmp::Le => Formula::Not(Box::new(Formula::Opaque(self.opaque(format!("{r}<{l}"))))),
        }
    }

    /// Interval representatives and their sizes for every variable.
    fn domains(&self) -> Vec<Vec<(u64, f64)>> {
        self.vars
            .iter()
            .map(|v| {
                let max = mask(v.width) as u128;
                let mut cuts: BTreeSet<u128> = BTreeSet::new();
                cuts.insert(0);
                cuts.insert(1.min(max + 1));
                for &c in &v.consts {
                    cuts.insert(c as u128);
                    cuts.insert(c as u128 + 1);
                }
                cuts.insert(max + 1);
                let cuts: Vec<u128> = cuts.into_iter().filter(|&c| c <= max + 1).collect();
                cuts.windows(2).map(|w| (w[0] as u64, (w[1] - w[0]) as f64)).collect()
            })
            .collect()
    }
}

/// Three-valued evaluation over a partial assignment.
fn eval(f: &Formula, vals: &[Option<u64>], opq: &[Option<bool>]) -> Option<bool> {
    match f {
        Formula::Const(b) => Some(*b),
        Formula::Not(x) => eval(x, vals, opq).map(|b| !b),
        Formula::And(a, b) => match eval(a, vals, opq) {
            Some(false) => Some(false),
            Some(true) => eval(b, vals, opq),
            None => match eval(b, vals, opq) {
                Some(false) => Some(false),
                _ => None,
            },
        },
        Formula::Or(a, b) => match eval(a, vals, opq) {
            Some(true) => Some(true),
            Some(false) => eval(b, vals, opq),
            None => match eval(b, vals, opq) {
                Some(true) => Some(true),
                _ => None,
            },
        },
        Formula::Truthy(v) => vals[*v].map(|x| x != 0),
        Formula::Opaque(k) => opq[*k],
        Formula::Cmp { var, op, value } => vals[*var].map(|x| match op {
            Cmp::Eq => x == *value,
            Cmp::Ne => x != *value,
            Cmp::Lt => x < *value,
            Cmp::Le => x <= *value,
            Cmp::Gt => x > *value,
            Cmp::Ge => x >= *value,
        }),
    }
}

fn count_uses(f: &Formula, uses: &mut [usize]) {
    match f {
        Formula::Not(x) => count_uses(x, uses),
        Formula::And(a, b) | Formula::Or(a, b) => {
            count_uses(a, uses);
            count_uses(b, uses);
        }
        Formula::Truthy(v) | Formula::Cmp { var: v, .. } => uses[*v] += 1,
        Formula::Const(_) | Formula::Opaque(_) => {}
    }
}

struct Search<'a, F> {
    formulas: &'a [Formula],
    domains: Vec<Vec<(u64, f64)>>,
    // most-mentioned variables first, so branches settle early
    order: Vec<usize>,
    vals: Vec<Option<u64>>,
    opq: Vec<Option<bool>>,
    out: Vec<bool>,
    visit: F,
}

impl<F: FnMut(&[bool], f64) -> bool> Search<'_, F> {
    /// Assigns variables in order, stopping a branch as soon as every
    /// formula is decided. Returns false once `visit` asks to stop.
    fn run(&mut self, depth: usize, weight: f64) -> bool {
        let mut decided = true;
        for (o, f) in self.out.iter_mut().zip(self.formulas) {
            match eval(f, &self.vals, &self.opq) {
                Some(b) => *o = b,
                None => {
                    decided = false;
                    break;
                }
            }
        }
        if decided {
            return (self.visit)(&self.out, weight);
        }
        let n_vars = self.domains.len();
        if depth < n_vars {
            let var = self.order[depth];
            let total: f64 = self.domains[var].iter().map(|d| d.1).sum();
            for k in 0..self.domains[var].len() {
                let (v, size) = self.domains[var][k];
                self.vals[var] = Some(v);
                if !self.run(depth + 1, weight * size / total) {
                    return false;
                }
            }
            self.vals[var] = None;
        } else {
            let k = depth - n_vars;
            for b in [false, true] {
                self.opq[k] = Some(b);
                if !self.run(depth + 1, weight * 0.5) {
                    return false;
                }
            }
            self.opq[k] = None;
        }
        true
    }
}

/// Walks the assignments, handing the truth value of each formula and the
/// probability mass of the region to `visit`. Regions where every formula
/// is already decided are not split further. Stops early when `visit`
/// returns false.
fn enumerate(
    abs: &Abstraction,
    formulas: &[Formula],
    visit: impl FnMut(&[bool], f64) -> bool,
) -> Result<(), LogicError> {
    let domains = abs.domains();
    let n_opq = abs.opaque_ix.len();
    let mut total: u128 = 1 << n_opq.min(100);
    for d in &domains {
        total = total.saturating_mul(d.len() as u128);
    }
    if total > ENUMERATION_BUDGET || n_opq > 20 {
        return Err(LogicError::AtomBudgetExceeded { assignments: total });
    }
    let mut uses = vec![0usize; domains.len()];
    for f in formulas {
        count_uses(f, &mut uses);
    }
    let mut order: Vec<usize> = (0..domains.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(uses[i]), i));
    let mut s = Search {
        formulas,
        order,
        vals: vec![None; domains.len()],
        domains,
        opq: vec![None; n_opq],
        out: vec![false; formulas.len()],
        visit,
    };
    s.run(0, 1.0);
    Ok(())
}

/// How two conditions relate over all inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Relation {
    /// Some input satisfies both.
    pub overlap: bool,
    /// Some input satisfies the first but not the second.
    pub first_only: bool,
    /// Some input satisfies the second but not the first.
    pub second_only: bool,
}

impl Relation {
    pub fn equivalent(&self) -> bool {
        !self.first_only && !self.second_only
    }

    /// The first implies the second.
    pub fn first_implies_second(&self) -> bool {
        !self.first_only
    }

    pub fn second_implies_first(&self) -> bool {
        !self.second_only
    }

    pub fn disjoint(&self) -> bool {
        !self.overlap
    }
}

/// Width lookup that knows nothing: every signal is 32 bits, except that
/// `~x` is treated as boolean negation only for known one-bit signals.
pub fn no_widths(_: &str) -> Option<u32> {
    None
}

pub fn relate(a: &Expr, b: &Expr, widths: &dyn Fn(&str) -> Option<u32>) -> Result<Relation, LogicError> {
    let mut abs = Abstraction::new(widths);
    let fs = [abs.lower(a), abs.lower(b)];
    let mut r = Relation { overlap: false, first_only: false, second_only: false };
    enumerate(&abs, &fs, |v, _| {
        match (v[0], v[1]) {
            (true, true) => r.overlap = true,
            (true, false) => r.first_only = true,
            (false, true) => r.second_only = true,
            _ => {}
        }
        !(r.overlap && r.first_only && r.second_only)
    })?;
    Ok(r)
}

pub fn equivalent(a: &Expr, b: &Expr, widths: &dyn Fn(&str) -> Option<u32>) -> Result<bool, LogicError> {
    Ok(relate(a, b, widths)?.equivalent())
}

pub fn satisfiable(a: &Expr, widths: &dyn Fn(&str) -> Option<u32>) -> Result<bool, LogicError> {
    Ok(relate(a, a, widths)?.overlap)
}

/// Probability that `e` holds when every signal is drawn uniformly over its
/// width and every opaque atom is a fair coin.
pub fn probability(e: &Expr, widths: &dyn Fn(&str) -> Option<u32>) -> Result<f64, LogicError> {
    probability_all(&[e], widths)
}

/// Probability that every term holds at once.
pub fn probability_all(terms: &[&Expr], widths: &dyn Fn(&str) -> Option<u32>) -> Result<f64, LogicError> {
    let mut abs = Abstraction::new(widths);
    let mut f = Formula::Const(true);
    for t in terms {
        let g = abs.lower(t);
        f = if matches!(f, Formula::Const(true)) { g } else { Formula::And(Box::new(f), Box::new(g)) };
    }
    let fs = [f];
    let mut p = 0.0;
    enumerate(&abs, &fs, |v, w| {
        if v[0] {
            p += w;
        }
        true
    })?;
    Ok(p)
}
