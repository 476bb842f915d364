//! Evaluation quantities: syntax rate, functional rate, path coverage and
//! n-gram overlap between corpora.

use crate::assertsynth::{synthesize_module, PathAssertion, PathKind, SynthError, SynthOptions};
use crate::dynsem::{mutate, simulate, CompiledProperty, Layout, MutOp, PropError, SimError, StimulusPlan, Trace};
use crate::hdl::{print_expr, Expr, Property, RtlModule, UnaryOp};
use crate::logic::{self, LogicError};
use crate::parse::parse_properties;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const DEFAULT_N: usize = 13;
const HASH_BASE: u64 = 0x100_0000_01b3;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("walking corpus: {0}")]
    Walk(#[from] walkdir::Error),
}

/// Distinct byte windows of one length. Windows are keyed by a rolling
/// hash; equal hashes are confirmed against the bytes.
#[derive(Debug, Clone)]
pub struct NGramSet {
    n: usize,
    data: Vec<u8>,
    first: HashMap<u64, u32>,
    // further windows whose hash collided with a different gram
    spill: HashMap<u64, Vec<u32>>,
    len: usize,
}

fn window_hashes(bytes: &[u8], n: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
    let top = HASH_BASE.wrapping_pow(n as u32 - 1);
    let mut h = 0u64;
    let mut ready = false;
    (0..bytes.len()).filter_map(move |i| {
        if i >= n {
            h = h.wrapping_sub((bytes[i - n] as u64 + 1).wrapping_mul(top));
        }
        h = h.wrapping_mul(HASH_BASE).wrapping_add(bytes[i] as u64 + 1);
        ready |= i + 1 >= n;
        ready.then(|| (i + 1 - n, h))
    })
}

impl NGramSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn gram(&self, at: u32) -> &[u8] {
        &self.data[at as usize..at as usize + self.n]
    }

    fn find(&self, h: u64, gram: &[u8]) -> bool {
        match self.first.get(&h) {
            None => false,
            Some(&at) if self.gram(at) == gram => true,
            Some(_) => self.spill.get(&h).is_some_and(|v| v.iter().any(|&at| self.gram(at) == gram)),
        }
    }

    pub fn contains(&self, gram: &[u8]) -> bool {
        if gram.len() != self.n {
            return false;
        }
        let h = window_hashes(gram, self.n).next().map(|x| x.1).unwrap_or(0);
        self.find(h, gram)
    }

    /// Every gram, sorted.
    pub fn grams(&self) -> Vec<&[u8]> {
        let mut out: Vec<&[u8]> = self.first.values().chain(self.spill.values().flatten()).map(|&at| self.gram(at)).collect();
        out.sort();
        out
    }
}

pub fn ngrams(bytes: &[u8], n: usize) -> NGramSet {
    assert!(n >= 1, "n-gram length must be positive");
    let mut set = NGramSet { n, data: bytes.to_vec(), first: HashMap::new(), spill: HashMap::new(), len: 0 };
    if bytes.len() < n {
        return set;
    }
    for (at, h) in window_hashes(bytes, n) {
        let gram = &bytes[at..at + n];
        match set.first.get(&h) {
            None => {
                set.first.insert(h, at as u32);
                set.len += 1;
            }
            Some(&seen) if &bytes[seen as usize..seen as usize + n] == gram => {}
            Some(_) => {
                let spill = set.spill.entry(h).or_default();
                if !spill.iter().any(|&s| &bytes[s as usize..s as usize + n] == gram) {
                    spill.push(at as u32);
                    set.len += 1;
                }
            }
        }
    }
    set
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub n: usize,
    pub score: f64,
    pub first: usize,
    pub second: usize,
    pub intersection: usize,
    pub union: usize,
    pub degenerate: bool,
}

pub fn overlap_sets(a: &NGramSet, b: &NGramSet) -> OverlapReport {
    assert_eq!(a.n, b.n, "gram lengths differ");
    let (small, large) = if a.len <= b.len { (a, b) } else { (b, a) };
    let mut intersection = 0;
    for (&h, &at) in &small.first {
        intersection += large.find(h, small.gram(at)) as usize;
        if let Some(v) = small.spill.get(&h) {
            intersection += v.iter().filter(|&&s| large.find(h, small.gram(s))).count();
        }
    }
    let union = a.len + b.len - intersection;
    OverlapReport {
        n: a.n,
        score: if union == 0 { 0.0 } else { intersection as f64 / union as f64 },
        first: a.len,
        second: b.len,
        intersection,
        union,
        degenerate: union == 0,
    }
}

/// Jaccard index of the n-gram sets of two byte strings.
pub fn overlap(a: &[u8], b: &[u8], n: usize) -> OverlapReport {
    overlap_sets(&ngrams(a, n), &ngrams(b, n))
}

/// Files under `root` (or `root` itself) joined in sorted path order,
/// separated by a single zero byte.
pub fn corpus(root: &Path) -> Result<Vec<u8>, MetricsError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in walkdir::WalkDir::new(root) {
        let entry = entry?;
        if entry.file_type().is_file() {
            files.push(entry.into_path());
        }
    }
    files.sort();
    let mut out = Vec::new();
    for (i, f) in files.iter().enumerate() {
        if i > 0 {
            out.push(0);
        }
        out.extend(std::fs::read(f)?);
    }
    Ok(out)
}

pub fn corpus_overlap(a: &Path, b: &Path, n: usize) -> Result<OverlapReport, MetricsError> {
    Ok(overlap(&corpus(a)?, &corpus(b)?, n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntaxReport {
    pub generated: usize,
    pub accepted: usize,
    pub syntactically_correct_pct: f64,
    pub empty_input: bool,
    pub units: Vec<crate::parse::UnitOutcome>,
    pub diagnostics: Vec<String>,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Parses an assertion file; returns the accepted properties and the rate.
pub fn check_syntax(src: &str) -> (Vec<Property>, SyntaxReport) {
    let parsed = parse_properties(src);
    let generated = parsed.declared();
    let accepted = parsed.units.iter().filter(|u| u.accepted).count();
    let report = SyntaxReport {
        generated,
        accepted,
        syntactically_correct_pct: pct(accepted, generated),
        empty_input: generated == 0,
        units: parsed.units.clone(),
        diagnostics: parsed.diagnostics.iter().map(|d| d.to_string()).collect(),
    };
    (parsed.properties, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    SyntaxError,
    SignalMissing,
    FailsOnTrace,
    NeverTriggered,
    NoMatchingPath,
    AntecedentOmitsGuard,
    AntecedentMismatch,
    KillsNoMutant,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::SyntaxError => "syntax error",
            Reason::SignalMissing => "reads a signal the design lacks",
            Reason::FailsOnTrace => "fails on the unmutated design",
            Reason::NeverTriggered => "antecedent never holds",
            Reason::NoMatchingPath => "matches no path of the design",
            Reason::AntecedentOmitsGuard => "antecedent omits guarding condition",
            Reason::AntecedentMismatch => "antecedent differs from the path condition",
            Reason::KillsNoMutant => "kills no behavior-changing mutant",
        })
    }
}

/// Outcome for one declared property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyVerdict {
    pub name: String,
    pub syntactic: bool,
    pub holds: bool,
    pub triggered: usize,
    /// Oracle path condition the property was matched to.
    pub matched_path: Option<String>,
    /// `None` when the equivalence check ran out of budget.
    pub antecedent_equivalent: Option<bool>,
    pub mutants_in_scope: usize,
    pub mutants_killed: usize,
    pub functionally_correct: bool,
    pub reasons: Vec<Reason>,
}

impl PropertyVerdict {
    /// First failed criterion, if any.
    pub fn reason(&self) -> Option<Reason> {
        self.reasons.first().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub verdicts: Vec<PropertyVerdict>,
    pub mutants: usize,
    pub behavior_changing: usize,
    pub atom_budget_exceeded: bool,
}

/// The antecedent with any `disable iff` folded in.
pub fn effective_antecedent(p: &Property) -> Expr {
    match &p.disable_iff {
        Some(d) => Expr::and(Expr::unary(UnaryOp::LogNot, d.clone()), p.antecedent.clone()),
        None => p.antecedent.clone(),
    }
}

struct Match {
    path: usize,
    relation: Option<logic::Relation>,
}

fn match_path(
    p: &Property,
    paths: &[PathAssertion],
    widths: &dyn Fn(&str) -> Option<u32>,
    budget_hit: &mut bool,
) -> Option<Match> {
    let ante = effective_antecedent(p);
    let targets: HashSet<String> = p.consequent_targets().into_iter().collect();
    let atoms: HashSet<String> = ante.idents().into_iter().collect();
    let mut best: Option<(_, Match)> = None;
    for (i, path) in paths.iter().enumerate() {
        let path_targets = path.property.consequent_targets();
        let shared_targets = path_targets.iter().filter(|t| targets.contains(*t)).count();
        let shared_atoms = path.path_condition.idents().iter().filter(|a| atoms.contains(*a)).count();
        if shared_targets + shared_atoms == 0 {
            continue;
        }
        let relation = match logic::relate(&ante, &path.path_condition, widths) {
            Ok(r) => Some(r),
            Err(_) => {
                *budget_hit = true;
                None
            }
        };
        let r = relation.unwrap_or_default();
        let key = (
            relation.is_some_and(|r| r.equivalent()),
            shared_targets > 0,
            path.property.delay == p.delay,
            r.first_implies_second() || r.second_implies_first(),
            r.overlap,
            shared_targets + shared_atoms,
            Reverse(i),
        );
        if best.as_ref().is_none_or(|(k, _)| key > *k) {
            best = Some((key, Match { path: i, relation }));
        }
    }
    best.map(|x| x.1)
}

fn differs(a: &Trace, b: &Trace) -> bool {
    a.pre != b.pre || a.post != b.post
}

/// Grades properties against a design: each must hold and trigger on the
/// unmutated trace, match an oracle path with an equivalent antecedent, and
/// fail on some behavior-changing mutant that touches that path.
pub fn eval_functional(
    m: &RtlModule,
    props: &[Property],
    plan: &StimulusPlan,
    ops: &[MutOp],
) -> Result<FunctionalReport, MetricsError> {
    let paths = synthesize_module(m, &SynthOptions { stability: true, ..Default::default() })?;
    let trace = simulate(m, plan)?;
    let mutants = mutate(m, ops);
    let mutant_traces: Vec<Option<Trace>> = mutants
        .par_iter()
        .map(|mu| simulate(&mu.module, plan).ok().filter(|t| differs(&trace, t)))
        .collect();
    let behavior_changing = mutant_traces.iter().filter(|t| t.is_some()).count();
    let widths = |n: &str| m.width_of(n);
    let layout = Layout::of(&trace);
    let mut budget_hit = false;
    let mut verdicts = Vec::with_capacity(props.len());
    for p in props {
        let mut v = PropertyVerdict {
            name: p.name.clone(),
            syntactic: true,
            holds: false,
            triggered: 0,
            matched_path: None,
            antecedent_equivalent: None,
            mutants_in_scope: 0,
            mutants_killed: 0,
            functionally_correct: false,
            reasons: Vec::new(),
        };
        let compiled = match CompiledProperty::new(p, &layout) {
            Ok(c) => c,
            Err(PropError::SignalMissing { .. }) | Err(PropError::History(_)) => {
                v.reasons.push(Reason::SignalMissing);
                verdicts.push(v);
                continue;
            }
        };
        let base = compiled.check(&trace);
        v.holds = base.holds;
        v.triggered = base.triggered;
        if !base.holds {
            v.reasons.push(Reason::FailsOnTrace);
        } else if base.triggered == 0 {
            v.reasons.push(Reason::NeverTriggered);
        }
        let matched = match_path(p, &paths, &widths, &mut budget_hit);
        match &matched {
            None => v.reasons.push(Reason::NoMatchingPath),
            Some(mt) => {
                v.matched_path = Some(print_expr(&paths[mt.path].path_condition));
                if let Some(r) = mt.relation {
                    v.antecedent_equivalent = Some(r.equivalent());
                    if !r.equivalent() {
                        v.reasons.push(if r.second_implies_first() {
                            Reason::AntecedentOmitsGuard
                        } else {
                            Reason::AntecedentMismatch
                        });
                    }
                }
            }
        }
        let scope = |site| matched.as_ref().is_none_or(|mt| paths[mt.path].touches(site));
        for (mu, t) in mutants.iter().zip(&mutant_traces) {
            let Some(t) = t else { continue };
            if !scope(&mu.site) {
                continue;
            }
            v.mutants_in_scope += 1;
            v.mutants_killed += !compiled.check(t).holds as usize;
        }
        if v.mutants_killed == 0 {
            v.reasons.push(Reason::KillsNoMutant);
        }
        v.functionally_correct = v.reasons.is_empty();
        verdicts.push(v);
    }
    Ok(FunctionalReport { verdicts, mutants: mutants.len(), behavior_changing, atom_budget_exceeded: budget_hit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub cpc_pct: f64,
    pub total: usize,
    pub covered: usize,
    pub no_paths: bool,
    pub uncovered: Vec<String>,
}

/// Share of assignment-bearing paths whose condition some property's
/// antecedent is equivalent to.
pub fn cpc(m: &RtlModule, props: &[Property]) -> Result<CoverageReport, MetricsError> {
    let paths = synthesize_module(m, &SynthOptions::default())?;
    let widths = |n: &str| m.width_of(n);
    let antecedents: Vec<Expr> = props.iter().map(effective_antecedent).collect();
    let mut total = 0;
    let mut covered = 0;
    let mut uncovered = Vec::new();
    for p in paths.iter().filter(|p| p.kind == PathKind::Assignment) {
        total += 1;
        let mut hit = false;
        for a in &antecedents {
            if logic::equivalent(a, &p.path_condition, &widths)? {
                hit = true;
                break;
            }
        }
        if hit {
            covered += 1;
        } else {
            uncovered.push(print_expr(&p.path_condition));
        }
    }
    Ok(CoverageReport {
        cpc_pct: if total == 0 { 100.0 } else { pct(covered, total) },
        total,
        covered,
        no_paths: total == 0,
        uncovered,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub generated: usize,
    pub syntactically_correct_pct: f64,
    pub functionally_correct_pct: f64,
    pub cpc_pct: f64,
    pub empty_input: bool,
    pub no_paths: bool,
    pub atom_budget_exceeded: bool,
    pub mutants: usize,
    pub behavior_changing_mutants: usize,
    pub verdicts: Vec<PropertyVerdict>,
}

/// Syntax, function and coverage of an assertion file against a design.
pub fn evaluate(m: &RtlModule, sva: &str, plan: &StimulusPlan, ops: &[MutOp]) -> Result<EvalReport, MetricsError> {
    let (props, syntax) = check_syntax(sva);
    let functional = eval_functional(m, &props, plan, ops)?;
    let coverage = cpc(m, &props)?;
    let mut accepted = functional.verdicts.into_iter();
    let mut verdicts = Vec::with_capacity(syntax.generated);
    for u in &syntax.units {
        match u.accepted.then(|| accepted.next()).flatten() {
            Some(v) => verdicts.push(v),
            None => verdicts.push(PropertyVerdict {
                name: u.name.clone(),
                syntactic: false,
                holds: false,
                triggered: 0,
                matched_path: None,
                antecedent_equivalent: None,
                mutants_in_scope: 0,
                mutants_killed: 0,
                functionally_correct: false,
                reasons: vec![Reason::SyntaxError],
            }),
        }
    }
    let correct = verdicts.iter().filter(|v| v.functionally_correct).count();
    Ok(EvalReport {
        generated: syntax.generated,
        syntactically_correct_pct: syntax.syntactically_correct_pct,
        functionally_correct_pct: pct(correct, syntax.generated),
        cpc_pct: coverage.cpc_pct,
        empty_input: syntax.empty_input,
        no_paths: coverage.no_paths,
        atom_budget_exceeded: functional.atom_budget_exceeded,
        mutants: functional.mutants,
        behavior_changing_mutants: functional.behavior_changing,
        verdicts,
    })
}
