//! Identifier pools: mining from HDL, cleaning, synthetic names and
//! deliberately dirty variants.

use crate::parse::{is_reserved, parse_file_bytes};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

pub const PREFIXES: [&str; 11] = ["reg", "ctrl", "temp", "cfg", "hw", "core", "chip", "fsm", "tx", "rx", "flag_register"];
const BASE36: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";
const INVALID_CHARS: [char; 4] = ['-', '!', '#', '@'];

#[derive(Debug, Error)]
pub enum IdentError {
    #[error("pool is empty")]
    EmptyPool,
    #[error("rate {0} is outside [0, 1]")]
    InvalidRate(f64),
    #[error("cannot draw {requested} distinct synthetic names, only {capacity} exist")]
    Capacity { requested: usize, capacity: usize },
    #[error("pool file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Mined(String),
    Synthetic,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Mined(p) => write!(f, "mined:{p}"),
            Source::Synthetic => f.write_str("synthetic"),
        }
    }
}

impl FromStr for Source {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synthetic" => Ok(Source::Synthetic),
            _ => s.strip_prefix("mined:").map(|p| Source::Mined(p.to_string())).ok_or_else(|| format!("unknown source tag `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub source: Source,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierPool {
    pub entries: Vec<Entry>,
    pub deduplicated: bool,
    pub validated: bool,
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorruptMode {
    InvalidChars,
    Duplicates,
    Inconsistent,
}

impl FromStr for CorruptMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "invalid_chars" => Ok(CorruptMode::InvalidChars),
            "duplicates" => Ok(CorruptMode::Duplicates),
            "inconsistent" => Ok(CorruptMode::Inconsistent),
            _ => Err(format!("unknown corruption mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CleanSummary {
    pub invalid: usize,
    pub duplicate: usize,
    pub inconsistent: usize,
}

/// Result of mining: the raw pool, per-file counts and files that failed.
#[derive(Debug, Clone, Default)]
pub struct Mined {
    pub pool: IdentifierPool,
    pub per_source: Vec<(String, usize)>,
    pub failures: Vec<(String, String)>,
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    head_ok && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$') && !is_reserved(name)
}

impl IdentifierPool {
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.deduplicated && self.validated && self.consistent
    }

    /// Pool file text: `# flags:` line, then names grouped under
    /// `# source:` tags.
    pub fn to_file_string(&self) -> String {
        let mut flags = Vec::new();
        if self.deduplicated {
            flags.push("deduplicated");
        }
        if self.validated {
            flags.push("validated");
        }
        if self.consistent {
            flags.push("consistent");
        }
        let mut out = format!("# flags: {}\n", flags.join(" "));
        let mut current: Option<&Source> = None;
        for e in &self.entries {
            if current != Some(&e.source) {
                out.push_str(&format!("# source: {}\n", e.source));
                current = Some(&e.source);
            }
            out.push_str(&e.name);
            out.push('\n');
        }
        out
    }

    pub fn from_file_str(text: &str) -> Result<IdentifierPool, IdentError> {
        let mut pool = IdentifierPool::default();
        let mut source = Source::Synthetic;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                let c = c.trim();
                if let Some(tag) = c.strip_prefix("source:") {
                    source = tag.trim().parse().map_err(|msg| IdentError::Format { line: i + 1, msg })?;
                } else if let Some(fl) = c.strip_prefix("flags:") {
                    for f in fl.split_whitespace() {
                        match f {
                            "deduplicated" => pool.deduplicated = true,
                            "validated" => pool.validated = true,
                            "consistent" => pool.consistent = true,
                            _ => return Err(IdentError::Format { line: i + 1, msg: format!("unknown flag `{f}`") }),
                        }
                    }
                }
                continue;
            }
            pool.entries.push(Entry { name: line.to_string(), source: source.clone() });
        }
        Ok(pool)
    }

    pub fn read(path: &Path) -> Result<IdentifierPool, IdentError> {
        let text = std::fs::read_to_string(path).map_err(|source| IdentError::Io { path: path.to_path_buf(), source })?;
        IdentifierPool::from_file_str(&text)
    }
}

/// Declared names of every module in each file, in path order.
pub fn mine<P: AsRef<Path> + Sync>(paths: &[P]) -> Mined {
    let results: Vec<(String, Result<Vec<String>, String>)> = paths
        .par_iter()
        .map(|p| {
            let p = p.as_ref();
            let tag = p.display().to_string();
            let names = std::fs::read(p).map_err(|e| e.to_string()).and_then(|bytes| {
                let parsed = parse_file_bytes(&bytes, &Default::default());
                if parsed.modules.is_empty() {
                    let why = parsed.diagnostics.iter().find(|d| d.is_error()).map(|d| d.to_string());
                    return Err(why.unwrap_or_else(|| "no module found".into()));
                }
                Ok(parsed.modules.iter().flat_map(|m| m.module.decls.iter().map(|d| d.name.clone())).collect())
            });
            (tag, names)
        })
        .collect();
    let mut out = Mined::default();
    for (tag, res) in results {
        match res {
            Ok(names) => {
                out.per_source.push((tag.clone(), names.len()));
                out.pool.entries.extend(names.into_iter().map(|name| Entry { name, source: Source::Mined(tag.clone()) }));
            }
            Err(e) => out.failures.push((tag, e)),
        }
    }
    out
}

/// Which kinds of dirt `clean_with` leaves in place.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanOptions {
    pub keep_invalid: bool,
    pub keep_duplicates: bool,
    pub keep_inconsistent: bool,
}

/// Drops invalid names, later duplicates and later case variants.
pub fn clean(pool: &IdentifierPool) -> (IdentifierPool, CleanSummary) {
    clean_with(pool, CleanOptions::default())
}

/// Like `clean`, but kept categories are counted and retained.
pub fn clean_with(pool: &IdentifierPool, opts: CleanOptions) -> (IdentifierPool, CleanSummary) {
    let mut summary = CleanSummary::default();
    let mut exact = HashSet::new();
    let mut folded = HashSet::new();
    let mut entries = Vec::new();
    for e in &pool.entries {
        let keep = if !is_valid_name(&e.name) {
            summary.invalid += 1;
            opts.keep_invalid
        } else if exact.contains(&e.name) {
            summary.duplicate += 1;
            opts.keep_duplicates
        } else if !folded.insert(e.name.to_ascii_lowercase()) {
            summary.inconsistent += 1;
            opts.keep_inconsistent
        } else {
            exact.insert(e.name.clone());
            true
        };
        if keep {
            entries.push(e.clone());
        }
    }
    let pool = IdentifierPool {
        entries,
        deduplicated: !opts.keep_duplicates || summary.duplicate == 0,
        validated: !opts.keep_invalid || summary.invalid == 0,
        consistent: !opts.keep_inconsistent || summary.inconsistent == 0,
    };
    (pool, summary)
}

pub fn synthetic_capacity() -> usize {
    PREFIXES.len() * (36 + 36 * 36 + 36 * 36 * 36)
}

/// `n` distinct `<prefix>_<suffix>` names.
pub fn synthesize(n: usize, seed: u64) -> Result<IdentifierPool, IdentError> {
    let capacity = synthetic_capacity();
    if n > capacity {
        return Err(IdentError::Capacity { requested: n, capacity });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    while entries.len() < n {
        let prefix = PREFIXES[rng.gen_range(0..PREFIXES.len())];
        let len = rng.gen_range(1..=3);
        let suffix: String = (0..len).map(|_| BASE36[rng.gen_range(0..36)] as char).collect();
        let name = format!("{prefix}_{suffix}");
        if seen.insert(name.clone()) {
            entries.push(Entry { name, source: Source::Synthetic });
        }
    }
    Ok(IdentifierPool { entries, deduplicated: true, validated: true, consistent: true })
}

fn flip_case(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_lowercase() { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
        .collect()
}

/// Adds ⌈rate·n⌉ dirty copies. Each copy lands somewhere after the entry it
/// was derived from, so cleaning restores the original pool exactly.
pub fn corrupt(pool: &IdentifierPool, mode: CorruptMode, rate: f64, seed: u64) -> Result<IdentifierPool, IdentError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(IdentError::InvalidRate(rate));
    }
    if rate == 0.0 {
        return Ok(pool.clone());
    }
    if pool.is_empty() {
        return Err(IdentError::EmptyPool);
    }
    let n = pool.len();
    let k = ((rate * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    if mode == CorruptMode::Inconsistent {
        // names without letters have no other casing
        order.retain(|&i| pool.entries[i].name.chars().any(|c| c.is_ascii_alphabetic()));
        if order.is_empty() {
            return Err(IdentError::EmptyPool);
        }
    }
    order.shuffle(&mut rng);
    // (source index, copy) pairs; with fewer eligible names than k, cycle
    let mut copies: Vec<(usize, Entry)> = Vec::with_capacity(k);
    for j in 0..k {
        let i = order[j % order.len()];
        let orig = &pool.entries[i];
        let name = match mode {
            CorruptMode::InvalidChars => {
                let bad = INVALID_CHARS[rng.gen_range(0..INVALID_CHARS.len())];
                let chars: Vec<char> = orig.name.chars().collect();
                // never at position 0, a leading `#` would read as a comment
                let at = rng.gen_range(1..=chars.len().max(1));
                let mut s: String = chars[..at.min(chars.len())].iter().collect();
                s.push(bad);
                s.extend(&chars[at.min(chars.len())..]);
                s
            }
            CorruptMode::Duplicates => orig.name.clone(),
            CorruptMode::Inconsistent => flip_case(&orig.name),
        };
        copies.push((i, Entry { name, source: orig.source.clone() }));
    }
    // slot after which each copy goes, in [i, n-1]
    let mut after: Vec<Vec<Entry>> = vec![Vec::new(); n];
    for (i, e) in copies {
        let slot = rng.gen_range(i..n);
        after[slot].push(e);
    }
    let mut entries = Vec::with_capacity(n + k);
    for (e, extra) in pool.entries.iter().zip(after) {
        entries.push(e.clone());
        entries.extend(extra);
    }
    let mut out = IdentifierPool { entries, ..pool.clone() };
    match mode {
        CorruptMode::InvalidChars => out.validated = false,
        CorruptMode::Duplicates => out.deduplicated = false,
        CorruptMode::Inconsistent => out.consistent = false,
    }
    Ok(out)
}
