use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use svaforge::assertsynth::{properties, synthesize_module};
use svaforge::dynsem::contaminate;
use svaforge::hdl::print_properties;
use svaforge::identifiers::{self, clean_with};
use svaforge::metrics::{self, check_syntax};
use svaforge::parse::parse_module_named;
use svaforge::synthgen;
use svaforge::{
    CleanOptions, CleanSummary, CorruptMode, GenConfig, IdentifierPool, MutOp, RtlModule, StimulusPlan, SynthOptions,
    ALL_OPS,
};

const DEFAULT_SYNTHETIC_VARS: usize = 1000;
const SOURCE_EXTS: [&str; 4] = ["sv", "v", "svh", "vh"];

#[derive(Parser)]
#[command(name = "svaforge", version, about = "Synthetic RTL blocks with SVA oracles, and assertion grading")]
struct Cli {
    /// Flat TOML file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Collect declared signal names from HDL files into a pool file.
    MineVars(MineArgs),
    /// Generate a JSONL dataset of prompt/response samples.
    Gen(GenArgs),
    /// Write the oracle properties for a module.
    Synth(SynthArgs),
    /// Syntax report for an assertion file.
    Check(CheckArgs),
    /// Syntax, functional and coverage report of assertions against a design.
    Eval(EvalArgs),
    /// Complete path coverage of assertions against a design.
    Coverage(CoverageArgs),
    /// N-gram Jaccard overlap between two corpora.
    Leakage(LeakageArgs),
    /// Insert ifdef regions and dummy instances into a design.
    Contaminate(ContaminateArgs),
    /// Make a dirty copy of a pool file.
    CorruptVars(CorruptArgs),
}

#[derive(Args)]
struct MineArgs {
    /// Files or directories.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long)]
    keep_duplicates: bool,
    #[arg(long)]
    keep_invalid: bool,
    #[arg(long)]
    keep_inconsistent: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// if_else, case_stmt and combined weights.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    sync_ratio: Option<f64>,
    #[arg(long)]
    max_nesting: Option<usize>,
    #[arg(long)]
    long_condition_min_atoms: Option<usize>,
    #[arg(long, conflicts_with = "synthetic_vars")]
    vars: Option<PathBuf>,
    #[arg(long)]
    synthetic_vars: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RtlArgs {
    rtl: PathBuf,
    #[arg(long)]
    module: Option<String>,
    /// Macro defined for the preprocessor; repeatable.
    #[arg(long = "define")]
    defines: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    rtl: RtlArgs,
    #[arg(long)]
    stability: bool,
    /// Seeds the property-name suffixes.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    sva: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    rtl: RtlArgs,
    sva: PathBuf,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reset_rate: Option<f64>,
    /// Mutation operators, comma separated.
    #[arg(long, value_delimiter = ',')]
    ops: Option<Vec<String>>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    rtl: RtlArgs,
    sva: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LeakageArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ContaminateArgs {
    rtl: PathBuf,
    #[arg(long)]
    ifdefs: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorruptArgs {
    pool: PathBuf,
    /// invalid_chars, duplicates or inconsistent.
    #[arg(long)]
    mode: CorruptMode,
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config file keys. Flags win over these.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    count: Option<usize>,
    ratios: Option<Vec<f64>>,
    sync_ratio: Option<f64>,
    max_nesting: Option<usize>,
    long_condition_min_atoms: Option<usize>,
    vars: Option<PathBuf>,
    synthetic_vars: Option<usize>,
    cycles: Option<usize>,
    reset_rate: Option<f64>,
    ops: Option<Vec<String>>,
    n: Option<usize>,
    defines: Option<Vec<String>>,
    ifdefs: Option<usize>,
    instances: Option<usize>,
}

enum Failure {
    Invalid(anyhow::Error),
    Internal(anyhow::Error),
}

type Res<T = ()> = Result<T, Failure>;

trait Classify<T> {
    fn invalid(self) -> Res<T>;
    fn internal(self) -> Res<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self) -> Res<T> {
        self.map_err(|e| Failure::Invalid(e.into()))
    }
    fn internal(self) -> Res<T> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}

fn bad(msg: impl std::fmt::Display) -> Failure {
    Failure::Invalid(anyhow!("{msg}"))
}

fn read_text(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).invalid()
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Res {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())).internal(),
        None => std::io::stdout().lock().write_all(bytes).internal(),
    }
}

fn print_json<T: Serialize>(value: &T) -> Res {
    let mut text = serde_json::to_string_pretty(value).internal()?;
    text.push('\n');
    emit(None, text.as_bytes())
}

fn require_seed(seed: Option<u64>) -> Res<u64> {
    seed.ok_or_else(|| bad("--seed is required (flag or config)"))
}

fn load_rtl(args: &RtlArgs, cfg: &RunConfig) -> Res<RtlModule> {
    let src = read_text(&args.rtl)?;
    let defines: BTreeSet<String> = args.defines.iter().chain(cfg.defines.iter().flatten()).cloned().collect();
    let parsed = parse_module_named(&src, &defines, args.module.as_deref());
    if let Some(d) = parsed.diagnostics.iter().find(|d| d.is_error()) {
        return Err(bad(format!("{}:{d}", args.rtl.display())));
    }
    parsed.module.ok_or_else(|| bad(format!("{}: no module", args.rtl.display())))
}

fn source_files(paths: &[PathBuf]) -> Res<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(bad(format!("{} does not exist", p.display())));
        }
        for entry in walkdir::WalkDir::new(p).sort_by_file_name() {
            let entry = entry.invalid()?;
            let is_src = entry.path().extension().and_then(|e| e.to_str()).is_some_and(|e| SOURCE_EXTS.contains(&e));
            if entry.file_type().is_file() && (is_src || entry.path() == p.as_path()) {
                files.push(entry.into_path());
            }
        }
    }
    Ok(files)
}

#[derive(Serialize)]
struct MineSummary {
    files: usize,
    failures: Vec<(String, String)>,
    mined: usize,
    kept: usize,
    removed: CleanSummary,
}

fn mine_vars(a: MineArgs) -> Res {
    let files = source_files(&a.paths)?;
    let mined = identifiers::mine(&files);
    for (file, why) in &mined.failures {
        eprintln!("skipped {file}: {why}");
    }
    if mined.per_source.is_empty() {
        return Err(bad("no module could be parsed from the inputs"));
    }
    let opts = CleanOptions {
        keep_invalid: a.keep_invalid,
        keep_duplicates: a.keep_duplicates,
        keep_inconsistent: a.keep_inconsistent,
    };
    let (pool, removed) = clean_with(&mined.pool, opts);
    emit(a.out.as_deref(), pool.to_file_string().as_bytes())?;
    let summary = MineSummary { files: files.len(), failures: mined.failures, mined: mined.pool.len(), kept: pool.len(), removed };
    eprintln!(
        "mined {} names from {} files, kept {} (invalid {}, duplicate {}, inconsistent {})",
        summary.mined, summary.files, summary.kept, removed.invalid, removed.duplicate, removed.inconsistent
    );
    if a.json {
        print_json(&summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GenSummary {
    samples: usize,
    seed: u64,
    pool_size: usize,
    composition: BTreeMap<String, BTreeMap<&'static str, usize>>,
}

fn gen(a: GenArgs, cfg: &RunConfig) -> Res {
    let seed = require_seed(a.seed.or(cfg.seed))?;
    if a.json && a.out.is_none() {
        return Err(bad("--json needs --out, the dataset would share stdout with the summary"));
    }
    let mut gc = GenConfig { seed, ..GenConfig::default() };
    gc.sample_count = a.count.or(cfg.count).unwrap_or(gc.sample_count);
    if let Some(r) = a.ratios.or_else(|| cfg.ratios.clone()) {
        gc.ratios = r.try_into().map_err(|_| bad("--ratios takes exactly three weights"))?;
    }
    gc.sync_fraction = a.sync_ratio.or(cfg.sync_ratio).unwrap_or(gc.sync_fraction);
    gc.max_nesting = a.max_nesting.or(cfg.max_nesting).unwrap_or(gc.max_nesting);
    gc.long_condition_min_atoms =
        a.long_condition_min_atoms.or(cfg.long_condition_min_atoms).unwrap_or(gc.long_condition_min_atoms);
    gc.validate().invalid()?;

    let pool: IdentifierPool = match (a.vars.or_else(|| cfg.vars.clone()), a.synthetic_vars.or(cfg.synthetic_vars)) {
        (Some(path), None) => IdentifierPool::read(&path).invalid()?,
        (None, n) => identifiers::synthesize(n.unwrap_or(DEFAULT_SYNTHETIC_VARS), seed).invalid()?,
        (Some(_), Some(_)) => return Err(bad("--vars and --synthetic-vars are exclusive")),
    };
    let samples = synthgen::assemble(&gc, &pool).map_err(|e| match e {
        synthgen::GenError::Synth(_) => Failure::Internal(e.into()),
        _ => Failure::Invalid(e.into()),
    })?;
    let mut bytes = Vec::new();
    synthgen::write_jsonl(&samples, &mut bytes).internal()?;
    emit(a.out.as_deref(), &bytes)?;

    let mut composition = BTreeMap::new();
    for (cat, (sync, comb)) in synthgen::composition(&samples) {
        eprintln!("{cat}: {} ({sync} sync, {comb} async)", sync + comb);
        composition.insert(cat, BTreeMap::from([("async", comb), ("sync", sync), ("total", sync + comb)]));
    }
    eprintln!("{} samples from {} names", samples.len(), pool.len());
    if a.json {
        print_json(&GenSummary { samples: samples.len(), seed, pool_size: pool.len(), composition })?;
    }
    Ok(())
}

fn synth(a: SynthArgs, cfg: &RunConfig) -> Res {
    let m = load_rtl(&a.rtl, cfg)?;
    let opts = SynthOptions { stability: a.stability, seed: a.seed.or(cfg.seed).unwrap_or(0), ..Default::default() };
    let paths = synthesize_module(&m, &opts).invalid()?;
    let props = properties(&paths);
    eprintln!("{} properties for module {}", props.len(), m.name);
    emit(a.out.as_deref(), print_properties(&props).as_bytes())
}

fn check(a: CheckArgs) -> Res {
    let src = read_text(&a.sva)?;
    let (_, report) = check_syntax(&src);
    if a.json {
        return print_json(&report);
    }
    for d in &report.diagnostics {
        println!("{d}");
    }
    println!(
        "generated {} accepted {} syntactically correct {:.2}%",
        report.generated, report.accepted, report.syntactically_correct_pct
    );
    Ok(())
}

fn parse_ops(list: Option<Vec<String>>) -> Res<Vec<MutOp>> {
    match list {
        None => Ok(ALL_OPS.to_vec()),
        Some(names) => names.iter().map(|n| n.trim().parse::<MutOp>().map_err(bad)).collect(),
    }
}

fn eval(a: EvalArgs, cfg: &RunConfig) -> Res {
    let seed = require_seed(a.seed.or(cfg.seed))?;
    let m = load_rtl(&a.rtl, cfg)?;
    let sva = read_text(&a.sva)?;
    let mut plan = StimulusPlan::new(a.cycles.or(cfg.cycles).unwrap_or(StimulusPlan::default().cycles), seed);
    plan.reset_rate = a.reset_rate.or(cfg.reset_rate).unwrap_or(plan.reset_rate);
    if !(0.0..=1.0).contains(&plan.reset_rate) {
        return Err(bad("--reset-rate must lie in [0, 1]"));
    }
    let ops = parse_ops(a.ops.or_else(|| cfg.ops.clone()))?;
    let report = metrics::evaluate(&m, &sva, &plan, &ops).map_err(eval_failure)?;
    if a.json {
        return print_json(&report);
    }
    for v in &report.verdicts {
        let why = v.reasons.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ");
        let mark = if v.functionally_correct { "ok" } else { "FAIL" };
        println!("{mark:4} {} killed {}/{} {why}", v.name, v.mutants_killed, v.mutants_in_scope);
    }
    println!(
        "generated {} syntactic {:.2}% functional {:.2}% cpc {:.2}% mutants {} ({} behavior-changing)",
        report.generated,
        report.syntactically_correct_pct,
        report.functionally_correct_pct,
        report.cpc_pct,
        report.mutants,
        report.behavior_changing_mutants
    );
    Ok(())
}

fn eval_failure(e: metrics::MetricsError) -> Failure {
    match e {
        metrics::MetricsError::Synth(_) => Failure::Invalid(e.into()),
        _ => Failure::Internal(e.into()),
    }
}

fn coverage(a: CoverageArgs, cfg: &RunConfig) -> Res {
    let m = load_rtl(&a.rtl, cfg)?;
    let (props, _) = check_syntax(&read_text(&a.sva)?);
    let report = metrics::cpc(&m, &props).map_err(eval_failure)?;
    if a.json {
        return print_json(&report);
    }
    for p in &report.uncovered {
        println!("uncovered: {p}");
    }
    println!("cpc {:.2}% ({}/{} paths)", report.cpc_pct, report.covered, report.total);
    Ok(())
}

fn leakage(a: LeakageArgs, cfg: &RunConfig) -> Res {
    let n = a.n.or(cfg.n).unwrap_or(metrics::DEFAULT_N);
    if n == 0 {
        return Err(bad("--n must be positive"));
    }
    for p in [&a.first, &a.second] {
        if !p.exists() {
            return Err(bad(format!("{} does not exist", p.display())));
        }
    }
    let report = metrics::corpus_overlap(&a.first, &a.second, n).internal()?;
    if a.json {
        return print_json(&report);
    }
    println!(
        "{}-gram overlap {:.3e} ({} shared of {} distinct; {} and {})",
        n, report.score, report.intersection, report.union, report.first, report.second
    );
    Ok(())
}

fn contaminate_cmd(a: ContaminateArgs, cfg: &RunConfig) -> Res {
    let seed = require_seed(a.seed.or(cfg.seed))?;
    let src = read_text(&a.rtl)?;
    let ifdefs = a.ifdefs.or(cfg.ifdefs).unwrap_or(0);
    let instances = a.instances.or(cfg.instances).unwrap_or(0);
    let out = contaminate(&src, ifdefs, instances, seed).invalid()?;
    eprintln!("inserted {ifdefs} ifdef regions and {instances} instances");
    emit(a.out.as_deref(), out.as_bytes())
}

fn corrupt_vars(a: CorruptArgs, cfg: &RunConfig) -> Res {
    let seed = require_seed(a.seed.or(cfg.seed))?;
    let pool = IdentifierPool::read(&a.pool).invalid()?;
    let dirty = identifiers::corrupt(&pool, a.mode, a.rate, seed).invalid()?;
    eprintln!("{} names, {} after corruption", pool.len(), dirty.len());
    emit(a.out.as_deref(), dirty.to_file_string().as_bytes())
}

fn run(cli: Cli) -> Res {
    let cfg: RunConfig = match &cli.config {
        Some(p) => toml::from_str(&read_text(p)?).with_context(|| format!("config {}", p.display())).invalid()?,
        None => RunConfig::default(),
    };
    match cli.cmd {
        Cmd::MineVars(a) => mine_vars(a),
        Cmd::Gen(a) => gen(a, &cfg),
        Cmd::Synth(a) => synth(a, &cfg),
        Cmd::Check(a) => check(a),
        Cmd::Eval(a) => eval(a, &cfg),
        Cmd::Coverage(a) => coverage(a, &cfg),
        Cmd::Leakage(a) => leakage(a, &cfg),
        Cmd::Contaminate(a) => contaminate_cmd(a, &cfg),
        Cmd::CorruptVars(a) => corrupt_vars(a, &cfg),
    }
}

/// The error chain, skipping causes their parent already printed.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
