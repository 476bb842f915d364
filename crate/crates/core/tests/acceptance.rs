//! Acceptance run. Prints one line per criterion and exits non-zero if any
//! criterion fails.

use rayon::prelude::*;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use svaforge::assertsynth::{properties, synthesize_module, SynthOptions};
use svaforge::dynsem::{contaminate, mutate, StimulusPlan, ALL_OPS};
use svaforge::hdl::{print_module, print_properties, Property, RtlModule};
use svaforge::identifiers::{self, IdentifierPool};
use svaforge::metrics::{check_syntax, corpus_overlap, eval_functional, evaluate, overlap, Reason};
use svaforge::parse::{parse_module, parse_properties, DiagCode};
use svaforge::synthgen::{self, gen_block, gen_sample, Category, GenConfig, CATEGORIES};

const FULL_COUNT: usize = 20_000;
const FULL_SPLIT: [(&str, usize); 3] = [("if_else", 10_400), ("case_stmt", 5_600), ("combined", 4_000)];
const GEN_BUDGET: Duration = Duration::from_secs(60);
const SUITE: usize = 1_000;
const CYCLES: usize = 1_000;
const EVAL_BUDGET: Duration = Duration::from_secs(600);
const LEAK_LIMIT: f64 = 0.01;
const CANON_MUTANTS: usize = 6;
const CONTAM: usize = 10;
const ROUND_TRIP_MODULES: usize = 1_000;
const POOL_SIZE: usize = 400;
const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn module(src: &str) -> Result<RtlModule, String> {
    let p = parse_module(src, &Default::default());
    if p.has_errors() {
        return Err(format!("{:?}", p.diagnostics));
    }
    p.module.ok_or_else(|| "no module".into())
}

fn pool() -> IdentifierPool {
    identifiers::synthesize(POOL_SIZE, SEED).unwrap()
}

fn suite_config(count: usize) -> GenConfig {
    GenConfig { sample_count: count, seed: SEED, ..GenConfig::default() }
}

fn digest(bytes: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    bytes.hash(&mut h);
    h.finish()
}

fn dataset_bytes(cfg: &GenConfig, pool: &IdentifierPool) -> Vec<u8> {
    let samples = synthgen::assemble(cfg, pool).unwrap();
    let mut out = Vec::new();
    synthgen::write_jsonl(&samples, &mut out).unwrap();
    out
}

fn composition() -> Outcome {
    let cfg = suite_config(FULL_COUNT);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let samples = single.install(|| synthgen::assemble(&cfg, &pool()));
    let took = start.elapsed();
    let samples = match samples {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let comp = synthgen::composition(&samples);
    let mut ok = samples.len() == FULL_COUNT && took < GEN_BUDGET;
    let mut parts = Vec::new();
    for (name, want) in FULL_SPLIT {
        let (sync, comb) = comp.get(name).copied().unwrap_or_default();
        ok &= sync + comb == want && sync.abs_diff(comb) <= 1;
        parts.push(format!("{name} {sync}+{comb}"));
    }
    outcome(ok, format!("{} in {:.1}s single-threaded (limit {}s)", parts.join(", "), took.as_secs_f64(), GEN_BUDGET.as_secs()))
}

struct SuiteResult {
    syntax_bad: usize,
    functional_bad: usize,
    cpc_bad: usize,
    samples: usize,
    took: Duration,
    first_failure: Option<String>,
}

fn by_construction() -> SuiteResult {
    let cfg = suite_config(SUITE);
    let pool = pool();
    let slots = synthgen::schedule(&cfg);
    let start = Instant::now();
    let rows: Vec<(bool, bool, bool, String)> = slots
        .par_iter()
        .enumerate()
        .map(|(i, &(cat, sync))| {
            let (sample, m, _) = gen_sample(&cfg, &pool, i, cat, sync).unwrap();
            let (_, syn) = check_syntax(&sample.response);
            let syntax_ok = syn.syntactically_correct_pct == 100.0 && syn.diagnostics.is_empty();
            let r = evaluate(&m, &sample.response, &StimulusPlan::new(CYCLES, sample.meta.seed), &ALL_OPS).unwrap();
            let why = r
                .verdicts
                .iter()
                .find(|v| !v.functionally_correct)
                .map(|v| format!("sample {i} {}: {:?}", v.name, v.reasons))
                .unwrap_or_default();
            (syntax_ok, r.functionally_correct_pct == 100.0, r.cpc_pct == 100.0, why)
        })
        .collect();
    SuiteResult {
        syntax_bad: rows.iter().filter(|r| !r.0).count(),
        functional_bad: rows.iter().filter(|r| !r.1).count(),
        cpc_bad: rows.iter().filter(|r| !r.2).count(),
        samples: rows.len(),
        took: start.elapsed(),
        first_failure: rows.iter().map(|r| r.3.clone()).find(|s| !s.is_empty()),
    }
}

fn shape(p: &Property) -> String {
    let mut q = p.clone();
    q.name = String::new();
    print_properties(&[q])
}

fn golden_responses() -> Outcome {
    let mut bad = Vec::new();
    for (name, skip) in [("wr_fsm", None), ("bus_monitor", Some(1)), ("aes_ctrl", None)] {
        let m = match module(&read(&format!("{name}.sv"))) {
            Ok(m) => m,
            Err(e) => return outcome(false, format!("{name}: {e}")),
        };
        let ours: Vec<String> =
            properties(&synthesize_module(&m, &SynthOptions::default()).unwrap()).iter().map(shape).collect();
        let mut theirs = parse_properties(&read(&format!("{name}.sva"))).properties;
        if let Some(i) = skip {
            theirs.remove(i);
        }
        let theirs: Vec<String> = theirs.iter().map(shape).collect();
        if ours != theirs {
            bad.push(name);
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "wr_fsm, bus_monitor (4 of 5), aes_ctrl match".into() } else { format!("mismatch in {bad:?}") })
}

fn wakeup_timer_taxonomy() -> Outcome {
    let src = read("wakeup_timer.sva");
    let rejects = parse_properties(&src).diagnostics.iter().any(|d| d.code == DiagCode::AssignInConsequent);
    let (props, _) = check_syntax(&src);
    let accepted: Vec<&str> = props.iter().map(|p| p.name.as_str()).collect();
    let m = module(&read("wakeup_timer.sv")).unwrap();
    let r = eval_functional(&m, &props, &StimulusPlan::default(), &ALL_OPS).unwrap();
    let v = &r.verdicts[0];
    let ok = rejects
        && accepted == ["ResetTimer2"]
        && !v.functionally_correct
        && v.reason() == Some(Reason::AntecedentOmitsGuard)
        && Reason::AntecedentOmitsGuard.to_string() == "antecedent omits guarding condition";
    outcome(ok, format!("accepted {accepted:?}, ResetTimer2 reason {:?}", v.reasons.iter().map(|r| r.to_string()).collect::<Vec<_>>()))
}

fn leakage() -> Outcome {
    let a14 = vec![b'A'; 14];
    let mut a13b = vec![b'A'; 13];
    a13b.push(b'B');
    let fixed = [
        overlap(&a14, &a14, 13).score == 1.0,
        overlap(b"abcdefghijklmnop", b"qrstuvwxyz0123456789", 13).score == 0.0,
        overlap(&a14, &a13b, 13).score == 0.5,
    ];

    let pool = pool();
    let names: HashSet<&str> = pool.names().into_iter().collect();
    let heldout = fixture("heldout");
    let mut shared = Vec::new();
    for f in std::fs::read_dir(&heldout).unwrap() {
        let text = std::fs::read_to_string(f.unwrap().path()).unwrap();
        for tok in text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
            if names.contains(tok) {
                shared.push(tok.to_string());
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("dataset.jsonl"), dataset_bytes(&suite_config(FULL_COUNT), &pool)).unwrap();
    let r = corpus_overlap(dir.path(), &heldout, 13).unwrap();
    let ok = fixed.iter().all(|&b| b) && shared.is_empty() && r.score < LEAK_LIMIT;
    outcome(
        ok,
        format!(
            "fixtures {fixed:?}, pools share {} names, dataset vs held-out 13-gram Jaccard {:.2e} (limit {LEAK_LIMIT})",
            shared.len(),
            r.score
        ),
    )
}

fn canonical_mutants() -> Outcome {
    let m = module(
        "module t(input logic clk, input logic a, output logic q);
  always_ff @(posedge clk) if (a) q <= 1'b1; else q <= 1'b0;
endmodule",
    )
    .unwrap();
    let props = properties(&synthesize_module(&m, &SynthOptions::default()).unwrap());
    let r = eval_functional(&m, &props, &StimulusPlan::default(), &ALL_OPS).unwrap();
    let all_correct = r.verdicts.iter().all(|v| v.functionally_correct);
    let ok = props.len() == 2 && r.mutants == CANON_MUTANTS && r.behavior_changing == CANON_MUTANTS && all_correct;
    outcome(ok, format!("{} properties, {} mutants, {} behavior-changing, all killed-in-scope: {all_correct}", props.len(), r.mutants, r.behavior_changing))
}

fn contamination() -> Outcome {
    let cfg = suite_config(50);
    let pool = pool();
    let mut bad = 0;
    let mut checked = 0;
    for (i, &(cat, sync)) in synthgen::schedule(&cfg).iter().enumerate() {
        let (_, clean, _) = gen_sample(&cfg, &pool, i, cat, sync).unwrap();
        let src = print_module(&clean);
        let dirty = match contaminate(&src, CONTAM, CONTAM, i as u64) {
            Ok(d) => d,
            Err(_) => continue,
        };
        checked += 1;
        let counts = (dirty.matches("`ifdef SYNTH_").count(), dirty.matches("dummy_mod u_dummy_").count());
        let same = module(&dirty).ok().is_some_and(|d| {
            let o = SynthOptions::default();
            properties(&synthesize_module(&d, &o).unwrap()) == properties(&synthesize_module(&clean, &o).unwrap())
        });
        if counts != (CONTAM, CONTAM) || !same {
            bad += 1;
        }
    }
    outcome(bad == 0 && checked > 0, format!("{checked} blocks with {CONTAM}+{CONTAM} insertions, {bad} differ or fail to parse"))
}

fn determinism() -> Outcome {
    let pool = pool();
    let cfg = suite_config(500);
    let run = || {
        let mut parts = vec![dataset_bytes(&cfg, &pool), pool.to_file_string().into_bytes()];
        let (_, m, _) = gen_sample(&cfg, &pool, 3, Category::Combined, true).unwrap();
        let sva = print_properties(&properties(&synthesize_module(&m, &SynthOptions::default()).unwrap()));
        let r = evaluate(&m, &sva, &StimulusPlan::new(CYCLES, 9), &ALL_OPS).unwrap();
        parts.push(serde_json::to_vec(&r).unwrap());
        parts.push(contaminate(&print_module(&m), 3, 3, 9).unwrap().into_bytes());
        let dirty = identifiers::corrupt(&pool, identifiers::CorruptMode::Duplicates, 0.2, 9).unwrap();
        parts.push(dirty.to_file_string().into_bytes());
        parts.iter().map(|p| digest(p)).collect::<Vec<u64>>()
    };
    let first = run();
    let second = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
    outcome(first == second, format!("{} artifacts, hashes equal across runs and thread counts: {}", first.len(), first == second))
}

fn round_trip() -> Outcome {
    let pool = pool();
    let cfg = GenConfig::default();
    let rows: Vec<(usize, usize)> = (0..ROUND_TRIP_MODULES)
        .into_par_iter()
        .map(|i| {
            let cat = CATEGORIES[i % CATEGORIES.len()];
            let (m, _) = gen_block(cat, i % 2 == 0, &pool, synthgen::sample_seed(SEED, i as u64), &cfg).unwrap();
            let m = module(&print_module(&m)).unwrap();
            let mut designs = vec![m.clone()];
            designs.extend(mutate(&m, &ALL_OPS).into_iter().map(|mu| mu.module));
            let bad = designs.iter().filter(|d| module(&print_module(d)).ok().as_ref() != Some(*d)).count();
            (designs.len(), bad)
        })
        .collect();
    let total: usize = rows.iter().map(|r| r.0).sum();
    let bad: usize = rows.iter().map(|r| r.1).sum();
    outcome(bad == 0, format!("{ROUND_TRIP_MODULES} modules, {total} designs including mutants, {bad} differ after reparse"))
}

fn main() {
    let suite = by_construction();
    let note = suite.first_failure.clone().map(|f| format!("; first failure {f}")).unwrap_or_default();
    let results = vec![
        ("dataset composition", composition()),
        (
            "syntax by construction",
            outcome(suite.syntax_bad == 0, format!("{}/{} responses clean", suite.samples - suite.syntax_bad, suite.samples)),
        ),
        (
            "function by construction",
            outcome(
                suite.functional_bad == 0 && suite.took < EVAL_BUDGET,
                format!(
                    "{}/{} blocks fully correct at {CYCLES} cycles in {:.1}s (limit {}s){note}",
                    suite.samples - suite.functional_bad,
                    suite.samples,
                    suite.took.as_secs_f64(),
                    EVAL_BUDGET.as_secs()
                ),
            ),
        ),
        ("cpc ceiling", outcome(suite.cpc_bad == 0, format!("{}/{} blocks at 100%", suite.samples - suite.cpc_bad, suite.samples))),
        ("golden responses", golden_responses()),
        ("wakeup timer taxonomy", wakeup_timer_taxonomy()),
        ("leakage metric", leakage()),
        ("mutation engine", canonical_mutants()),
        ("contamination", contamination()),
        ("determinism", determinism()),
        ("round trip", round_trip()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("[{}] {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
