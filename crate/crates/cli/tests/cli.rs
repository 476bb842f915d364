use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svaforge")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema_check(name: &str, value: &Value) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn samples(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn code_of(sample: &Value) -> String {
    let prompt = sample["prompt"].as_str().unwrap();
    prompt[prompt.find("module ").unwrap()..].to_string()
}

const BLOCKED: &str = "module t(input logic clk, input logic a, output logic q, output logic r);
  always_ff @(posedge clk) begin
    if (a) begin
      q <= 1'b1;
    end else begin
      q <= 1'b0;
    end
    r <= a;
  end
endmodule
";

const CANON: &str = "module t(input logic clk, input logic a, output logic q);
  always_ff @(posedge clk) if (a) q <= 1'b1; else q <= 1'b0;
endmodule
";

#[test]
fn zero_count_gives_empty_file() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--count", "0", "--seed", "1", "--out", "d.jsonl"]);
    assert_eq!(std::fs::read(d.path().join("d.jsonl")).unwrap().len(), 0);
}

#[test]
fn default_count_composition() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["gen", "--seed", "5", "--out", "d.jsonl", "--json"]);
    let s = json(&out);
    schema_check("gen", &s);
    assert_eq!(s["samples"], 20000);
    for (cat, n) in [("if_else", 10400), ("case_stmt", 5600), ("combined", 4000)] {
        let c = &s["composition"][cat];
        assert_eq!(c["total"], n);
        assert!(c["sync"].as_i64().unwrap().abs_diff(c["async"].as_i64().unwrap()) <= 1);
    }
    let first = &samples(&d.path().join("d.jsonl"))[0];
    schema_check("sample", first);
}

#[test]
fn pipeline_self_test() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    ok(dir, &["gen", "--count", "200", "--seed", "11", "--out", "d.jsonl"]);
    for (i, s) in samples(&dir.join("d.jsonl")).iter().enumerate() {
        std::fs::write(dir.join("b.sv"), code_of(s)).unwrap();
        let seed = s["meta"]["seed"].as_u64().unwrap().to_string();
        ok(dir, &["synth", "b.sv", "--seed", &seed, "--out", "b.sva"]);
        let sva = std::fs::read_to_string(dir.join("b.sva")).unwrap();
        assert_eq!(sva, s["response"].as_str().unwrap(), "sample {i}");
        let check = json(&ok(dir, &["check", "b.sva", "--json"]));
        assert_eq!(check["syntactically_correct_pct"], 100.0);
        let eval = json(&ok(dir, &["eval", "b.sv", "b.sva", "--seed", "3", "--cycles", "500", "--json"]));
        assert_eq!(eval["functionally_correct_pct"], 100.0, "sample {i}: {eval}");
        let cov = json(&ok(dir, &["coverage", "b.sv", "b.sva", "--json"]));
        assert_eq!(cov["cpc_pct"], 100.0);
        if i == 0 {
            schema_check("syntax", &check);
            schema_check("eval", &eval);
            schema_check("coverage", &cov);
        }
    }
}

#[test]
fn seeded_commands_repeat_exactly() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    std::fs::write(dir.join("t.sv"), BLOCKED).unwrap();
    ok(dir, &["synth", "t.sv", "--out", "t.sva"]);
    let commands: [&[&str]; 4] = [
        &["gen", "--count", "300", "--seed", "9"],
        &["eval", "t.sv", "t.sva", "--seed", "4", "--json"],
        &["contaminate", "t.sv", "--ifdefs", "3", "--instances", "2", "--seed", "8"],
        &["synth", "t.sv", "--stability"],
    ];
    for args in commands {
        assert_eq!(ok(dir, args).stdout, ok(dir, args).stdout, "{args:?}");
    }
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    std::fs::write(dir.join("t.sv"), CANON).unwrap();
    std::fs::write(dir.join("broken.sv"), "module t(input logic a; endmodule").unwrap();
    ok(dir, &["synth", "t.sv", "--out", "t.sva"]);
    assert_eq!(code(dir, &["gen", "--count", "3"]), 1);
    assert_eq!(code(dir, &["synth", "broken.sv"]), 1);
    assert_eq!(code(dir, &["synth", "missing.sv"]), 1);
    assert_eq!(code(dir, &["eval", "t.sv", "t.sva", "--seed", "1", "--ops", "Nope"]), 1);
    assert_eq!(code(dir, &["gen", "--count", "3", "--seed", "1", "--ratios", "1,-1,1"]), 1);
    assert_eq!(code(dir, &["leakage", "t.sv", "missing"]), 1);
    assert_eq!(code(dir, &["frobnicate"]), 1);
    // the output path is a directory
    assert_eq!(code(dir, &["synth", "t.sv", "--out", "."]), 2);
}

#[test]
fn config_file_and_flag_precedence() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    std::fs::write(dir.join("run.toml"), "seed = 3\ncount = 12\nratios = [1.0, 0.0, 0.0]\n").unwrap();
    let s = json(&ok(dir, &["gen", "--config", "run.toml", "--out", "d.jsonl", "--json"]));
    assert_eq!(s["samples"], 12);
    assert_eq!(s["composition"]["if_else"]["total"], 12);
    let s = json(&ok(dir, &["gen", "--config", "run.toml", "--count", "4", "--out", "d.jsonl", "--json"]));
    assert_eq!((s["samples"].as_i64(), s["seed"].as_i64()), (Some(4), Some(3)));
    std::fs::write(dir.join("bad.toml"), "seeed = 3\n").unwrap();
    assert_eq!(code(dir, &["gen", "--config", "bad.toml"]), 1);
    assert_eq!(code(dir, &["gen", "--config", "run.toml", "--json"]), 1);
}

#[test]
fn eval_reports_weak_assertions() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    std::fs::write(dir.join("t.sv"), CANON).unwrap();
    std::fs::write(
        dir.join("w.sva"),
        "property Taut; @(posedge clk) (1'b1) |-> (1'b1); endproperty\nproperty Bad; @(posedge clk) a |-> q = 1; endproperty\n",
    )
    .unwrap();
    let r = json(&ok(dir, &["eval", "t.sv", "w.sva", "--seed", "1", "--json"]));
    schema_check("eval", &r);
    assert_eq!(r["generated"], 2);
    assert_eq!(r["syntactically_correct_pct"], 50.0);
    assert_eq!(r["functionally_correct_pct"], 0.0);
    assert!(r["verdicts"][0]["reasons"].as_array().unwrap().contains(&Value::from("kills_no_mutant")));
    assert_eq!(r["verdicts"][1]["reasons"][0], "syntax_error");
    let cov = json(&ok(dir, &["coverage", "t.sv", "w.sva", "--json"]));
    assert_eq!(cov["cpc_pct"], 0.0);
}

#[test]
fn mine_keep_flags_and_corrupt() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    std::fs::create_dir(dir.join("rtl")).unwrap();
    std::fs::write(dir.join("rtl/a.sv"), CANON).unwrap();
    std::fs::write(dir.join("rtl/b.sv"), CANON.replace("module t", "module u")).unwrap();
    std::fs::write(dir.join("rtl/notes.txt"), "not hdl").unwrap();
    let s = json(&ok(dir, &["mine-vars", "rtl", "--out", "clean.pool", "--json"]));
    schema_check("mine", &s);
    assert_eq!((s["files"].as_i64(), s["mined"].as_i64(), s["kept"].as_i64()), (Some(2), Some(6), Some(3)));
    let s = json(&ok(dir, &["mine-vars", "rtl", "--keep-duplicates", "--out", "dup.pool", "--json"]));
    assert_eq!(s["kept"], 6);

    ok(dir, &["corrupt-vars", "clean.pool", "--mode", "invalid_chars", "--rate", "1", "--seed", "2", "--out", "dirty.pool"]);
    let dirty = std::fs::read_to_string(dir.join("dirty.pool")).unwrap();
    let clean = std::fs::read_to_string(dir.join("clean.pool")).unwrap();
    assert!(dirty.lines().count() > clean.lines().count());
    assert_eq!(code(dir, &["corrupt-vars", "clean.pool", "--mode", "duplicates", "--rate", "2", "--seed", "2"]), 1);
}

#[test]
fn leakage_extremes() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    for sub in ["a", "b"] {
        std::fs::create_dir(dir.join(sub)).unwrap();
        std::fs::write(dir.join(sub).join("x.sv"), CANON).unwrap();
    }
    let r = json(&ok(dir, &["leakage", "a", "b", "--json"]));
    schema_check("overlap", &r);
    assert_eq!(r["score"], 1.0);
    std::fs::write(dir.join("b/x.sv"), "0123456789abcdefghijklmnopqrstuvwxyz").unwrap();
    assert_eq!(json(&ok(dir, &["leakage", "a", "b", "--n", "13", "--json"]))["score"], 0.0);
}
