//! Inserts `ifdef` regions and dummy instantiations into RTL source.
//!
//! Each `ifdef SYNTH_<i>` region holds a copy of a statement from the same
//! `begin ... end` list, placed right after the original. With no macros
//! defined the copy is dropped and the design is unchanged.

use crate::parse::{parse_module, Diagnostic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ContaminateError {
    #[error("input does not parse: {}", .0.first().map(|d| d.to_string()).unwrap_or_default())]
    ParseFailure(Vec<Diagnostic>),
    #[error("no statement inside a begin/end list to anchor an ifdef region")]
    NoAnchor,
}

pub fn contaminate(src: &str, ifdefs: usize, instances: usize, seed: u64) -> Result<String, ContaminateError> {
    if ifdefs == 0 && instances == 0 {
        return Ok(src.to_string());
    }
    let parsed = parse_module(src, &Default::default());
    if parsed.module.is_none() || parsed.has_errors() {
        return Err(ContaminateError::ParseFailure(parsed.diagnostics));
    }
    let text = &parsed.text;
    let anchors: Vec<_> = parsed.map.stmts.iter().filter(|s| s.in_block).collect();
    if ifdefs > 0 && anchors.is_empty() {
        return Err(ContaminateError::NoAnchor);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (offset, order, text)
    let mut edits: Vec<(usize, usize, String)> = Vec::new();
    for i in 0..ifdefs {
        let s = anchors[rng.gen_range(0..anchors.len())];
        let body = &text[s.span.start..s.span.end];
        edits.push((s.span.end, edits.len(), format!("\n`ifdef SYNTH_{i}\n{body}\n`endif\n")));
    }
    let bounds = &parsed.map.item_boundaries;
    for i in 0..instances {
        let at = bounds[rng.gen_range(0..bounds.len())];
        edits.push((at, edits.len(), format!("\n  dummy_mod u_dummy_{i} (.a(1'b0));\n")));
    }
    edits.sort_by_key(|e| (e.0, e.1));
    let mut out = String::with_capacity(text.len() + edits.iter().map(|e| e.2.len()).sum::<usize>());
    let mut last = 0;
    for (at, _, ins) in edits {
        out.push_str(&text[last..at]);
        out.push_str(&ins);
        last = at;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertsynth::{properties, synthesize_module, SynthOptions};

    const SRC: &str = "module t(input logic clk, input logic a, output logic q, output logic r);
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

    #[test]
    fn zero_is_identity() {
        assert_eq!(contaminate(SRC, 0, 0, 4).unwrap(), SRC);
    }

    #[test]
    fn counts_and_oracle_unchanged() {
        let out = contaminate(SRC, 10, 10, 4).unwrap();
        assert_eq!(out.matches("`ifdef SYNTH_").count(), 10);
        assert_eq!(out.matches("dummy_mod u_dummy_").count(), 10);
        let a = parse_module(SRC, &Default::default()).module.unwrap();
        let p = parse_module(&out, &Default::default());
        assert!(!p.has_errors(), "{:?}", p.diagnostics);
        let b = p.module.unwrap();
        let o = SynthOptions::default();
        assert_eq!(properties(&synthesize_module(&a, &o).unwrap()), properties(&synthesize_module(&b, &o).unwrap()));
    }
}
