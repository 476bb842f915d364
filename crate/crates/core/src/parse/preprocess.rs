//! Conditional compilation: `` `ifdef``, `` `ifndef``, `` `elsif``, `` `else``,
//! `` `endif`` and `` `define``.

use crate::hdl::{PreprocRegion, Span};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("`ifdef opened at line {line} is never closed")]
    UnterminatedIfdef { line: usize, offset: usize },
    #[error("stray `{directive}` at line {line}")]
    Unbalanced { directive: String, line: usize, offset: usize },
}

impl PreprocessError {
    pub fn offset(&self) -> usize {
        match self {
            PreprocessError::UnterminatedIfdef { offset, .. } | PreprocessError::Unbalanced { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// Kept text. With `keep_layout` every dropped byte became a space so
    /// offsets still index the input.
    pub text: String,
    pub regions: Vec<PreprocRegion>,
}

struct Frame {
    /// Branch currently selected.
    active: bool,
    /// Some branch of this conditional was already taken.
    done: bool,
    /// Enclosing context is live.
    parent: bool,
    name: String,
    start: usize,
    line: usize,
}

fn directive(line: &str) -> Option<(&str, &str)> {
    let t = line.trim_start();
    let rest = t.strip_prefix('`')?;
    let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
    let (name, arg) = rest.split_at(end);
    let arg = arg.trim();
    let arg = arg.split("//").next().unwrap_or("").trim();
    Some((name, arg))
}

/// Resolves conditional regions against `defines`. Directive lines and the
/// bodies of untaken branches are dropped; everything else passes through.
pub fn preprocess(src: &str, defines: &BTreeSet<String>) -> Result<Preprocessed, PreprocessError> {
    run(src, defines, false)
}

/// Same resolution, but dropped text is blanked instead of removed.
pub fn preprocess_in_place(src: &str, defines: &BTreeSet<String>) -> Result<Preprocessed, PreprocessError> {
    run(src, defines, true)
}

fn run(src: &str, defines: &BTreeSet<String>, keep_layout: bool) -> Result<Preprocessed, PreprocessError> {
    let mut defined = defines.clone();
    let mut stack: Vec<Frame> = Vec::new();
    let mut text = String::with_capacity(src.len());
    let mut regions = Vec::new();
    let mut offset = 0;
    for (lineno, line) in src.split_inclusive('\n').enumerate() {
        let line_no = lineno + 1;
        let live = stack.last().is_none_or(|f| f.active);
        let mut keep = live;
        if let Some((name, arg)) = directive(line) {
            match name {
                "ifdef" | "ifndef" => {
                    let hit = defined.contains(arg) == (name == "ifdef");
                    stack.push(Frame {
                        active: live && hit,
                        done: hit,
                        parent: live,
                        name: arg.to_string(),
                        start: offset,
                        line: line_no,
                    });
                    keep = false;
                }
                "elsif" | "else" => {
                    let f = stack.last_mut().ok_or_else(|| PreprocessError::Unbalanced {
                        directive: name.to_string(),
                        line: line_no,
                        offset,
                    })?;
                    let hit = !f.done && (name == "else" || defined.contains(arg));
                    f.active = f.parent && hit;
                    f.done |= hit;
                    keep = false;
                }
                "endif" => {
                    let f = stack.pop().ok_or_else(|| PreprocessError::Unbalanced {
                        directive: name.to_string(),
                        line: line_no,
                        offset,
                    })?;
                    regions.push(PreprocRegion {
                        macro_name: f.name,
                        taken: f.done && f.parent,
                        span: Span::new(f.start, offset + line.len()),
                    });
                    keep = false;
                }
                "define" => {
                    if live {
                        if let Some(m) = arg.split_whitespace().next() {
                            defined.insert(m.to_string());
                        }
                    }
                    keep = false;
                }
                "undef" => {
                    if live {
                        defined.remove(arg);
                    }
                    keep = false;
                }
                "timescale" | "include" | "default_nettype" | "resetall" | "celldefine" | "endcelldefine" => {
                    keep = false;
                }
                _ => {}
            }
        }
        if keep {
            text.push_str(line);
        } else if keep_layout {
            // byte for byte, so multi-byte characters keep their footprint
            text.extend(line.bytes().map(|c| if c == b'\n' { '\n' } else { ' ' }));
        }
        offset += line.len();
    }
    if let Some(f) = stack.pop() {
        return Err(PreprocessError::UnterminatedIfdef { line: f.line, offset: f.start });
    }
    regions.sort_by_key(|r| r.span.start);
    Ok(Preprocessed { text, regions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defs(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn else_branch_kept_when_undefined() {
        let src = "`ifdef X\na\n`else\nb\n`endif\n";
        assert_eq!(preprocess(src, &defs(&[])).unwrap().text, "b\n");
        assert_eq!(preprocess(src, &defs(&["X"])).unwrap().text, "a\n");
    }

    #[test]
    fn nested() {
        let src = "`ifdef A\n`ifdef B\nab\n`else\na\n`endif\n`else\nnone\n`endif\ntail\n";
        assert_eq!(preprocess(src, &defs(&["A", "B"])).unwrap().text, "ab\ntail\n");
        assert_eq!(preprocess(src, &defs(&["A"])).unwrap().text, "a\ntail\n");
        assert_eq!(preprocess(src, &defs(&["B"])).unwrap().text, "none\ntail\n");
    }

    #[test]
    fn unterminated() {
        let err = preprocess("x\n`ifdef A\ny\n", &defs(&[])).unwrap_err();
        assert_eq!(err, PreprocessError::UnterminatedIfdef { line: 2, offset: 2 });
    }

    #[test]
    fn layout_preserved() {
        let src = "a\n`ifdef X\nbé\n`endif\nc\n";
        let out = preprocess_in_place(src, &defs(&[])).unwrap();
        assert_eq!(out.text.len(), src.len());
        assert_eq!(&out.text[out.text.len() - 2..], "c\n");
        assert_eq!(out.regions.len(), 1);
        assert!(!out.regions[0].taken);
    }

    #[test]
    fn define_enables_later_region() {
        let src = "`define F\n`ifdef F\nyes\n`endif\n";
        assert_eq!(preprocess(src, &defs(&[])).unwrap().text, "yes\n");
    }
}
