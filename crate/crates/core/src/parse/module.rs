//! Module-level grammar: headers, declarations, always blocks, statements.

use super::diag::{normalize, DiagCode, DiagSink, Diagnostic};
use super::expr::{is_reserved, Bail, Cursor, PResult};
use super::lexer::{lex, Tok};
use super::preprocess::preprocess_in_place;
use crate::hdl::*;
use std::collections::{BTreeSet, HashMap};

/// Statement position recorded during parsing, used to place text edits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StmtSite {
    pub span: Span,
    /// Sits directly in a `begin ... end` list, so text can go after it.
    pub in_block: bool,
    pub is_assign: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub stmts: Vec<StmtSite>,
    /// Offsets where a module item may be inserted (after the header and
    /// after each item).
    pub item_boundaries: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ParsedModule {
    pub module: RtlModule,
    pub map: SourceMap,
}

#[derive(Debug, Clone)]
pub struct FileParse {
    pub modules: Vec<ParsedModule>,
    pub diagnostics: Vec<Diagnostic>,
    /// Normalized text all offsets refer to.
    pub text: String,
}

impl FileParse {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn fatal(&self) -> bool {
        self.modules.is_empty()
    }
}

pub fn parse_file(src: &str, defines: &BTreeSet<String>) -> FileParse {
    parse_file_bytes(src.as_bytes(), defines)
}

/// Parses every module in a file. Offsets in diagnostics and spans refer to
/// the normalized input text; preprocessing keeps them aligned.
pub fn parse_file_bytes(bytes: &[u8], defines: &BTreeSet<String>) -> FileParse {
    let text = normalize(bytes);
    let mut diags = DiagSink::new(&text);
    if text.trim().is_empty() {
        diags.error(DiagCode::EmptyInput, 0, "empty input");
        return FileParse { modules: Vec::new(), diagnostics: diags.finish(), text };
    }
    let pre = match preprocess_in_place(&text, defines) {
        Ok(p) => p,
        Err(e) => {
            diags.error(DiagCode::UnterminatedIfdef, e.offset(), e.to_string());
            return FileParse { modules: Vec::new(), diagnostics: diags.finish(), text };
        }
    };
    let toks = lex(&pre.text, &mut diags);
    let mut modules = Vec::new();
    {
        let mut cur = Cursor::new(&toks, &mut diags, pre.text.len());
        let mut saw_module = false;
        while !cur.at_end() {
            if cur.at_kw("module") || cur.at_kw("macromodule") {
                saw_module = true;
                let start = cur.offset();
                let mut p = ModuleParser { cur: &mut cur, src: &pre.text, map: SourceMap::default() };
                match p.module() {
                    Ok(mut m) => {
                        let map = std::mem::take(&mut p.map);
                        let end = cur.prev_end();
                        m.preproc_regions =
                            pre.regions.iter().filter(|r| r.span.start >= start && r.span.end <= end + 1).cloned().collect();
                        modules.push(ParsedModule { module: m, map });
                    }
                    Err(Bail) => {
                        // skip to the end of this module and keep going
                        while !cur.at_end() && !cur.at_kw("endmodule") {
                            cur.bump();
                        }
                        cur.eat_kw("endmodule");
                    }
                }
            } else {
                cur.bump();
            }
        }
        if !saw_module {
            cur.diags.error(DiagCode::NoModule, 0, "no `module` header found");
        }
    }
    FileParse { modules, diagnostics: diags.finish(), text }
}

#[derive(Debug, Clone)]
pub struct ModuleParse {
    /// `None` when parsing hit a fatal error.
    pub module: Option<RtlModule>,
    pub map: SourceMap,
    pub diagnostics: Vec<Diagnostic>,
    pub text: String,
}

impl ModuleParse {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

/// Parses the first module of `src`, or the one called `name`.
pub fn parse_module_named(src: &str, defines: &BTreeSet<String>, name: Option<&str>) -> ModuleParse {
    let file = parse_file(src, defines);
    let mut diagnostics = file.diagnostics;
    let found = match name {
        None => file.modules.into_iter().next(),
        Some(n) => {
            let hit = file.modules.into_iter().find(|m| m.module.name == n);
            if hit.is_none() {
                let (line, col) = (1, 1);
                diagnostics.push(Diagnostic {
                    severity: super::diag::Severity::Error,
                    offset: 0,
                    line,
                    col,
                    message: format!("no module named `{n}`"),
                    code: DiagCode::NoModule,
                });
            }
            hit
        }
    };
    match found {
        Some(pm) => ModuleParse { module: Some(pm.module), map: pm.map, diagnostics, text: file.text },
        None => ModuleParse { module: None, map: SourceMap::default(), diagnostics, text: file.text },
    }
}

pub fn parse_module(src: &str, defines: &BTreeSet<String>) -> ModuleParse {
    parse_module_named(src, defines, None)
}

struct ModuleParser<'c, 'a> {
    cur: &'c mut Cursor<'a>,
    src: &'a str,
    map: SourceMap,
}

const DECL_TYPES: &[&str] = &["logic", "wire", "reg", "bit", "int", "integer", "byte", "shortint", "longint"];

fn fixed_width(ty: &str) -> Option<u32> {
    match ty {
        "int" | "integer" => Some(32),
        "byte" => Some(8),
        "shortint" => Some(16),
        "longint" => Some(64),
        _ => None,
    }
}

impl<'c, 'a> ModuleParser<'c, 'a> {
    fn module(&mut self) -> PResult<RtlModule> {
        self.cur.bump();
        let name = self.cur.expect_ident()?;
        let mut m = RtlModule::new(name);
        let mut consts: HashMap<String, Value> = HashMap::new();
        if self.cur.eat_op("#") {
            self.cur.expect_op("(")?;
            while !self.cur.at_op(")") {
                if self.cur.at_end() {
                    return self.cur.fail(DiagCode::UnbalancedParens, "parameter list is never closed");
                }
                self.cur.eat_kw("parameter");
                self.cur.eat_kw("localparam");
                self.param_assignments(&mut m, &mut consts)?;
                if !self.cur.eat_op(",") {
                    break;
                }
            }
            self.cur.expect_op(")")?;
        }
        if self.cur.eat_op("(") {
            self.port_list(&mut m, &consts)?;
        }
        self.cur.expect_op(";")?;
        self.map.item_boundaries.push(self.cur.prev_end());
        loop {
            if self.cur.at_end() {
                return self.cur.fail(DiagCode::UnbalancedBlock, "missing `endmodule`");
            }
            if self.cur.eat_kw("endmodule") {
                if self.cur.eat_op(":") {
                    self.cur.expect_ident()?;
                }
                break;
            }
            let before = self.cur.pos;
            match self.item(&mut m, &mut consts) {
                Ok(()) => self.map.item_boundaries.push(self.cur.prev_end()),
                Err(Bail) => {
                    if self.cur.diags.items.last().is_some_and(|d| d.code == DiagCode::UnbalancedBlock) {
                        return Err(Bail);
                    }
                    self.recover_item(before);
                }
            }
        }
        Ok(m)
    }

    /// Skip to just past the next `;` at depth zero, or to a keyword that
    /// starts a new item.
    fn recover_item(&mut self, before: usize) {
        if self.cur.pos == before {
            self.cur.bump();
        }
        let mut depth = 0i32;
        while let Some(t) = self.cur.peek() {
            if depth == 0
                && (t.is_kw("endmodule")
                    || t.is_kw("always")
                    || t.is_kw("always_ff")
                    || t.is_kw("always_comb")
                    || t.is_kw("input")
                    || t.is_kw("output"))
            {
                return;
            }
            self.cur.bump();
            if t.is_op("(") || t.is_op("[") || t.is_op("{") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") || t.is_op("}") {
                depth -= 1;
            } else if depth <= 0 && t.is_op(";") {
                return;
            }
        }
    }

    fn const_eval(&mut self, e: &Expr, consts: &HashMap<String, Value>) -> Option<u64> {
        eval_expr(e, consts).ok().map(|v| v.bits)
    }

    /// `[msb:lsb]` to a width. Unknown bounds fall back to one bit.
    fn range(&mut self, consts: &HashMap<String, Value>) -> PResult<Option<u32>> {
        if !self.cur.at_op("[") {
            return Ok(None);
        }
        let at = self.cur.offset();
        self.cur.bump();
        let msb = self.cur.expr()?;
        self.cur.expect_op(":")?;
        let lsb = self.cur.expr()?;
        self.cur.expect_op("]")?;
        match (self.const_eval(&msb, consts), self.const_eval(&lsb, consts)) {
            (Some(a), Some(b)) => {
                let w = a.abs_diff(b) + 1;
                if w > 64 {
                    self.cur.diags.warn(DiagCode::Unsupported, at, format!("width {w} truncated to 64 bits"));
                    Ok(Some(64))
                } else {
                    Ok(Some(w as u32))
                }
            }
            _ => {
                self.cur.diags.warn(DiagCode::Unsupported, at, "non-constant range, assuming one bit");
                Ok(Some(1))
            }
        }
    }

    /// Optional data type plus packed range. Returns the width.
    fn data_type(&mut self, consts: &HashMap<String, Value>) -> PResult<u32> {
        Ok(self.typed_width(consts)?.0)
    }

    /// Width plus whether the type or a range fixed it explicitly.
    fn typed_width(&mut self, consts: &HashMap<String, Value>) -> PResult<(u32, bool)> {
        let mut fixed = None;
        for ty in DECL_TYPES {
            if self.cur.eat_kw(ty) {
                fixed = fixed_width(ty);
                break;
            }
        }
        // user-defined type: an identifier followed by another identifier
        if fixed.is_none() {
            if let (Some(a), Some(b)) = (self.cur.peek(), self.cur.peek_at(1)) {
                if matches!(&a.tok, Tok::Ident(s) if !is_reserved(s)) && matches!(&b.tok, Tok::Ident(s) if !is_reserved(s)) {
                    let at = a.start;
                    self.cur.bump();
                    self.cur.diags.warn(DiagCode::Unsupported, at, "user-defined type treated as one bit");
                }
            }
        }
        self.cur.eat_kw("signed");
        self.cur.eat_kw("unsigned");
        let r = self.range(consts)?;
        let explicit = r.is_some() || fixed.is_some();
        Ok((r.or(fixed).unwrap_or(1), explicit))
    }

    fn unpacked_dims(&mut self) -> PResult<()> {
        while self.cur.at_op("[") {
            let at = self.cur.offset();
            self.cur.skip_group()?;
            self.cur.diags.warn(DiagCode::Unsupported, at, "unpacked dimension ignored");
        }
        Ok(())
    }

    fn port_list(&mut self, m: &mut RtlModule, consts: &HashMap<String, Value>) -> PResult<()> {
        let mut dir: Option<Direction> = None;
        let mut width = 1;
        if self.cur.eat_op(")") {
            return Ok(());
        }
        loop {
            let explicit = if self.cur.eat_kw("input") {
                Some(Direction::Input)
            } else if self.cur.eat_kw("output") || self.cur.eat_kw("inout") {
                // inout is driven like an output
                Some(Direction::Output)
            } else {
                None
            };
            if explicit.is_some() {
                dir = explicit;
                width = self.data_type(consts)?;
            } else if dir.is_some() && self.cur.peek().is_some_and(|t| DECL_TYPES.iter().any(|k| t.is_kw(k)) || t.is_op("[")) {
                width = self.data_type(consts)?;
            }
            let name = self.cur.expect_ident()?;
            self.unpacked_dims()?;
            if let Some(d) = dir {
                m.decls.push(Decl { name, width, direction: d });
            }
            // non-ANSI names get their direction from later declarations
            if self.cur.eat_op(",") {
                continue;
            }
            self.cur.expect_op(")")?;
            return Ok(());
        }
    }

    /// `[type] [range] NAME = expr {, NAME = expr}`.
    fn param_assignments(&mut self, m: &mut RtlModule, consts: &mut HashMap<String, Value>) -> PResult<()> {
        let (declared, explicit) = self.typed_width(consts)?;
        loop {
            let name = self.cur.expect_ident()?;
            self.cur.expect_op("=")?;
            let at = self.cur.offset();
            let value = self.cur.expr()?;
            let v = match eval_expr(&value, &*consts) {
                Ok(v) => v,
                Err(_) => {
                    self.cur.diags.warn(DiagCode::Unsupported, at, format!("parameter `{name}` is not constant"));
                    Value::new(0, 1)
                }
            };
            let width = if explicit { declared } else { v.width };
            consts.insert(name.clone(), v.resize(width));
            m.params.push(Param { name, width, value });
            let more = self.cur.at_op(",")
                && matches!(self.cur.peek_at(1).map(|t| &t.tok), Some(Tok::Ident(s)) if !is_reserved(s))
                && self.cur.peek_at(2).is_some_and(|t| t.is_op("="));
            if !more {
                return Ok(());
            }
            self.cur.bump();
        }
    }

    fn skip_until_kw(&mut self, end: &str) -> PResult<()> {
        let at = self.cur.offset();
        while let Some(t) = self.cur.bump() {
            if t.is_kw(end) {
                return Ok(());
            }
        }
        self.cur.diags.error(DiagCode::UnbalancedBlock, at, format!("missing `{end}`"));
        Err(Bail)
    }

    fn skip_statement_text(&mut self) -> PResult<()> {
        let mut depth = 0i32;
        while let Some(t) = self.cur.bump() {
            if t.is_op("(") || t.is_op("[") || t.is_op("{") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") || t.is_op("}") {
                depth -= 1;
            } else if depth <= 0 && t.is_op(";") {
                return Ok(());
            }
        }
        Ok(())
    }

    fn item(&mut self, m: &mut RtlModule, consts: &mut HashMap<String, Value>) -> PResult<()> {
        let Some(t) = self.cur.peek() else { return Err(Bail) };
        let at = t.start;
        let kw = match &t.tok {
            Tok::Ident(s) => s.as_str(),
            Tok::Op(";") => {
                self.cur.bump();
                return Ok(());
            }
            Tok::Directive(d) => {
                let d = d.clone();
                self.cur.bump();
                self.cur.diags.warn(DiagCode::Skipped, at, format!("macro `{d}` ignored"));
                return Ok(());
            }
            _ => {
                let found = self.cur.describe();
                return self.cur.fail(DiagCode::Syntax, format!("unexpected {found} in module body"));
            }
        };
        match kw {
            "input" | "output" | "inout" => {
                self.cur.bump();
                let dir = if kw == "input" { Direction::Input } else { Direction::Output };
                let width = self.data_type(consts)?;
                self.decl_names(m, width, dir)?;
            }
            k if DECL_TYPES.contains(&k) => {
                let width = self.data_type(consts)?;
                self.decl_names(m, width, Direction::Internal)?;
            }
            "localparam" | "parameter" => {
                self.cur.bump();
                self.param_assignments(m, consts)?;
                self.cur.expect_op(";")?;
            }
            "always" | "always_ff" | "always_comb" | "always_latch" => {
                let b = self.always()?;
                m.always_blocks.push(b);
            }
            "assign" | "genvar" | "import" | "typedef" | "wire_alias" => {
                self.cur.bump();
                self.skip_statement_text()?;
                self.cur.diags.warn(DiagCode::Skipped, at, format!("`{kw}` item ignored"));
            }
            "initial" | "final" => {
                self.cur.bump();
                self.skip_stmt_region()?;
                self.cur.diags.warn(DiagCode::Skipped, at, format!("`{kw}` block ignored"));
            }
            "generate" => {
                self.cur.bump();
                self.skip_until_kw("endgenerate")?;
                self.cur.diags.warn(DiagCode::Skipped, at, "generate region ignored");
            }
            "function" => {
                self.cur.bump();
                self.skip_until_kw("endfunction")?;
                self.cur.diags.warn(DiagCode::Skipped, at, "function ignored");
            }
            "task" => {
                self.cur.bump();
                self.skip_until_kw("endtask")?;
                self.cur.diags.warn(DiagCode::Skipped, at, "task ignored");
            }
            "property" => {
                self.cur.bump();
                self.skip_until_kw("endproperty")?;
                self.cur.diags.warn(DiagCode::Skipped, at, "embedded property ignored");
            }
            "sequence" => {
                self.cur.bump();
                self.skip_until_kw("endsequence")?;
            }
            "assert" | "assume" | "cover" => {
                self.cur.bump();
                self.skip_statement_text()?;
                self.cur.diags.warn(DiagCode::Skipped, at, "embedded assertion ignored");
            }
            _ if !is_reserved(kw) => self.instance_or_typed_decl(m, consts)?,
            _ => {
                let found = self.cur.describe();
                return self.cur.fail(DiagCode::Syntax, format!("unexpected {found} in module body"));
            }
        }
        Ok(())
    }

    fn skip_stmt_region(&mut self) -> PResult<()> {
        if self.cur.at_kw("begin") {
            let mut depth = 0;
            let at = self.cur.offset();
            while let Some(t) = self.cur.bump() {
                if t.is_kw("begin") {
                    depth += 1;
                } else if t.is_kw("end") {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                } else if t.is_kw("endmodule") {
                    break;
                }
            }
            self.cur.diags.error(DiagCode::UnbalancedBlock, at, "`begin` without matching `end`");
            return Err(Bail);
        }
        self.skip_statement_text()
    }

    fn decl_names(&mut self, m: &mut RtlModule, width: u32, direction: Direction) -> PResult<()> {
        loop {
            let at = self.cur.offset();
            let name = self.cur.expect_ident()?;
            self.unpacked_dims()?;
            if self.cur.eat_op("=") {
                self.cur.expr()?;
            }
            if let Some(prev) = m.decls.iter_mut().find(|d| d.name == name) {
                // `output q; reg [3:0] q;` style: the later declaration refines
                if direction == Direction::Internal && prev.direction != Direction::Internal {
                    if width > 1 {
                        prev.width = width;
                    }
                } else {
                    self.cur.diags.warn(DiagCode::DuplicateName, at, format!("`{name}` declared again"));
                    m.decls.push(Decl { name, width, direction });
                }
            } else {
                m.decls.push(Decl { name, width, direction });
            }
            if self.cur.eat_op(",") {
                continue;
            }
            self.cur.expect_op(";")?;
            return Ok(());
        }
    }

    fn instance_or_typed_decl(&mut self, m: &mut RtlModule, consts: &HashMap<String, Value>) -> PResult<()> {
        let start = self.cur.offset();
        let save = self.cur.pos;
        self.cur.bump();
        if self.cur.at_op("#") {
            self.cur.bump();
            self.cur.skip_group()?;
        }
        let is_inst = matches!(self.cur.peek().map(|t| &t.tok), Some(Tok::Ident(_)))
            && (self.cur.peek_at(1).is_some_and(|t| t.is_op("(") || t.is_op("[")));
        if is_inst {
            self.cur.bump();
            self.unpacked_dims()?;
            if !self.cur.at_op("(") {
                return self.cur.fail(DiagCode::Syntax, "expected `(` in instantiation");
            }
            self.cur.skip_group()?;
            self.cur.expect_op(";")?;
            let end = self.cur.prev_end();
            m.instances.push(Instance { text: self.src[start..end].to_string(), span: Span::new(start, end) });
            return Ok(());
        }
        self.cur.pos = save;
        if matches!(self.cur.peek_at(1).map(|t| &t.tok), Some(Tok::Ident(_)) | Some(Tok::Op("["))) {
            let width = self.data_type(consts)?;
            return self.decl_names(m, width, Direction::Internal);
        }
        let found = self.cur.describe();
        self.cur.fail(DiagCode::Syntax, format!("unexpected {found} in module body"))
    }

    fn always(&mut self) -> PResult<AlwaysBlock> {
        let start = self.cur.offset();
        let kw = match self.cur.bump().map(|t| &t.tok) {
            Some(Tok::Ident(s)) => s.clone(),
            _ => unreachable!(),
        };
        let kind = match kw.as_str() {
            "always" => AlwaysKind::Always,
            "always_ff" => AlwaysKind::AlwaysFf,
            _ => AlwaysKind::AlwaysComb,
        };
        if kw == "always_latch" {
            self.cur.diags.warn(DiagCode::Unsupported, start, "always_latch treated as always_comb");
        }
        let mut sensitivity = Vec::new();
        if kind != AlwaysKind::AlwaysComb {
            self.cur.expect_op("@")?;
            if self.cur.eat_op("*") {
                sensitivity.push(SensItem { edge: Edge::Level, signal: "*".into() });
            } else {
                self.cur.expect_op("(")?;
                loop {
                    if self.cur.eat_op("*") {
                        sensitivity.push(SensItem { edge: Edge::Level, signal: "*".into() });
                    } else {
                        let edge = if self.cur.eat_kw("posedge") {
                            Edge::Posedge
                        } else if self.cur.eat_kw("negedge") {
                            Edge::Negedge
                        } else {
                            Edge::Level
                        };
                        let signal = self.cur.expect_ident()?;
                        sensitivity.push(SensItem { edge, signal });
                    }
                    if self.cur.eat_kw("or") || self.cur.eat_op(",") {
                        continue;
                    }
                    break;
                }
                self.cur.expect_op(")")?;
            }
            if kind == AlwaysKind::AlwaysFf && !sensitivity.iter().any(|s| s.edge != Edge::Level) {
                self.cur.diags.error(DiagCode::Syntax, start, "always_ff needs an edge in its sensitivity list");
            }
        }
        let body = self.body(false)?;
        let end = self.cur.prev_end();
        Ok(AlwaysBlock { kind, sensitivity, body, span: Span::new(start, end) })
    }

    /// A statement used as a body: `begin ... end` unwraps to its list.
    fn body(&mut self, _nested: bool) -> PResult<Vec<Stmt>> {
        if self.cur.at_kw("begin") {
            self.block_list()
        } else {
            let mut out = Vec::new();
            if let Some(s) = self.stmt(false)? {
                out.push(s);
            }
            Ok(out)
        }
    }

    fn block_list(&mut self) -> PResult<Vec<Stmt>> {
        let open = self.cur.offset();
        self.cur.expect_kw("begin")?;
        if self.cur.eat_op(":") {
            self.cur.expect_ident()?;
        }
        let mut out = Vec::new();
        loop {
            if self.cur.at_end() || self.cur.at_kw("endmodule") {
                self.cur.diags.error(DiagCode::UnbalancedBlock, open, "`begin` without matching `end`");
                return Err(Bail);
            }
            if self.cur.eat_kw("end") {
                if self.cur.eat_op(":") {
                    self.cur.expect_ident()?;
                }
                return Ok(out);
            }
            let before = self.cur.pos;
            match self.stmt(true) {
                Ok(Some(s)) => out.push(s),
                Ok(None) => {}
                Err(Bail) => {
                    if self.cur.diags.items.last().is_some_and(|d| d.code == DiagCode::UnbalancedBlock) {
                        return Err(Bail);
                    }
                    self.recover_stmt(before);
                }
            }
        }
    }

    fn recover_stmt(&mut self, before: usize) {
        if self.cur.pos == before {
            self.cur.bump();
        }
        let mut depth = 0i32;
        while let Some(t) = self.cur.peek() {
            if depth <= 0 && (t.is_kw("end") || t.is_kw("endmodule") || t.is_kw("endcase")) {
                return;
            }
            self.cur.bump();
            if t.is_op("(") {
                depth += 1;
            } else if t.is_op(")") {
                depth -= 1;
            } else if depth <= 0 && t.is_op(";") {
                return;
            }
        }
    }

    fn record(&mut self, s: &Stmt, in_block: bool) {
        if let Some(span) = s.span() {
            self.map.stmts.push(StmtSite { span, in_block, is_assign: matches!(s, Stmt::Assign(_)) });
        }
    }

    fn stmt(&mut self, in_block: bool) -> PResult<Option<Stmt>> {
        let Some(t) = self.cur.peek() else {
            return self.cur.fail(DiagCode::UnbalancedBlock, "statement expected, found end of input");
        };
        let at = t.start;
        for q in ["unique", "unique0", "priority"] {
            if self.cur.eat_kw(q) {
                break;
            }
        }
        let s = if self.cur.eat_op(";") {
            return Ok(None);
        } else if self.cur.at_kw("begin") {
            Stmt::Block(self.block_list()?)
        } else if self.cur.at_kw("if") {
            Stmt::If(self.if_stmt()?)
        } else if self.cur.at_kw("case") || self.cur.at_kw("casez") || self.cur.at_kw("casex") {
            Stmt::Case(self.case_stmt()?)
        } else if let Some(Tok::Ident(name)) = self.cur.peek().map(|t| &t.tok) {
            if matches!(name.as_str(), "for" | "while" | "repeat" | "forever" | "foreach" | "do") {
                let kw = name.clone();
                self.cur.bump();
                if self.cur.at_op("(") {
                    self.cur.skip_group()?;
                }
                self.body(true)?;
                self.cur.diags.warn(DiagCode::Unsupported, at, format!("`{kw}` loop ignored"));
                return Ok(None);
            }
            if is_reserved(name) {
                let found = self.cur.describe();
                return self.cur.fail(DiagCode::Syntax, format!("unexpected {found} in statement"));
            }
            Stmt::Assign(self.assign()?)
        } else if let Some(Tok::System(name)) = self.cur.peek().map(|t| &t.tok) {
            let name = name.clone();
            self.cur.bump();
            if self.cur.at_op("(") {
                self.cur.skip_group()?;
            }
            self.cur.expect_op(";")?;
            self.cur.diags.warn(DiagCode::Skipped, at, format!("system task `${name}` ignored"));
            return Ok(None);
        } else {
            let found = self.cur.describe();
            return self.cur.fail(DiagCode::Syntax, format!("unexpected {found} in statement"));
        };
        self.record(&s, in_block);
        Ok(Some(s))
    }

    fn assign(&mut self) -> PResult<Assign> {
        let start = self.cur.offset();
        let name = self.cur.expect_ident()?;
        let mut lhs = Ident::new(name);
        if self.cur.eat_op("[") {
            let ix = self.cur.expr()?;
            if self.cur.at_op(":") {
                return self.cur.fail(DiagCode::Unsupported, "part-select targets are not supported");
            }
            self.cur.expect_op("]")?;
            lhs.index = Some(Box::new(ix));
        }
        let nonblocking = if self.cur.eat_op("<=") {
            true
        } else if self.cur.eat_op("=") {
            false
        } else {
            let found = self.cur.describe();
            return self.cur.fail(DiagCode::Syntax, format!("expected `<=` or `=`, found {found}"));
        };
        let rhs = self.cur.expr()?;
        self.cur.expect_op(";")?;
        Ok(Assign { lhs, rhs, nonblocking, span: Span::new(start, self.cur.prev_end()) })
    }

    fn paren_cond(&mut self) -> PResult<(Expr, Span)> {
        self.cur.expect_op("(")?;
        let start = self.cur.offset();
        let e = self.cur.expr()?;
        let end = self.cur.prev_end();
        self.cur.expect_op(")")?;
        Ok((e, Span::new(start, end)))
    }

    fn if_stmt(&mut self) -> PResult<IfStmt> {
        let start = self.cur.offset();
        let mut arms = Vec::new();
        let mut else_arm = None;
        let mut arm_start = start;
        loop {
            self.cur.expect_kw("if")?;
            let (cond, cond_span) = self.paren_cond()?;
            let body = self.body(true)?;
            arms.push(IfArm { cond, body, cond_span, span: Span::new(arm_start, self.cur.prev_end()) });
            if !self.cur.at_kw("else") {
                break;
            }
            let else_start = self.cur.offset();
            self.cur.bump();
            if self.cur.at_kw("if") {
                arm_start = self.cur.offset();
                continue;
            }
            let body = self.body(true)?;
            else_arm = Some(ElseArm { body, span: Span::new(else_start, self.cur.prev_end()) });
            break;
        }
        Ok(IfStmt { arms, else_arm, span: Span::new(start, self.cur.prev_end()) })
    }

    fn case_stmt(&mut self) -> PResult<CaseStmt> {
        let start = self.cur.offset();
        let kw_at = start;
        if !self.cur.at_kw("case") {
            self.cur.diags.warn(DiagCode::Unsupported, kw_at, "casez/casex treated as case");
        }
        self.cur.bump();
        let (selector, _) = self.paren_cond()?;
        let mut arms = Vec::new();
        let mut default = None;
        loop {
            if self.cur.at_end() || self.cur.at_kw("endmodule") || self.cur.at_kw("end") {
                self.cur.diags.error(DiagCode::UnbalancedBlock, start, "`case` without `endcase`");
                return Err(Bail);
            }
            if self.cur.eat_kw("endcase") {
                break;
            }
            let arm_start = self.cur.offset();
            if self.cur.eat_kw("default") {
                self.cur.eat_op(":");
                let body = self.body(true)?;
                default = Some(ElseArm { body, span: Span::new(arm_start, self.cur.prev_end()) });
                continue;
            }
            let mut labels = vec![self.cur.expr()?];
            while self.cur.eat_op(",") {
                labels.push(self.cur.expr()?);
            }
            let labels_span = Span::new(arm_start, self.cur.prev_end());
            self.cur.expect_op(":")?;
            let body = self.body(true)?;
            arms.push(CaseArm { labels, body, labels_span, span: Span::new(arm_start, self.cur.prev_end()) });
        }
        Ok(CaseStmt { selector, arms, default, span: Span::new(start, self.cur.prev_end()) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none() -> BTreeSet<String> {
        BTreeSet::new()
    }

    #[test]
    fn empty_input_is_fatal() {
        let r = parse_module("", &none());
        assert!(r.module.is_none());
        assert_eq!(r.diagnostics[0].code, DiagCode::EmptyInput);
    }

    #[test]
    fn missing_header_is_fatal() {
        let r = parse_module("always_comb begin end", &none());
        assert!(r.module.is_none());
        assert_eq!(r.diagnostics.last().unwrap().code, DiagCode::NoModule);
    }

    #[test]
    fn unbalanced_begin_is_fatal() {
        let r = parse_module("module m(input a, output logic q);\nalways_comb begin\n if (a) begin q = 1'b1;\nend\nendmodule\n", &none());
        assert!(r.module.is_none());
        assert!(r.diagnostics.iter().any(|d| d.code == DiagCode::UnbalancedBlock));
    }

    #[test]
    fn default_width_is_one() {
        let r = parse_module("module m(input a, input [3:0] b, output q);\nendmodule\n", &none());
        let m = r.module.unwrap();
        assert_eq!(m.width_of("a"), Some(1));
        assert_eq!(m.width_of("b"), Some(4));
        assert_eq!(m.width_of("q"), Some(1));
    }

    #[test]
    fn instance_is_opaque() {
        let src = "module m(input a);\n  sub #(.W(2)) u_sub (.a(a), .b());\nendmodule\n";
        let r = parse_module(src, &none());
        assert!(!r.has_errors(), "{:?}", r.diagnostics);
        let m = r.module.unwrap();
        assert_eq!(m.instances.len(), 1);
        assert_eq!(m.instances[0].text, "sub #(.W(2)) u_sub (.a(a), .b());");
    }

    #[test]
    fn else_if_chain_and_case() {
        let src = "module m(input clk, input [1:0] s, input a, output logic [3:0] q);
always_ff @(posedge clk) begin
  if (a) q <= 4'd1;
  else if (!a) begin q <= 4'd2; end
  else q <= '0;
  case (s)
    2'b00, 2'b01: q <= 4'd3;
    default: q <= 4'd4;
  endcase
end
endmodule
";
        let r = parse_module(src, &none());
        assert!(!r.has_errors(), "{:?}", r.diagnostics);
        let m = r.module.unwrap();
        let b = &m.always_blocks[0];
        assert_eq!(b.kind, AlwaysKind::AlwaysFf);
        match &b.body[0] {
            Stmt::If(i) => {
                assert_eq!(i.arms.len(), 2);
                assert!(i.else_arm.is_some());
                assert_eq!(&src[i.arms[0].cond_span.start..i.arms[0].cond_span.end], "a");
            }
            other => panic!("{other:?}"),
        }
        match &b.body[1] {
            Stmt::Case(c) => {
                assert_eq!(c.arms[0].labels.len(), 2);
                assert!(c.default.is_some());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn localparam_and_non_ansi() {
        let src = "module m(a, q);\n input a;\n output q;\n reg [7:0] q;\n localparam W = 4;\n logic [W-1:0] t;\nendmodule\n";
        let r = parse_module(src, &none());
        assert!(!r.has_errors(), "{:?}", r.diagnostics);
        let m = r.module.unwrap();
        assert_eq!(m.width_of("q"), Some(8));
        assert_eq!(m.width_of("t"), Some(4));
        assert_eq!(m.decl("q").unwrap().direction, Direction::Output);
    }

    #[test]
    fn duplicate_decls_kept() {
        let src = "module m;\n logic a;\n logic a;\nendmodule\n";
        let m = parse_module(src, &none()).module.unwrap();
        assert_eq!(m.decls.iter().filter(|d| d.name == "a").count(), 2);
    }

    #[test]
    fn ifdef_body_dropped_but_offsets_kept() {
        let src = "module m(input a, output logic q);\n`ifdef X\n  sub u (.a(a));\n`endif\n  always_comb q = a;\nendmodule\n";
        let r = parse_module(src, &none());
        let m = r.module.unwrap();
        assert!(m.instances.is_empty());
        assert_eq!(m.preproc_regions.len(), 1);
        let a = &m.always_blocks[0].assigns()[0].span;
        assert_eq!(&src[a.start..a.end], "q = a;");
    }
}
