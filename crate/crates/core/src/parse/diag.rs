use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DiagCode {
    #[serde(rename = "E_ASSIGN_IN_CONSEQUENT")]
    AssignInConsequent,
    #[serde(rename = "E_ASSIGN_IN_ANTECEDENT")]
    AssignInAntecedent,
    #[serde(rename = "E_MISSING_ENDPROPERTY")]
    MissingEndproperty,
    #[serde(rename = "E_UNBALANCED_PARENS")]
    UnbalancedParens,
    #[serde(rename = "E_BAD_LITERAL")]
    BadLiteral,
    #[serde(rename = "E_NONOVERLAP_IMPLICATION_WARN")]
    NonoverlapImplication,
    #[serde(rename = "E_UNKNOWN_TOKEN")]
    UnknownToken,
    #[serde(rename = "E_TERNARY_IN_PROPERTY")]
    TernaryInProperty,
    #[serde(rename = "E_SYNTAX")]
    Syntax,
    #[serde(rename = "E_UNSUPPORTED")]
    Unsupported,
    #[serde(rename = "E_EMPTY_INPUT")]
    EmptyInput,
    #[serde(rename = "E_NO_MODULE")]
    NoModule,
    #[serde(rename = "E_UNBALANCED_BLOCK")]
    UnbalancedBlock,
    #[serde(rename = "E_UNTERMINATED_IFDEF")]
    UnterminatedIfdef,
    #[serde(rename = "W_SKIPPED")]
    Skipped,
    #[serde(rename = "W_DUPLICATE_NAME")]
    DuplicateName,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::AssignInConsequent => "E_ASSIGN_IN_CONSEQUENT",
            DiagCode::AssignInAntecedent => "E_ASSIGN_IN_ANTECEDENT",
            DiagCode::MissingEndproperty => "E_MISSING_ENDPROPERTY",
            DiagCode::UnbalancedParens => "E_UNBALANCED_PARENS",
            DiagCode::BadLiteral => "E_BAD_LITERAL",
            DiagCode::NonoverlapImplication => "E_NONOVERLAP_IMPLICATION_WARN",
            DiagCode::UnknownToken => "E_UNKNOWN_TOKEN",
            DiagCode::TernaryInProperty => "E_TERNARY_IN_PROPERTY",
            DiagCode::Syntax => "E_SYNTAX",
            DiagCode::Unsupported => "E_UNSUPPORTED",
            DiagCode::EmptyInput => "E_EMPTY_INPUT",
            DiagCode::NoModule => "E_NO_MODULE",
            DiagCode::UnbalancedBlock => "E_UNBALANCED_BLOCK",
            DiagCode::UnterminatedIfdef => "E_UNTERMINATED_IFDEF",
            DiagCode::Skipped => "W_SKIPPED",
            DiagCode::DuplicateName => "W_DUPLICATE_NAME",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub code: DiagCode,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}[{}]: {}", self.line, self.col, self.code, self.message)
    }
}

/// Offset to 1-based line/column.
pub struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(src: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(src.bytes().enumerate().filter(|(_, b)| *b == b'\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    pub fn position(&self, offset: usize) -> (usize, usize) {
        let line = self.starts.partition_point(|&s| s <= offset);
        let col = offset - self.starts[line - 1] + 1;
        (line, col)
    }
}

/// Collects diagnostics against one source text.
pub struct DiagSink {
    index: LineIndex,
    pub items: Vec<Diagnostic>,
}

impl DiagSink {
    pub fn new(src: &str) -> Self {
        DiagSink { index: LineIndex::new(src), items: Vec::new() }
    }

    pub fn push(&mut self, severity: Severity, code: DiagCode, offset: usize, message: impl Into<String>) {
        let (line, col) = self.index.position(offset);
        self.items.push(Diagnostic { severity, offset, line, col, message: message.into(), code });
    }

    pub fn error(&mut self, code: DiagCode, offset: usize, message: impl Into<String>) {
        self.push(Severity::Error, code, offset, message);
    }

    pub fn warn(&mut self, code: DiagCode, offset: usize, message: impl Into<String>) {
        self.push(Severity::Warning, code, offset, message);
    }

    pub fn finish(mut self) -> Vec<Diagnostic> {
        self.items.sort_by_key(|d| d.offset);
        self.items
    }
}

/// Lossy UTF-8 decode with `\r\n` and lone `\r` folded to `\n`.
pub fn normalize(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    if s.contains('\r') {
        s.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        s.into_owned()
    }
}
