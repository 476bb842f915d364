//! Lexing, preprocessing and parsing of RTL modules and SVA properties.

pub mod diag;
pub mod expr;
pub mod lexer;
pub mod module;
pub mod preprocess;
pub mod property;

pub use diag::{normalize, DiagCode, Diagnostic, Severity};
pub use expr::{is_reserved, reserved_words};
pub use module::{parse_file, parse_file_bytes, parse_module, parse_module_named, FileParse, ModuleParse, SourceMap, StmtSite};
pub use preprocess::{preprocess, preprocess_in_place, PreprocessError, Preprocessed};
pub use property::{parse_properties, parse_properties_bytes, PropertyParse, UnitOutcome};
