//! Synthetic RTL condition blocks paired with mechanically derived SVA
//! properties, plus the machinery to grade assertion sets against them.

pub mod hdl;
pub mod parse;
pub mod logic;
pub mod identifiers;
pub mod assertsynth;
pub mod dynsem;
pub mod synthgen;
pub mod metrics;

pub use assertsynth::{PathAssertion, PathKind, SynthOptions};
pub use dynsem::{MutOp, StimulusPlan, Trace, ALL_OPS};
pub use hdl::{Expr, Property, RtlModule, Span};
pub use identifiers::{CleanOptions, CleanSummary, CorruptMode, IdentifierPool};
pub use metrics::{CoverageReport, EvalReport, OverlapReport, PropertyVerdict, Reason, SyntaxReport};
pub use parse::{DiagCode, Diagnostic};
pub use synthgen::{Category, DatasetSample, GenConfig, SampleMeta};
