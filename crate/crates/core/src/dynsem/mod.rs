//! Simulation, property checking, mutation and contamination.

pub mod compile;
pub mod contaminate;
pub mod mutate;
pub mod prop;
pub mod sim;

pub use contaminate::{contaminate, ContaminateError};
pub use mutate::{mutate, site_count, MutOp, Mutant, ALL_OPS};
pub use prop::{eval_property, CompiledProperty, Layout, PropError, Verdict};
pub use sim::{simulate, simulate_design, Design, SimError, StimulusPlan, Trace};
