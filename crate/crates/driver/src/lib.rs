//! Driver for the BeePL toolchain: the `beeplc` command line, a generator of
//! well-typed programs with a shrinker, and the self-test suites.

pub mod cli;
pub mod cve;
pub mod diff;
pub mod gen;
pub mod report;
pub mod shrink;
pub mod suite;

pub use cve::run_cve_corpus;
pub use diff::{generated_cases, resolve_cc, run_differential, DiffCase};
pub use gen::{generate_well_typed, Features, GenConfig, GenError};
pub use report::{Outcome, Reproducer, RunReport, SuiteReport};
pub use shrink::{shrink, Shrunk};
pub use suite::{run_property_suite, run_property_suite_with, SuiteOptions};
