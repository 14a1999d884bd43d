//! Batch front end: reads an equation spec, runs one command and writes
//! `report.json` and `results.csv`.

pub mod run;
pub mod spec;

pub use run::{execute, run, Command, Outcome, Overrides, RunConfig};
pub use spec::{load_spec, write_spec, EquationSpec, SpecError};
