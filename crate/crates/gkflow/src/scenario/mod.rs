//! Config-driven experiment runner behind the command-line interface.

pub mod catalog;
pub mod config;
pub mod run;

pub use catalog::{explain, list, lookup, Entry, EntryKind, CATALOG};
pub use config::{Check, FlowSpec, Recipe, Scenario, Tolerances, KEYS};
pub use run::{output_root, run_scenario, run_scenario_file, CheckResult, Outcome, RunReport, OUT_ENV};
