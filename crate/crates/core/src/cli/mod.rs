//! Case files, built-in fixtures and the scenario runners behind the
//! `opfdp` command-line tool.

pub mod case;
pub mod fixtures;
pub mod run;

pub use case::{load_case, parse_regions, CaseFile, LoadedCase};
pub use fixtures::gen_fixture;
pub use run::{fmt12, run_release, run_sweep, sweep_csv, EpsilonChoice, ReleaseOutput, SweepRow};
