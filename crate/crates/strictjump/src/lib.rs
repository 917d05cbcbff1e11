//! Std companion of [`strictjump_core`]: measure-spec JSON, Monte Carlo
//! experiments with reports, path export and the `strictjump` command line.

pub mod cli;
pub mod manifest;
pub mod montecarlo;
pub mod path_csv;
pub mod report;
pub mod spec_io;

pub use strictjump_core as core;

pub use manifest::RunManifest;
pub use montecarlo::{McConfig, Observable};
pub use report::ExperimentReport;
