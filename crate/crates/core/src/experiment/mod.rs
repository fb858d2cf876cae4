//! Reproducible experiments: configuration, orchestration and file output.

mod config;
pub mod output;
mod run;
mod verify;

pub use config::{ExperimentConfig, Format, OutputSection, ScanMode, ScanSection, SolverSection};
pub use run::{
    cmd_fss, cmd_fss_with, cmd_scan, fit_report, CircleResult, DiagnosticsSummary, FssResult, GridResult, HlSource,
    RunManifest, RunOutput, RunSummary, ScanHl, SyntheticHl, TaskTiming,
};
pub use verify::{cmd_verify, CheckResult, VerifyOptions, VerifyReport};
