//! Batch experiment runner: JSON configurations in, CSV rows and a JSON summary out.
//!
//! Exit codes: 0 when every invariant assertion holds, 1 when one fails or a
//! numerical routine gives up, 2 for malformed input, 3 when a resource ceiling is hit.

pub mod config;
pub mod experiments;
pub mod presets;
pub mod report;

use std::fs;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use report::{Assertion, Cell, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Core(#[from] lindstab_core::Error),
    #[error("writing results: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lindstab_core::Error as E;
        match self {
            CliError::Schema { .. } | CliError::Field { .. } | CliError::UnknownPreset(_) => 2,
            CliError::Core(E::Resource { .. }) => 3,
            CliError::Core(E::Domain(_) | E::Validation(_) | E::Json(_) | E::Decode(_)) => 2,
            CliError::Core(_) | CliError::Output(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Runs one configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    use ExperimentKind as K;
    match cfg.experiment {
        K::Preset => {
            let name = cfg.preset.as_deref().unwrap_or_default();
            presets::run_preset(name, cfg.seed, cfg.restarts)
        }
        K::Spectrum => experiments::spectrum(cfg),
        K::Contraction => experiments::contraction(cfg),
        K::GrmFit => experiments::grm_fit(cfg),
        K::Stability => experiments::stability(cfg),
        K::LrVerify => experiments::lr_verify(cfg),
        K::LocalizationVerify => experiments::localization_verify(cfg),
        K::Ltqo => experiments::ltqo(cfg),
        K::Correlations => experiments::correlations(cfg),
        K::Glauber => experiments::glauber(cfg),
    }
}

/// Writes `<name>.csv` (or `<name>.json`) and `<name>.summary.json` into `dir`.
pub fn write_artifacts(report: &Report, inputs: &Value, dir: &Path, format: Format) -> Result<()> {
    let io = |e: std::io::Error| CliError::Output(e.to_string());
    fs::create_dir_all(dir).map_err(io)?;
    match format {
        Format::Csv => {
            let csv = report.to_csv().map_err(|e| CliError::Output(e.to_string()))?;
            fs::write(dir.join(format!("{}.csv", report.name)), csv).map_err(io)?;
        }
        Format::Json => {
            let text = serde_json::to_vec_pretty(&report.table_json()).map_err(|e| CliError::Output(e.to_string()))?;
            fs::write(dir.join(format!("{}.json", report.name)), text).map_err(io)?;
        }
    }
    let summary = serde_json::to_vec_pretty(&report.summary_json(inputs)).map_err(|e| CliError::Output(e.to_string()))?;
    fs::write(dir.join(format!("{}.summary.json", report.name)), summary).map_err(io)
}
