//! Config-driven experiment grid: instances x horizons x policies x seeds.
//!
//! Configs are TOML files tagged with [`CONFIG_FORMAT`]; see
//! [`ExperimentConfig`] for the layout. A handful of presets ship with the
//! crate.

mod config;
mod report;
mod runner;

use std::path::PathBuf;

use crate::error::{Error, Result};

pub use config::{
    BatchMode, CostBasis, ExperimentConfig, GapSpec, Generator, HoltWintersBatch, InstanceEntry, ParamSource,
    SlopeSpec, CONFIG_FORMAT,
};
pub use report::{CellReport, GapSummary, PolicyInfo, PolicyResult, Provenance, Report, SlopeFit};
pub use runner::run_experiment;

/// Built-in configs as `(name, toml)`.
pub const PRESETS: [(&str, &str); 5] = [
    ("synthetic-fixed-v", include_str!("../../presets/synthetic-fixed-v.toml")),
    ("synthetic-fixed-a", include_str!("../../presets/synthetic-fixed-a.toml")),
    ("lower-bound-slope", include_str!("../../presets/lower-bound-slope.toml")),
    ("perp-robustness", include_str!("../../presets/perp-robustness.toml")),
    ("real-data-gap", include_str!("../../presets/real-data-gap.toml")),
];

/// Directory that relative paths inside presets resolve against.
pub fn preset_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/presets"))
}

/// Parse a built-in preset; returns the config and its source text.
pub fn preset(name: &str) -> Result<(ExperimentConfig, &'static str)> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        Error::config("preset", format!("unknown preset `{name}`; known: {}", known.join(", ")))
    })?;
    let mut cfg = ExperimentConfig::from_toml_str(text)?;
    cfg.base_dir = preset_dir();
    Ok((cfg, text))
}
