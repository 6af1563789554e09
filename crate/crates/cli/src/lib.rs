// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Library side of the `qnd` command-line tool.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};

use config::{ConfigError, Overrides, RawConfig};
use output::{Manifest, OutputDir, OutputError};
use scenarios::RunError;

/// Exit code for bad configuration or usage.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for a failed simulation or unwritable output.
pub const EXIT_SIMULATION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Run(RunError::Config(_)) => EXIT_CONFIG,
            _ => EXIT_SIMULATION,
        }
    }
}

/// Default configuration shipped for each scenario.
pub fn bundled_config(scenario: &str) -> Option<&'static str> {
    Some(match scenario {
        "recurrence" => include_str!("../configs/recurrence.toml"),
        "fidelity-vs-tau" => include_str!("../configs/fidelity-vs-tau.toml"),
        "time-vs-g" => include_str!("../configs/time-vs-g.toml"),
        "da-distance" => include_str!("../configs/da-distance.toml"),
        "da-flip" => include_str!("../configs/da-flip.toml"),
        "transmon-phasespace" => include_str!("../configs/transmon-phasespace.toml"),
        "transmon-leakage" => include_str!("../configs/transmon-leakage.toml"),
        "loss-sustain" => include_str!("../configs/loss-sustain.toml"),
        "robustness" => include_str!("../configs/robustness.toml"),
        "optimize" => include_str!("../configs/optimize.toml"),
        _ => return None,
    })
}

/// Loads `path`, or the bundled config of `scenario` when no path is given.
pub fn load_raw(scenario: Option<&str>, path: Option<&Path>) -> Result<RawConfig, CliError> {
    match (path, scenario) {
        (Some(p), _) => Ok(config::load(p)?),
        (None, Some(s)) => match bundled_config(s) {
            Some(text) => Ok(config::parse(text)?),
            None => Err(RunError::Config(format!("unknown scenario `{s}`")).into()),
        },
        (None, None) => Err(RunError::Config("no scenario and no --config given".into()).into()),
    }
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

/// Validates, runs one scenario and writes its outputs plus a manifest.
pub fn run(raw: RawConfig, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    let raw = config::apply_overrides(raw, overrides);
    let cfg = config::validate(&raw)?;
    let name = cfg
        .scenario
        .clone()
        .ok_or_else(|| RunError::Config("scenario: required field is missing".into()))?;
    if !scenarios::SCENARIOS.iter().any(|(n, _)| *n == name) {
        return Err(RunError::Config(format!("scenario: unknown scenario `{name}`")).into());
    }
    let dir = if raw.output_dir.is_some() {
        cfg.output_dir.clone()
    } else {
        cfg.output_dir.join(&name)
    };
    let mut out = OutputDir::create(&dir)?;
    log::info!("running {name} into {}", dir.display());
    let summary = scenarios::run(&name, &cfg, &mut out)?;
    // the hash covers everything that affects results, not where they go
    let hashed = RawConfig {
        output_dir: None,
        ..raw
    };
    out.manifest(Manifest {
        scenario: name,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        core_version: qnd_core::VERSION.into(),
        config_sha256: output::config_hash(&hashed)?,
        seed: cfg.seed,
        engine: serde_json::to_value(cfg.engine)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        files: Vec::new(),
        created_unix: output::unix_now(),
    })?;
    Ok(RunOutcome {
        dir,
        files: out.files().to_vec(),
        summary,
    })
}
