// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qnd_cli::config::{self, Overrides};
use qnd_cli::scenarios::SCENARIOS;
use qnd_cli::CliError;

#[derive(Parser)]
#[command(name = "qnd", version, about = "Pulsed transverse-coupling qubit readout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV, JSON and a manifest.
    Run {
        scenario: String,
        /// TOML config; the bundled config of the scenario when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default out/<scenario>)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// exact | moments
        #[arg(long)]
        engine: Option<String>,
        /// Allow frequencies and couplings outside the standard box.
        #[arg(long)]
        override_bounds: bool,
    },
    /// Check a config and list every invalid field.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        override_bounds: bool,
    },
    /// Print the available scenarios.
    ListScenarios,
    /// Print the bundled config of a scenario.
    ShowConfig { scenario: String },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run {
            scenario,
            config,
            out,
            seed,
            engine,
            override_bounds,
        } => {
            let raw = qnd_cli::load_raw(Some(&scenario), config.as_deref())?;
            let overrides = Overrides {
                scenario: Some(scenario),
                seed,
                engine,
                output_dir: out.map(|p| p.display().to_string()),
                override_bounds,
            };
            let done = qnd_cli::run(raw, &overrides)?;
            for f in &done.files {
                println!("{}", done.dir.join(f).display());
            }
            Ok(())
        }
        Command::Validate {
            config: path,
            override_bounds,
        } => {
            let raw = config::apply_overrides(
                config::load(&path)?,
                &Overrides {
                    override_bounds,
                    ..Default::default()
                },
            );
            config::validate(&raw)?;
            println!("{}: ok", path.display());
            Ok(())
        }
        Command::ListScenarios => {
            for (name, about) in SCENARIOS {
                println!("{name:<22}{about}");
            }
            Ok(())
        }
        Command::ShowConfig { scenario } => {
            match qnd_cli::bundled_config(&scenario) {
                Some(text) => print!("{text}"),
                None => {
                    return Err(qnd_cli::scenarios::RunError::Config(format!(
                        "unknown scenario `{scenario}`"
                    ))
                    .into())
                }
            }
            Ok(())
        }
    }
}
