//! `shats`: preprocess time series, explain predictions with grouped
//! Shapley values, rank sources and draw heatmaps.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use shats_core::heatmap::OutputKind;
use shats_core::{Error, ShareConvention};

use crate::commands::HeatmapArgs;
use crate::config::ConfigArgs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl CliError {
    /// 2 config, 3 data, 4 predictor, 5 internal.
    fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Config(_) => return 2,
            CliError::SelfTest(_) => return 5,
            CliError::Core(e) => e.root(),
        };
        match core {
            Error::InvalidBudget { .. }
            | Error::ExactMethodInfeasible { .. }
            | Error::PlayerCountExceedsExactCap { .. }
            | Error::InvalidPartition(_)
            | Error::IncompleteFeatureMap(_)
            | Error::UnknownColumn(_)
            | Error::UnknownPredictor(_)
            | Error::BadParams(_)
            | Error::SegmentTooShort { .. }
            | Error::InvalidSplit(_)
            | Error::InvalidHeatmap(_)
            | Error::UnknownTruthName(_) => 2,
            Error::PredictorFailure { .. }
            | Error::SpawnFailure(_)
            | Error::ProtocolViolation(_)
            | Error::Timeout(_) => 4,
            Error::StratumExhausted { .. } | Error::PlanMismatch { .. } | Error::TooManyPlayers { .. } => 5,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "shats", version, about = "Grouped Shapley explanations for time-series models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Absolute,
    Raw,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Csv,
    Svg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split, encode and window a CSV table.
    Preprocess(ConfigArgs),
    /// Compute grouped Shapley values for stored windows.
    Explain(ConfigArgs),
    /// Rank groups by mean attribution share per event.
    Rank {
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON file `{"events": [{"name", "first_origin", "last_origin", "truth"?}]}`.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "absolute")]
        convention: ConventionArg,
    },
    /// Render frames as an SVG or CSV heatmap.
    Heatmap {
        #[command(flatten)]
        config: ConfigArgs,
        /// Defaults to csv for `.csv` outputs, svg otherwise.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Fixed color scale half-width; automatic when absent.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long, default_value_t = 16)]
        cell_size: u32,
    },
    /// Run the axiom and oracle suites.
    Selftest,
    /// Serve a builtin predictor over the external-process protocol.
    #[command(hide = true)]
    Serve {
        #[arg(long)]
        predictor: String,
        #[arg(long)]
        predictor_params: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Preprocess(args) => commands::preprocess(&args.resolve()?),
        Command::Explain(args) => commands::explain(&args.resolve()?),
        Command::Rank { config, events, convention } => {
            let convention = match convention {
                ConventionArg::Absolute => ShareConvention::Absolute,
                ConventionArg::Raw => ShareConvention::Raw,
            };
            commands::rank(&config.resolve()?, events.as_deref(), convention)
        }
        Command::Heatmap { config, kind, threshold, scale, cell_size } => commands::heatmap(
            &config.resolve()?,
            &HeatmapArgs {
                kind: kind.map(|k| match k {
                    KindArg::Csv => OutputKind::Csv,
                    KindArg::Svg => OutputKind::Svg,
                }),
                threshold,
                scale,
                cell_size,
            },
        ),
        Command::Selftest => commands::selftest(),
        Command::Serve { predictor, predictor_params } => commands::serve(&predictor, predictor_params.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
