//! JSON run configuration plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use shats_core::engine::Method;
use shats_core::grouping::Level;
use shats_core::pipeline::{EncodeOptions, Normalization, PipelineConfig, SplitSpec};
use shats_core::GroupingStrategy;

use crate::CliError;

pub const DEFAULT_SEGMENT_LENGTH: usize = 1000;
pub const DEFAULT_PADDING: usize = 50;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.64;
pub const DEFAULT_VAL_FRACTION: f64 = 0.16;
pub const DEFAULT_WINDOW_SIZE: usize = 10;
pub const DEFAULT_BACKGROUND_SIZE: usize = 500;
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub segment_length: Option<usize>,
    pub train_fraction: Option<f64>,
    pub val_fraction: Option<f64>,
    pub padding: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupingConfig {
    pub strategy: Option<GroupingStrategy>,
    pub level: Option<Level>,
    pub group_map: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundConfig {
    /// Stem of a stored window set (`<stem>.bin` + `<stem>.json`).
    pub path: Option<PathBuf>,
    pub size: Option<usize>,
    pub stratify: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub builtin: Option<String>,
    pub params: Option<Value>,
    pub exec: Option<Vec<String>>,
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsConfig {
    pub frames: Option<PathBuf>,
    pub ranking: Option<PathBuf>,
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    #[default]
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub split: SplitConfig,
    pub window_size: Option<usize>,
    pub stride: Option<usize>,
    pub normalization: Option<Normalization>,
    pub unseen_indicator: Option<bool>,
    pub windows_dir: Option<PathBuf>,
    pub explain_split: Option<SplitName>,
    pub grouping: GroupingConfig,
    pub background: BackgroundConfig,
    pub predictor: PredictorConfig,
    pub method: Option<Method>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub exact_cap: Option<usize>,
    pub max_batch: Option<usize>,
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Temporal,
    Feature,
    Multifeature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Source,
    Unit,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Standard,
    Minmax,
}

/// Flag twins of every config field. Flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub segment_length: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub padding: Option<usize>,
    #[arg(long)]
    pub window_size: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,
    #[arg(long)]
    pub unseen_indicator: Option<bool>,
    #[arg(long)]
    pub windows_dir: Option<PathBuf>,
    /// Which stored split to explain.
    #[arg(long, value_enum)]
    pub split: Option<SplitName>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    #[arg(long)]
    pub group_map: Option<PathBuf>,
    #[arg(long)]
    pub background_path: Option<PathBuf>,
    #[arg(long)]
    pub background_size: Option<usize>,
    #[arg(long)]
    pub stratify: Option<bool>,
    /// Builtin predictor name.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Builtin predictor parameters as inline JSON.
    #[arg(long)]
    pub predictor_params: Option<String>,
    /// External predictor command line, split on whitespace.
    #[arg(long)]
    pub predictor_exec: Option<String>,
    #[arg(long)]
    pub predictor_timeout_ms: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub exact_cap: Option<usize>,
    #[arg(long)]
    pub max_batch: Option<usize>,
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

impl ConfigArgs {
    /// Loads the config file, if any, and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        let a = self.clone();
        set(&mut cfg.data, a.data);
        set(&mut cfg.schema, a.schema);
        set(&mut cfg.split.segment_length, a.segment_length);
        set(&mut cfg.split.train_fraction, a.train_fraction);
        set(&mut cfg.split.val_fraction, a.val_fraction);
        set(&mut cfg.split.padding, a.padding);
        set(&mut cfg.window_size, a.window_size);
        set(&mut cfg.stride, a.stride);
        set(
            &mut cfg.normalization,
            a.normalization.map(|n| match n {
                NormalizationArg::Standard => Normalization::Standard,
                NormalizationArg::Minmax => Normalization::Minmax,
            }),
        );
        set(&mut cfg.unseen_indicator, a.unseen_indicator);
        set(&mut cfg.windows_dir, a.windows_dir);
        set(&mut cfg.explain_split, a.split);
        set(
            &mut cfg.grouping.strategy,
            a.strategy.map(|s| match s {
                StrategyArg::Temporal => GroupingStrategy::Temporal,
                StrategyArg::Feature => GroupingStrategy::Feature,
                StrategyArg::Multifeature => GroupingStrategy::Multifeature,
            }),
        );
        set(
            &mut cfg.grouping.level,
            a.level.map(|l| match l {
                LevelArg::Source => Level::Source,
                LevelArg::Unit => Level::Unit,
                LevelArg::Custom => Level::Custom,
            }),
        );
        set(&mut cfg.grouping.group_map, a.group_map);
        if a.background_path.is_some() {
            cfg.background.size = None;
        }
        if a.background_size.is_some() {
            cfg.background.path = None;
        }
        set(&mut cfg.background.path, a.background_path);
        set(&mut cfg.background.size, a.background_size);
        set(&mut cfg.background.stratify, a.stratify);
        if a.predictor.is_some() {
            cfg.predictor.exec = None;
        }
        if a.predictor_exec.is_some() {
            cfg.predictor.builtin = None;
            cfg.predictor.params = None;
        }
        set(&mut cfg.predictor.builtin, a.predictor);
        if let Some(text) = a.predictor_params {
            let params = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("--predictor-params: {e}")))?;
            cfg.predictor.params = Some(params);
        }
        set(
            &mut cfg.predictor.exec,
            a.predictor_exec
                .map(|s| s.split_whitespace().map(str::to_owned).collect()),
        );
        set(&mut cfg.predictor.timeout_ms, a.predictor_timeout_ms);
        set(
            &mut cfg.method,
            a.method.map(|m| match m {
                MethodArg::Exact => Method::Exact,
                MethodArg::Approx => Method::Approximate,
            }),
        );
        set(&mut cfg.budget, a.budget);
        set(&mut cfg.seed, a.seed);
        set(&mut cfg.exact_cap, a.exact_cap);
        set(&mut cfg.max_batch, a.max_batch);
        set(&mut cfg.outputs.frames, a.frames);
        set(&mut cfg.outputs.ranking, a.ranking);
        set(&mut cfg.outputs.heatmap, a.heatmap);
        cfg.check_exclusive()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    fn check_exclusive(&self) -> Result<(), CliError> {
        if self.background.path.is_some() && self.background.size.is_some() {
            return Err(CliError::Config(
                "background: give either a path or a sample size, not both".into(),
            ));
        }
        if self.predictor.builtin.is_some() && self.predictor.exec.is_some() {
            return Err(CliError::Config(
                "predictor: give either a builtin or an exec command, not both".into(),
            ));
        }
        if self.predictor.params.is_some() && self.predictor.exec.is_some() {
            return Err(CliError::Config("predictor: params apply to builtins only".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn windows_dir(&self) -> PathBuf {
        self.windows_dir.clone().unwrap_or_else(|| PathBuf::from("windows"))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            split: SplitSpec {
                segment_length: self.split.segment_length.unwrap_or(DEFAULT_SEGMENT_LENGTH),
                train_fraction: self.split.train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION),
                val_fraction: self.split.val_fraction.unwrap_or(DEFAULT_VAL_FRACTION),
                padding: self.split.padding.unwrap_or(DEFAULT_PADDING),
            },
            window_size: self.window_size.unwrap_or(DEFAULT_WINDOW_SIZE),
            stride: self.stride.unwrap_or(1),
            encode: EncodeOptions {
                mode: self.normalization.unwrap_or_default(),
                unseen_indicator: self.unseen_indicator.unwrap_or(true),
            },
        }
    }

    pub fn required<'a>(&self, value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("missing {what} path")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"seed": 3, "budget": 80, "predictor": {"builtin": "linear"}, "background": {"size": 10}}"#,
        )
        .unwrap();
        let args = ConfigArgs {
            config: Some(path),
            seed: Some(9),
            predictor_exec: Some("python3 model.py".into()),
            background_path: Some("bg/train".into()),
            ..ConfigArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.seed(), 9);
        assert_eq!(cfg.budget, Some(80));
        assert_eq!(cfg.predictor.builtin, None);
        assert_eq!(cfg.predictor.exec.as_deref(), Some(&["python3".to_string(), "model.py".into()][..]));
        assert_eq!(cfg.background.size, None);
    }

    #[test]
    fn conflicting_sources_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"predictor": {"builtin": "linear", "exec": ["x"]}}"#).unwrap();
        let args = ConfigArgs { config: Some(path.clone()), ..ConfigArgs::default() };
        assert!(matches!(args.resolve(), Err(CliError::Config(_))));
        std::fs::write(&path, r#"{"bogus": 1}"#).unwrap();
        assert!(matches!(args.resolve(), Err(CliError::Config(_))));
    }
}
