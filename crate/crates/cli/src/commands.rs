use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use shats_core::analysis::{localization_score, rank_sources};
use shats_core::engine::{explain_batch, ExplainMeta, ExplainOptions, ExplainRequest, FramesDocument, Method};
use shats_core::grouping::{GroupMap, Level};
use shats_core::heatmap::{render, ColorScale, HeatmapSpec, OutputKind};
use shats_core::oracle::{axiom_suite, oracle_suite, saturation_suite};
use shats_core::pipeline::{self, io, read_csv, sample_background, Schema};
use shats_core::valuefn::{
    builtin_predictor, spawn_external_predictor, BackgroundSource, CountingPredictor, DEFAULT_MAX_BATCH,
};
use shats_core::{
    AttributionFrame, BackgroundSet, Grouping, GroupingStrategy, Predictor, RankingReport, ShareConvention,
};

use crate::config::{RunConfig, DEFAULT_BACKGROUND_SIZE, DEFAULT_TIMEOUT_MS};
use crate::CliError;

pub fn preprocess(cfg: &RunConfig) -> Result<(), CliError> {
    let data = cfg.required(&cfg.data, "data")?;
    let schema = cfg.schema.as_deref().map(Schema::load).transpose()?;
    let table = read_csv(data, schema.as_ref())?;
    let out = pipeline::preprocess(&table, &cfg.pipeline())?;

    // Nothing is written until every stage has succeeded.
    let dir = cfg.windows_dir();
    io::write_window_set(&dir, "train", &out.train)?;
    io::write_window_set(&dir, "val", &out.val)?;
    io::write_window_set(&dir, "test", &out.test)?;
    io::write_report(&dir, &out.report)?;
    io::write_json(&dir.join("split.json"), &out.split)?;

    println!("rows: {}", table.rows());
    let dropped = if out.report.dropped_columns.is_empty() {
        "none".to_string()
    } else {
        out.report.dropped_columns.join(", ")
    };
    println!("dropped: {dropped}");
    println!("features: {}", out.report.encoded_feature_count);
    println!(
        "windows: train {}, val {}, test {}",
        out.train.len(),
        out.val.len(),
        out.test.len()
    );
    Ok(())
}

fn window_stem(path: &Path) -> (PathBuf, String) {
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    (dir, name)
}

fn build_grouping(cfg: &RunConfig, report: &pipeline::EncodingReport, window_size: usize) -> Result<Grouping, CliError> {
    let g = match cfg.grouping.strategy.unwrap_or(GroupingStrategy::Feature) {
        GroupingStrategy::Temporal => Grouping::temporal(window_size, report.encoded_feature_count)?,
        GroupingStrategy::Feature => Grouping::feature_named(window_size, &report.feature_names)?,
        GroupingStrategy::Multifeature => {
            let mut map = report.feature_map.clone();
            if let Some(schema) = &cfg.schema {
                map = map.with_units(&Schema::load(schema)?.units);
            }
            match &cfg.grouping.group_map {
                Some(path) => Grouping::from_group_map(window_size, &map, &GroupMap::load(path)?)?,
                None => Grouping::multifeature(window_size, &map, cfg.grouping.level.unwrap_or(Level::Source))?,
            }
        }
    };
    Ok(g)
}

fn build_predictor(cfg: &RunConfig) -> Result<Box<dyn Predictor>, CliError> {
    let p = &cfg.predictor;
    match (&p.builtin, &p.exec) {
        (Some(name), None) => {
            let params = p.params.clone().unwrap_or(serde_json::Value::Object(Default::default()));
            Ok(builtin_predictor(name, &params)?)
        }
        (None, Some(cmd)) => Ok(Box::new(spawn_external_predictor(
            cmd,
            p.timeout_ms.unwrap_or(DEFAULT_TIMEOUT_MS),
        )?)),
        (None, None) => Err(CliError::Config("no predictor configured".into())),
        (Some(_), Some(_)) => Err(CliError::Config("predictor: builtin and exec are exclusive".into())),
    }
}

pub fn explain(cfg: &RunConfig) -> Result<(), CliError> {
    let frames_path = cfg.required(&cfg.outputs.frames, "frames output")?;
    let dir = cfg.windows_dir();
    let report = io::read_report(&dir)?;
    let split = cfg.explain_split.unwrap_or_default();
    let windows = io::read_window_set(&dir, split.as_str())?;
    let seed = cfg.seed();
    let background = match &cfg.background.path {
        Some(path) => {
            let (bdir, name) = window_stem(path);
            BackgroundSet::new(io::read_window_set(&bdir, &name)?.batch, BackgroundSource::File)?
        }
        None => {
            let train = io::read_window_set(&dir, "train")?;
            sample_background(
                &train,
                cfg.background.size.unwrap_or(DEFAULT_BACKGROUND_SIZE),
                cfg.background.stratify.unwrap_or(true),
                seed,
            )?
        }
    };
    let grouping = build_grouping(cfg, &report, windows.shape().instants)?;
    let predictor: Arc<dyn Predictor> = Arc::from(build_predictor(cfg)?);
    let counter = CountingPredictor::wrap(predictor);

    let defaults = ExplainOptions::default();
    let options = ExplainOptions {
        method: cfg.method.unwrap_or(defaults.method),
        budget: cfg.budget,
        seed,
        exact_cap: cfg.exact_cap.unwrap_or(defaults.exact_cap),
        max_batch: cfg.max_batch.unwrap_or(DEFAULT_MAX_BATCH),
        parallel: true,
    };
    let budget = options.effective_budget(grouping.len());
    let req = ExplainRequest {
        windows: &windows,
        grouping: &grouping,
        background: &background,
        predictor: &counter,
        options,
    };
    let frames = explain_batch(&req)?;
    let method = req.options.method;
    let doc = FramesDocument {
        grouping: grouping.names().to_vec(),
        frames,
        meta: ExplainMeta {
            method,
            budget,
            seed,
            background_size: background.len(),
            predictor_calls: Some(counter.calls()),
        },
    };
    doc.save(frames_path)?;

    let method = match method {
        Method::Exact => "exact".to_string(),
        Method::Approximate => format!("approximate, budget {}", budget.unwrap_or_default()),
    };
    println!(
        "explained {} windows over {} groups ({method}, seed {seed}, K {})",
        doc.frames.len(),
        grouping.len(),
        background.len()
    );
    println!("predictor calls: {}", counter.calls());
    Ok(())
}

/// A caller-defined event: the frames whose origins fall in
/// `first_origin..=last_origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub name: String,
    pub first_origin: usize,
    pub last_origin: usize,
    #[serde(default)]
    pub truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsFile {
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRanking {
    pub name: String,
    pub first_origin: usize,
    pub last_origin: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    #[serde(flatten)]
    pub report: RankingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub top1: f64,
    pub top3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDocument {
    pub events: Vec<EventRanking>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localization: Option<Localization>,
}

pub fn rank(
    cfg: &RunConfig,
    events: Option<&Path>,
    convention: ShareConvention,
) -> Result<(), CliError> {
    let doc = FramesDocument::load(cfg.required(&cfg.outputs.frames, "frames")?)?;
    let out = cfg.required(&cfg.outputs.ranking, "ranking output")?;
    let events = match events {
        Some(path) => io::read_json::<EventsFile>(path)?.events,
        None => {
            let first = doc.frames.first().map_or(0, |f| f.origin);
            let last = doc.frames.last().map_or(0, |f| f.origin);
            vec![Event { name: "all".into(), first_origin: first, last_origin: last, truth: None }]
        }
    };
    let mut ranked = Vec::with_capacity(events.len());
    for e in events {
        let frames: Vec<AttributionFrame> = doc
            .frames
            .iter()
            .filter(|f| (e.first_origin..=e.last_origin).contains(&f.origin))
            .cloned()
            .collect();
        let report = rank_sources(&frames, &doc.grouping, convention)?;
        ranked.push(EventRanking {
            name: e.name,
            first_origin: e.first_origin,
            last_origin: e.last_origin,
            truth: e.truth,
            report,
        });
    }
    let localization = if !ranked.is_empty() && ranked.iter().all(|e| e.truth.is_some()) {
        let reports: Vec<RankingReport> = ranked.iter().map(|e| e.report.clone()).collect();
        let truth: Vec<String> = ranked.iter().filter_map(|e| e.truth.clone()).collect();
        Some(Localization {
            top1: localization_score(&reports, &truth, 1)?,
            top3: localization_score(&reports, &truth, 3)?,
        })
    } else {
        None
    };
    for e in &ranked {
        let top = e.report.top();
        println!("{}: {} ({:.1}%)", e.name, top.name, 100.0 * top.share);
    }
    io::write_json(out, &RankingDocument { events: ranked, localization })?;
    Ok(())
}

pub struct HeatmapArgs {
    pub kind: Option<OutputKind>,
    pub threshold: f64,
    pub scale: Option<f64>,
    pub cell_size: u32,
}

pub fn heatmap(cfg: &RunConfig, args: &HeatmapArgs) -> Result<(), CliError> {
    let doc = FramesDocument::load(cfg.required(&cfg.outputs.frames, "frames")?)?;
    let out = cfg.required(&cfg.outputs.heatmap, "heatmap output")?;
    let kind = args.kind.unwrap_or_else(|| {
        if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            OutputKind::Csv
        } else {
            OutputKind::Svg
        }
    });
    let spec = HeatmapSpec {
        frames: &doc.frames,
        group_names: &doc.grouping,
        threshold: args.threshold,
        scale: args.scale.map_or(ColorScale::Auto, ColorScale::Fixed),
        cell_size: args.cell_size,
        kind,
    };
    let text = render(&spec)?;
    std::fs::write(out, text).map_err(|e| shats_core::Error::Io { path: out.to_path_buf(), source: e })?;
    Ok(())
}

pub fn selftest() -> Result<(), CliError> {
    let outcomes = [
        axiom_suite(200, 8, 0, 1e-9),
        oracle_suite(100, 6, 1_000, 1e-9),
        saturation_suite(50, 8, 5, 2_000, 1e-12),
    ];
    let mut failed = Vec::new();
    for o in &outcomes {
        let status = if o.passed() { "PASS" } else { "FAIL" };
        println!("{status} {} ({} cases)", o.name, o.cases);
        for f in o.failures.iter().take(5) {
            println!("  {f}");
        }
        if !o.passed() {
            failed.push(o.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelfTest(failed.join(", ")))
    }
}

pub fn serve(name: &str, params: Option<&str>) -> Result<(), CliError> {
    let params = match params {
        Some(text) => serde_json::from_str(text).map_err(|e| CliError::Config(format!("--predictor-params: {e}")))?,
        None => serde_json::Value::Object(Default::default()),
    };
    let predictor = builtin_predictor(name, &params)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    Ok(shats_core::valuefn::serve(predictor.as_ref(), name, stdin.lock(), stdout.lock())?)
}
