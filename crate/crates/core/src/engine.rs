//! Per-window explanation driver.
//!
//! Binds a grouping, a background set and a predictor into a coalition game
//! for every explicand window and solves it exactly or by stratified sampling.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::{
    allocate_strata, exact_shapley_with_cap, sampled_shapley, Coalition, ShapleyVector, DEFAULT_EXACT_CAP,
};
use crate::grouping::Grouping;
use crate::valuefn::{BackgroundSet, CoalitionValueContext, CountingPredictor, Predictor};
use crate::window::WindowSet;
use crate::{Error, Result};

pub use crate::valuefn::DEFAULT_MAX_BATCH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    #[serde(alias = "approx")]
    Approximate,
}

/// Coalitions drawn per group when no budget is given.
pub const BUDGET_PER_GROUP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainOptions {
    pub method: Method,
    /// Coalitions per group for the approximate method; defaults to
    /// `20 · |G|`.
    pub budget: Option<usize>,
    pub seed: u64,
    pub exact_cap: usize,
    pub max_batch: usize,
    /// Explain windows on a thread pool when the predictor allows it.
    pub parallel: bool,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        Self {
            method: Method::Approximate,
            budget: None,
            seed: 0,
            exact_cap: DEFAULT_EXACT_CAP,
            max_batch: DEFAULT_MAX_BATCH,
            parallel: true,
        }
    }
}

impl ExplainOptions {
    pub fn exact() -> Self {
        Self {
            method: Method::Exact,
            ..Self::default()
        }
    }

    pub fn approximate(budget: Option<usize>, seed: u64) -> Self {
        Self {
            method: Method::Approximate,
            budget,
            seed,
            ..Self::default()
        }
    }

    pub fn effective_budget(&self, groups: usize) -> Option<usize> {
        match self.method {
            Method::Exact => None,
            Method::Approximate => Some(self.budget.unwrap_or(BUDGET_PER_GROUP * groups)),
        }
    }
}

pub struct ExplainRequest<'a> {
    pub windows: &'a WindowSet,
    pub grouping: &'a Grouping,
    pub background: &'a BackgroundSet,
    pub predictor: &'a dyn Predictor,
    pub options: ExplainOptions,
}

/// Attributions for one window, aligned with the grouping order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionFrame {
    pub origin: usize,
    /// Value of the grand coalition, i.e. the model output on the window.
    pub prediction: f64,
    /// Value of the empty coalition: mean output over the background.
    pub baseline: f64,
    pub attributions: Vec<f64>,
}

impl ExplainRequest<'_> {
    fn validate(&self) -> Result<()> {
        let shape = self.grouping.shape();
        if self.windows.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: format!("windows of {shape}"),
                found: format!("windows of {}", self.windows.shape()),
            });
        }
        let groups = self.grouping.len();
        match self.options.method {
            Method::Exact if groups > self.options.exact_cap => Err(Error::ExactMethodInfeasible {
                groups,
                cap: self.options.exact_cap,
            }),
            Method::Approximate => {
                let budget = self.options.effective_budget(groups).expect("approximate");
                if budget < groups {
                    return Err(Error::InvalidBudget { budget, players: groups });
                }
                Ok(())
            }
            Method::Exact => Ok(()),
        }
    }

    fn context<'a>(&'a self, explicand: &'a [f64]) -> Result<CoalitionValueContext<'a>> {
        Ok(
            CoalitionValueContext::new(explicand, self.background, self.grouping, self.predictor)?
                .with_max_batch(self.options.max_batch),
        )
    }

    fn baseline(&self, explicand: &[f64]) -> Result<f64> {
        self.context(explicand)?
            .coalition_value(&Coalition::empty(self.grouping.len()))
    }

    fn solve(&self, index: usize, baseline: f64) -> Result<AttributionFrame> {
        let explicand = self.windows.window(index);
        let origin = self.windows.origins[index];
        let groups = self.grouping.len();
        let ctx = self
            .context(explicand)?
            .with_cached(Coalition::empty(groups), baseline);
        let prediction = ctx.coalition_value(&Coalition::grand(groups))?;
        let phi: ShapleyVector = match self.options.method {
            Method::Exact => exact_shapley_with_cap(&ctx, self.options.exact_cap)?,
            Method::Approximate => {
                let budget = self.options.effective_budget(groups).expect("approximate");
                let plan = allocate_strata(budget, groups)?;
                sampled_shapley(&ctx, &plan, self.options.seed ^ origin as u64)?
            }
        };
        Ok(AttributionFrame {
            origin,
            prediction,
            baseline,
            attributions: phi.values,
        })
    }
}

/// Explains the window at `index` of the request.
pub fn explain_window(req: &ExplainRequest<'_>, index: usize) -> Result<AttributionFrame> {
    req.validate()?;
    if index >= req.windows.len() {
        return Err(Error::InvalidDimensions(format!(
            "window {index} of {}",
            req.windows.len()
        )));
    }
    let wrap = |e| Error::Window {
        origin: req.windows.origins[index],
        source: Box::new(e),
    };
    let baseline = req.baseline(req.windows.window(index)).map_err(wrap)?;
    req.solve(index, baseline).map_err(wrap)
}

/// Explains every window of the request, in order.
///
/// The baseline is computed once for the whole batch. Window `i` samples with
/// seed `seed ^ origin_i`, so results do not depend on scheduling.
pub fn explain_batch(req: &ExplainRequest<'_>) -> Result<Vec<AttributionFrame>> {
    req.validate()?;
    if req.windows.is_empty() {
        return Ok(Vec::new());
    }
    let baseline = req.baseline(req.windows.window(0)).map_err(|e| Error::Window {
        origin: req.windows.origins[0],
        source: Box::new(e),
    })?;
    let run = |i: usize| {
        req.solve(i, baseline).map_err(|e| Error::Window {
            origin: req.windows.origins[i],
            source: Box::new(e),
        })
    };
    let results: Vec<Result<AttributionFrame>> = if req.options.parallel && !req.predictor.is_serial() {
        (0..req.windows.len()).into_par_iter().map(run).collect()
    } else {
        (0..req.windows.len()).map(run).collect()
    };
    results.into_iter().collect()
}

/// Number of windows the request would submit to its predictor, measured by
/// a dry run against a counting predictor.
pub fn count_predictor_calls(req: &ExplainRequest<'_>) -> Result<usize> {
    let counter = CountingPredictor::dry_run();
    let dry = ExplainRequest {
        windows: req.windows,
        grouping: req.grouping,
        background: req.background,
        predictor: &counter,
        options: req.options.clone(),
    };
    explain_batch(&dry)?;
    Ok(counter.calls())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainMeta {
    pub method: Method,
    pub budget: Option<usize>,
    pub seed: u64,
    #[serde(rename = "K")]
    pub background_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor_calls: Option<usize>,
}

/// The results file: group names, frames and run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramesDocument {
    pub grouping: Vec<String>,
    pub frames: Vec<AttributionFrame>,
    pub meta: ExplainMeta,
}

impl FramesDocument {
    pub fn load(path: &Path) -> Result<Self> {
        crate::pipeline::io::read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::pipeline::io::write_json(path, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuefn::{builtin_predictor, BackgroundSource};
    use crate::window::{WindowBatch, WindowShape};
    use serde_json::json;

    fn set(shape: WindowShape, windows: &[Vec<f64>]) -> WindowSet {
        let batch = WindowBatch::from_windows(shape, windows.iter().map(|w| w.as_slice())).unwrap();
        let n = windows.len();
        WindowSet::new(batch, vec![0; n], (0..n).map(|i| 100 + i).collect(), 1).unwrap()
    }

    fn background(shape: WindowShape, k: usize) -> BackgroundSet {
        let data: Vec<f64> = (0..k * shape.cells()).map(|i| ((i * 7) % 5) as f64 * 0.25).collect();
        BackgroundSet::new(WindowBatch::new(shape, data).unwrap(), BackgroundSource::File).unwrap()
    }

    #[test]
    fn constant_predictor_gives_zero() {
        let shape = WindowShape::new(3, 2);
        let windows = set(shape, &[vec![1.0; 6]]);
        let bg = background(shape, 4);
        let g = Grouping::temporal(3, 2).unwrap();
        let p = builtin_predictor("constant", &json!({"c": 0.4})).unwrap();
        for options in [ExplainOptions::exact(), ExplainOptions::approximate(None, 1)] {
            let req = ExplainRequest { windows: &windows, grouping: &g, background: &bg, predictor: p.as_ref(), options };
            let f = explain_window(&req, 0).unwrap();
            assert!(f.attributions.iter().all(|&a| a == 0.0));
            assert_eq!(f.prediction, f.baseline);
            assert_eq!(f.origin, 100);
        }
    }

    #[test]
    fn linear_closed_form() {
        let shape = WindowShape::new(2, 3);
        let x = vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let windows = set(shape, &[x.clone()]);
        let bg = background(shape, 5);
        let weights = [0.5, 1.0, -1.0, 2.0, 0.0, 0.25];
        let p = builtin_predictor("linear", &json!({"weights": weights, "bias": 0.3})).unwrap();
        let g = Grouping::feature(2, 3).unwrap();
        let req = ExplainRequest { windows: &windows, grouping: &g, background: &bg, predictor: p.as_ref(), options: ExplainOptions::exact() };
        let f = explain_window(&req, 0).unwrap();
        for feat in 0..3 {
            let expected: f64 = (0..2)
                .map(|t| {
                    let c = shape.offset(t, feat);
                    let mean = bg.windows().windows().map(|w| w[c]).sum::<f64>() / 5.0;
                    weights[c] * (x[c] - mean)
                })
                .sum();
            assert!((f.attributions[feat] - expected).abs() < 1e-12);
        }
        let total: f64 = f.attributions.iter().sum();
        assert!((total - (f.prediction - f.baseline)).abs() < 1e-12);
    }

    #[test]
    fn batch_order_determinism_and_empty() {
        let shape = WindowShape::new(2, 2);
        let w: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0, -(i as f64), 2.0]).collect();
        let windows = set(shape, &w);
        let bg = background(shape, 3);
        let g = Grouping::feature(2, 2).unwrap();
        let p = builtin_predictor("logistic-sum", &json!({"weight": 0.3})).unwrap();
        let req = ExplainRequest {
            windows: &windows,
            grouping: &g,
            background: &bg,
            predictor: p.as_ref(),
            options: ExplainOptions::approximate(Some(4), 5),
        };
        let a = explain_batch(&req).unwrap();
        assert_eq!(a, explain_batch(&req).unwrap());
        assert_eq!(a.iter().map(|f| f.origin).collect::<Vec<_>>(), windows.origins);
        for (i, f) in a.iter().enumerate() {
            assert_eq!(*f, explain_window(&req, i).unwrap());
        }

        let empty = windows.select(&[]);
        let req = ExplainRequest { windows: &empty, ..req };
        assert!(explain_batch(&req).unwrap().is_empty());
    }

    #[test]
    fn request_validation() {
        let shape = WindowShape::new(1, 25);
        let windows = set(shape, &[vec![0.0; 25]]);
        let bg = background(shape, 1);
        let g = Grouping::feature(1, 25).unwrap();
        let p = builtin_predictor("linear", &json!({})).unwrap();
        let req = ExplainRequest { windows: &windows, grouping: &g, background: &bg, predictor: p.as_ref(), options: ExplainOptions::exact() };
        assert!(matches!(explain_batch(&req), Err(Error::ExactMethodInfeasible { groups: 25, cap: 20 })));
        let req = ExplainRequest { options: ExplainOptions::approximate(Some(10), 0), ..req };
        assert!(matches!(explain_batch(&req), Err(Error::InvalidBudget { .. })));
        let g = Grouping::feature(1, 24).unwrap();
        let req = ExplainRequest { grouping: &g, ..req };
        assert!(matches!(explain_batch(&req), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn call_count_for_exact() {
        let shape = WindowShape::new(2, 6);
        let windows = set(shape, &[vec![1.0; 12]]);
        let bg = background(shape, 40);
        let g = Grouping::feature(2, 6).unwrap();
        let p = builtin_predictor("linear", &json!({})).unwrap();
        let req = ExplainRequest { windows: &windows, grouping: &g, background: &bg, predictor: p.as_ref(), options: ExplainOptions::exact() };
        assert_eq!(count_predictor_calls(&req).unwrap(), 64 * 40);
    }
}
