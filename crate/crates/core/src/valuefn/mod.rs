//! Black-box predictors and the background-substitution coalition value.
//!
//! The value of a coalition of groups for an explicand window `x*` is the
//! mean prediction over `K` hybrid windows: hybrid `k` takes `x*` at every
//! cell owned by a group in the coalition and background window `k`
//! everywhere else.

mod builtin;
mod context;
mod external;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use builtin::{builtin_predictor, Builtin};
pub use context::{CoalitionValueContext, DEFAULT_MAX_BATCH};
pub use external::{serve, spawn_external_predictor, ExternalPredictor, PROTOCOL_VERSION};

use crate::game::Coalition;
use crate::grouping::Grouping;
use crate::window::{WindowBatch, WindowShape};
use crate::{Error, Result};

/// A scalar-output model over windows.
pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;

    /// One output per window, in order.
    fn predict_batch(&self, windows: &WindowBatch) -> Result<Vec<f64>>;

    /// Predicts on hybrid windows. The default materialises the batch;
    /// predictors that never read cell values may skip that work.
    fn predict_hybrids(&self, batch: &HybridBatch<'_>) -> Result<Vec<f64>> {
        self.predict_batch(&batch.materialize())
    }

    /// Serial predictors must not be called concurrently.
    fn is_serial(&self) -> bool {
        false
    }

    /// Probability models must return values in `[0, 1]`.
    fn is_probability(&self) -> bool {
        false
    }
}

impl<P: Predictor + ?Sized> Predictor for Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn predict_batch(&self, windows: &WindowBatch) -> Result<Vec<f64>> {
        (**self).predict_batch(windows)
    }
    fn predict_hybrids(&self, batch: &HybridBatch<'_>) -> Result<Vec<f64>> {
        (**self).predict_hybrids(batch)
    }
    fn is_serial(&self) -> bool {
        (**self).is_serial()
    }
    fn is_probability(&self) -> bool {
        (**self).is_probability()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn predict_batch(&self, windows: &WindowBatch) -> Result<Vec<f64>> {
        (**self).predict_batch(windows)
    }
    fn predict_hybrids(&self, batch: &HybridBatch<'_>) -> Result<Vec<f64>> {
        (**self).predict_hybrids(batch)
    }
    fn is_serial(&self) -> bool {
        (**self).is_serial()
    }
    fn is_probability(&self) -> bool {
        (**self).is_probability()
    }
}

/// Hybrid windows for one coalition against a run of background windows,
/// described lazily.
pub struct HybridBatch<'a> {
    explicand: &'a [f64],
    background: &'a WindowBatch,
    range: std::ops::Range<usize>,
    cell_groups: &'a [usize],
    in_coalition: Vec<bool>,
}

impl<'a> HybridBatch<'a> {
    pub(crate) fn new(
        explicand: &'a [f64],
        background: &'a WindowBatch,
        range: std::ops::Range<usize>,
        grouping: &'a Grouping,
        coalition: &Coalition,
    ) -> Self {
        let in_coalition = (0..grouping.len()).map(|g| coalition.contains(g)).collect();
        Self {
            explicand,
            background,
            range,
            cell_groups: grouping.cell_groups(),
            in_coalition,
        }
    }

    pub fn shape(&self) -> WindowShape {
        self.background.shape()
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Cell `(instant, feature)` of hybrid `k`.
    pub fn cell(&self, k: usize, instant: usize, feature: usize) -> f64 {
        let c = self.shape().offset(instant, feature);
        if self.in_coalition[self.cell_groups[c]] {
            self.explicand[c]
        } else {
            self.background.window(self.range.start + k)[c]
        }
    }

    /// Writes the hybrids into one contiguous instant-major buffer.
    pub fn materialize(&self) -> WindowBatch {
        let cells = self.shape().cells();
        let mut data = Vec::with_capacity(self.len() * cells);
        for k in self.range.clone() {
            let bg = self.background.window(k);
            data.extend(self.cell_groups.iter().enumerate().map(|(c, &g)| {
                if self.in_coalition[g] {
                    self.explicand[c]
                } else {
                    bg[c]
                }
            }));
        }
        WindowBatch::new(self.shape(), data).expect("hybrid buffer matches its shape")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundSource {
    File,
    Sampled,
}

/// Reference windows substituted for cells outside a coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    windows: WindowBatch,
    source: BackgroundSource,
}

impl BackgroundSet {
    pub fn new(windows: WindowBatch, source: BackgroundSource) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InsufficientWindows {
                requested: 1,
                available: 0,
            });
        }
        Ok(Self { windows, source })
    }

    pub fn windows(&self) -> &WindowBatch {
        &self.windows
    }

    pub fn source(&self) -> BackgroundSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn shape(&self) -> WindowShape {
        self.windows.shape()
    }
}

/// Counts predictor work. Without an inner predictor it is a dry run that
/// answers zero for every window and never assembles hybrids.
pub struct CountingPredictor {
    inner: Option<Arc<dyn Predictor>>,
    windows: AtomicUsize,
    batches: AtomicUsize,
}

impl CountingPredictor {
    pub fn dry_run() -> Self {
        Self {
            inner: None,
            windows: AtomicUsize::new(0),
            batches: AtomicUsize::new(0),
        }
    }

    pub fn wrap(inner: Arc<dyn Predictor>) -> Self {
        Self {
            inner: Some(inner),
            ..Self::dry_run()
        }
    }

    /// Windows evaluated so far.
    pub fn calls(&self) -> usize {
        self.windows.load(Ordering::Relaxed)
    }

    pub fn batches(&self) -> usize {
        self.batches.load(Ordering::Relaxed)
    }

    fn record(&self, n: usize) {
        self.windows.fetch_add(n, Ordering::Relaxed);
        self.batches.fetch_add(1, Ordering::Relaxed);
    }
}

impl Predictor for CountingPredictor {
    fn name(&self) -> &str {
        "counting"
    }

    fn predict_batch(&self, windows: &WindowBatch) -> Result<Vec<f64>> {
        self.record(windows.len());
        match &self.inner {
            Some(p) => p.predict_batch(windows),
            None => Ok(vec![0.0; windows.len()]),
        }
    }

    fn predict_hybrids(&self, batch: &HybridBatch<'_>) -> Result<Vec<f64>> {
        self.record(batch.len());
        match &self.inner {
            Some(p) => p.predict_hybrids(batch),
            None => Ok(vec![0.0; batch.len()]),
        }
    }

    fn is_serial(&self) -> bool {
        self.inner.as_ref().is_some_and(|p| p.is_serial())
    }

    fn is_probability(&self) -> bool {
        self.inner.as_ref().is_some_and(|p| p.is_probability())
    }
}
