use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{BackgroundSet, HybridBatch, Predictor};
use crate::game::{Coalition, CoalitionGame};
use crate::grouping::Grouping;
use crate::summation::KahanSum;
use crate::{Error, Result};

/// Default cap on hybrid windows per predictor call.
pub const DEFAULT_MAX_BATCH: usize = 1024;

/// Coalition values for one explicand window, memoised by coalition.
pub struct CoalitionValueContext<'a> {
    explicand: &'a [f64],
    background: &'a BackgroundSet,
    grouping: &'a Grouping,
    predictor: &'a dyn Predictor,
    max_batch: usize,
    cache: Mutex<HashMap<Coalition, f64>>,
    batches: AtomicUsize,
}

impl<'a> CoalitionValueContext<'a> {
    pub fn new(
        explicand: &'a [f64],
        background: &'a BackgroundSet,
        grouping: &'a Grouping,
        predictor: &'a dyn Predictor,
    ) -> Result<Self> {
        let shape = grouping.shape();
        if background.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape.to_string(),
                found: format!("background windows of {}", background.shape()),
            });
        }
        if explicand.len() != shape.cells() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} cells", shape.cells()),
                found: format!("explicand of {} cells", explicand.len()),
            });
        }
        Ok(Self {
            explicand,
            background,
            grouping,
            predictor,
            max_batch: DEFAULT_MAX_BATCH,
            cache: Mutex::new(HashMap::new()),
            batches: AtomicUsize::new(0),
        })
    }

    /// Limits how many hybrid windows go into a single predictor call.
    pub fn with_max_batch(mut self, max_batch: usize) -> Self {
        self.max_batch = max_batch.max(1);
        self
    }

    /// Seeds the cache, e.g. with a baseline shared across explicands.
    pub fn with_cached(self, coalition: Coalition, value: f64) -> Self {
        self.cache.lock().unwrap().insert(coalition, value);
        self
    }

    pub fn grouping(&self) -> &Grouping {
        self.grouping
    }

    /// Predictor calls issued so far.
    pub fn batches(&self) -> usize {
        self.batches.load(Ordering::Relaxed)
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    /// Mean prediction over the hybrids of `coalition`.
    pub fn coalition_value(&self, coalition: &Coalition) -> Result<f64> {
        if coalition.player_count() != self.grouping.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("coalition over {} groups", self.grouping.len()),
                found: format!("coalition over {} players", coalition.player_count()),
            });
        }
        if let Some(&v) = self.cache.lock().unwrap().get(coalition) {
            return Ok(v);
        }

        let windows = self.background.windows();
        let k = windows.len();
        let mut acc = KahanSum::default();
        let mut start = 0;
        while start < k {
            let end = (start + self.max_batch).min(k);
            let batch = HybridBatch::new(self.explicand, windows, start..end, self.grouping, coalition);
            let index = self.batches.fetch_add(1, Ordering::Relaxed);
            let outputs = self
                .predictor
                .predict_hybrids(&batch)
                .map_err(|e| match e {
                    Error::PredictorFailure { message, .. } => Error::PredictorFailure { batch: index, message },
                    other => other,
                })?;
            check_outputs(&outputs, batch.len(), index, self.predictor.is_probability())?;
            outputs.iter().for_each(|&y| acc.add(y));
            start = end;
        }
        let value = acc.total() / k as f64;
        self.cache.lock().unwrap().insert(coalition.clone(), value);
        Ok(value)
    }
}

fn check_outputs(outputs: &[f64], expected: usize, batch: usize, probability: bool) -> Result<()> {
    if outputs.len() != expected {
        return Err(Error::PredictorFailure {
            batch,
            message: format!("returned {} outputs for {expected} windows", outputs.len()),
        });
    }
    if let Some(bad) = outputs.iter().find(|y| !y.is_finite()) {
        return Err(Error::PredictorFailure {
            batch,
            message: format!("non-finite output {bad}"),
        });
    }
    if probability {
        if let Some(bad) = outputs.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(Error::PredictorFailure {
                batch,
                message: format!("probability output {bad} outside [0, 1]"),
            });
        }
    }
    Ok(())
}

impl CoalitionGame for CoalitionValueContext<'_> {
    fn player_count(&self) -> usize {
        self.grouping.len()
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        self.coalition_value(coalition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuefn::{builtin_predictor, BackgroundSource, CountingPredictor};
    use crate::window::{WindowBatch, WindowShape};
    use serde_json::json;
    use std::sync::Arc;

    struct Broken(f64);

    impl Predictor for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn predict_batch(&self, w: &crate::WindowBatch) -> Result<Vec<f64>> {
            Ok(vec![self.0; w.len()])
        }
        fn is_probability(&self) -> bool {
            true
        }
    }

    fn background(shape: WindowShape, rows: &[Vec<f64>]) -> BackgroundSet {
        let batch = WindowBatch::from_windows(shape, rows.iter().map(|r| r.as_slice())).unwrap();
        BackgroundSet::new(batch, BackgroundSource::File).unwrap()
    }

    #[test]
    fn linear_single_hybrid() {
        let shape = WindowShape::new(1, 2);
        let bg = background(shape, &[vec![0.0, 0.0]]);
        let grouping = Grouping::feature(1, 2).unwrap();
        let model = builtin_predictor("linear", &json!({})).unwrap();
        let x = [1.0, 1.0];
        let ctx = CoalitionValueContext::new(&x, &bg, &grouping, model.as_ref()).unwrap();
        assert_eq!(ctx.coalition_value(&Coalition::from_members(2, [0])).unwrap(), 1.0);
        assert_eq!(ctx.coalition_value(&Coalition::grand(2)).unwrap(), 2.0);
        assert_eq!(ctx.coalition_value(&Coalition::empty(2)).unwrap(), 0.0);
    }

    #[test]
    fn constant_and_baseline() {
        let shape = WindowShape::new(2, 2);
        let bg = background(shape, &[vec![1.0; 4], vec![3.0; 4]]);
        let grouping = Grouping::temporal(2, 2).unwrap();
        let x = [10.0; 4];

        let constant = builtin_predictor("constant", &json!({"c": 0.7})).unwrap();
        let ctx = CoalitionValueContext::new(&x, &bg, &grouping, constant.as_ref()).unwrap();
        assert_eq!(ctx.coalition_value(&Coalition::from_members(2, [1])).unwrap(), 0.7);

        let linear = builtin_predictor("linear", &json!({})).unwrap();
        let ctx = CoalitionValueContext::new(&x, &bg, &grouping, linear.as_ref()).unwrap();
        // empty: mean of background sums (4 + 12) / 2
        assert_eq!(ctx.coalition_value(&Coalition::empty(2)).unwrap(), 8.0);
        assert_eq!(ctx.coalition_value(&Coalition::grand(2)).unwrap(), 40.0);
        // instant 0 from x, instant 1 from background
        assert_eq!(ctx.coalition_value(&Coalition::from_members(2, [0])).unwrap(), 24.0);
    }

    #[test]
    fn one_batch_per_coalition_and_cache_hits() {
        let shape = WindowShape::new(3, 2);
        let rows: Vec<Vec<f64>> = (0..7).map(|k| vec![k as f64; 6]).collect();
        let bg = background(shape, &rows);
        let grouping = Grouping::feature(3, 2).unwrap();
        let counter = CountingPredictor::wrap(Arc::from(builtin_predictor("linear", &json!({})).unwrap()));
        let x = [1.0; 6];
        let ctx = CoalitionValueContext::new(&x, &bg, &grouping, &counter).unwrap();
        let c = Coalition::from_members(2, [1]);
        let first = ctx.coalition_value(&c).unwrap();
        assert_eq!((counter.batches(), counter.calls()), (1, 7));
        assert_eq!(ctx.coalition_value(&c).unwrap(), first);
        assert_eq!((counter.batches(), counter.calls()), (1, 7));

        let chunked = CoalitionValueContext::new(&x, &bg, &grouping, &counter)
            .unwrap()
            .with_max_batch(3);
        assert_eq!(chunked.coalition_value(&c).unwrap(), first);
        assert_eq!((counter.batches(), counter.calls()), (4, 14));
    }

    #[test]
    fn invalid_outputs_are_errors() {
        let shape = WindowShape::new(1, 1);
        let bg = background(shape, &[vec![0.0]]);
        let grouping = Grouping::temporal(1, 1).unwrap();
        let x = [0.0];
        for bad in [f64::NAN, 1.5] {
            let p = Broken(bad);
            let ctx = CoalitionValueContext::new(&x, &bg, &grouping, &p).unwrap();
            assert!(matches!(
                ctx.coalition_value(&Coalition::empty(1)),
                Err(Error::PredictorFailure { batch: 0, .. })
            ));
        }
    }

    #[test]
    fn shape_mismatches() {
        let bg = background(WindowShape::new(2, 2), &[vec![0.0; 4]]);
        let p = Broken(0.0);
        let grouping = Grouping::temporal(2, 3).unwrap();
        assert!(CoalitionValueContext::new(&[0.0; 6], &bg, &grouping, &p).is_err());
        let grouping = Grouping::temporal(2, 2).unwrap();
        assert!(CoalitionValueContext::new(&[0.0; 3], &bg, &grouping, &p).is_err());
        let ctx = CoalitionValueContext::new(&[0.0; 4], &bg, &grouping, &p).unwrap();
        assert!(ctx.coalition_value(&Coalition::empty(3)).is_err());
    }
}
