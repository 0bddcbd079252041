use serde_json::json;
use shats_core::engine::{count_predictor_calls, explain_batch, ExplainOptions, ExplainRequest};
use shats_core::grouping::{FeatureEntry, Level};
use shats_core::valuefn::{builtin_predictor, BackgroundSource};
use shats_core::{BackgroundSet, FeatureMap, Grouping, GroupingStrategy, WindowBatch, WindowSet, WindowShape};

fn noise(n: usize, salt: u64) -> Vec<f64> {
    (0..n as u64)
        .map(|i| {
            let x = (i ^ salt).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
            (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

fn fixture(shape: WindowShape, windows: usize, k: usize) -> (WindowSet, BackgroundSet) {
    let batch = WindowBatch::new(shape, noise(windows * shape.cells(), 1)).unwrap();
    let set = WindowSet::new(batch, vec![0; windows], (0..windows).map(|i| 50 + 2 * i).collect(), 2).unwrap();
    let bg = BackgroundSet::new(WindowBatch::new(shape, noise(k * shape.cells(), 2)).unwrap(), BackgroundSource::File)
        .unwrap();
    (set, bg)
}

fn groupings(shape: WindowShape) -> Vec<Grouping> {
    let (w, f) = (shape.instants, shape.features);
    let map = FeatureMap::new(
        (0..f)
            .map(|i| FeatureEntry { source: format!("s{}", i / 2), unit: format!("u{}", i / 3) })
            .collect(),
    );
    // A checkerboard-ish custom partition mixing time and features.
    let custom: Vec<(String, Vec<(usize, usize)>)> = (0..3)
        .map(|g| {
            let cells = (0..w)
                .flat_map(|t| (0..f).map(move |ft| (t, ft)))
                .filter(|&(t, ft)| (t + 2 * ft) % 3 == g)
                .collect();
            (format!("c{g}"), cells)
        })
        .collect();
    vec![
        Grouping::temporal(w, f).unwrap(),
        Grouping::feature(w, f).unwrap(),
        Grouping::multifeature(w, &map, Level::Source).unwrap(),
        Grouping::multifeature(w, &map, Level::Unit).unwrap(),
        Grouping::from_cells(shape, GroupingStrategy::Multifeature, custom).unwrap(),
    ]
}

#[test]
fn linear_model_attributions_match_closed_form() {
    let shape = WindowShape::new(4, 6);
    let (set, bg) = fixture(shape, 3, 7);
    let weights = noise(shape.cells(), 3);
    let p = builtin_predictor("linear", &json!({"weights": weights, "bias": 0.7})).unwrap();
    let mean: Vec<f64> = (0..shape.cells())
        .map(|c| bg.windows().windows().map(|w| w[c]).sum::<f64>() / bg.len() as f64)
        .collect();
    for g in groupings(shape) {
        let req = ExplainRequest {
            windows: &set,
            grouping: &g,
            background: &bg,
            predictor: p.as_ref(),
            options: ExplainOptions::exact(),
        };
        for (i, frame) in explain_batch(&req).unwrap().iter().enumerate() {
            let x = set.window(i);
            for (gi, phi) in frame.attributions.iter().enumerate() {
                let expected: f64 = g
                    .cells(gi)
                    .iter()
                    .map(|&(t, f)| {
                        let c = shape.offset(t, f);
                        weights[c] * (x[c] - mean[c])
                    })
                    .sum();
                assert!((phi - expected).abs() < 1e-9, "{:?} group {gi}", g.strategy());
            }
        }
    }
}

#[test]
fn reordering_groups_reorders_attributions() {
    let shape = WindowShape::new(3, 4);
    let (set, bg) = fixture(shape, 2, 5);
    let p = builtin_predictor("logistic-sum", &json!({"weights": noise(shape.cells(), 9)})).unwrap();
    let g = Grouping::feature(3, 4).unwrap();
    let order = [2, 0, 3, 1];
    let h = g.permuted(&order).unwrap();
    let run = |grouping: &Grouping| {
        explain_batch(&ExplainRequest {
            windows: &set,
            grouping,
            background: &bg,
            predictor: p.as_ref(),
            options: ExplainOptions::exact(),
        })
        .unwrap()
    };
    let (a, b) = (run(&g), run(&h));
    for (fa, fb) in a.iter().zip(&b) {
        for (k, &src) in order.iter().enumerate() {
            assert!((fb.attributions[k] - fa.attributions[src]).abs() < 1e-12);
        }
    }
}

#[test]
fn exact_call_count_is_two_to_the_groups_times_k() {
    for k in [10, 40] {
        let shape = WindowShape::new(3, 6);
        let (set, bg) = fixture(shape, 2, k);
        let g = Grouping::feature(3, 6).unwrap();
        let p = builtin_predictor("linear", &json!({})).unwrap();
        let req = ExplainRequest {
            windows: &set.select(&[0]),
            grouping: &g,
            background: &bg,
            predictor: p.as_ref(),
            options: ExplainOptions::exact(),
        };
        assert_eq!(count_predictor_calls(&req).unwrap(), 64 * k);
    }
}

#[test]
fn approximate_results_depend_only_on_seed_and_origin() {
    let shape = WindowShape::new(5, 8);
    let (set, bg) = fixture(shape, 6, 4);
    let p = builtin_predictor("logistic-sum", &json!({"weight": 0.2})).unwrap();
    let g = Grouping::feature(5, 8).unwrap();
    let opts = ExplainOptions::approximate(Some(40), 11);
    let all = explain_batch(&ExplainRequest {
        windows: &set,
        grouping: &g,
        background: &bg,
        predictor: p.as_ref(),
        options: opts.clone(),
    })
    .unwrap();
    let serial = explain_batch(&ExplainRequest {
        windows: &set.select(&[4, 1]),
        grouping: &g,
        background: &bg,
        predictor: p.as_ref(),
        options: ExplainOptions { parallel: false, ..opts },
    })
    .unwrap();
    assert_eq!(serial[0], all[4]);
    assert_eq!(serial[1], all[1]);
}
