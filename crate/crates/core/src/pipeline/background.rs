use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::valuefn::{BackgroundSet, BackgroundSource};
use crate::window::WindowSet;
use crate::{Error, Result};

/// Picks `k` window indices, optionally preserving the anomalous fraction of
/// `labels` (to the nearest window). Indices come back sorted.
pub fn background_indices(labels: &[u8], k: usize, stratify: bool, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if k == 0 || k > n {
        return Err(Error::InsufficientWindows {
            requested: k,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = if !stratify {
        index::sample(&mut rng, n, k).into_vec()
    } else {
        let (anomalous, normal): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| labels[i] == 1);
        let want = (k as f64 * anomalous.len() as f64 / n as f64).round() as usize;
        let take_anomalous = want.min(anomalous.len()).max(k.saturating_sub(normal.len()));
        let take_normal = k - take_anomalous;
        let mut out: Vec<usize> = index::sample(&mut rng, anomalous.len(), take_anomalous)
            .into_iter()
            .map(|i| anomalous[i])
            .collect();
        out.extend(
            index::sample(&mut rng, normal.len(), take_normal)
                .into_iter()
                .map(|i| normal[i]),
        );
        out
    };
    picked.sort_unstable();
    Ok(picked)
}

/// Draws a background set of `k` training windows.
pub fn sample_background(train: &WindowSet, k: usize, stratify: bool, seed: u64) -> Result<BackgroundSet> {
    let picked = background_indices(&train.labels, k, stratify, seed)?;
    BackgroundSet::new(train.select(&picked).batch, BackgroundSource::Sampled)
}
