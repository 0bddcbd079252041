//! Source ranking over explained events.
//!
//! Each frame's attributions become shares of the window total; shares are
//! averaged over the frames of an event and groups ranked by that mean.

use serde::{Deserialize, Serialize};

use crate::engine::AttributionFrame;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShareConvention {
    /// `|φ_i| / Σ|φ_j|`
    #[default]
    Absolute,
    /// `φ_i / Σφ_j`; may leave `[0, 1]` when signs are mixed.
    Raw,
}

impl ShareConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShareConvention::Absolute => "absolute",
            ShareConvention::Raw => "raw",
        }
    }
}

/// Per-window shares. `degenerate` is set when the denominator vanished and
/// uniform shares were substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct Shares {
    pub shares: Vec<f64>,
    pub degenerate: bool,
}

pub fn normalize_shares(attributions: &[f64], convention: ShareConvention) -> Shares {
    let n = attributions.len();
    let mapped: Vec<f64> = match convention {
        ShareConvention::Absolute => attributions.iter().map(|a| a.abs()).collect(),
        ShareConvention::Raw => attributions.to_vec(),
    };
    let total = crate::summation::compensated_sum(mapped.iter().copied());
    if n == 0 || total == 0.0 || !total.is_finite() {
        return Shares {
            shares: vec![1.0 / n.max(1) as f64; n],
            degenerate: true,
        };
    }
    Shares {
        shares: mapped.iter().map(|v| v / total).collect(),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRank {
    pub name: String,
    pub share: f64,
    pub rank: usize,
}

/// `{"windows": n, "convention": "...", "ranking": [{"name", "share", "rank"}]}`
///
/// `ranking` is ordered by rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub windows: usize,
    pub convention: ShareConvention,
    pub ranking: Vec<GroupRank>,
    /// Frames whose shares fell back to uniform.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub degenerate_windows: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl RankingReport {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.ranking.iter().find(|g| g.name == name).map(|g| g.rank)
    }

    pub fn top(&self) -> &GroupRank {
        &self.ranking[0]
    }
}

/// Averages shares over the frames of one event and ranks groups by the
/// mean, highest first; ties go to the lower group index.
pub fn rank_sources(
    frames: &[AttributionFrame],
    group_names: &[String],
    convention: ShareConvention,
) -> Result<RankingReport> {
    if frames.is_empty() {
        return Err(Error::EmptyEventWindow);
    }
    let g = group_names.len();
    let mut sums = vec![crate::summation::KahanSum::default(); g];
    let mut degenerate = 0;
    for frame in frames {
        if frame.attributions.len() != g {
            return Err(Error::ShapeMismatch {
                expected: format!("{g} attributions"),
                found: format!("{} in frame {}", frame.attributions.len(), frame.origin),
            });
        }
        let s = normalize_shares(&frame.attributions, convention);
        degenerate += usize::from(s.degenerate);
        for (acc, v) in sums.iter_mut().zip(s.shares) {
            acc.add(v);
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s.total() / frames.len() as f64).collect();
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let ranking = order
        .into_iter()
        .enumerate()
        .map(|(r, i)| GroupRank {
            name: group_names[i].clone(),
            share: means[i],
            rank: r + 1,
        })
        .collect();
    Ok(RankingReport {
        windows: frames.len(),
        convention,
        ranking,
        degenerate_windows: degenerate,
    })
}

/// Fraction of events whose true group is ranked within the top `k`.
pub fn localization_score(reports: &[RankingReport], truth: &[String], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidDimensions("k must be at least 1".into()));
    }
    if reports.len() != truth.len() {
        return Err(Error::InvalidDimensions(format!(
            "{} reports but {} truth labels",
            reports.len(),
            truth.len()
        )));
    }
    if reports.is_empty() {
        return Err(Error::EmptyEventWindow);
    }
    let mut hits = 0;
    for (report, name) in reports.iter().zip(truth) {
        let rank = report
            .rank_of(name)
            .ok_or_else(|| Error::UnknownTruthName(name.clone()))?;
        hits += usize::from(rank <= k);
    }
    Ok(hits as f64 / reports.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(origin: usize, attributions: Vec<f64>) -> AttributionFrame {
        AttributionFrame {
            origin,
            prediction: 1.0,
            baseline: 0.0,
            attributions,
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("g{i}")).collect()
    }

    #[test]
    fn share_examples() {
        let abs = ShareConvention::Absolute;
        assert_eq!(normalize_shares(&[3.0, 1.0, 0.0], abs).shares, vec![0.75, 0.25, 0.0]);
        assert_eq!(normalize_shares(&[2.0, -2.0], abs).shares, vec![0.5, 0.5]);
        assert_eq!(normalize_shares(&[-0.3], abs).shares, vec![1.0]);
        let zero = normalize_shares(&[0.0, 0.0], abs);
        assert!(zero.degenerate);
        assert_eq!(zero.shares, vec![0.5, 0.5]);
        assert_eq!(normalize_shares(&[3.0, -1.0], ShareConvention::Raw).shares, vec![1.5, -0.5]);
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let frames = [frame(0, vec![1.0, 0.0]), frame(1, vec![0.0, 1.0])];
        let r = rank_sources(&frames, &names(2), ShareConvention::Absolute).unwrap();
        assert_eq!(r.ranking[0].name, "g0");
        assert_eq!(r.ranking[0].share, 0.5);
        assert_eq!(r.ranking[1].rank, 2);
    }

    #[test]
    fn dominant_group_ranks_first() {
        let frames: Vec<_> = (0..4).map(|i| frame(i, vec![0.1, 0.05, 2.0 + i as f64, -0.2])).collect();
        let r = rank_sources(&frames, &names(4), ShareConvention::Absolute).unwrap();
        assert_eq!(r.top().name, "g2");
        assert_eq!(r.windows, 4);
        assert!(matches!(
            rank_sources(&[], &names(4), ShareConvention::Absolute),
            Err(Error::EmptyEventWindow)
        ));
    }

    #[test]
    fn localization_counts() {
        let frames_for = |top: usize| {
            let mut a = vec![0.1; 3];
            a[top] = 1.0;
            let r = rank_sources(&[frame(0, a)], &names(3), ShareConvention::Absolute).unwrap();
            r
        };
        // five events with tops g0, g1, g2, g0, g1; truth g0 everywhere
        let reports: Vec<_> = [0, 1, 2, 0, 1].into_iter().map(frames_for).collect();
        let truth = vec!["g0".to_string(); 5];
        assert_eq!(localization_score(&reports, &truth, 1).unwrap(), 0.4);
        assert_eq!(localization_score(&reports, &truth, 3).unwrap(), 1.0);
        // g0 is rank 2 whenever it is not the top (tie at 0.1 goes to lowest index)
        assert_eq!(localization_score(&reports, &truth, 2).unwrap(), 1.0);
        let bad = vec!["nope".to_string(); 5];
        assert!(matches!(localization_score(&reports, &bad, 1), Err(Error::UnknownTruthName(_))));
    }

    #[test]
    fn report_json_shape() {
        let r = rank_sources(&[frame(0, vec![1.0, 3.0])], &names(2), ShareConvention::Absolute).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"windows":1,"convention":"absolute","ranking":[{"name":"g1","share":0.75,"rank":1},{"name":"g0","share":0.25,"rank":2}]}"#
        );
    }

    proptest::proptest! {
        #[test]
        fn scale_and_order_invariance(
            rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 1..8),
            scale in 0.01f64..100.0,
        ) {
            let frames: Vec<_> = rows.iter().enumerate().map(|(i, a)| frame(i, a.clone())).collect();
            let base = rank_sources(&frames, &names(4), ShareConvention::Absolute).unwrap();
            for f in &frames {
                let s = normalize_shares(&f.attributions, ShareConvention::Absolute);
                let scaled: Vec<f64> = f.attributions.iter().map(|a| a * scale).collect();
                let t = normalize_shares(&scaled, ShareConvention::Absolute);
                for (x, y) in s.shares.iter().zip(&t.shares) {
                    proptest::prop_assert!((x - y).abs() < 1e-12);
                }
                if !s.degenerate {
                    proptest::prop_assert!((s.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
            let mut reversed = frames.clone();
            reversed.reverse();
            let rev = rank_sources(&reversed, &names(4), ShareConvention::Absolute).unwrap();
            for (a, b) in base.ranking.iter().zip(&rev.ranking) {
                proptest::prop_assert!((a.share - b.share).abs() < 1e-12);
            }
        }
    }
}
