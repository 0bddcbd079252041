use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Segment-wise split with anti-leakage padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub segment_length: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub padding: usize,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.segment_length <= 2 * self.padding + 3 {
            return Err(Error::SegmentTooShort {
                segment_length: self.segment_length,
                padding: self.padding,
            });
        }
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !in_unit(self.train_fraction)
            || !in_unit(self.val_fraction)
            || self.train_fraction + self.val_fraction >= 1.0
        {
            return Err(Error::InvalidSplit(format!(
                "fractions {} and {} must lie in (0, 1) and sum below 1",
                self.train_fraction, self.val_fraction
            )));
        }
        let [train, val, test] = self.runs(0, self.segment_length);
        if train.is_empty() || val.is_empty() || test.is_empty() {
            return Err(Error::InvalidSplit(format!(
                "a {}-row segment leaves an empty subset after {} rows of padding",
                self.segment_length, self.padding
            )));
        }
        Ok(())
    }

    // Subset lengths are floor(fraction * len); the padding comes off the
    // end of the earlier subset and the test run takes the remainder.
    fn runs(&self, start: usize, len: usize) -> [Range<usize>; 3] {
        let floor = |f: f64| ((f * len as f64) + 1e-9).floor() as usize;
        let train_len = floor(self.train_fraction);
        let val_len = floor(self.val_fraction);
        let val_start = start + train_len;
        let test_start = val_start + val_len;
        [
            start..val_start.saturating_sub(self.padding).max(start),
            val_start..test_start.saturating_sub(self.padding).max(val_start),
            test_start..start + len,
        ]
    }
}

/// Sorted, disjoint, non-adjacent half-open row runs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSet {
    runs: Vec<Range<usize>>,
}

impl RowSet {
    /// Normalises arbitrary ranges: sorts, drops empties and merges
    /// overlapping or touching runs.
    pub fn from_runs(runs: impl IntoIterator<Item = Range<usize>>) -> Self {
        let mut runs: Vec<_> = runs.into_iter().filter(|r| !r.is_empty()).collect();
        runs.sort_by_key(|r| r.start);
        let mut merged: Vec<Range<usize>> = Vec::with_capacity(runs.len());
        for r in runs {
            match merged.last_mut() {
                Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
                _ => merged.push(r),
            }
        }
        Self { runs: merged }
    }

    pub fn from_rows(rows: impl IntoIterator<Item = usize>) -> Self {
        Self::from_runs(rows.into_iter().map(|r| r..r + 1))
    }

    /// Maximal contiguous runs.
    pub fn runs(&self) -> &[Range<usize>] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.iter().map(ExactSizeIterator::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.runs.iter().any(|r| r.contains(&row))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + Clone + '_ {
        self.runs.iter().flat_map(Clone::clone)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: RowSet,
    pub val: RowSet,
    pub test: RowSet,
}

/// Cuts `rows` into consecutive segments and each segment into train,
/// validation and test runs separated by `padding` discarded rows.
///
/// The last segment may be shorter; if it cannot hold three subsets with
/// padding it goes to training whole.
pub fn split_with_padding(rows: usize, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    let mut start = 0;
    while start < rows {
        let len = spec.segment_length.min(rows - start);
        if len < 2 * spec.padding + 3 {
            train.push(start..start + len);
        } else {
            let [tr, va, te] = spec.runs(start, len);
            train.push(tr);
            val.push(va);
            test.push(te);
        }
        start += len;
    }
    Ok(Split {
        train: RowSet::from_runs(train),
        val: RowSet::from_runs(val),
        test: RowSet::from_runs(test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(segment_length: usize, train: f64, val: f64, padding: usize) -> SplitSpec {
        SplitSpec {
            segment_length,
            train_fraction: train,
            val_fraction: val,
            padding,
        }
    }

    #[test]
    fn thousand_rows_with_padding() {
        // 640 / 160 / 200 rows, 50 padding rows cut from the end of train and val
        let s = split_with_padding(1000, &spec(1000, 0.64, 0.16, 50)).unwrap();
        assert_eq!(s.train.runs(), &[0..590]);
        assert_eq!(s.val.runs(), &[640..750]);
        assert_eq!(s.test.runs(), &[800..1000]);
    }

    #[test]
    fn exact_fractions_without_padding() {
        let s = split_with_padding(8, &spec(8, 0.5, 0.25, 0)).unwrap();
        assert_eq!(s.train.runs(), &[0..4]);
        assert_eq!(s.val.runs(), &[4..6]);
        assert_eq!(s.test.runs(), &[6..8]);
    }

    #[test]
    fn short_series_is_one_segment() {
        let s = split_with_padding(10, &spec(1000, 0.64, 0.16, 50)).unwrap();
        assert_eq!(s.train.runs(), &[0..10]);
        assert!(s.val.is_empty() && s.test.is_empty());

        let s = split_with_padding(10, &spec(1000, 0.5, 0.2, 0)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (5, 2, 3));
    }

    #[test]
    fn multiple_segments_and_partial_tail() {
        let s = split_with_padding(2500, &spec(1000, 0.64, 0.16, 50)).unwrap();
        assert_eq!(s.train.runs(), &[0..590, 1000..1590, 2000..2270]);
        assert_eq!(s.val.runs(), &[640..750, 1640..1750, 2320..2350]);
        assert_eq!(s.test.runs(), &[800..1000, 1800..2000, 2400..2500]);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            split_with_padding(100, &spec(103, 0.6, 0.2, 50)),
            Err(Error::SegmentTooShort { .. })
        ));
        assert!(matches!(
            split_with_padding(100, &spec(100, 0.9, 0.2, 0)),
            Err(Error::InvalidSplit(_))
        ));
        assert!(matches!(
            split_with_padding(100, &spec(100, 0.05, 0.2, 10)),
            Err(Error::InvalidSplit(_))
        ));
    }

    #[test]
    fn row_set_normalises() {
        let r = RowSet::from_runs([5..7, 0..2, 2..3, 6..9, 4..4]);
        assert_eq!(r.runs(), &[0..3, 5..9]);
        assert_eq!(r.len(), 7);
        assert!(r.contains(8) && !r.contains(3));
        assert_eq!(RowSet::from_rows([3, 1, 2, 7]).runs(), &[1..4, 7..8]);
    }

    proptest::proptest! {
        #[test]
        fn subsets_are_disjoint_and_skip_padding(
            rows in 1usize..5000,
            seg in 40usize..1200,
            padding in 0usize..15,
        ) {
            let sp = spec(seg, 0.6, 0.2, padding);
            proptest::prop_assume!(sp.validate().is_ok());
            let s = split_with_padding(rows, &sp).unwrap();
            let mut owner = vec![0u8; rows];
            for (tag, set) in [(1u8, &s.train), (2, &s.val), (4, &s.test)] {
                for r in set.iter() {
                    proptest::prop_assert_eq!(owner[r], 0);
                    owner[r] = tag;
                }
            }
            // consecutive kept rows from different subsets are separated by >= padding rows
            let kept: Vec<usize> = (0..rows).filter(|&r| owner[r] != 0).collect();
            for pair in kept.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if owner[a] != owner[b] && a / seg == b / seg {
                    proptest::prop_assert!(b - a > padding);
                }
            }
        }
    }
}
