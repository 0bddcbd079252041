use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::split::RowSet;
use super::table::{Column, ColumnData, TimeSeriesTable};
use crate::grouping::{FeatureEntry, FeatureMap};
use crate::summation::compensated_sum;
use crate::{Error, Result};

pub const UNSEEN_CATEGORY: &str = "<unseen>";

/// Drops feature columns whose training rows hold a single value.
pub fn prune_zero_variance(table: &TimeSeriesTable, train: &RowSet) -> Result<(TimeSeriesTable, Vec<String>)> {
    if train.is_empty() {
        return Err(Error::InvalidSplit("no training rows".into()));
    }
    let first = train.iter().next().expect("non-empty");
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for col in &table.columns {
        let constant = match &col.data {
            ColumnData::Continuous(v) => train.iter().all(|r| v[r] == v[first]),
            ColumnData::Categorical(v) => train.iter().all(|r| v[r] == v[first]),
        };
        if constant {
            dropped.push(col.name.clone());
        } else {
            kept.push(col.clone());
        }
    }
    let pruned = TimeSeriesTable::new(kept, table.labels.clone(), table.timestamps.clone())?;
    Ok((pruned, dropped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Zero mean, unit (population) standard deviation.
    #[default]
    Standard,
    /// Training range mapped to `[0, 1]`.
    Minmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeOptions {
    #[serde(default)]
    pub mode: Normalization,
    /// Adds one indicator per categorical column for categories absent from
    /// the training rows. Without it such rows encode as all zeros.
    #[serde(default = "yes")]
    pub unseen_indicator: bool,
}

fn yes() -> bool {
    true
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            mode: Normalization::Standard,
            unseen_indicator: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ContinuousStats {
    Standard { mean: f64, std: f64 },
    Minmax { min: f64, max: f64 },
}

impl ContinuousStats {
    fn apply(&self, x: f64) -> f64 {
        match *self {
            ContinuousStats::Standard { mean, std } => (x - mean) / std,
            ContinuousStats::Minmax { min, max } => (x - min) / (max - min),
        }
    }
}

/// How one surviving column becomes encoded features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnEncoder {
    Continuous {
        name: String,
        stats: ContinuousStats,
    },
    Categorical {
        name: String,
        categories: Vec<String>,
        unseen_indicator: bool,
    },
}

impl ColumnEncoder {
    pub fn name(&self) -> &str {
        match self {
            ColumnEncoder::Continuous { name, .. } | ColumnEncoder::Categorical { name, .. } => name,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            ColumnEncoder::Continuous { .. } => 1,
            ColumnEncoder::Categorical {
                categories,
                unseen_indicator,
                ..
            } => categories.len() + usize::from(*unseen_indicator),
        }
    }

    fn feature_names(&self) -> Vec<String> {
        match self {
            ColumnEncoder::Continuous { name, .. } => vec![name.clone()],
            ColumnEncoder::Categorical {
                name,
                categories,
                unseen_indicator,
            } => categories
                .iter()
                .map(String::as_str)
                .chain(unseen_indicator.then_some(UNSEEN_CATEGORY))
                .map(|c| format!("{name}={c}"))
                .collect(),
        }
    }
}

/// Fitted encoders plus their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub dropped_columns: Vec<String>,
    pub encoders: Vec<ColumnEncoder>,
    pub encoded_feature_count: usize,
    pub feature_names: Vec<String>,
    pub feature_map: FeatureMap,
}

impl EncodingReport {
    /// Encodes every row of `table` with the fitted encoders.
    pub fn apply(&self, table: &TimeSeriesTable) -> Result<EncodedTable> {
        let rows = table.rows();
        let width = self.encoded_feature_count;
        let mut data = vec![0.0; rows * width];
        let mut offset = 0;
        for enc in &self.encoders {
            let col = table
                .columns
                .iter()
                .find(|c| c.name == enc.name())
                .ok_or_else(|| Error::Data(format!("column '{}' missing", enc.name())))?;
            match (enc, &col.data) {
                (ColumnEncoder::Continuous { stats, .. }, ColumnData::Continuous(v)) => {
                    for (r, &x) in v.iter().enumerate() {
                        data[r * width + offset] = stats.apply(x);
                    }
                }
                (
                    ColumnEncoder::Categorical {
                        categories,
                        unseen_indicator,
                        ..
                    },
                    ColumnData::Categorical(v),
                ) => {
                    for (r, x) in v.iter().enumerate() {
                        match categories.binary_search(x) {
                            Ok(k) => data[r * width + offset + k] = 1.0,
                            Err(_) if *unseen_indicator => {
                                data[r * width + offset + categories.len()] = 1.0
                            }
                            Err(_) => {}
                        }
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "column '{}' changed kind since encoding",
                        enc.name()
                    )))
                }
            }
            offset += enc.width();
        }
        Ok(EncodedTable {
            rows,
            features: width,
            data,
            feature_names: self.feature_names.clone(),
        })
    }
}

/// Row-major `rows × features` matrix of encoded values.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTable {
    pub rows: usize,
    pub features: usize,
    pub data: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl EncodedTable {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.features..(r + 1) * self.features]
    }
}

/// Fits normalisers and one-hot encoders on the training rows and encodes
/// the whole table.
pub fn encode_and_normalize(
    table: &TimeSeriesTable,
    train: &RowSet,
    options: &EncodeOptions,
) -> Result<(EncodedTable, EncodingReport)> {
    if train.is_empty() {
        return Err(Error::InvalidSplit("no training rows".into()));
    }
    let mut encoders = Vec::with_capacity(table.columns.len());
    let mut entries = Vec::new();
    let mut feature_names = Vec::new();
    for Column { name, data } in &table.columns {
        let enc = match data {
            ColumnData::Continuous(v) => ColumnEncoder::Continuous {
                name: name.clone(),
                stats: fit_continuous(name, train.iter().map(|r| v[r]), options.mode)?,
            },
            ColumnData::Categorical(v) => {
                let categories: BTreeSet<&String> = train.iter().map(|r| &v[r]).collect();
                ColumnEncoder::Categorical {
                    name: name.clone(),
                    categories: categories.into_iter().cloned().collect(),
                    unseen_indicator: options.unseen_indicator,
                }
            }
        };
        for _ in 0..enc.width() {
            entries.push(FeatureEntry {
                source: name.clone(),
                unit: name.clone(),
            });
        }
        feature_names.extend(enc.feature_names());
        encoders.push(enc);
    }
    let report = EncodingReport {
        dropped_columns: Vec::new(),
        encoded_feature_count: entries.len(),
        encoders,
        feature_names,
        feature_map: FeatureMap::new(entries),
    };
    let encoded = report.apply(table)?;
    Ok((encoded, report))
}

fn fit_continuous(name: &str, values: impl Iterator<Item = f64> + Clone, mode: Normalization) -> Result<ContinuousStats> {
    let stats = match mode {
        Normalization::Standard => {
            let n = values.clone().count() as f64;
            let mean = compensated_sum(values.clone()) / n;
            let var = compensated_sum(values.map(|x| (x - mean) * (x - mean))) / n;
            ContinuousStats::Standard { mean, std: var.sqrt() }
        }
        Normalization::Minmax => {
            let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            ContinuousStats::Minmax { min, max }
        }
    };
    let degenerate = match stats {
        ContinuousStats::Standard { std, .. } => std == 0.0,
        ContinuousStats::Minmax { min, max } => max == min,
    };
    if degenerate {
        return Err(Error::DegenerateScale(name.to_owned()));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(columns: Vec<Column>) -> TimeSeriesTable {
        TimeSeriesTable::new(columns, None, None).unwrap()
    }

    #[test]
    fn standard_scaling_of_two_values() {
        let t = table(vec![Column::continuous("x", vec![0.0, 2.0])]);
        let (enc, report) = encode_and_normalize(&t, &RowSet::from_runs([0..2]), &EncodeOptions::default()).unwrap();
        assert_eq!(enc.data, vec![-1.0, 1.0]);
        assert_eq!(
            report.encoders[0],
            ColumnEncoder::Continuous {
                name: "x".into(),
                stats: ContinuousStats::Standard { mean: 1.0, std: 1.0 }
            }
        );
    }

    #[test]
    fn minmax_uses_training_range() {
        let t = table(vec![Column::continuous("x", vec![2.0, 4.0, 6.0, 10.0])]);
        let opts = EncodeOptions { mode: Normalization::Minmax, ..Default::default() };
        let (enc, _) = encode_and_normalize(&t, &RowSet::from_runs([0..3]), &opts).unwrap();
        assert_eq!(enc.data, vec![0.0, 0.5, 1.0, 2.0]);
    }

    #[test]
    fn prune_constant_columns() {
        let t = table(vec![
            Column::continuous("ones", vec![1.0; 4]),
            Column::continuous("x", vec![1.0, 2.0, 3.0, 4.0]),
            Column::continuous("late", vec![5.0, 5.0, 5.0, 9.0]),
            Column::categorical("mode", ["a", "a", "a", "b"]),
        ]);
        let (pruned, dropped) = prune_zero_variance(&t, &RowSet::from_runs([0..3])).unwrap();
        assert_eq!(dropped, vec!["ones", "late", "mode"]);
        assert_eq!(pruned.column_names().collect::<Vec<_>>(), vec!["x"]);
    }

    #[test]
    fn fifty_one_columns_seven_constant() {
        let mut cols = Vec::new();
        for c in 0..51 {
            let v: Vec<f64> = if c % 7 == 3 { vec![2.0; 20] } else { (0..20).map(|r| (r * (c + 1)) as f64).collect() };
            cols.push(Column::continuous(format!("c{c}"), v));
        }
        let (pruned, dropped) = prune_zero_variance(&table(cols), &RowSet::from_runs([0..20])).unwrap();
        assert_eq!(dropped.len(), 7);
        assert_eq!(pruned.columns.len(), 44);
    }

    #[test]
    fn unseen_category_indicator() {
        let t = table(vec![Column::categorical("valve", ["open", "shut", "open", "stuck"])]);
        let (enc, report) = encode_and_normalize(&t, &RowSet::from_runs([0..3]), &EncodeOptions::default()).unwrap();
        assert_eq!(report.feature_names, vec!["valve=open", "valve=shut", "valve=<unseen>"]);
        assert_eq!(enc.row(3), &[0.0, 0.0, 1.0]);
        assert_eq!(enc.row(1), &[0.0, 1.0, 0.0]);

        let opts = EncodeOptions { unseen_indicator: false, ..Default::default() };
        let (enc, _) = encode_and_normalize(&t, &RowSet::from_runs([0..3]), &opts).unwrap();
        assert_eq!(enc.row(3), &[0.0, 0.0]);
    }

    #[test]
    fn twenty_five_continuous_nineteen_categorical_give_69() {
        // 6 categorical columns with three states and 13 with two: 44 indicators
        let rows = 12;
        let mut cols = Vec::new();
        for c in 0..25 {
            cols.push(Column::continuous(format!("s{c}"), (0..rows).map(|r| (r + c) as f64).collect()));
        }
        for c in 0..19 {
            let states = if c < 6 { 3 } else { 2 };
            cols.push(Column::categorical(
                format!("a{c}"),
                (0..rows).map(|r| format!("{}", r % states)),
            ));
        }
        let opts = EncodeOptions { unseen_indicator: false, ..Default::default() };
        let (enc, report) = encode_and_normalize(&table(cols), &RowSet::from_runs([0..rows]), &opts).unwrap();
        assert_eq!(report.encoded_feature_count, 69);
        assert_eq!(enc.features, 69);
        assert_eq!(report.feature_map.len(), 69);
        let sources: BTreeSet<&str> = report.feature_map.entries.iter().map(|e| e.source.as_str()).collect();
        assert_eq!(sources.len(), 44);
    }

    #[test]
    fn degenerate_scale_is_reported() {
        let t = table(vec![Column::continuous("flat", vec![3.0, 3.0, 4.0])]);
        assert!(matches!(
            encode_and_normalize(&t, &RowSet::from_runs([0..2]), &EncodeOptions::default()),
            Err(Error::DegenerateScale(_))
        ));
    }

    #[test]
    fn statistics_come_from_training_rows_only() {
        let t = table(vec![Column::continuous("x", vec![0.0, 2.0, 100.0, 300.0])]);
        let (_, report) = encode_and_normalize(&t, &RowSet::from_runs([0..2]), &EncodeOptions::default()).unwrap();
        let ColumnEncoder::Continuous { stats, .. } = &report.encoders[0] else { panic!() };
        assert_eq!(*stats, ContinuousStats::Standard { mean: 1.0, std: 1.0 });
    }

    #[test]
    fn report_reapplies_bit_exactly() {
        let t = table(vec![
            Column::continuous("x", vec![0.1, 0.7, 1.3, -2.2, 5.5]),
            Column::categorical("m", ["a", "b", "a", "c", "b"]),
        ]);
        let train = RowSet::from_runs([0..4]);
        let (enc, report) = encode_and_normalize(&t, &train, &EncodeOptions::default()).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: EncodingReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.apply(&t).unwrap(), enc);
    }
}
