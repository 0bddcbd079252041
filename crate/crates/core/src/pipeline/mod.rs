//! Raw multivariate series to model-ready windows.
//!
//! The stages run in order: [`split_with_padding`] cuts each segment into
//! train / validation / test runs separated by discarded padding rows,
//! [`prune_zero_variance`] drops columns that are constant on training rows,
//! [`encode_and_normalize`] fits scalers and one-hot encoders on training rows
//! only, and [`make_windows`] slides fixed-size windows inside each contiguous
//! run so that no window straddles a split.

mod background;
mod encode;
pub mod io;
mod split;
mod table;
mod windows;

pub use background::{background_indices, sample_background};
pub use encode::{
    encode_and_normalize, prune_zero_variance, ColumnEncoder, ContinuousStats, EncodeOptions,
    EncodedTable, EncodingReport, Normalization,
};
pub use split::{split_with_padding, RowSet, Split, SplitSpec};
pub use table::{parse_csv, read_csv, Column, ColumnData, ColumnKind, Schema, TimeSeriesTable};
pub use windows::{make_windows, window_count};

use serde::{Deserialize, Serialize};

use crate::window::WindowSet;
use crate::Result;

/// Settings for [`preprocess`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub split: SplitSpec,
    pub window_size: usize,
    pub stride: usize,
    #[serde(default)]
    pub encode: EncodeOptions,
}

/// Every artefact of one preprocessing run.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub split: Split,
    pub report: EncodingReport,
    pub encoded: EncodedTable,
    pub train: WindowSet,
    pub val: WindowSet,
    pub test: WindowSet,
}

/// Split, prune, encode and window a table.
pub fn preprocess(table: &TimeSeriesTable, config: &PipelineConfig) -> Result<Preprocessed> {
    let split = split_with_padding(table.rows(), &config.split)?;
    let (pruned, dropped) = prune_zero_variance(table, &split.train)?;
    let (encoded, mut report) = encode_and_normalize(&pruned, &split.train, &config.encode)?;
    report.dropped_columns = dropped;
    let labels = table.labels.as_deref();
    let windows = |rows: &RowSet| make_windows(&encoded, rows, labels, config.window_size, config.stride);
    Ok(Preprocessed {
        train: windows(&split.train)?,
        val: windows(&split.val)?,
        test: windows(&split.test)?,
        split,
        report,
        encoded,
    })
}
