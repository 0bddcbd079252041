use super::encode::EncodedTable;
use super::split::RowSet;
use crate::window::{WindowBatch, WindowSet, WindowShape};
use crate::{Error, Result};

/// Windows per run of `run_len` rows: `floor((L - w) / stride) + 1` when
/// `L >= w`, else none.
pub fn window_count(run_len: usize, window_size: usize, stride: usize) -> usize {
    if run_len < window_size || window_size == 0 || stride == 0 {
        0
    } else {
        (run_len - window_size) / stride + 1
    }
}

/// Slides `window_size`-row windows by `stride` inside each maximal run of
/// `rows`. Each window is labelled by, and keyed on, its final row. Runs
/// shorter than a window contribute nothing.
pub fn make_windows(
    encoded: &EncodedTable,
    rows: &RowSet,
    labels: Option<&[u8]>,
    window_size: usize,
    stride: usize,
) -> Result<WindowSet> {
    if window_size == 0 || stride == 0 {
        return Err(Error::InvalidDimensions(format!(
            "window size {window_size} and stride {stride} must be positive"
        )));
    }
    if encoded.features == 0 {
        return Err(Error::InvalidDimensions("no encoded features".into()));
    }
    let shape = WindowShape::new(window_size, encoded.features);
    let mut data = Vec::new();
    let mut origins = Vec::new();
    let mut window_labels = Vec::new();
    for run in rows.runs() {
        if run.end > encoded.rows {
            return Err(Error::Data(format!(
                "row {} outside a {}-row table",
                run.end - 1,
                encoded.rows
            )));
        }
        if run.len() < window_size {
            continue;
        }
        for start in (run.start..=run.end - window_size).step_by(stride) {
            let end = start + window_size;
            data.extend_from_slice(&encoded.data[start * encoded.features..end * encoded.features]);
            origins.push(end - 1);
            window_labels.push(labels.map_or(0, |l| l[end - 1]));
        }
    }
    WindowSet::new(WindowBatch::new(shape, data)?, window_labels, origins, stride)
}
