//! Dense window storage shared by the pipeline, value function and engine.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Window dimensions: `instants` rows of `features` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowShape {
    pub instants: usize,
    pub features: usize,
}

impl WindowShape {
    pub fn new(instants: usize, features: usize) -> Self {
        Self { instants, features }
    }

    pub fn cells(&self) -> usize {
        self.instants * self.features
    }

    /// Instant-major offset of a cell.
    pub fn offset(&self, instant: usize, feature: usize) -> usize {
        instant * self.features + feature
    }
}

impl std::fmt::Display for WindowShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.instants, self.features)
    }
}

/// A contiguous batch of windows, each stored instant-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    shape: WindowShape,
    data: Vec<f64>,
}

impl WindowBatch {
    pub fn new(shape: WindowShape, data: Vec<f64>) -> Result<Self> {
        if shape.cells() == 0 || !data.len().is_multiple_of(shape.cells()) {
            return Err(Error::ShapeMismatch {
                expected: format!("a multiple of {} cells", shape.cells()),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn from_windows<'a>(shape: WindowShape, windows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut data = Vec::new();
        for w in windows {
            if w.len() != shape.cells() {
                return Err(Error::ShapeMismatch {
                    expected: shape.to_string(),
                    found: format!("{} cells", w.len()),
                });
            }
            data.extend_from_slice(w);
        }
        Self::new(shape, data)
    }

    pub fn shape(&self) -> WindowShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.shape.cells()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn window(&self, i: usize) -> &[f64] {
        let c = self.shape.cells();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn windows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.shape.cells())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Labelled windows cut from one split of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub batch: WindowBatch,
    pub labels: Vec<u8>,
    /// Row index of each window's final instant.
    pub origins: Vec<usize>,
    pub stride: usize,
}

impl WindowSet {
    pub fn new(batch: WindowBatch, labels: Vec<u8>, origins: Vec<usize>, stride: usize) -> Result<Self> {
        if labels.len() != batch.len() || origins.len() != batch.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels and origins", batch.len()),
                found: format!("{} labels, {} origins", labels.len(), origins.len()),
            });
        }
        Ok(Self {
            batch,
            labels,
            origins,
            stride,
        })
    }

    pub fn shape(&self) -> WindowShape {
        self.batch.shape()
    }

    pub fn len(&self) -> usize {
        self.batch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batch.is_empty()
    }

    pub fn window(&self, i: usize) -> &[f64] {
        self.batch.window(i)
    }

    /// Keeps the windows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> WindowSet {
        let shape = self.shape();
        let mut data = Vec::with_capacity(indices.len() * shape.cells());
        for &i in indices {
            data.extend_from_slice(self.window(i));
        }
        WindowSet {
            batch: WindowBatch { shape, data },
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            origins: indices.iter().map(|&i| self.origins[i]).collect(),
            stride: self.stride,
        }
    }
}
