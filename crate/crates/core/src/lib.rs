//! Grouped Shapley value ("ShaTS") explanations for black-box time-series
//! models.
//!
//! The crate is organised bottom-up:
//!
//! * [`game`] — coalition games, exact and stratified-sampling Shapley values.
//! * [`grouping`] — partitions of the window grid (instant × feature) into players.
//! * [`valuefn`] — predictors and the background-substitution coalition value.
//! * [`pipeline`] — CSV ingestion, leakage-free splitting, encoding, windowing.
//! * [`engine`] — per-window explanation driver producing [`AttributionFrame`]s.
//! * [`analysis`] — share normalisation, source ranking and localisation scoring.
//! * [`heatmap`] — CSV and SVG rendering of window × group attributions.

pub mod analysis;
pub mod engine;
mod error;
pub mod game;
pub mod grouping;
pub mod heatmap;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod pipeline;
mod summation;
pub mod valuefn;
pub mod window;

pub use analysis::{RankingReport, ShareConvention};
pub use engine::{AttributionFrame, ExplainRequest, Method};
pub use error::{Error, Result};
pub use game::{Coalition, CoalitionGame, ShapleyVector, StrataPlan};
pub use grouping::{FeatureMap, Grouping, GroupingStrategy};
pub use valuefn::{BackgroundSet, CoalitionValueContext, Predictor};
pub use window::{WindowBatch, WindowSet, WindowShape};
