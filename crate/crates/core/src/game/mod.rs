//! Cooperative coalition games and their Shapley values.
//!
//! Nothing here knows about time series: a game is a player count plus a
//! value for every coalition. The [`crate::valuefn`] module adapts a
//! predictor, background set and grouping into a [`CoalitionGame`].

mod coalition;
mod exact;
mod sampling;
mod strata;

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

pub use coalition::Coalition;
pub use exact::{exact_shapley, exact_shapley_stratified, exact_shapley_with_cap, DEFAULT_EXACT_CAP};
pub use sampling::{sample_stratum, sampled_shapley, stratum_seed};
pub use strata::{allocate_strata, binomial, StrataPlan};

use crate::Result;

/// A transferable-utility game over players `0..player_count`.
///
/// `value` must be deterministic and defined for every coalition, including
/// the empty one.
pub trait CoalitionGame {
    fn player_count(&self) -> usize;

    fn value(&self, coalition: &Coalition) -> Result<f64>;
}

impl<G: CoalitionGame + ?Sized> CoalitionGame for &G {
    fn player_count(&self) -> usize {
        (**self).player_count()
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
}

/// A game backed by a closure.
pub struct FnGame<F> {
    players: usize,
    f: F,
}

impl<F> FnGame<F>
where
    F: Fn(&Coalition) -> f64,
{
    pub fn new(players: usize, f: F) -> Self {
        Self { players, f }
    }
}

impl<F> CoalitionGame for FnGame<F>
where
    F: Fn(&Coalition) -> f64,
{
    fn player_count(&self) -> usize {
        self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        Ok((self.f)(coalition))
    }
}

/// A game given by its full characteristic-function table, indexed by
/// coalition bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    players: usize,
    values: Vec<f64>,
}

impl TableGame {
    /// `values.len()` must be `2^players`.
    pub fn new(players: usize, values: Vec<f64>) -> Result<Self> {
        if players >= usize::BITS as usize || values.len() != 1usize << players {
            return Err(crate::Error::InvalidDimensions(format!(
                "table of {} values cannot describe a {players}-player game",
                values.len()
            )));
        }
        Ok(Self { players, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise sum of two games on the same players.
    pub fn add(&self, other: &TableGame) -> Result<TableGame> {
        if self.players != other.players {
            return Err(crate::Error::InvalidDimensions(
                "games must share their player set".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        TableGame::new(self.players, values)
    }
}

impl CoalitionGame for TableGame {
    fn player_count(&self) -> usize {
        self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        let mask = coalition.to_mask().ok_or_else(|| {
            crate::Error::InvalidDimensions("table games are limited to 63 players".into())
        })?;
        Ok(self.values[mask as usize])
    }
}

/// Counts how many times the wrapped game is evaluated.
pub struct CountingGame<G> {
    inner: G,
    calls: AtomicUsize,
}

impl<G: CoalitionGame> CountingGame<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<G: CoalitionGame> CoalitionGame for CountingGame<G> {
    fn player_count(&self) -> usize {
        self.inner.player_count()
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(coalition)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Exact,
    Sampled,
}

/// Shapley values for every player of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyVector {
    pub values: Vec<f64>,
    pub method: Estimator,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
}

impl ShapleyVector {
    pub fn sum(&self) -> f64 {
        crate::summation::compensated_sum(self.values.iter().copied())
    }
}
