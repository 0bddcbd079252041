use super::{binomial, Coalition, CoalitionGame, Estimator, ShapleyVector};
use crate::summation::KahanSum;
use crate::{Error, Result};

/// Largest player count the exact methods accept unless overridden.
pub const DEFAULT_EXACT_CAP: usize = 20;

// Hard ceiling for the coalition table, regardless of the cap.
const MAX_EXACT_PLAYERS: usize = 30;

/// Exact Shapley values by full coalition enumeration, with the classic
/// `|S|!(n-|S|-1)!/n!` weights.
///
/// Every coalition is evaluated exactly once.
pub fn exact_shapley<G: CoalitionGame + ?Sized>(game: &G) -> Result<ShapleyVector> {
    exact_shapley_with_cap(game, DEFAULT_EXACT_CAP)
}

pub fn exact_shapley_with_cap<G: CoalitionGame + ?Sized>(
    game: &G,
    cap: usize,
) -> Result<ShapleyVector> {
    let n = game.player_count();
    let table = coalition_table(game, cap)?;
    // s!(n-s-1)!/n! == 1 / (n * C(n-1, s))
    let weights: Vec<f64> = (0..n)
        .map(|s| 1.0 / (n as f64 * binomial(n - 1, s) as f64))
        .collect();

    let values = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            let mut acc = KahanSum::default();
            for mask in (0..table.len()).filter(|m| m & bit == 0) {
                let size = mask.count_ones() as usize;
                acc.add(weights[size] * (table[mask | bit] - table[mask]));
            }
            acc.total()
        })
        .collect();

    Ok(ShapleyVector {
        values,
        method: Estimator::Exact,
        seed: None,
        budget: None,
    })
}

/// Exact Shapley values through the per-stratum decomposition: the average
/// over coalition sizes `j` of the unweighted mean marginal contribution
/// within that size.
pub fn exact_shapley_stratified<G: CoalitionGame + ?Sized>(game: &G) -> Result<ShapleyVector> {
    let n = game.player_count();
    let table = coalition_table(game, DEFAULT_EXACT_CAP)?;

    let values = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            let mut strata = vec![KahanSum::default(); n];
            for mask in (0..table.len()).filter(|m| m & bit == 0) {
                strata[mask.count_ones() as usize].add(table[mask | bit] - table[mask]);
            }
            let mut acc = KahanSum::default();
            for (j, stratum) in strata.iter().enumerate() {
                acc.add(stratum.total() / binomial(n - 1, j) as f64);
            }
            acc.total() / n as f64
        })
        .collect();

    Ok(ShapleyVector {
        values,
        method: Estimator::Exact,
        seed: None,
        budget: None,
    })
}

fn coalition_table<G: CoalitionGame + ?Sized>(game: &G, cap: usize) -> Result<Vec<f64>> {
    let n = game.player_count();
    if n == 0 {
        return Err(Error::InvalidDimensions("a game needs at least one player".into()));
    }
    if n > cap || n > MAX_EXACT_PLAYERS {
        return Err(Error::PlayerCountExceedsExactCap {
            players: n,
            cap: cap.min(MAX_EXACT_PLAYERS),
        });
    }
    (0..1u64 << n)
        .map(|mask| game.value(&Coalition::from_mask(n, mask)))
        .collect()
}
