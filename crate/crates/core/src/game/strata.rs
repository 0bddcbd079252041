use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How many coalitions of each size are drawn per player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataPlan {
    pub total_budget: usize,
    /// Indexed by coalition size `0..player_count`.
    pub per_stratum: Vec<usize>,
}

impl StrataPlan {
    /// Every stratum enumerated in full.
    pub fn saturated(player_count: usize) -> Self {
        let per_stratum: Vec<usize> = (0..player_count)
            .map(|j| binomial_usize(player_count - 1, j))
            .collect();
        Self {
            total_budget: per_stratum.iter().sum(),
            per_stratum,
        }
    }

    pub fn player_count(&self) -> usize {
        self.per_stratum.len()
    }

    pub fn is_saturated(&self) -> bool {
        let n = self.player_count();
        self.per_stratum
            .iter()
            .enumerate()
            .all(|(j, &m)| m as u128 == binomial(n - 1, j))
    }

    /// Coalitions sampled per player.
    pub fn coalitions_per_player(&self) -> usize {
        self.per_stratum.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.player_count();
        for (j, &m) in self.per_stratum.iter().enumerate() {
            let available = binomial(n - 1, j);
            if m as u128 > available {
                return Err(Error::StratumExhausted {
                    player: 0,
                    size: j,
                    requested: m,
                    available,
                });
            }
        }
        Ok(())
    }
}

/// Splits `total_budget` coalitions per player across the `player_count`
/// size strata with weights `(j+1)^(2/3)`, capping each stratum at its
/// cardinality `C(player_count-1, j)`.
///
/// Strata that the floor leaves empty receive one coalition each, first from
/// the unallocated remainder (largest fractional part first) and then, if
/// needed, from the largest stratum.
pub fn allocate_strata(total_budget: usize, player_count: usize) -> Result<StrataPlan> {
    if player_count == 0 || total_budget < 1 || total_budget < player_count {
        return Err(Error::InvalidBudget {
            budget: total_budget,
            players: player_count,
        });
    }
    let weights: Vec<f64> = (0..player_count)
        .map(|k| ((k + 1) as f64).powf(2.0 / 3.0))
        .collect();
    let denominator: f64 = weights.iter().sum();

    let mut fractional = Vec::with_capacity(player_count);
    let mut per_stratum = Vec::with_capacity(player_count);
    for (j, w) in weights.iter().enumerate() {
        let raw = total_budget as f64 * w / denominator;
        let floor = raw.floor();
        fractional.push(raw - floor);
        let cap = binomial(player_count - 1, j);
        per_stratum.push((floor as u128).min(cap) as usize);
    }

    let mut leftover = total_budget - per_stratum.iter().sum::<usize>();
    let mut empty: Vec<usize> = (0..player_count).filter(|&j| per_stratum[j] == 0).collect();
    empty.sort_by(|&a, &b| fractional[b].total_cmp(&fractional[a]).then(a.cmp(&b)));
    for j in empty {
        if leftover > 0 {
            leftover -= 1;
        } else {
            // budget >= player_count guarantees a donor with at least two
            let donor = (0..player_count)
                .filter(|&k| per_stratum[k] > 1)
                .max_by(|&a, &b| per_stratum[a].cmp(&per_stratum[b]).then(b.cmp(&a)))
                .expect("a stratum with spare budget");
            per_stratum[donor] -= 1;
        }
        per_stratum[j] = 1;
    }

    Ok(StrataPlan {
        total_budget,
        per_stratum,
    })
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub(crate) fn binomial_usize(n: usize, k: usize) -> usize {
    usize::try_from(binomial(n, k)).unwrap_or(usize::MAX)
}
