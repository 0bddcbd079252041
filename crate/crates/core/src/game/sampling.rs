use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::strata::binomial;
use super::{Coalition, CoalitionGame, Estimator, ShapleyVector, StrataPlan};
use crate::summation::KahanSum;
use crate::{Error, Result};

/// Draws `count` distinct coalitions of exactly `size` players, none of which
/// contains `player`, uniformly without replacement.
pub fn sample_stratum(
    player_count: usize,
    player: usize,
    size: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Coalition>> {
    if player >= player_count || size >= player_count {
        return Err(Error::InvalidDimensions(format!(
            "stratum (player {player}, size {size}) outside a {player_count}-player game"
        )));
    }
    let available = binomial(player_count - 1, size);
    if count as u128 > available {
        return Err(Error::StratumExhausted {
            player,
            size,
            requested: count,
            available,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }

    let others: Vec<usize> = (0..player_count).filter(|&p| p != player).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if available <= 2 * count as u128 {
        // Dense stratum: enumerate it and pick a random subset of the list.
        let all = combinations(&others, size, player_count);
        let picked = index::sample(&mut rng, all.len(), count);
        return Ok(picked.into_iter().map(|i| all[i].clone()).collect());
    }

    // Sparse stratum: rejection sampling needs fewer than two draws per hit.
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let members = index::sample(&mut rng, others.len(), size);
        let c = Coalition::from_members(player_count, members.into_iter().map(|k| others[k]));
        if seen.insert(c.clone()) {
            out.push(c);
        }
    }
    Ok(out)
}

fn combinations(pool: &[usize], k: usize, player_count: usize) -> Vec<Coalition> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(Coalition::from_members(
            player_count,
            idx.iter().map(|&i| pool[i]),
        ));
        // advance to the next k-combination in lexicographic order
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + pool.len() - k) else {
            return out;
        };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Seed for the stratum `(player, size)` of a run seeded with `seed`.
///
/// Each stratum draws from its own stream, so results do not depend on the
/// order in which strata are visited.
pub fn stratum_seed(seed: u64, player: usize, size: usize) -> u64 {
    splitmix(seed ^ splitmix(((player as u64) << 32) ^ size as u64 ^ 0x5348_6154_5300_0000))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stratified Monte-Carlo Shapley estimate.
///
/// For every player and every size `j` with a non-zero allocation, the mean
/// marginal contribution over `plan.per_stratum[j]` sampled coalitions
/// estimates the stratum mean; the player's value is the sum of those means
/// divided by the player count. Coalition values are memoised across players
/// and strata.
pub fn sampled_shapley<G: CoalitionGame + ?Sized>(
    game: &G,
    plan: &StrataPlan,
    seed: u64,
) -> Result<ShapleyVector> {
    let n = game.player_count();
    if plan.player_count() != n {
        return Err(Error::PlanMismatch {
            expected: n,
            found: plan.player_count(),
        });
    }

    let mut cache: HashMap<Coalition, f64> = HashMap::new();
    let mut eval = |c: Coalition| -> Result<f64> {
        if let Some(&v) = cache.get(&c) {
            return Ok(v);
        }
        let v = game.value(&c)?;
        cache.insert(c, v);
        Ok(v)
    };

    let mut values = Vec::with_capacity(n);
    for player in 0..n {
        let mut total = KahanSum::default();
        for (size, &m) in plan.per_stratum.iter().enumerate() {
            if m == 0 {
                continue;
            }
            let sample = sample_stratum(n, player, size, m, stratum_seed(seed, player, size))?;
            let mut stratum = KahanSum::default();
            for without in sample {
                let with = without.with(player);
                stratum.add(eval(with)? - eval(without)?);
            }
            total.add(stratum.total() / m as f64);
        }
        values.push(total.total() / n as f64);
    }

    Ok(ShapleyVector {
        values,
        method: Estimator::Sampled,
        seed: Some(seed),
        budget: Some(plan.total_budget),
    })
}
