//! Brute-force reference implementations for cross-checking the optimized
//! estimators. Slow on purpose: nothing here is cached or clever.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{Coalition, CoalitionGame, Estimator, ShapleyVector, TableGame};
use crate::{Error, Result};

pub const PERMUTATION_MAX_PLAYERS: usize = 8;
pub const SUBSET_MAX_PLAYERS: usize = 12;

fn vector(values: Vec<f64>) -> ShapleyVector {
    ShapleyVector {
        values,
        method: Estimator::Exact,
        seed: None,
        budget: None,
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Averages marginal contributions over every ordering of the players.
pub fn permutation_shapley<G: CoalitionGame + ?Sized>(game: &G) -> Result<ShapleyVector> {
    let n = game.player_count();
    if n > PERMUTATION_MAX_PLAYERS {
        return Err(Error::TooManyPlayers { players: n, max: PERMUTATION_MAX_PLAYERS });
    }
    let mut totals = vec![0.0; n];
    let mut orders = 0usize;
    for order in (0..n).permutations(n) {
        let mut coalition = Coalition::empty(n);
        let mut before = game.value(&coalition)?;
        for &p in &order {
            coalition.insert(p);
            let after = game.value(&coalition)?;
            totals[p] += after - before;
            before = after;
        }
        orders += 1;
    }
    Ok(vector(totals.into_iter().map(|t| t / orders as f64).collect()))
}

/// Sums `|S|!(n−|S|−1)!/n! · (v(S ∪ {i}) − v(S))` over every subset `S`
/// not containing `i`, evaluating the game afresh each time.
pub fn naive_subset_shapley<G: CoalitionGame + ?Sized>(game: &G) -> Result<ShapleyVector> {
    let n = game.player_count();
    if n > SUBSET_MAX_PLAYERS {
        return Err(Error::TooManyPlayers { players: n, max: SUBSET_MAX_PLAYERS });
    }
    let n_fact = factorial(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&p| p != i).collect();
        let mut phi = 0.0;
        for members in others.iter().copied().powerset() {
            let s = members.len();
            let weight = factorial(s) * factorial(n - s - 1) / n_fact;
            let without = Coalition::from_members(n, members.iter().copied());
            let with = without.with(i);
            phi += weight * (game.value(&with)? - game.value(&without)?);
        }
        values.push(phi);
    }
    Ok(vector(values))
}

/// Every coalition of `size` players drawn from everyone except `player`.
pub fn enumerate_stratum(player_count: usize, player: usize, size: usize) -> Vec<Coalition> {
    (0..player_count)
        .filter(|&p| p != player)
        .combinations(size)
        .map(|members| Coalition::from_members(player_count, members))
        .collect()
}

/// A game with independent uniform values in `[-1, 1]` on every coalition.
pub fn random_game(players: usize, seed: u64) -> TableGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..1usize << players).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    TableGame::new(players, values).expect("table has 2^n entries")
}

/// Result of running one property suite over many random games.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `v'(S) = (v(S) + v(swap(S))) / 2` makes players 0 and 1 interchangeable.
fn symmetrized(game: &TableGame) -> TableGame {
    let n = game.player_count();
    let v = game.values();
    let swap = |m: usize| {
        let (a, b) = (m & 1, (m >> 1) & 1);
        (m & !3) | (a << 1) | b
    };
    let values = (0..v.len()).map(|m| 0.5 * (v[m] + v[swap(m)])).collect();
    TableGame::new(n, values).expect("same size")
}

/// Adds a last player whose only effect is a constant `c` when present.
fn with_dummy(game: &TableGame, c: f64) -> TableGame {
    let n = game.player_count();
    let v = game.values();
    let values = (0..2 * v.len())
        .map(|m| v[m & (v.len() - 1)] + if m >= v.len() { c } else { 0.0 })
        .collect();
    TableGame::new(n + 1, values).expect("doubled table")
}

/// Efficiency, symmetry, dummy and additivity of [`exact_shapley`] on
/// `games` random games with 1 to `max_players` players.
///
/// [`exact_shapley`]: crate::game::exact_shapley
pub fn axiom_suite(games: usize, max_players: usize, seed: u64, tol: f64) -> SuiteOutcome {
    use crate::game::exact_shapley;
    let mut failures = Vec::new();
    for k in 0..games {
        let n = 1 + k % max_players.max(1);
        let s = seed.wrapping_add(k as u64);
        let g = random_game(n, s);
        let phi = match exact_shapley(&g) {
            Ok(p) => p.values,
            Err(e) => {
                failures.push(format!("game {k}: {e}"));
                continue;
            }
        };
        let v = g.values();
        let gap = (phi.iter().sum::<f64>() - (v[v.len() - 1] - v[0])).abs();
        if gap > tol {
            failures.push(format!("game {k} (n={n}): efficiency off by {gap:e}"));
        }
        if n >= 2 {
            let sym = exact_shapley(&symmetrized(&g)).expect("small game").values;
            if (sym[0] - sym[1]).abs() > tol {
                failures.push(format!("game {k} (n={n}): symmetry off by {:e}", (sym[0] - sym[1]).abs()));
            }
        }
        if n < max_players.max(2) {
            let c = (s % 7) as f64 * 0.25 - 0.75;
            let d = exact_shapley(&with_dummy(&g, c)).expect("small game").values;
            if (d[n] - c).abs() > tol || max_gap(&d[..n], &phi) > tol {
                failures.push(format!("game {k} (n={n}): dummy player misattributed"));
            }
        }
        let h = random_game(n, s ^ 0xA5A5_A5A5);
        let sum = g.add(&h).expect("same size");
        let lhs = exact_shapley(&sum).expect("small game").values;
        let rhs: Vec<f64> = phi
            .iter()
            .zip(exact_shapley(&h).expect("small game").values)
            .map(|(a, b)| a + b)
            .collect();
        let gap = max_gap(&lhs, &rhs);
        if gap > tol {
            failures.push(format!("game {k} (n={n}): additivity off by {gap:e}"));
        }
    }
    SuiteOutcome { name: "axioms", cases: games, failures }
}

/// Agreement of the exact, permutation and subset estimators.
pub fn oracle_suite(games: usize, max_players: usize, seed: u64, tol: f64) -> SuiteOutcome {
    use crate::game::exact_shapley;
    let mut failures = Vec::new();
    for k in 0..games {
        let n = 1 + k % max_players.clamp(1, PERMUTATION_MAX_PLAYERS);
        let g = random_game(n, seed.wrapping_add(k as u64));
        let results = (
            exact_shapley(&g),
            permutation_shapley(&g),
            naive_subset_shapley(&g),
        );
        match results {
            (Ok(e), Ok(p), Ok(s)) => {
                let gap = max_gap(&e.values, &p.values).max(max_gap(&e.values, &s.values));
                if gap > tol {
                    failures.push(format!("game {k} (n={n}): estimators differ by {gap:e}"));
                }
            }
            (e, p, s) => failures.push(format!(
                "game {k}: {:?}",
                [e.err(), p.err(), s.err()].into_iter().flatten().next()
            )),
        }
    }
    SuiteOutcome { name: "oracle-equivalence", cases: games, failures }
}

/// Sampling with a saturated plan must reproduce the exact values for
/// every seed.
pub fn saturation_suite(games: usize, max_players: usize, seeds: u64, seed: u64, tol: f64) -> SuiteOutcome {
    use crate::game::{exact_shapley, sampled_shapley, StrataPlan};
    let mut failures = Vec::new();
    for k in 0..games {
        let n = 1 + k % max_players.max(1);
        let s = seed.wrapping_add(k as u64);
        let g = random_game(n, s);
        let exact = exact_shapley(&g).expect("small game").values;
        let plan = StrataPlan::saturated(n);
        for r in 0..seeds {
            match sampled_shapley(&g, &plan, s.wrapping_mul(31).wrapping_add(r)) {
                Ok(phi) => {
                    let gap = max_gap(&phi.values, &exact);
                    if gap > tol {
                        failures.push(format!("game {k} (n={n}) seed {r}: off by {gap:e}"));
                    }
                }
                Err(e) => failures.push(format!("game {k} seed {r}: {e}")),
            }
        }
    }
    SuiteOutcome { name: "saturation", cases: games * seeds as usize, failures }
}
