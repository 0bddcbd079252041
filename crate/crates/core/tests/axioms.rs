use proptest::prelude::*;
use shats_core::game::{CoalitionGame, 
    allocate_strata, exact_shapley, exact_shapley_stratified, sampled_shapley, Coalition, FnGame, StrataPlan, TableGame,
};
use shats_core::oracle::{naive_subset_shapley, permutation_shapley, random_game};

fn table(players: usize) -> impl Strategy<Value = TableGame> {
    prop::collection::vec(-10.0f64..10.0, 1usize << players)
        .prop_map(move |v| TableGame::new(players, v).unwrap())
}

fn any_game() -> impl Strategy<Value = TableGame> {
    (1usize..=7).prop_flat_map(table)
}

proptest! {
    #[test]
    fn efficiency(g in any_game()) {
        let phi = exact_shapley(&g).unwrap();
        let v = g.values();
        prop_assert!((phi.sum() - (v[v.len() - 1] - v[0])).abs() < 1e-9);
    }

    #[test]
    fn additivity((a, b) in (1usize..=6).prop_flat_map(|n| (table(n), table(n)))) {
        let sum = exact_shapley(&a.add(&b).unwrap()).unwrap().values;
        let pa = exact_shapley(&a).unwrap().values;
        let pb = exact_shapley(&b).unwrap().values;
        for i in 0..sum.len() {
            prop_assert!((sum[i] - pa[i] - pb[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn relabeling_players_permutes_values(g in any_game(), rot in 0usize..7) {
        let n = g.player_count();
        let shift = rot % n;
        // Player i of the relabeled game is player (i + shift) % n of g.
        let relabeled = FnGame::new(n, |c: &Coalition| {
            let original = Coalition::from_members(n, c.members().map(|i| (i + shift) % n));
            g.values()[original.to_mask().unwrap() as usize]
        });
        let phi = exact_shapley(&g).unwrap().values;
        let psi = exact_shapley(&relabeled).unwrap().values;
        for i in 0..n {
            prop_assert!((psi[i] - phi[(i + shift) % n]).abs() < 1e-9);
        }
    }

    #[test]
    fn three_estimators_agree(g in (1usize..=6).prop_flat_map(table)) {
        let e = exact_shapley(&g).unwrap().values;
        let s = exact_shapley_stratified(&g).unwrap().values;
        let p = permutation_shapley(&g).unwrap().values;
        let n = naive_subset_shapley(&g).unwrap().values;
        for i in 0..e.len() {
            prop_assert!((e[i] - p[i]).abs() < 1e-9);
            prop_assert!((e[i] - n[i]).abs() < 1e-9);
            prop_assert!((e[i] - s[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn saturated_sampling_is_exact(g in (1usize..=8).prop_flat_map(table), seed in any::<u64>()) {
        let e = exact_shapley(&g).unwrap().values;
        let s = sampled_shapley(&g, &StrataPlan::saturated(g.player_count()), seed).unwrap().values;
        for i in 0..e.len() {
            prop_assert!((e[i] - s[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn sampled_estimator_is_unbiased_on_average() {
    let g = random_game(6, 42);
    let exact = exact_shapley(&g).unwrap().values;
    let plan = allocate_strata(30, 6).unwrap();
    let runs = 400;
    let mut mean = vec![0.0; 6];
    for seed in 0..runs {
        for (m, v) in mean.iter_mut().zip(sampled_shapley(&g, &plan, seed).unwrap().values) {
            *m += v / runs as f64;
        }
    }
    for (m, e) in mean.iter().zip(&exact) {
        assert!((m - e).abs() < 0.05, "{m} vs {e}");
    }
}
