mod common;

use common::{attack_matrix, attack_parts, net_spec, NetSpec, THRESHOLDS};
use elastic_restaking::brute_force::best_attack;
use elastic_restaking::{Attack, Rational, Scalar};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn with_attack(max_v: usize, max_s: usize) -> impl Strategy<Value = (NetSpec, Vec<Vec<usize>>)> {
    net_spec(max_v, max_s).prop_flat_map(|spec| {
        let (n, m) = (spec.stake.len(), spec.prize.len());
        (Just(spec), attack_parts(n, m))
    })
}

/// Two disjoint service subsets given as membership labels 0 (neither), 1 (A), 2 (B).
fn with_split(max_v: usize, max_s: usize) -> impl Strategy<Value = (NetSpec, Vec<u8>)> {
    net_spec(max_v, max_s).prop_flat_map(|spec| {
        let m = spec.prize.len();
        (Just(spec), prop::collection::vec(0u8..=2, m))
    })
}

/// Networks with cheap services, so the sufficient condition holds often.
fn cheap_services() -> impl Strategy<Value = NetSpec> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(4usize..=8, n),
            prop::collection::vec(prop::collection::vec(1usize..=4, m), n),
            prop::collection::vec(2..THRESHOLDS.len(), m),
            prop::collection::vec(1usize..=2, m),
        )
            .prop_map(|(stake, quarters, threshold, prize)| NetSpec { stake, quarters, threshold, prize })
    })
}

proptest! {
    #[test]
    fn raising_stake_used_never_shrinks_attacked_set_or_cost(
        (spec, parts) in with_attack(4, 4),
        pick in any::<prop::sample::Index>(),
        raise in 1usize..=4,
    ) {
        let net = spec.build::<Rational>();
        let (n, m) = (net.n_validators(), net.n_services());
        let cell = pick.index(n * m);
        let (v, s) = (cell / m, cell % m);
        let mut higher = parts.clone();
        higher[v][s] = (parts[v][s] + raise).min(4);
        let before = net.evaluate_attack(&Attack::from_matrix(&net, attack_matrix(&net, &parts)).unwrap()).unwrap();
        let after = net.evaluate_attack(&Attack::from_matrix(&net, attack_matrix(&net, &higher)).unwrap()).unwrap();
        prop_assert!(before.attacked.iter().all(|s| after.attacked.contains(s)));
        prop_assert!(after.total_cost >= before.total_cost);
    }

    #[test]
    fn validator_cost_is_capped((spec, parts) in with_attack(4, 4)) {
        let net = spec.build::<Rational>();
        let attack = Attack::from_matrix(&net, attack_matrix(&net, &parts)).unwrap();
        let eval = net.evaluate_attack(&attack).unwrap();
        for v in 0..net.n_validators() {
            let aimed = eval.attacked.iter().fold(Rational::zero(), |acc, &s| acc + attack.get(v, s));
            prop_assert!(eval.validator_cost[v] <= *net.stake(v));
            prop_assert!(eval.validator_cost[v] <= aimed);
        }
    }

    #[test]
    fn prize_shares_sum_to_one((spec, parts) in with_attack(4, 4)) {
        let net = spec.build::<f64>();
        let eval = net.evaluate_attack(&Attack::from_matrix(&net, attack_matrix(&net, &parts)).unwrap()).unwrap();
        let total: f64 = net.prize_shares(&eval).iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9, "shares sum to {total}");
        let exact = spec.build::<Rational>();
        let eval = exact.evaluate_attack(&Attack::from_matrix(&exact, attack_matrix(&exact, &parts)).unwrap()).unwrap();
        let total = exact.prize_shares(&eval).into_iter().fold(Rational::zero(), |a, b| a + b);
        prop_assert!(total.is_one());
    }

    #[test]
    fn sequential_slashing_matches_joint((spec, labels) in with_split(4, 4)) {
        let net = spec.build::<Rational>();
        let ids = net.service_ids().to_vec();
        let a: Vec<usize> = (0..labels.len()).filter(|&s| labels[s] == 1).collect();
        let b: Vec<&str> = (0..labels.len()).filter(|&s| labels[s] == 2).map(|s| ids[s].as_str()).collect();
        let both: Vec<usize> = (0..labels.len()).filter(|&s| labels[s] != 0).collect();

        let first = net.apply_byzantine(&a).unwrap();
        let sequential = first.apply_byzantine_ids(&b).unwrap();
        let joint = net.apply_byzantine(&both).unwrap();
        let clipped = (0..net.n_validators()).any(|v| {
            (0..net.n_services()).any(|s| labels[s] != 1 && net.allocation(v, s) > first.stake(v))
        });
        for v in 0..net.n_validators() {
            prop_assert!(sequential.stake(v) <= joint.stake(v));
        }
        if !clipped {
            prop_assert_eq!(sequential, joint);
        }
    }

    #[test]
    fn sufficient_condition_rules_out_profitable_attacks(spec in cheap_services()) {
        let net = spec.build::<Rational>();
        prop_assume!(net.generalized_eigenlayer_condition());
        let best = best_attack(&net).unwrap().unwrap();
        prop_assert!(best.margin < Rational::zero(), "profitable attack with margin {}", best.margin);
    }

    #[test]
    fn slashing_stretches_allocations_to_new_stake((spec, labels) in with_split(4, 4)) {
        let net = spec.build::<Rational>();
        let byz: Vec<usize> = (0..labels.len()).filter(|&s| labels[s] != 0).collect();
        let slashed = net.apply_byzantine(&byz).unwrap();
        let kept: Vec<usize> = (0..labels.len()).filter(|&s| labels[s] == 0).collect();
        for v in 0..net.n_validators() {
            for (k, &s) in kept.iter().enumerate() {
                prop_assert_eq!(slashed.allocation(v, k).clone(), net.allocation(v, s).min_of(slashed.stake(v)));
            }
        }
    }
}
