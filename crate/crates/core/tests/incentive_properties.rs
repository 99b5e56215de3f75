use elastic_restaking::incentives::{
    equilibrium_allocations, equilibrium_network, validator_reward, verify_best_response, RewardPools,
};
use elastic_restaking::{Network, Rational, Scalar};
use proptest::prelude::*;

/// Stakes, pool sizes and a target degree in quarters, with every
/// equilibrium share at most 1.
#[derive(Debug, Clone)]
struct Instance {
    stakes: Vec<usize>,
    rewards: Vec<usize>,
    degree_quarters: usize,
}

impl Instance {
    fn network<T: Scalar>(&self) -> Network<T> {
        let m = self.rewards.len();
        let stake: Vec<T> = self.stakes.iter().map(|&s| T::from_count(s)).collect();
        let zero = vec![vec![T::zero(); m]; stake.len()];
        let half = T::one() / T::from_count(2);
        Network::from_matrix(stake, zero, vec![half; m], vec![T::one(); m]).unwrap()
    }

    fn pools<T: Scalar>(&self, net: &Network<T>, scale: usize) -> RewardPools<T> {
        let reward = self.rewards.iter().map(|&r| T::from_count(r * scale)).collect();
        let degree = T::from_count(self.degree_quarters) / T::from_count(4);
        RewardPools::new(net.service_ids().to_vec(), reward, degree).unwrap()
    }
}

fn instance() -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec(1usize..=20, 1..=4),
        prop::collection::vec(1usize..=6, 1..=4),
        1usize..=16,
    )
        .prop_map(|(stakes, rewards, degree_quarters)| Instance { stakes, rewards, degree_quarters })
        .prop_filter("equilibrium share above 1", |i| {
            let total: usize = i.rewards.iter().sum();
            i.rewards.iter().all(|&r| i.degree_quarters * r <= 4 * total)
        })
}

proptest! {
    #[test]
    fn rewards_are_budget_balanced(inst in instance()) {
        let net = inst.network::<f64>();
        let pools = inst.pools(&net, 1);
        let eq = equilibrium_network(&net, &pools).unwrap();
        let paid: f64 = (0..eq.n_validators())
            .flat_map(|v| (0..eq.n_services()).map(move |s| (v, s)))
            .map(|(v, s)| validator_reward(&eq, &pools, v, s))
            .sum();
        prop_assert!((paid - pools.total()).abs() <= 1e-9, "paid {paid} of {}", pools.total());
    }

    #[test]
    fn equilibrium_degree_is_exactly_the_target(inst in instance()) {
        let net = inst.network::<Rational>();
        let pools = inst.pools(&net, 1);
        let eq = equilibrium_network(&net, &pools).unwrap();
        for v in 0..eq.n_validators() {
            prop_assert_eq!(eq.restaking_degree_at(v), pools.target_degree.clone());
        }
    }

    #[test]
    fn scaling_pools_keeps_allocations(inst in instance(), scale in 2usize..=7) {
        let net = inst.network::<Rational>();
        let base = equilibrium_allocations(net.stakes(), &inst.pools(&net, 1)).unwrap();
        let scaled = equilibrium_allocations(net.stakes(), &inst.pools(&net, scale)).unwrap();
        prop_assert_eq!(base, scaled);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn no_validator_gains_by_deviating(inst in instance()) {
        let net = inst.network::<f64>();
        let pools = inst.pools(&net, 1);
        let eq = equilibrium_network(&net, &pools).unwrap();
        for v in 0..eq.n_validators() {
            let gain = verify_best_response(&eq, &pools, v, 12);
            prop_assert!(gain <= 1e-6, "validator {v} gains {gain}");
            prop_assert!(gain >= 0.0);
        }
    }
}
