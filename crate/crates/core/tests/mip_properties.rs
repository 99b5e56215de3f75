mod common;

use std::collections::HashMap;

use common::{close, identical_spec, net_spec};
use elastic_restaking::brute_force::min_budget_bruteforce;
use elastic_restaking::lp::{LpStatus, Sense};
use elastic_restaking::mip::{
    build_budget_mip, build_byzantine_mip, budget_vars, byzantine_vars, max_byzantine_fraction, min_budget, solve_mip,
    MipProblem, MipSettings, MipSolution,
};
use proptest::prelude::*;

fn traced() -> MipSettings {
    MipSettings { trace: true, ..MipSettings::default() }
}

fn check_bounds(p: &MipProblem<f64>, sol: &MipSolution<f64>) -> Result<(), TestCaseError> {
    let bound: HashMap<usize, f64> = sol.trace.iter().map(|t| (t.id, t.bound)).collect();
    for node in &sol.trace {
        let Some(parent) = node.parent else { continue };
        let up = bound[&parent];
        match p.lp.sense {
            Sense::Maximize => prop_assert!(node.bound <= up + 1e-7, "child {} above parent {up}", node.bound),
            Sense::Minimize => prop_assert!(node.bound >= up - 1e-7, "child {} below parent {up}", node.bound),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_budget_matches_exhaustive_search(spec in net_spec(4, 4)) {
        let net = spec.build::<f64>();
        let mip = min_budget(&net).unwrap().unwrap();
        let exhaustive = min_budget_bruteforce(&net).unwrap().unwrap();
        prop_assert!((mip - exhaustive).abs() <= 1e-6, "program {mip} vs exhaustive {exhaustive}");
    }

    #[test]
    fn node_bounds_dominate_children(spec in net_spec(3, 3), budget in 0usize..=4) {
        let net = spec.build::<f64>();
        let p = build_budget_mip(&net);
        check_bounds(&p, &solve_mip(&p, &traced()).unwrap())?;
        let p = build_byzantine_mip(&net, &(budget as f64)).unwrap();
        check_bounds(&p, &solve_mip(&p, &traced()).unwrap())?;
    }

    #[test]
    fn budget_program_costs_are_linearized_mins(spec in net_spec(4, 4)) {
        let net = spec.build::<f64>();
        let sol = solve_mip(&build_budget_mip(&net), &MipSettings::default()).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let x = budget_vars(&net);
        for v in 0..net.n_validators() {
            let aimed: f64 = (0..net.n_services()).map(|s| sol.values[x.stake_used(v, s)]).sum();
            let cost = sol.values[x.cost(v)];
            prop_assert!(close(cost, net.stake(v).min(aimed), 1e-6), "c = {cost}, σ = {}, Σα = {aimed}", net.stake(v));
        }
    }

    #[test]
    fn byzantine_program_linearizations_hold(spec in net_spec(3, 3), budget in 0usize..=4) {
        let net = spec.build::<f64>();
        let sol = solve_mip(&build_byzantine_mip(&net, &(budget as f64)).unwrap(), &MipSettings::default()).unwrap();
        prop_assume!(sol.status == LpStatus::Optimal);
        let x = byzantine_vars(&net);
        let val = |j: usize| sol.values[j];
        for v in 0..net.n_validators() {
            let slashed: f64 = (0..net.n_services()).map(|s| net.allocation(v, s) * val(x.byzantine(s))).sum();
            let r = (net.stake(v) - slashed).max(0.0);
            prop_assert!(close(val(x.remaining_stake(v)), r, 1e-6), "r = {} expected {r}", val(x.remaining_stake(v)));
            let aimed: f64 = (0..net.n_services()).map(|s| val(x.stake_used(v, s))).sum();
            prop_assert!(close(val(x.cost(v)), r.min(aimed), 1e-6));
            for s in 0..net.n_services() {
                let a = net.allocation(v, s).min(r);
                prop_assert!(close(val(x.remaining_allocation(v, s)), a, 1e-6));
            }
        }
    }

    #[test]
    fn byzantine_fraction_never_grows_with_budget(spec in identical_spec(3, 3), low in 0usize..=4, step in 0usize..=4) {
        let net = spec.build::<f64>();
        let at_low = max_byzantine_fraction(&net, &(low as f64)).unwrap();
        let at_high = max_byzantine_fraction(&net, &((low + step) as f64)).unwrap();
        prop_assert!(at_high <= at_low + 1e-9, "{at_high} > {at_low}");
    }
}
