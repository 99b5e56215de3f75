//! Target-degree reward scheme and the network formation game.
//!
//! Each service splits its reward pool among validators in proportion to
//! their allocations, but only validators whose restaking degree is at most
//! the target `d*` get paid. A service nobody allocates to pays nothing.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModelError, Network};
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IncentiveError {
    #[error("reward of `{0}` must be positive")]
    NonPositiveReward(String),
    #[error("target degree must be positive")]
    NonPositiveTargetDegree,
    #[error("no reward pool for service `{0}`")]
    MissingReward(String),
    #[error("reward pool for unknown service `{0}`")]
    UnknownService(String),
    #[error("service `{service}` would need {share:.6} of each validator's stake (more than all of it)")]
    Precondition { service: String, share: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Reward pool per service and the target degree `d*`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardPools<T> {
    pub services: Vec<String>,
    pub reward: Vec<T>,
    pub target_degree: T,
}

impl<T: Scalar> RewardPools<T> {
    pub fn new(services: Vec<String>, reward: Vec<T>, target_degree: T) -> Result<Self, IncentiveError> {
        if !(target_degree > T::zero()) {
            return Err(IncentiveError::NonPositiveTargetDegree);
        }
        if let Some((id, _)) = services.iter().zip(&reward).find(|(_, r)| !(**r > T::zero())) {
            return Err(IncentiveError::NonPositiveReward(id.clone()));
        }
        Ok(Self { services, reward, target_degree })
    }

    /// Pools keyed by service id, ordered like `net`'s services.
    pub fn for_network(net: &Network<T>, rewards: &BTreeMap<String, T>, target_degree: T) -> Result<Self, IncentiveError> {
        if let Some(id) = rewards.keys().find(|id| net.service_index(id).is_err()) {
            return Err(IncentiveError::UnknownService(id.clone()));
        }
        let reward = net
            .service_ids()
            .iter()
            .map(|id| rewards.get(id).cloned().ok_or_else(|| IncentiveError::MissingReward(id.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(net.service_ids().to_vec(), reward, target_degree)
    }

    pub fn total(&self) -> T {
        sum(self.reward.iter().cloned())
    }

    /// `d*·R(s)/ΣR`, the fraction of stake each validator puts on `s` at
    /// equilibrium.
    pub fn equilibrium_share(&self, s: usize) -> T {
        self.target_degree.clone() * self.reward[s].clone() / self.total()
    }

    /// Same pools with a different target degree.
    pub fn with_target_degree(&self, target_degree: T) -> Result<Self, IncentiveError> {
        Self::new(self.services.clone(), self.reward.clone(), target_degree)
    }
}

fn passes_gate<T: Scalar>(stake: &T, row: &[T], target: &T) -> bool {
    let degree = sum(row.iter().cloned()) / stake.clone();
    degree.approx_le(target)
}

fn share<T: Scalar>(own: &T, others: &T, reward: &T) -> T {
    let total = own.clone() + others.clone();
    if total.is_zero() {
        T::zero()
    } else {
        own.clone() / total * reward.clone()
    }
}

/// Reward of validator `v` from service `s`.
pub fn validator_reward<T: Scalar>(net: &Network<T>, pools: &RewardPools<T>, v: usize, s: usize) -> T {
    if !passes_gate(net.stake(v), &net.allocations()[v], &pools.target_degree) {
        return T::zero();
    }
    let own = net.allocation(v, s);
    share(own, &(net.total_allocation(s) - own.clone()), &pools.reward[s])
}

/// Sum of `v`'s rewards over all services.
pub fn formation_utility<T: Scalar>(net: &Network<T>, pools: &RewardPools<T>, v: usize) -> T {
    deviation_utility(net, pools, v, &net.allocations()[v])
}

/// Utility of `v` if it switched to `row` while everyone else stays put.
pub fn deviation_utility<T: Scalar>(net: &Network<T>, pools: &RewardPools<T>, v: usize, row: &[T]) -> T {
    if !passes_gate(net.stake(v), row, &pools.target_degree) {
        return T::zero();
    }
    sum((0..net.n_services()).map(|s| {
        let others = net.total_allocation(s) - net.allocation(v, s).clone();
        share(&row[s], &others, &pools.reward[s])
    }))
}

/// `w*(v, s) = d*·R(s)/ΣR·σ(v)`.
pub fn equilibrium_allocations<T: Scalar>(stakes: &[T], pools: &RewardPools<T>) -> Result<Vec<Vec<T>>, IncentiveError> {
    let shares: Vec<T> = (0..pools.reward.len()).map(|s| pools.equilibrium_share(s)).collect();
    if let Some(s) = shares.iter().position(|x| *x > T::one()) {
        return Err(IncentiveError::Precondition {
            service: pools.services[s].clone(),
            share: shares[s].to_f64_lossy(),
        });
    }
    Ok(stakes
        .iter()
        .map(|stake| shares.iter().map(|x| x.clone() * stake.clone()).collect())
        .collect())
}

/// `net` with its allocations replaced by the equilibrium profile.
pub fn equilibrium_network<T: Scalar>(net: &Network<T>, pools: &RewardPools<T>) -> Result<Network<T>, IncentiveError> {
    let allocation = equilibrium_allocations(net.stakes(), pools)?;
    Ok(Network::from_parts(
        net.validator_ids().to_vec(),
        net.service_ids().to_vec(),
        net.stakes().to_vec(),
        allocation,
        net.thresholds().to_vec(),
        net.prizes().to_vec(),
        net.base_flags().to_vec(),
    )?)
}

/// Utility-maximizing row for `v` given everyone else, by water-filling on
/// the degree-`d*` budget. Services nobody else backs get a sliver of the
/// budget, since any positive amount collects their full pool.
pub fn best_response<T: Scalar>(net: &Network<T>, pools: &RewardPools<T>, v: usize) -> Vec<T> {
    let m = net.n_services();
    let stake = net.stake(v).to_f64_lossy();
    let reward: Vec<f64> = pools.reward.iter().map(Scalar::to_f64_lossy).collect();
    let others: Vec<f64> = (0..m)
        .map(|s| (net.total_allocation(s) - net.allocation(v, s).clone()).to_f64_lossy())
        .collect();
    let mut budget = (pools.target_degree.to_f64_lossy() * stake).min(m as f64 * stake);
    let mut row = vec![0.0; m];
    let free: Vec<usize> = (0..m).filter(|&s| others[s] <= 0.0).collect();
    if !free.is_empty() {
        let sliver = (budget * 1e-6 / free.len() as f64).min(stake);
        for &s in &free {
            row[s] = sliver;
            budget -= sliver;
        }
    }
    let contested: Vec<usize> = (0..m).filter(|&s| others[s] > 0.0).collect();
    let fill = |lambda: f64| -> Vec<f64> {
        contested
            .iter()
            .map(|&s| ((reward[s] * others[s] / lambda).sqrt() - others[s]).clamp(0.0, stake))
            .collect()
    };
    if !contested.is_empty() {
        let total = |lambda: f64| fill(lambda).iter().sum::<f64>();
        let cap = contested.len() as f64 * stake;
        let amounts = if budget >= cap {
            vec![stake; contested.len()]
        } else {
            // Every amount sits at its cap as λ → 0, so `lo` overshoots the budget.
            let (mut lo, mut hi) = (1e-300, 1.0);
            while total(hi) > budget {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                if total(mid) > budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            fill(hi)
        };
        for (&s, a) in contested.iter().zip(amounts) {
            row[s] = a;
        }
    }
    row.into_iter().map(T::from_f64_lossy).collect()
}

const SEED: u64 = 0x5eed_0f_d57a;
const SIMPLEX_GRID_LIMIT: usize = 20_000;
const RANDOM_SAMPLES: usize = 256;

fn simplex_points(parts: usize, resolution: usize) -> usize {
    // C(resolution + parts - 1, parts - 1), saturating.
    let mut c: usize = 1;
    for i in 1..parts {
        c = c.saturating_mul(resolution + i) / i;
        if c > SIMPLEX_GRID_LIMIT {
            return usize::MAX;
        }
    }
    c
}

fn for_each_composition(parts: usize, total: usize, f: &mut impl FnMut(&[usize])) {
    fn go(k: usize, left: usize, acc: &mut Vec<usize>, parts: usize, f: &mut impl FnMut(&[usize])) {
        if k + 1 == parts {
            acc.push(left);
            f(acc);
            acc.pop();
            return;
        }
        for x in 0..=left {
            acc.push(x);
            go(k + 1, left - x, acc, parts, f);
            acc.pop();
        }
    }
    if parts > 0 {
        go(0, total, &mut Vec::with_capacity(parts), parts, f);
    }
}

/// Largest utility gain `v` can find by deviating while everyone else holds
/// still. Never negative, since staying put is one of the candidates.
///
/// Candidates: a simplex grid at `resolution` on the degree-`d*` budget (or
/// pairwise transfers of `1/resolution` steps when the grid is too large),
/// uniform scalings, Dirichlet samples, single-service all-in rows, rows just
/// past the degree gate, and the water-filling best response.
pub fn verify_best_response<T: Scalar>(net: &Network<T>, pools: &RewardPools<T>, v: usize, resolution: usize) -> T {
    let m = net.n_services();
    let resolution = resolution.max(1);
    let current_row = net.allocations()[v].clone();
    let current = deviation_utility(net, pools, v, &current_row);
    let stake = net.stake(v).clone();
    let budget = pools.target_degree.min_of(&T::from_count(m)) * stake.clone();
    let res = T::from_count(resolution);
    let mut best = current.clone();
    let mut consider = |row: &[T]| {
        if row.iter().any(|x| *x < T::zero() || *x > stake) {
            return;
        }
        let u = deviation_utility(net, pools, v, row);
        if u > best {
            best = u;
        }
    };

    if m > 0 && simplex_points(m, resolution) <= SIMPLEX_GRID_LIMIT {
        for_each_composition(m, resolution, &mut |counts| {
            let row: Vec<T> = counts.iter().map(|&k| budget.clone() * T::from_count(k) / res.clone()).collect();
            consider(&row);
        });
    } else {
        for from in 0..m {
            for to in 0..m {
                if from == to {
                    continue;
                }
                for k in 1..=resolution {
                    let delta = current_row[from].clone() * T::from_count(k) / res.clone();
                    let mut row = current_row.clone();
                    row[from] = row[from].clone() - delta.clone();
                    row[to] = (row[to].clone() + delta).min_of(&stake);
                    consider(&row);
                }
            }
        }
    }

    for k in 0..=2 * resolution {
        let factor = T::from_count(k) / res.clone();
        let row: Vec<T> = current_row.iter().map(|x| x.clone() * factor.clone()).collect();
        consider(&row);
    }

    for s in 0..m {
        let mut row = vec![T::zero(); m];
        row[s] = stake.min_of(&budget);
        consider(&row);
    }

    let past_gate = T::one() + T::from_f64_lossy(1e-6);
    consider(&current_row.iter().map(|x| x.clone() * past_gate.clone()).collect::<Vec<_>>());

    if m >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ v as u64);
        let alpha = vec![1.0; m];
        let dirichlet = Dirichlet::new(&alpha).expect("at least two positive concentrations");
        let budget_f = budget.to_f64_lossy();
        for _ in 0..RANDOM_SAMPLES {
            let x: Vec<f64> = dirichlet.sample(&mut rng);
            let scale = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
            let row: Vec<T> = x.iter().map(|p| T::from_f64_lossy(p * budget_f * scale)).collect();
            consider(&row);
        }
    }

    consider(&best_response(net, pools, v));

    best - current
}

/// [`verify_best_response`] for every validator, in parallel.
pub fn best_response_gains<T: Scalar>(net: &Network<T>, pools: &RewardPools<T>, resolution: usize) -> Vec<T> {
    (0..net.n_validators())
        .into_par_iter()
        .map(|v| verify_best_response(net, pools, v, resolution))
        .collect()
}
