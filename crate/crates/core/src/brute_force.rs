//! Exhaustive attack search for small networks, and the Subset-Sum reduction
//! networks used to test it.
//!
//! For a fixed target set `T`, the cost `Σ_v min(σ_v, Σ_{s∈T} α_vs)` is
//! concave in the attack, so its minimum is found by guessing, per validator,
//! whether the stake cap binds. A capped validator contributes its whole
//! allocation at cost `σ_v`; the remaining validators pay linearly, which
//! leaves a separable covering problem with a closed-form optimum.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Attack, Network};
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("target service set is empty")]
    EmptyTarget,
    #[error("service index {0} out of range")]
    UnknownService(usize),
    #[error("{what} count {found} exceeds the exhaustive-search limit {limit}")]
    TooLarge { what: &'static str, found: usize, limit: usize },
    #[error("reduction needs positive elements and 0 < target ≤ Σ elements")]
    InvalidInstance,
}

/// Validator and service count limit for exhaustive search.
pub const MAX_EXHAUSTIVE: usize = 16;

/// Minimum-cost attack whose attacked set contains `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostedAttack<T> {
    pub cost: T,
    pub attack: Attack<T>,
}

fn check_size<T: Scalar>(net: &Network<T>) -> Result<(), BruteForceError> {
    for (what, found) in [("validator", net.n_validators()), ("service", net.n_services())] {
        if found > MAX_EXHAUSTIVE {
            return Err(BruteForceError::TooLarge { what, found, limit: MAX_EXHAUSTIVE });
        }
    }
    Ok(())
}

/// Cheapest attack capturing every service in `target`, or `None` if the
/// allocations cannot reach the thresholds.
pub fn min_cost_attack<T: Scalar>(
    net: &Network<T>,
    target: &[usize],
) -> Result<Option<CostedAttack<T>>, BruteForceError> {
    check_size(net)?;
    if target.is_empty() {
        return Err(BruteForceError::EmptyTarget);
    }
    if let Some(&s) = target.iter().find(|&&s| s >= net.n_services()) {
        return Err(BruteForceError::UnknownService(s));
    }
    Ok(min_cost_unchecked(net, target))
}

fn min_cost_unchecked<T: Scalar>(net: &Network<T>, target: &[usize]) -> Option<CostedAttack<T>> {
    let n = net.n_validators();
    let required: Vec<T> = target
        .iter()
        .map(|&s| net.threshold(s).clone() * net.total_allocation(s))
        .collect();
    let mut best: Option<(T, u32)> = None;
    for mask in 0u32..1 << n {
        let Some(cost) = capped_cost(net, target, &required, mask) else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, mask));
        }
    }
    let (cost, mask) = best?;
    Some(CostedAttack { cost, attack: capped_attack(net, target, &required, mask) })
}

/// Cost when exactly the validators in `mask` hit their stake cap.
fn capped_cost<T: Scalar>(net: &Network<T>, target: &[usize], required: &[T], mask: u32) -> Option<T> {
    let n = net.n_validators();
    let capped = |v: usize| mask >> v & 1 == 1;
    let mut cost = sum((0..n).filter(|&v| capped(v)).map(|v| net.stake(v).clone()));
    for (k, &s) in target.iter().enumerate() {
        let covered = sum((0..n).filter(|&v| capped(v)).map(|v| net.allocation(v, s).clone()));
        let residual = (required[k].clone() - covered).max_of(&T::zero());
        let available = sum((0..n).filter(|&v| !capped(v)).map(|v| net.allocation(v, s).clone()));
        if !residual.approx_le(&available) {
            return None;
        }
        cost = cost + residual;
    }
    Some(cost)
}

fn capped_attack<T: Scalar>(net: &Network<T>, target: &[usize], required: &[T], mask: u32) -> Attack<T> {
    let n = net.n_validators();
    let mut attack = Attack::none(net);
    for (k, &s) in target.iter().enumerate() {
        let mut residual = required[k].clone();
        for v in (0..n).filter(|&v| mask >> v & 1 == 1) {
            attack.set(v, s, net.allocation(v, s).clone());
            residual = residual - net.allocation(v, s).clone();
        }
        for v in (0..n).filter(|&v| mask >> v & 1 == 0) {
            if !(residual > T::zero()) {
                break;
            }
            let take = residual.min_of(net.allocation(v, s));
            residual = residual - take.clone();
            attack.set(v, s, take);
        }
    }
    attack
}

/// Attack maximizing `prize − cost` over all non-empty target sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BestAttack<T> {
    pub margin: T,
    pub target: Vec<usize>,
    pub attack: Attack<T>,
}

fn subsets(m: usize) -> impl ParallelIterator<Item = Vec<usize>> {
    (1u32..1 << m)
        .into_par_iter()
        .map(move |mask| (0..m).filter(|&s| mask >> s & 1 == 1).collect())
}

/// Most profitable attack. The network is secure iff the margin is negative.
/// `None` when no service exists.
pub fn best_attack<T: Scalar>(net: &Network<T>) -> Result<Option<BestAttack<T>>, BruteForceError> {
    check_size(net)?;
    let best = subsets(net.n_services())
        .filter_map(|target| {
            let prize = sum(target.iter().map(|&s| net.prize(s).clone()));
            min_cost_unchecked(net, &target).map(|c| BestAttack { margin: prize - c.cost, target, attack: c.attack })
        })
        .reduce_with(better_attack);
    Ok(best)
}

/// Larger margin wins; ties go to the lexicographically smaller target so the
/// parallel reduction is deterministic.
fn better_attack<T: Scalar>(a: BestAttack<T>, b: BestAttack<T>) -> BestAttack<T> {
    if b.margin > a.margin || (b.margin == a.margin && b.target < a.target) {
        b
    } else {
        a
    }
}

/// Supremum of budgets against which the network is robust:
/// `max(0, −best margin)`. `None` when there is nothing to attack.
pub fn min_budget_bruteforce<T: Scalar>(net: &Network<T>) -> Result<Option<T>, BruteForceError> {
    Ok(best_attack(net)?.map(|b| (-b.margin).max_of(&T::zero())))
}

/// Most profitable attack in which every entry is 0 or the full allocation.
pub fn best_indivisible_attack<T: Scalar>(net: &Network<T>) -> Result<Option<BestAttack<T>>, BruteForceError> {
    check_size(net)?;
    let best = subsets(net.n_services())
        .filter_map(|target| {
            let prize = sum(target.iter().map(|&s| net.prize(s).clone()));
            IndivisibleSearch::new(net, &target)
                .run()
                .map(|(cost, attack)| BestAttack { margin: prize - cost, target, attack })
        })
        .reduce_with(better_attack);
    Ok(best)
}

/// Depth-first search over `{0, w}` choices for the entries of one target
/// set, pruned by the best cost found so far and by reachability of the
/// thresholds.
struct IndivisibleSearch<'a, T> {
    net: &'a Network<T>,
    target: &'a [usize],
    /// (validator, service) pairs with positive allocation inside the target.
    entries: Vec<(usize, usize)>,
    required: Vec<T>,
    /// Allocation still undecided, per target service.
    remaining: Vec<T>,
    aimed: Vec<T>,
    per_validator: Vec<T>,
    chosen: Vec<bool>,
    best: Option<(T, Vec<bool>)>,
}

impl<'a, T: Scalar> IndivisibleSearch<'a, T> {
    fn new(net: &'a Network<T>, target: &'a [usize]) -> Self {
        let mut entries = Vec::new();
        for v in 0..net.n_validators() {
            for &s in target {
                if net.allocation(v, s).clone() > T::zero() {
                    entries.push((v, s));
                }
            }
        }
        let required = target
            .iter()
            .map(|&s| net.threshold(s).clone() * net.total_allocation(s))
            .collect();
        let remaining = target.iter().map(|&s| net.total_allocation(s)).collect();
        Self {
            net,
            target,
            chosen: vec![false; entries.len()],
            entries,
            required,
            remaining,
            aimed: vec![T::zero(); target.len()],
            per_validator: vec![T::zero(); net.n_validators()],
            best: None,
        }
    }

    fn cost(&self) -> T {
        sum(self
            .per_validator
            .iter()
            .enumerate()
            .map(|(v, a)| a.min_of(self.net.stake(v))))
    }

    fn run(mut self) -> Option<(T, Attack<T>)> {
        self.visit(0);
        let (cost, chosen) = self.best?;
        let mut attack = Attack::none(self.net);
        for (k, &(v, s)) in self.entries.iter().enumerate() {
            if chosen[k] {
                attack.set(v, s, self.net.allocation(v, s).clone());
            }
        }
        Some((cost, attack))
    }

    fn visit(&mut self, k: usize) {
        let cost = self.cost();
        if let Some((b, _)) = &self.best {
            if cost >= *b {
                return;
            }
        }
        for i in 0..self.target.len() {
            if !(self.aimed[i].clone() + self.remaining[i].clone()).approx_ge(&self.required[i]) {
                return;
            }
        }
        if (0..self.target.len()).all(|i| self.aimed[i].approx_ge(&self.required[i])) {
            self.best = Some((cost, self.chosen.clone()));
            return;
        }
        if k == self.entries.len() {
            return;
        }
        let (v, s) = self.entries[k];
        let i = self.target.iter().position(|&t| t == s).expect("entry in target");
        let w = self.net.allocation(v, s).clone();
        self.remaining[i] = self.remaining[i].clone() - w.clone();
        // Take the entry first: reaching thresholds early tightens the bound.
        self.chosen[k] = true;
        self.aimed[i] = self.aimed[i].clone() + w.clone();
        self.per_validator[v] = self.per_validator[v].clone() + w.clone();
        self.visit(k + 1);
        self.chosen[k] = false;
        self.aimed[i] = self.aimed[i].clone() - w.clone();
        self.per_validator[v] = self.per_validator[v].clone() - w.clone();
        self.visit(k + 1);
        self.remaining[i] = self.remaining[i].clone() + w;
    }
}

fn check_instance(elements: &[u64], target: u64) -> Result<u64, BruteForceError> {
    let total: u64 = elements.iter().sum();
    if elements.is_empty() || elements.contains(&0) || target == 0 || target > total {
        return Err(BruteForceError::InvalidInstance);
    }
    Ok(total)
}

fn int<T: Scalar>(x: u64) -> T {
    T::from_count(x as usize)
}

/// One validator per element with `σ = w = e_i`, all allocated to a single
/// service with threshold `target / Σe` and prize `target`. A profitable
/// allocation-indivisible attack exists iff some subset sums to `target`.
pub fn build_indivisible_reduction<T: Scalar>(elements: &[u64], target: u64) -> Result<Network<T>, BruteForceError> {
    let total = check_instance(elements, target)?;
    let stake: Vec<T> = elements.iter().map(|&e| int(e)).collect();
    let allocation = stake.iter().map(|e| vec![e.clone()]).collect();
    Network::from_matrix(stake, allocation, vec![int::<T>(target) / int(total)], vec![int(target)])
        .map_err(|_| BruteForceError::InvalidInstance)
}

/// Validator `i` has stake `e_i` and allocates it fully both to a private
/// service (threshold 1, prize `e_i/2`) and to a shared service (threshold
/// `target / Σe`, prize `target/2`). A profitable attack exists iff some
/// subset sums to `target`.
pub fn build_divisible_reduction<T: Scalar>(elements: &[u64], target: u64) -> Result<Network<T>, BruteForceError> {
    let total = check_instance(elements, target)?;
    let n = elements.len();
    let two = T::from_count(2);
    let stake: Vec<T> = elements.iter().map(|&e| int(e)).collect();
    let allocation = (0..n)
        .map(|i| {
            let mut row = vec![T::zero(); n + 1];
            row[i] = stake[i].clone();
            row[n] = stake[i].clone();
            row
        })
        .collect();
    let mut threshold = vec![T::one(); n];
    threshold.push(int::<T>(target) / int(total));
    let mut prize: Vec<T> = stake.iter().map(|e| e.clone() / two.clone()).collect();
    prize.push(int::<T>(target) / two);
    Network::from_matrix(stake, allocation, threshold, prize).map_err(|_| BruteForceError::InvalidInstance)
}

/// Whether some subset of `elements` sums to exactly `target`.
pub fn subset_sum_bruteforce(elements: &[u64], target: u64) -> bool {
    assert!(elements.len() < 64, "too many elements");
    (0u64..1 << elements.len()).any(|mask| {
        elements
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, e)| e)
            .sum::<u64>()
            == target
    })
}
