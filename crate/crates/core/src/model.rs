//! Restaking network data model, attack evaluation and Byzantine slashing.
//!
//! A [`Network`] is a weighted bipartite graph between validators and
//! services. Validators pledge (possibly overlapping) portions of their stake
//! to services; an [`Attack`] aims part of those allocations at services, and
//! [`Network::evaluate_attack`] charges each validator the stake it aimed at
//! services that actually fall, capped at its total stake.

use std::collections::HashMap;

use log::warn;
use thiserror::Error;

use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("unknown validator `{0}`")]
    UnknownValidator(String),
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("validator `{0}`: stake must be positive")]
    NonPositiveStake(String),
    #[error("service `{0}`: prize must be positive")]
    NonPositivePrize(String),
    #[error("service `{0}`: threshold must lie in [0, 1]")]
    ThresholdOutOfRange(String),
    #[error("allocation of `{validator}` to `{service}` must lie in [0, stake]")]
    AllocationOutOfRange { validator: String, service: String },
    #[error("attack by `{validator}` on `{service}` must lie in [0, allocation]")]
    AttackOutOfRange { validator: String, service: String },
    #[error("{what}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("base service `{0}` cannot be Byzantine")]
    ByzantineBaseService(String),
    #[error("budget must be non-negative")]
    NegativeBudget,
    #[error("Byzantine fraction must be non-negative")]
    NegativeFraction,
}

/// A restaking network `(V, S, σ, w, θ, π)` plus its set of base services.
///
/// Allocations are stored densely, indexed `[validator][service]`; both index
/// spaces follow insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    validators: Vec<String>,
    services: Vec<String>,
    stake: Vec<T>,
    allocation: Vec<Vec<T>>,
    threshold: Vec<T>,
    prize: Vec<T>,
    base: Vec<bool>,
}

/// Incremental, id-based construction of a [`Network`].
#[derive(Debug, Clone)]
pub struct NetworkBuilder<T> {
    validators: Vec<(String, T)>,
    services: Vec<(String, T, T, bool)>,
    allocations: Vec<(String, String, T)>,
}

impl<T: Scalar> Default for NetworkBuilder<T> {
    fn default() -> Self {
        Self {
            validators: Vec::new(),
            services: Vec::new(),
            allocations: Vec::new(),
        }
    }
}

impl<T: Scalar> NetworkBuilder<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn validator(mut self, id: impl Into<String>, stake: T) -> Self {
        self.validators.push((id.into(), stake));
        self
    }

    pub fn service(mut self, id: impl Into<String>, threshold: T, prize: T) -> Self {
        self.services.push((id.into(), threshold, prize, false));
        self
    }

    pub fn base_service(mut self, id: impl Into<String>, threshold: T, prize: T) -> Self {
        self.services.push((id.into(), threshold, prize, true));
        self
    }

    pub fn allocate(mut self, validator: impl Into<String>, service: impl Into<String>, amount: T) -> Self {
        self.allocations.push((validator.into(), service.into(), amount));
        self
    }

    pub fn build(self) -> Result<Network<T>, ModelError> {
        let mut v_index = HashMap::new();
        for (i, (id, _)) in self.validators.iter().enumerate() {
            if v_index.insert(id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId { kind: "validator", id: id.clone() });
            }
        }
        let mut s_index = HashMap::new();
        for (j, (id, ..)) in self.services.iter().enumerate() {
            if s_index.insert(id.clone(), j).is_some() {
                return Err(ModelError::DuplicateId { kind: "service", id: id.clone() });
            }
        }
        let n = self.validators.len();
        let m = self.services.len();
        let mut allocation = vec![vec![T::zero(); m]; n];
        for (v, s, amount) in self.allocations {
            let i = *v_index.get(&v).ok_or(ModelError::UnknownValidator(v))?;
            let j = *s_index.get(&s).ok_or(ModelError::UnknownService(s))?;
            allocation[i][j] = amount;
        }
        let (validators, stake): (Vec<_>, Vec<_>) = self.validators.into_iter().unzip();
        let mut services = Vec::with_capacity(m);
        let mut threshold = Vec::with_capacity(m);
        let mut prize = Vec::with_capacity(m);
        let mut base = Vec::with_capacity(m);
        for (id, t, p, b) in self.services {
            services.push(id);
            threshold.push(t);
            prize.push(p);
            base.push(b);
        }
        Network::from_parts(validators, services, stake, allocation, threshold, prize, base)
    }
}

impl<T: Scalar> Network<T> {
    /// Assembles and validates a network from dense vectors.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        validators: Vec<String>,
        services: Vec<String>,
        stake: Vec<T>,
        allocation: Vec<Vec<T>>,
        threshold: Vec<T>,
        prize: Vec<T>,
        base: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let n = validators.len();
        let m = services.len();
        check_len("stakes", n, stake.len())?;
        check_len("allocation rows", n, allocation.len())?;
        check_len("thresholds", m, threshold.len())?;
        check_len("prizes", m, prize.len())?;
        check_len("base flags", m, base.len())?;
        for row in &allocation {
            check_len("allocation columns", m, row.len())?;
        }
        let net = Self { validators, services, stake, allocation, threshold, prize, base };
        net.validate()?;
        Ok(net)
    }

    /// Network with generated ids `v1..vn`, `s1..sm` and no base services.
    pub fn from_matrix(
        stake: Vec<T>,
        allocation: Vec<Vec<T>>,
        threshold: Vec<T>,
        prize: Vec<T>,
    ) -> Result<Self, ModelError> {
        let validators = (1..=stake.len()).map(|i| format!("v{i}")).collect();
        let services: Vec<String> = (1..=threshold.len()).map(|j| format!("s{j}")).collect();
        let base = vec![false; services.len()];
        Self::from_parts(validators, services, stake, allocation, threshold, prize, base)
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (i, s) in self.stake.iter().enumerate() {
            if !(*s > T::zero()) {
                return Err(ModelError::NonPositiveStake(self.validators[i].clone()));
            }
        }
        for j in 0..self.n_services() {
            if !(self.prize[j] > T::zero()) {
                return Err(ModelError::NonPositivePrize(self.services[j].clone()));
            }
            if !(self.threshold[j] >= T::zero() && self.threshold[j] <= T::one()) {
                return Err(ModelError::ThresholdOutOfRange(self.services[j].clone()));
            }
            if self.threshold[j].is_zero() {
                warn!(
                    "service `{}` has threshold 0: any attack captures it for free",
                    self.services[j]
                );
            }
        }
        for i in 0..self.n_validators() {
            for j in 0..self.n_services() {
                let w = &self.allocation[i][j];
                if !(*w >= T::zero()) || !w.approx_le(&self.stake[i]) {
                    return Err(ModelError::AllocationOutOfRange {
                        validator: self.validators[i].clone(),
                        service: self.services[j].clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_validators(&self) -> usize {
        self.validators.len()
    }

    pub fn n_services(&self) -> usize {
        self.services.len()
    }

    pub fn validator_ids(&self) -> &[String] {
        &self.validators
    }

    pub fn service_ids(&self) -> &[String] {
        &self.services
    }

    pub fn validator_index(&self, id: &str) -> Result<usize, ModelError> {
        self.validators
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| ModelError::UnknownValidator(id.to_string()))
    }

    pub fn service_index(&self, id: &str) -> Result<usize, ModelError> {
        self.services
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| ModelError::UnknownService(id.to_string()))
    }

    pub fn stake(&self, v: usize) -> &T {
        &self.stake[v]
    }

    pub fn stakes(&self) -> &[T] {
        &self.stake
    }

    pub fn allocation(&self, v: usize, s: usize) -> &T {
        &self.allocation[v][s]
    }

    pub fn allocations(&self) -> &[Vec<T>] {
        &self.allocation
    }

    pub fn threshold(&self, s: usize) -> &T {
        &self.threshold[s]
    }

    pub fn thresholds(&self) -> &[T] {
        &self.threshold
    }

    pub fn prize(&self, s: usize) -> &T {
        &self.prize[s]
    }

    pub fn prizes(&self) -> &[T] {
        &self.prize
    }

    pub fn is_base(&self, s: usize) -> bool {
        self.base[s]
    }

    pub fn base_flags(&self) -> &[bool] {
        &self.base
    }

    /// Total stake allocated to service `s`.
    pub fn total_allocation(&self, s: usize) -> T {
        sum(self.allocation.iter().map(|row| row[s].clone()))
    }

    /// Σ_s w(v, s) for validator index `v`.
    pub fn allocated_by(&self, v: usize) -> T {
        sum(self.allocation[v].iter().cloned())
    }

    /// Byzantine weight `π(s) / θ(s)` of a service; `None` when θ(s) = 0.
    pub fn weight(&self, s: usize) -> Option<T> {
        if self.threshold[s].is_zero() {
            None
        } else {
            Some(self.prize[s].clone() / self.threshold[s].clone())
        }
    }

    /// Total weight of the services that may turn Byzantine.
    pub fn byzantine_weight_total(&self) -> T {
        sum((0..self.n_services())
            .filter(|&s| !self.base[s])
            .filter_map(|s| self.weight(s)))
    }

    /// Converts a normalized Byzantine fraction into an absolute weight cap.
    pub fn byzantine_cap(&self, fraction: &T) -> Result<T, ModelError> {
        if !(*fraction >= T::zero()) {
            return Err(ModelError::NegativeFraction);
        }
        Ok(fraction.clone() * self.byzantine_weight_total())
    }

    /// Ratio of a validator's total allocation to its stake.
    pub fn restaking_degree(&self, validator: &str) -> Result<T, ModelError> {
        let v = self.validator_index(validator)?;
        Ok(self.restaking_degree_at(v))
    }

    pub fn restaking_degree_at(&self, v: usize) -> T {
        self.allocated_by(v) / self.stake[v].clone()
    }

    /// Services for which the aimed stake meets the threshold share of the
    /// allocated stake. A service without allocated stake is always attacked.
    pub fn attacked_services(&self, attack: &Attack<T>) -> Result<Vec<usize>, ModelError> {
        attack.check_against(self)?;
        Ok(self.attacked_unchecked(attack))
    }

    fn attacked_unchecked(&self, attack: &Attack<T>) -> Vec<usize> {
        (0..self.n_services())
            .filter(|&s| {
                let aimed = sum(attack.stake_used.iter().map(|row| row[s].clone()));
                let required = self.threshold[s].clone() * self.total_allocation(s);
                aimed.approx_ge(&required)
            })
            .collect()
    }

    /// Attacked set, per-validator cost, totals and margin of an attack.
    pub fn evaluate_attack(&self, attack: &Attack<T>) -> Result<AttackEvaluation<T>, ModelError> {
        let attacked = self.attacked_services(attack)?;
        let validator_cost: Vec<T> = (0..self.n_validators())
            .map(|v| {
                let aimed = sum(attacked.iter().map(|&s| attack.stake_used[v][s].clone()));
                aimed.min_of(&self.stake[v])
            })
            .collect();
        let total_cost = sum(validator_cost.iter().cloned());
        let total_prize = sum(attacked.iter().map(|&s| self.prize[s].clone()));
        let margin = total_prize.clone() - total_cost.clone();
        Ok(AttackEvaluation { attacked, validator_cost, total_cost, total_prize, margin })
    }

    /// Split of the attack prize: proportional to cost, or even when the
    /// attack is free.
    pub fn prize_shares(&self, eval: &AttackEvaluation<T>) -> Vec<T> {
        let n = self.n_validators();
        if eval.total_cost.is_zero() {
            let even = T::one() / T::from_count(n.max(1));
            return vec![even; n];
        }
        eval.validator_cost
            .iter()
            .map(|c| c.clone() / eval.total_cost.clone())
            .collect()
    }

    /// Utility of validator `v` in the security game.
    pub fn security_utility(&self, attack: &Attack<T>, v: usize) -> Result<T, ModelError> {
        let eval = self.evaluate_attack(attack)?;
        let shares = self.prize_shares(&eval);
        Ok(shares[v].clone() * eval.total_prize.clone() - eval.validator_cost[v].clone())
    }

    /// Utility of validator `v` when an adversary adds `budget` to the prize.
    pub fn robustness_utility(&self, attack: &Attack<T>, v: usize, budget: &T) -> Result<T, ModelError> {
        if !(*budget >= T::zero()) {
            return Err(ModelError::NegativeBudget);
        }
        let eval = self.evaluate_attack(attack)?;
        if eval.attacked.is_empty() {
            return Ok(-eval.validator_cost[v].clone());
        }
        let shares = self.prize_shares(&eval);
        Ok(shares[v].clone() * (eval.total_prize.clone() + budget.clone()) - eval.validator_cost[v].clone())
    }

    /// State after the services in `byzantine` slash everyone allocated to
    /// them. Remaining stake stretches over the surviving allocations.
    pub fn apply_byzantine(&self, byzantine: &[usize]) -> Result<Network<T>, ModelError> {
        let mut is_byz = vec![false; self.n_services()];
        for &s in byzantine {
            if s >= self.n_services() {
                return Err(ModelError::UnknownService(format!("#{s}")));
            }
            if self.base[s] {
                return Err(ModelError::ByzantineBaseService(self.services[s].clone()));
            }
            is_byz[s] = true;
        }
        let keep: Vec<usize> = (0..self.n_services()).filter(|&s| !is_byz[s]).collect();
        let stake: Vec<T> = (0..self.n_validators())
            .map(|v| {
                let slashed = sum(byzantine.iter().map(|&s| self.allocation[v][s].clone()));
                (self.stake[v].clone() - slashed).max_of(&T::zero())
            })
            .collect();
        let allocation = (0..self.n_validators())
            .map(|v| keep.iter().map(|&s| self.allocation[v][s].min_of(&stake[v])).collect())
            .collect();
        Ok(Network {
            validators: self.validators.clone(),
            services: keep.iter().map(|&s| self.services[s].clone()).collect(),
            stake,
            allocation,
            threshold: keep.iter().map(|&s| self.threshold[s].clone()).collect(),
            prize: keep.iter().map(|&s| self.prize[s].clone()).collect(),
            base: keep.iter().map(|&s| self.base[s]).collect(),
        })
    }

    /// Same as [`apply_byzantine`](Self::apply_byzantine), by service id.
    pub fn apply_byzantine_ids(&self, byzantine: &[&str]) -> Result<Network<T>, ModelError> {
        let idx = byzantine
            .iter()
            .map(|id| self.service_index(id))
            .collect::<Result<Vec<_>, _>>()?;
        self.apply_byzantine(&idx)
    }

    /// Every subset of non-base services whose total weight is at most `cap`
    /// (absolute weight, not a fraction). Always yields the empty set first.
    pub fn byzantine_subsets(&self, cap: &T) -> Result<impl Iterator<Item = Vec<usize>> + '_, ModelError> {
        if !(*cap >= T::zero()) {
            return Err(ModelError::NegativeFraction);
        }
        let candidates: Vec<(usize, T)> = (0..self.n_services())
            .filter(|&s| !self.base[s])
            .filter_map(|s| self.weight(s).map(|w| (s, w)))
            .collect();
        assert!(candidates.len() < 64, "too many candidate Byzantine services");
        let cap = cap.clone();
        Ok((0u64..1u64 << candidates.len()).filter_map(move |mask| {
            let chosen: Vec<usize> = (0..candidates.len()).filter(|k| mask >> k & 1 == 1).collect();
            let weight = sum(chosen.iter().map(|&k| candidates[k].1.clone()));
            weight
                .approx_le(&cap)
                .then(|| chosen.iter().map(|&k| candidates[k].0).collect())
        }))
    }

    /// Per-validator share of the stake each service needs in isolation.
    fn expected_slash(&self, v: usize) -> Option<T> {
        let mut total = T::zero();
        for s in 0..self.n_services() {
            let w = &self.allocation[v][s];
            if w.is_zero() {
                continue;
            }
            let weight = self.weight(s)?;
            total = total + w.clone() / self.total_allocation(s) * weight;
        }
        Some(total)
    }

    /// Classic sufficient condition assuming a misbehaving validator loses all
    /// of its stake: every validator's share of `π/θ` is below its stake.
    pub fn eigenlayer_condition(&self) -> bool {
        (0..self.n_validators()).all(|v| match self.expected_slash(v) {
            Some(x) => x < self.stake[v] && !x.approx_ge(&self.stake[v]),
            None => false,
        })
    }

    /// Sufficient condition for security under partial slashing: the
    /// validator-side inequality plus Σ_v w(v, s) > π(s)/θ(s) for every
    /// service.
    pub fn generalized_eigenlayer_condition(&self) -> bool {
        self.eigenlayer_condition()
            && (0..self.n_services()).all(|s| match self.weight(s) {
                Some(weight) => self.total_allocation(s).definitely_gt(&weight),
                None => false,
            })
    }

    /// Converts every numeric field through `f64`.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |x: &T| U::from_f64_lossy(x.to_f64_lossy());
        Network {
            validators: self.validators.clone(),
            services: self.services.clone(),
            stake: self.stake.iter().map(conv).collect(),
            allocation: self.allocation.iter().map(|r| r.iter().map(conv).collect()).collect(),
            threshold: self.threshold.iter().map(conv).collect(),
            prize: self.prize.iter().map(conv).collect(),
            base: self.base.clone(),
        }
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { what, expected, found })
    }
}

/// Stake each validator aims at each service, indexed `[validator][service]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attack<T> {
    stake_used: Vec<Vec<T>>,
}

impl<T: Scalar> Attack<T> {
    /// The all-zero attack on `net`.
    pub fn none(net: &Network<T>) -> Self {
        Self { stake_used: vec![vec![T::zero(); net.n_services()]; net.n_validators()] }
    }

    pub fn from_matrix(net: &Network<T>, stake_used: Vec<Vec<T>>) -> Result<Self, ModelError> {
        let attack = Self { stake_used };
        attack.check_against(net)?;
        Ok(attack)
    }

    /// Unchecked constructor for internally generated attacks.
    pub(crate) fn from_raw(stake_used: Vec<Vec<T>>) -> Self {
        Self { stake_used }
    }

    pub fn get(&self, v: usize, s: usize) -> &T {
        &self.stake_used[v][s]
    }

    pub fn set(&mut self, v: usize, s: usize, amount: T) {
        self.stake_used[v][s] = amount;
    }

    pub fn matrix(&self) -> &[Vec<T>] {
        &self.stake_used
    }

    /// Every entry is either zero or the full allocation.
    pub fn is_allocation_indivisible(&self, net: &Network<T>) -> bool {
        self.stake_used.iter().enumerate().all(|(v, row)| {
            row.iter()
                .enumerate()
                .all(|(s, a)| a.is_zero() || a.approx_eq(net.allocation(v, s)))
        })
    }

    fn check_against(&self, net: &Network<T>) -> Result<(), ModelError> {
        check_len("attack rows", net.n_validators(), self.stake_used.len())?;
        for (v, row) in self.stake_used.iter().enumerate() {
            check_len("attack columns", net.n_services(), row.len())?;
            for (s, a) in row.iter().enumerate() {
                if !(*a >= T::zero()) || !a.approx_le(net.allocation(v, s)) {
                    return Err(ModelError::AttackOutOfRange {
                        validator: net.validator_ids()[v].clone(),
                        service: net.service_ids()[s].clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Outcome of an attack against a specific network.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackEvaluation<T> {
    /// Indices of attacked services, ascending.
    pub attacked: Vec<usize>,
    pub validator_cost: Vec<T>,
    pub total_cost: T,
    pub total_prize: T,
    /// `total_prize − total_cost`.
    pub margin: T,
}

impl<T: Scalar> AttackEvaluation<T> {
    /// At least one service falls and the prize covers the cost.
    pub fn is_profitable(&self) -> bool {
        self.is_beta_costly(&T::zero())
    }

    /// At least one service falls and prize plus `budget` covers the cost.
    pub fn is_beta_costly(&self, budget: &T) -> bool {
        !self.attacked.is_empty()
            && self.total_cost.approx_le(&(self.total_prize.clone() + budget.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::{ratio, Rational};

    fn single(stake: f64, alloc: f64, theta: f64, prize: f64) -> Network<f64> {
        Network::from_matrix(vec![stake], vec![vec![alloc]], vec![theta], vec![prize]).unwrap()
    }

    #[test]
    fn restaking_degree_examples() {
        let a = fixtures::stretched_validator::<f64>();
        assert_eq!(a.restaking_degree("v1").unwrap(), 1.5);
        let c = fixtures::uneven_validator::<f64>();
        assert!((c.restaking_degree("v1").unwrap() - 1.4).abs() < 1e-12);
        let idle = Network::from_matrix(vec![10.0], vec![vec![0.0, 0.0]], vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
        assert_eq!(idle.restaking_degree("v1").unwrap(), 0.0);
        assert!(matches!(a.restaking_degree("nope"), Err(ModelError::UnknownValidator(_))));
    }

    #[test]
    fn attacked_services_examples() {
        let net = fixtures::lone_validator::<f64>();
        let mut attack = Attack::none(&net);
        attack.set(0, 0, 1.0);
        assert_eq!(net.attacked_services(&attack).unwrap(), vec![0]);
        assert!(net.attacked_services(&Attack::none(&net)).unwrap().is_empty());

        let net = fixtures::shared_service::<f64>();
        let attack = Attack::from_matrix(&net, vec![vec![20.0], vec![0.0]]).unwrap();
        assert_eq!(net.attacked_services(&attack).unwrap(), vec![0]);
    }

    #[test]
    fn zero_allocation_service_is_always_attacked() {
        let net = Network::from_matrix(vec![1.0], vec![vec![0.0]], vec![0.5], vec![1.0]).unwrap();
        let eval = net.evaluate_attack(&Attack::none(&net)).unwrap();
        assert_eq!(eval.attacked, vec![0]);
        assert!(eval.is_profitable());
    }

    #[test]
    fn evaluate_attack_examples() {
        let net = fixtures::shared_service::<f64>();
        let attack = Attack::from_matrix(&net, vec![vec![20.0], vec![0.0]]).unwrap();
        let eval = net.evaluate_attack(&attack).unwrap();
        assert_eq!(eval.total_cost, 20.0);
        assert_eq!(eval.total_prize, 5.0);
        assert_eq!(eval.margin, -15.0);
        assert!(!eval.is_profitable());
        assert!(eval.is_beta_costly(&15.0));
        assert!(!eval.is_beta_costly(&14.999));

        let none = net.evaluate_attack(&Attack::none(&net)).unwrap();
        assert_eq!((none.total_cost, none.total_prize), (0.0, 0.0));
        assert!(!none.is_profitable());

        let net = fixtures::lone_validator::<f64>();
        let attack = Attack::from_matrix(&net, vec![vec![1.0]]).unwrap();
        let eval = net.evaluate_attack(&attack).unwrap();
        assert_eq!((eval.total_cost, eval.total_prize, eval.margin), (1.0, 1.0, 0.0));
        assert!(eval.is_profitable());
        assert!(eval.is_beta_costly(&0.0));
    }

    #[test]
    fn stake_aimed_at_surviving_services_is_free() {
        let net = Network::from_matrix(
            vec![10.0, 10.0],
            vec![vec![10.0, 10.0], vec![10.0, 10.0]],
            vec![0.5, 0.5],
            vec![1.0, 1.0],
        )
        .unwrap();
        let attack = Attack::from_matrix(&net, vec![vec![10.0, 5.0], vec![0.0, 0.0]]).unwrap();
        let eval = net.evaluate_attack(&attack).unwrap();
        assert_eq!(eval.attacked, vec![0]);
        assert_eq!(eval.total_cost, 10.0);
    }

    #[test]
    fn attack_out_of_range_rejected() {
        let net = fixtures::shared_service::<f64>();
        let err = Attack::from_matrix(&net, vec![vec![21.0], vec![0.0]]).unwrap_err();
        assert!(matches!(err, ModelError::AttackOutOfRange { .. }));
        let err = Attack::from_matrix(&net, vec![vec![1.0]]).unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { .. }));
    }

    #[test]
    fn prize_shares_examples() {
        let net = fixtures::shared_service::<f64>();
        let eval = net
            .evaluate_attack(&Attack::from_matrix(&net, vec![vec![20.0], vec![0.0]]).unwrap())
            .unwrap();
        assert_eq!(net.prize_shares(&eval), vec![1.0, 0.0]);

        let four = Network::from_matrix(vec![1.0; 4], vec![vec![1.0]; 4], vec![0.5], vec![1.0]).unwrap();
        let eval = four.evaluate_attack(&Attack::none(&four)).unwrap();
        assert_eq!(four.prize_shares(&eval), vec![0.25; 4]);

        let two = Network::from_matrix(vec![1.0, 3.0], vec![vec![1.0], vec![3.0]], vec![1.0], vec![1.0]).unwrap();
        let eval = two
            .evaluate_attack(&Attack::from_matrix(&two, vec![vec![1.0], vec![3.0]]).unwrap())
            .unwrap();
        assert_eq!(two.prize_shares(&eval), vec![0.25, 0.75]);
    }

    #[test]
    fn utilities() {
        let net = fixtures::shared_service::<f64>();
        let none = Attack::none(&net);
        assert_eq!(net.security_utility(&none, 0).unwrap(), 0.0);
        let attack = Attack::from_matrix(&net, vec![vec![20.0], vec![0.0]]).unwrap();
        assert_eq!(net.security_utility(&attack, 0).unwrap(), -15.0);
        assert_eq!(net.robustness_utility(&attack, 0, &15.0).unwrap(), 0.0);
        assert_eq!(net.robustness_utility(&attack, 0, &0.0).unwrap(), -15.0);
        assert_eq!(net.robustness_utility(&none, 1, &7.0).unwrap(), 0.0);
        assert_eq!(net.robustness_utility(&attack, 0, &-1.0), Err(ModelError::NegativeBudget));

        let lone = fixtures::lone_validator::<f64>();
        let attack = Attack::from_matrix(&lone, vec![vec![1.0]]).unwrap();
        assert_eq!(lone.security_utility(&attack, 0).unwrap(), 0.0);
    }

    #[test]
    fn empty_attacked_set_pays_no_budget() {
        let net = Network::from_matrix(vec![4.0], vec![vec![4.0]], vec![1.0], vec![1.0]).unwrap();
        let attack = Attack::from_matrix(&net, vec![vec![2.0]]).unwrap();
        assert_eq!(net.robustness_utility(&attack, 0, &100.0).unwrap(), 0.0);
    }

    #[test]
    fn byzantine_transition_fixtures_exact() {
        let a = fixtures::stretched_validator::<Rational>().apply_byzantine(&[0]).unwrap();
        assert_eq!(a.stakes(), &[ratio(1, 1)]);
        assert_eq!(a.allocations()[0], vec![ratio(1, 1), ratio(1, 1)]);
        let c = fixtures::uneven_validator::<Rational>().apply_byzantine(&[0]).unwrap();
        assert_eq!(c.stakes(), &[ratio(2, 1)]);
        assert_eq!(c.allocations()[0], vec![ratio(2, 1), ratio(1, 1)]);
        assert_eq!(c.service_ids(), &["s2".to_string(), "s3".to_string()]);
    }

    #[test]
    fn byzantine_empty_set_is_identity() {
        let net = fixtures::uneven_validator::<f64>();
        assert_eq!(net.apply_byzantine(&[]).unwrap(), net);
    }

    #[test]
    fn base_service_cannot_be_byzantine() {
        let net = NetworkBuilder::new()
            .validator("v", 1.0)
            .base_service("eth", 0.5, 1.0)
            .allocate("v", "eth", 1.0)
            .build()
            .unwrap();
        assert_eq!(
            net.apply_byzantine(&[0]),
            Err(ModelError::ByzantineBaseService("eth".into()))
        );
    }

    #[test]
    fn byzantine_subset_enumeration() {
        let net = Network::from_matrix(
            vec![3.0],
            vec![vec![1.0, 1.0, 1.0]],
            vec![1.0 / 3.0; 3],
            vec![1.0; 3],
        )
        .unwrap();
        let only_empty: Vec<_> = net.byzantine_subsets(&0.0).unwrap().collect();
        assert_eq!(only_empty, vec![Vec::<usize>::new()]);
        let cap = net.byzantine_cap(&(1.0 / 3.0)).unwrap();
        assert!((cap - 3.0f64).abs() < 1e-12);
        let subsets: Vec<_> = net.byzantine_subsets(&cap).unwrap().collect();
        assert_eq!(subsets, vec![vec![], vec![0], vec![1], vec![2]]);
        assert_eq!(net.byzantine_subsets(&100.0).unwrap().count(), 8);
    }

    #[test]
    fn zero_threshold_service_never_byzantine() {
        let net = Network::from_matrix(vec![1.0], vec![vec![1.0, 1.0]], vec![0.0, 0.5], vec![1.0, 1.0]).unwrap();
        let subsets: Vec<_> = net.byzantine_subsets(&1e9).unwrap().collect();
        assert_eq!(subsets, vec![vec![], vec![1]]);
    }

    #[test]
    fn sufficient_conditions() {
        let lone = fixtures::lone_validator::<f64>();
        assert!(lone.eigenlayer_condition());
        assert!(!lone.generalized_eigenlayer_condition());

        let fig = fixtures::shared_service::<f64>();
        assert!(fig.eigenlayer_condition());
        assert!(fig.generalized_eigenlayer_condition());

        let heavy = single(5.0, 5.0, 0.5, 3.0);
        assert!(!heavy.eigenlayer_condition());

        let undercovered = single(5.0, 1.0, 0.5, 1.0);
        assert!(!undercovered.generalized_eigenlayer_condition());
    }

    #[test]
    fn builder_reports_bad_input() {
        let err = NetworkBuilder::<f64>::new().validator("a", 0.0).build().unwrap_err();
        assert_eq!(err, ModelError::NonPositiveStake("a".into()));
        let err = NetworkBuilder::<f64>::new()
            .validator("a", 1.0)
            .service("s", 0.5, 1.0)
            .allocate("a", "t", 1.0)
            .build()
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownService("t".into()));
        let err = NetworkBuilder::<f64>::new()
            .validator("a", 1.0)
            .service("s", 1.5, 1.0)
            .build()
            .unwrap_err();
        assert_eq!(err, ModelError::ThresholdOutOfRange("s".into()));
        let err = NetworkBuilder::<f64>::new()
            .validator("a", 1.0)
            .service("s", 0.5, 1.0)
            .allocate("a", "s", 2.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::AllocationOutOfRange { .. }));
        let err = NetworkBuilder::<f64>::new()
            .validator("a", 1.0)
            .validator("a", 2.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateId { .. }));
    }
}
