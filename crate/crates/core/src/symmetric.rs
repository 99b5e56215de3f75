//! Exact decisions for symmetric networks.
//!
//! In a symmetric network every validator has the same stake and the same
//! allocation to each service, and all services share one threshold. The
//! cheapest attack on a target set then has a closed form: `⌊θn⌋` validators
//! aim their full allocation and one more aims the fractional remainder.
//! Services with the same (allocation, prize, base flag) are interchangeable,
//! so subsets are enumerated as per-class counts.

use thiserror::Error;

use crate::model::{Attack, ModelError, Network};
use crate::scalar::{sum, Scalar};

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Which symmetry condition failed first.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotSymmetric {
    #[error("network has no validators")]
    NoValidators,
    #[error("stake of `{0}` differs from the first validator")]
    Stake(String),
    #[error("allocations to `{0}` differ between validators")]
    Allocation(String),
    #[error("threshold of `{0}` differs from the first service")]
    Threshold(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetricError {
    #[error("network is not symmetric: {0}")]
    NotSymmetric(#[from] NotSymmetric),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("budget must be non-negative")]
    NegativeBudget,
    #[error("Byzantine fraction must be non-negative")]
    NegativeFraction,
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("predicate still false at stake {hi} (search bracket [{lo}, {hi}])")]
    Unsatisfiable { lo: f64, hi: f64 },
}

/// Compact form of a symmetric network.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricNetwork<T> {
    pub n_validators: usize,
    pub stake: T,
    /// Per-validator allocation to each service.
    pub allocation: Vec<T>,
    pub threshold: T,
    pub prize: Vec<T>,
    pub base: Vec<bool>,
    pub service_ids: Vec<String>,
}

/// Compacts `net`, or reports the first violated symmetry condition.
pub fn as_symmetric<T: Scalar>(net: &Network<T>) -> Result<SymmetricNetwork<T>, NotSymmetric> {
    let n = net.n_validators();
    if n == 0 {
        return Err(NotSymmetric::NoValidators);
    }
    let stake = net.stake(0).clone();
    for v in 1..n {
        if !net.stake(v).rel_eq(&stake, SYMMETRY_TOLERANCE) {
            return Err(NotSymmetric::Stake(net.validator_ids()[v].clone()));
        }
    }
    let m = net.n_services();
    for s in 0..m {
        let w = net.allocation(0, s);
        if (1..n).any(|v| !net.allocation(v, s).rel_eq(w, SYMMETRY_TOLERANCE)) {
            return Err(NotSymmetric::Allocation(net.service_ids()[s].clone()));
        }
    }
    let threshold = if m > 0 { net.threshold(0).clone() } else { T::zero() };
    for s in 1..m {
        if !net.threshold(s).rel_eq(&threshold, SYMMETRY_TOLERANCE) {
            return Err(NotSymmetric::Threshold(net.service_ids()[s].clone()));
        }
    }
    Ok(SymmetricNetwork {
        n_validators: n,
        stake,
        allocation: (0..m).map(|s| net.allocation(0, s).clone()).collect(),
        threshold,
        prize: net.prizes().to_vec(),
        base: net.base_flags().to_vec(),
        service_ids: net.service_ids().to_vec(),
    })
}

/// Interchangeable services.
#[derive(Debug, Clone)]
struct Class<T> {
    allocation: T,
    prize: T,
    base: bool,
    members: Vec<usize>,
}

/// Every vector `c` with `0 ≤ c[k] ≤ sizes[k]`, starting from all zeros.
fn count_vectors(sizes: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let mut next = Some(vec![0; sizes.len()]);
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        for k in 0..sizes.len() {
            if succ[k] < sizes[k] {
                succ[k] += 1;
                next = Some(succ);
                break;
            }
            succ[k] = 0;
        }
        Some(current)
    })
}

/// Cheapest attack found on a symmetric network.
#[derive(Debug, Clone, PartialEq)]
pub struct Slack<T> {
    /// `consolidated cost − prize`, minimized over non-empty targets.
    pub slack: T,
    pub target: Vec<usize>,
}

/// Result of the Byzantine-and-attack minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct ByzantineSlack<T> {
    pub slack: T,
    pub byzantine: Vec<usize>,
    /// Target indices in the slashed network.
    pub target: Vec<usize>,
}

impl<T: Scalar> SymmetricNetwork<T> {
    pub fn n_services(&self) -> usize {
        self.allocation.len()
    }

    /// Expands back into a full network with ids `v1..vn`.
    pub fn to_network(&self) -> Result<Network<T>, ModelError> {
        let n = self.n_validators;
        Network::from_parts(
            (1..=n).map(|i| format!("v{i}")).collect(),
            self.service_ids.clone(),
            vec![self.stake.clone(); n],
            vec![self.allocation.clone(); n],
            vec![self.threshold.clone(); self.n_services()],
            self.prize.clone(),
            self.base.clone(),
        )
    }

    /// `(⌊θn⌋, θn − ⌊θn⌋)`, robust to `θn` landing just below an integer.
    fn split(&self) -> (T, T) {
        let tn = self.threshold.clone() * T::from_count(self.n_validators);
        let whole = (tn.clone() + T::slack_for(&tn)).floor();
        let frac = (tn - whole.clone()).max_of(&T::zero());
        (whole, frac)
    }

    fn cost_for_weight(&self, total: &T) -> T {
        let (whole, frac) = self.split();
        whole * self.stake.min_of(total) + self.stake.min_of(&(frac * total.clone()))
    }

    /// `⌊θn⌋·min(σ, W) + min(σ, (θn − ⌊θn⌋)·W)` with `W` the per-validator
    /// allocation to `target`.
    pub fn consolidated_cost(&self, target: &[usize]) -> T {
        self.cost_for_weight(&sum(target.iter().map(|&s| self.allocation[s].clone())))
    }

    /// The consolidated attack on `target`, as a matrix over
    /// [`to_network`](Self::to_network).
    pub fn consolidated_attack(&self, target: &[usize]) -> Attack<T> {
        let (whole, frac) = self.split();
        let full = whole.to_f64_lossy().round() as usize;
        let matrix = (0..self.n_validators)
            .map(|v| {
                let mut row = vec![T::zero(); self.n_services()];
                for &s in target {
                    row[s] = if v < full {
                        self.allocation[s].clone()
                    } else if v == full {
                        frac.clone() * self.allocation[s].clone()
                    } else {
                        T::zero()
                    };
                }
                row
            })
            .collect();
        Attack::from_raw(matrix)
    }

    fn classes(&self) -> Vec<Class<T>> {
        let mut classes: Vec<Class<T>> = Vec::new();
        for s in 0..self.n_services() {
            let found = classes.iter_mut().find(|c| {
                c.base == self.base[s]
                    && c.allocation.rel_eq(&self.allocation[s], SYMMETRY_TOLERANCE)
                    && c.prize.rel_eq(&self.prize[s], SYMMETRY_TOLERANCE)
            });
            match found {
                Some(c) => c.members.push(s),
                None => classes.push(Class {
                    allocation: self.allocation[s].clone(),
                    prize: self.prize[s].clone(),
                    base: self.base[s],
                    members: vec![s],
                }),
            }
        }
        classes
    }

    /// Minimum of `consolidated cost − prize` over non-empty targets; `None`
    /// when there are no services.
    pub fn min_slack(&self) -> Option<Slack<T>> {
        let classes = self.classes();
        let sizes: Vec<usize> = classes.iter().map(|c| c.members.len()).collect();
        let mut best: Option<(T, Vec<usize>)> = None;
        for counts in count_vectors(&sizes).skip(1) {
            let weight = sum(classes.iter().zip(&counts).map(|(c, &k)| c.allocation.clone() * T::from_count(k)));
            let prize = sum(classes.iter().zip(&counts).map(|(c, &k)| c.prize.clone() * T::from_count(k)));
            let slack = self.cost_for_weight(&weight) - prize;
            if best.as_ref().is_none_or(|(b, _)| slack < *b) {
                best = Some((slack, counts));
            }
        }
        let (slack, counts) = best?;
        let mut target: Vec<usize> = classes
            .iter()
            .zip(&counts)
            .flat_map(|(c, &k)| c.members[..k].iter().copied())
            .collect();
        target.sort_unstable();
        Some(Slack { slack, target })
    }

    /// Every non-empty target costs strictly more than its prize.
    pub fn is_secure(&self) -> bool {
        self.min_slack().is_none_or(|s| s.slack.definitely_gt(&T::zero()))
    }

    /// Every non-empty target costs strictly more than its prize plus `budget`.
    pub fn is_beta_robust(&self, budget: &T) -> Result<bool, SymmetricError> {
        if !(*budget >= T::zero()) {
            return Err(SymmetricError::NegativeBudget);
        }
        Ok(self.min_slack().is_none_or(|s| s.slack.definitely_gt(budget)))
    }

    /// Slashes the services in `byzantine` and removes them.
    pub fn slash(&self, byzantine: &[usize]) -> Result<SymmetricNetwork<T>, ModelError> {
        if let Some(&s) = byzantine.iter().find(|&&s| self.base[s]) {
            return Err(ModelError::ByzantineBaseService(self.service_ids[s].clone()));
        }
        let lost = sum(byzantine.iter().map(|&s| self.allocation[s].clone()));
        let stake = (self.stake.clone() - lost).max_of(&T::zero());
        let keep: Vec<usize> = (0..self.n_services()).filter(|s| !byzantine.contains(s)).collect();
        Ok(SymmetricNetwork {
            n_validators: self.n_validators,
            allocation: keep.iter().map(|&s| self.allocation[s].min_of(&stake)).collect(),
            stake,
            threshold: self.threshold.clone(),
            prize: keep.iter().map(|&s| self.prize[s].clone()).collect(),
            base: keep.iter().map(|&s| self.base[s]).collect(),
            service_ids: keep.iter().map(|&s| self.service_ids[s].clone()).collect(),
        })
    }

    /// Total weight `Σ π/θ` of the services that may turn Byzantine.
    pub fn byzantine_weight_total(&self) -> T {
        if self.threshold.is_zero() {
            return T::zero();
        }
        sum((0..self.n_services())
            .filter(|&s| !self.base[s])
            .map(|s| self.prize[s].clone() / self.threshold.clone()))
    }

    /// Minimum slack over every admissible Byzantine set of normalized
    /// weight at most `fraction` and every non-empty target that remains.
    /// `None` when no admissible set leaves a service to attack.
    pub fn byzantine_slack(&self, fraction: &T) -> Result<Option<ByzantineSlack<T>>, SymmetricError> {
        if !(*fraction >= T::zero()) {
            return Err(SymmetricError::NegativeFraction);
        }
        let cap = fraction.clone() * self.byzantine_weight_total();
        let classes: Vec<Class<T>> = if self.threshold.is_zero() {
            Vec::new()
        } else {
            self.classes().into_iter().filter(|c| !c.base).collect()
        };
        let sizes: Vec<usize> = classes.iter().map(|c| c.members.len()).collect();
        let mut best: Option<ByzantineSlack<T>> = None;
        for counts in count_vectors(&sizes) {
            let weight = sum(classes
                .iter()
                .zip(&counts)
                .map(|(c, &k)| c.prize.clone() / self.threshold.clone() * T::from_count(k)));
            if !weight.approx_le(&cap) {
                continue;
            }
            let mut byzantine: Vec<usize> = classes
                .iter()
                .zip(&counts)
                .flat_map(|(c, &k)| c.members[..k].iter().copied())
                .collect();
            byzantine.sort_unstable();
            let Some(found) = self.slash(&byzantine)?.min_slack() else {
                continue;
            };
            if best.as_ref().is_none_or(|b| found.slack < b.slack) {
                best = Some(ByzantineSlack { slack: found.slack, byzantine, target: found.target });
            }
        }
        Ok(best)
    }

    /// `(fraction, budget)`-robustness: robust at `budget` after any admissible
    /// set of Byzantine services slashes.
    pub fn is_f_beta_robust(&self, fraction: &T, budget: &T) -> Result<bool, SymmetricError> {
        if !(*budget >= T::zero()) {
            return Err(SymmetricError::NegativeBudget);
        }
        Ok(self
            .byzantine_slack(fraction)?
            .is_none_or(|b| b.slack.definitely_gt(budget)))
    }

    /// Supremum of budgets with `(fraction, β)`-robustness, clamped at 0.
    /// `None` means robust against any budget.
    pub fn max_budget(&self, fraction: &T) -> Result<Option<T>, SymmetricError> {
        Ok(self
            .byzantine_slack(fraction)?
            .map(|b| b.slack.max_of(&T::zero())))
    }
}

/// Parametric symmetric network: `n` validators with equal stake σ, `m`
/// identical services each receiving `degree·σ/m`, and optionally one base
/// service receiving the full stake.
#[derive(Debug, Clone, PartialEq)]
pub struct Template<T> {
    pub n_validators: usize,
    pub n_services: usize,
    pub threshold: T,
    pub prize: T,
    /// Restaking degree over the non-base services.
    pub degree: T,
    /// `(prize, threshold)` of the base service.
    pub base: Option<(T, T)>,
}

impl<T: Scalar> Template<T> {
    pub fn new(n_validators: usize, n_services: usize, threshold: T, prize: T, degree: T) -> Self {
        Self { n_validators, n_services, threshold, prize, degree, base: None }
    }

    pub fn with_base(mut self, prize: T, threshold: T) -> Self {
        self.base = Some((prize, threshold));
        self
    }

    pub fn with_degree(&self, degree: T) -> Self {
        Self { degree, ..self.clone() }
    }

    fn check(&self) -> Result<(), SymmetricError> {
        if self.n_validators == 0 {
            return Err(SymmetricError::InvalidTemplate("no validators".into()));
        }
        if self.degree < T::zero() || self.degree > T::from_count(self.n_services) {
            return Err(SymmetricError::InvalidTemplate(format!(
                "degree {} outside [0, {}]",
                self.degree, self.n_services
            )));
        }
        Ok(())
    }

    /// Full network at per-validator stake `stake`.
    pub fn network(&self, stake: &T) -> Result<Network<T>, SymmetricError> {
        self.check()?;
        let n = self.n_validators;
        let m = self.n_services;
        let per_service = if m == 0 {
            T::zero()
        } else {
            self.degree.clone() * stake.clone() / T::from_count(m)
        };
        let mut services: Vec<String> = (1..=m).map(|j| format!("s{j}")).collect();
        let mut row = vec![per_service; m];
        let mut threshold = vec![self.threshold.clone(); m];
        let mut prize = vec![self.prize.clone(); m];
        let mut base = vec![false; m];
        if let Some((bp, bt)) = &self.base {
            services.push("base".into());
            row.push(stake.clone());
            threshold.push(bt.clone());
            prize.push(bp.clone());
            base.push(true);
        }
        Ok(Network::from_parts(
            (1..=n).map(|i| format!("v{i}")).collect(),
            services,
            vec![stake.clone(); n],
            vec![row; n],
            threshold,
            prize,
            base,
        )?)
    }

    /// Compact network at per-validator stake `stake`. Fails when the base
    /// threshold differs from the common one.
    pub fn symmetric(&self, stake: &T) -> Result<SymmetricNetwork<T>, SymmetricError> {
        Ok(as_symmetric(&self.network(stake)?)?)
    }

    /// The bracket's upper end: `max π/θ · |S|`.
    pub fn stake_upper_bound(&self) -> T {
        let mut weights = vec![];
        if !self.threshold.is_zero() {
            weights.push(self.prize.clone() / self.threshold.clone());
        }
        if let Some((bp, bt)) = &self.base {
            if !bt.is_zero() {
                weights.push(bp.clone() / bt.clone());
            }
        }
        let total = self.n_services + usize::from(self.base.is_some());
        let max = weights.into_iter().fold(T::one(), |a, b| a.max_of(&b));
        max * T::from_count(total.max(1))
    }
}

/// Property whose minimum stake is searched for.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate<T> {
    Secure,
    BetaRobust(T),
    /// Normalized Byzantine fraction and budget.
    FBetaRobust(T, T),
}

impl<T: Scalar> Predicate<T> {
    pub fn holds(&self, net: &SymmetricNetwork<T>) -> Result<bool, SymmetricError> {
        match self {
            Predicate::Secure => Ok(net.is_secure()),
            Predicate::BetaRobust(b) => net.is_beta_robust(b),
            Predicate::FBetaRobust(f, b) => net.is_f_beta_robust(f, b),
        }
    }

    pub fn fraction(&self) -> T {
        match self {
            Predicate::FBetaRobust(f, _) => f.clone(),
            _ => T::zero(),
        }
    }

    pub fn budget(&self) -> T {
        match self {
            Predicate::Secure => T::zero(),
            Predicate::BetaRobust(b) | Predicate::FBetaRobust(_, b) => b.clone(),
        }
    }
}

/// Absolute tolerance of the minimum-stake search.
pub const STAKE_TOLERANCE: f64 = 1e-6;

const MAX_BRACKET_DOUBLINGS: usize = 40;

/// Bisects for the smallest stake at which a monotone predicate holds.
///
/// Starts from `[0, upper]` and doubles `upper` until the predicate holds
/// there. Stops once the bracket is narrower than [`STAKE_TOLERANCE`] and
/// returns its midpoint.
pub fn search_min_stake<T, E, F>(upper: T, mut holds: F) -> Result<T, E>
where
    T: Scalar,
    E: From<SymmetricError>,
    F: FnMut(&T) -> Result<bool, E>,
{
    let mut lo = T::zero();
    let mut hi = upper;
    let mut doublings = 0;
    while !holds(&hi)? {
        if doublings == MAX_BRACKET_DOUBLINGS {
            return Err(SymmetricError::Unsatisfiable { lo: 0.0, hi: hi.to_f64_lossy() }.into());
        }
        lo = hi.clone();
        hi = hi * T::from_count(2);
        doublings += 1;
    }
    let tol = T::from_f64_lossy(STAKE_TOLERANCE);
    let two = T::from_count(2);
    while hi.clone() - lo.clone() > tol {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        if holds(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// Minimum per-validator stake at which `predicate` holds for `template`.
pub fn min_stake_for<T: Scalar>(template: &Template<T>, predicate: &Predicate<T>) -> Result<T, SymmetricError> {
    template.check()?;
    search_min_stake(template.stake_upper_bound(), |stake: &T| {
        if !(*stake > T::zero()) {
            return Ok(false);
        }
        predicate.holds(&template.symmetric(stake)?)
    })
}
