//! Mixed-integer programs for budget and Byzantine robustness, and the
//! branch-and-bound solver that runs them.
//!
//! The solver is best-first over LP relaxations from [`crate::lp`], branching
//! on the most fractional binary (lowest index on ties).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use log::debug;
use thiserror::Error;

use crate::lp::{solve_lp, Bound, LpError, LpProblem, LpStatus, Relation, Sense};
use crate::model::{Attack, ModelError, Network};
use crate::scalar::{sum, Scalar};

#[derive(Debug, Error)]
pub enum MipError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("branch-and-bound exceeded {limit} nodes (incumbent: {incumbent:?})")]
    NodeLimit { limit: usize, incumbent: Option<f64> },
    #[error("budget must be non-negative")]
    NegativeBudget,
}

/// An LP plus a set of variables restricted to `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MipProblem<T> {
    pub lp: LpProblem<T>,
    pub integral: Vec<usize>,
    pub variable_names: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MipSettings {
    pub node_limit: usize,
    /// Absolute optimality gap.
    pub gap: f64,
    /// Record every solved node in [`MipSolution::trace`].
    pub trace: bool,
}

impl Default for MipSettings {
    fn default() -> Self {
        Self { node_limit: 200_000, gap: 1e-6, trace: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub id: usize,
    pub parent: Option<usize>,
    /// Relaxation objective in the problem's own sense.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution<T> {
    pub status: LpStatus,
    /// Binaries are snapped to exactly 0 or 1.
    pub values: Vec<T>,
    pub objective_value: T,
    pub gap: f64,
    pub nodes: usize,
    pub trace: Vec<NodeTrace>,
}

struct Node<T> {
    key: T,
    key_f64: f64,
    id: usize,
    bounds: Vec<Bound<T>>,
    values: Vec<T>,
}

impl<T> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Node<T> {}
impl<T> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Node<T> {
    // BinaryHeap is a max-heap: smaller key, then smaller id, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key_f64
            .total_cmp(&self.key_f64)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn integrality_tolerance<T: Scalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64_lossy(1e-6_f64.max(10.0 * T::tolerance().to_f64_lossy()))
    }
}

/// Solves `p` to within `settings.gap` of the optimum.
pub fn solve_mip<T: Scalar>(p: &MipProblem<T>, settings: &MipSettings) -> Result<MipSolution<T>, MipError> {
    let to_key = |obj: &T| match p.lp.sense {
        Sense::Minimize => obj.clone(),
        Sense::Maximize => -obj.clone(),
    };
    let from_key = |key: &T| match p.lp.sense {
        Sense::Minimize => key.clone(),
        Sense::Maximize => -key.clone(),
    };
    let gap = T::from_f64_lossy(settings.gap);
    let int_tol = integrality_tolerance::<T>();
    let mut trace = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    let mut incumbent: Option<(T, Vec<T>)> = None;

    let mut relax = |bounds: Vec<Bound<T>>, parent: Option<usize>| -> Result<Result<Node<T>, LpStatus>, MipError> {
        let mut lp = p.lp.clone();
        lp.bounds = bounds;
        let sol = solve_lp(&lp)?;
        let id = next_id;
        next_id += 1;
        match sol.status {
            LpStatus::Optimal => {
                if settings.trace {
                    trace.push(NodeTrace { id, parent, bound: sol.objective_value.to_f64_lossy() });
                }
                let key = to_key(&sol.objective_value);
                Ok(Ok(Node { key_f64: key.to_f64_lossy(), key, id, bounds: lp.bounds, values: sol.values }))
            }
            status => Ok(Err(status)),
        }
    };

    match relax(p.lp.bounds.clone(), None)? {
        Ok(root) => heap.push(root),
        Err(LpStatus::Unbounded) => {
            return Ok(MipSolution {
                status: LpStatus::Unbounded,
                values: Vec::new(),
                objective_value: T::zero(),
                gap: 0.0,
                nodes: 1,
                trace: Vec::new(),
            })
        }
        Err(_) => {}
    }

    let mut nodes = 1usize;
    let mut open_bound: Option<T> = None;
    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.key >= inc.clone() - gap.clone() {
                open_bound = Some(node.key.clone());
                break;
            }
        }
        let branch = p
            .integral
            .iter()
            .map(|&j| {
                let x = &node.values[j];
                let frac = (x.clone() - x.clone().floor()).min_of(&(x.clone().floor() + T::one() - x.clone()));
                (j, frac)
            })
            .filter(|(_, frac)| *frac > int_tol)
            .fold(None::<(usize, T)>, |best, (j, frac)| match best {
                Some((_, ref bf)) if frac <= *bf => best,
                _ => Some((j, frac)),
            });
        let Some((j, _)) = branch else {
            let better = incumbent.as_ref().is_none_or(|(inc, _)| node.key < *inc);
            if better {
                let mut values = node.values;
                for &k in &p.integral {
                    values[k] = if values[k] >= T::one() / T::from_count(2) { T::one() } else { T::zero() };
                }
                incumbent = Some((node.key, values));
            }
            continue;
        };
        for (lo, hi) in [(T::zero(), T::zero()), (T::one(), T::one())] {
            let mut bounds = node.bounds.clone();
            bounds[j] = Bound::between(lo, hi);
            nodes += 1;
            if nodes > settings.node_limit {
                return Err(MipError::NodeLimit {
                    limit: settings.node_limit,
                    incumbent: incumbent.as_ref().map(|(k, _)| from_key(k).to_f64_lossy()),
                });
            }
            // Children of a bounded relaxation are never unbounded.
            if let Ok(child) = relax(bounds, Some(node.id))? {
                let worth = incumbent.as_ref().is_none_or(|(inc, _)| child.key < inc.clone() - gap.clone());
                if worth {
                    heap.push(child);
                }
            }
        }
    }
    debug!("branch and bound explored {nodes} nodes");

    match incumbent {
        None => Ok(MipSolution {
            status: LpStatus::Infeasible,
            values: Vec::new(),
            objective_value: T::zero(),
            gap: 0.0,
            nodes,
            trace,
        }),
        Some((key, values)) => {
            let gap = open_bound.map_or(0.0, |b| (key.clone() - b).to_f64_lossy().max(0.0));
            Ok(MipSolution {
                status: LpStatus::Optimal,
                objective_value: p.lp.evaluate(&values),
                values,
                gap,
                nodes,
                trace,
            })
        }
    }
}

/// Big-M constants of the robustness programs.
#[derive(Debug, Clone, PartialEq)]
pub struct BigM<T> {
    pub m1: T,
    pub m2: T,
    pub m3: T,
    pub m4: T,
    pub m5: T,
}

pub fn big_m_constants<T: Scalar>(net: &Network<T>) -> BigM<T> {
    let m1 = (0..net.n_services())
        .map(|s| net.threshold(s).clone() * net.total_allocation(s))
        .fold(T::zero(), |a, b| a.max_of(&b));
    let max_stake = net.stakes().iter().fold(T::zero(), |a, b| a.max_of(b));
    let max_alloc = (0..net.n_validators())
        .map(|v| net.allocated_by(v))
        .fold(T::zero(), |a, b| a.max_of(&b));
    let m2 = max_stake.max_of(&max_alloc);
    BigM {
        m1,
        m3: m2.clone(),
        m2,
        m4: max_stake,
        m5: T::from_count(net.n_services()),
    }
}

/// Variable indices of the budget program.
#[derive(Debug, Clone, Copy)]
pub struct BudgetVars {
    n: usize,
    m: usize,
}

impl BudgetVars {
    pub fn attacked(&self, s: usize) -> usize {
        s
    }
    pub fn stake_used(&self, v: usize, s: usize) -> usize {
        self.m + v * self.m + s
    }
    pub fn cost(&self, v: usize) -> usize {
        self.m + self.n * self.m + v
    }
    pub fn cost_flag(&self, v: usize) -> usize {
        self.m + self.n * self.m + self.n + v
    }
    pub fn len(&self) -> usize {
        self.m + self.n * self.m + 2 * self.n
    }
}

/// Variable indices of the Byzantine program.
#[derive(Debug, Clone, Copy)]
pub struct ByzantineVars {
    n: usize,
    m: usize,
}

impl ByzantineVars {
    pub fn attacked(&self, s: usize) -> usize {
        s
    }
    pub fn byzantine(&self, s: usize) -> usize {
        self.m + s
    }
    pub fn stake_used(&self, v: usize, s: usize) -> usize {
        2 * self.m + v * self.m + s
    }
    pub fn remaining_allocation(&self, v: usize, s: usize) -> usize {
        2 * self.m + self.n * self.m + v * self.m + s
    }
    pub fn allocation_flag(&self, v: usize, s: usize) -> usize {
        2 * self.m + 2 * self.n * self.m + v * self.m + s
    }
    fn per_validator(&self, k: usize, v: usize) -> usize {
        2 * self.m + 3 * self.n * self.m + k * self.n + v
    }
    pub fn cost(&self, v: usize) -> usize {
        self.per_validator(0, v)
    }
    pub fn cost_flag(&self, v: usize) -> usize {
        self.per_validator(1, v)
    }
    pub fn remaining_stake(&self, v: usize) -> usize {
        self.per_validator(2, v)
    }
    pub fn remaining_flag(&self, v: usize) -> usize {
        self.per_validator(3, v)
    }
    pub fn all_byzantine(&self) -> usize {
        2 * self.m + 3 * self.n * self.m + 4 * self.n
    }
    pub fn len(&self) -> usize {
        self.all_byzantine() + 1
    }
}

pub fn budget_vars<T: Scalar>(net: &Network<T>) -> BudgetVars {
    BudgetVars { n: net.n_validators(), m: net.n_services() }
}

pub fn byzantine_vars<T: Scalar>(net: &Network<T>) -> ByzantineVars {
    ByzantineVars { n: net.n_validators(), m: net.n_services() }
}

fn binary<T: Scalar>() -> Bound<T> {
    Bound::between(T::zero(), T::one())
}

/// Maximizes attack profit `Σ π_j b_j − Σ c_i` over attacks that capture at
/// least one service.
pub fn build_budget_mip<T: Scalar>(net: &Network<T>) -> MipProblem<T> {
    let (n, m) = (net.n_validators(), net.n_services());
    let x = budget_vars(net);
    let big = big_m_constants(net);
    let mut lp = LpProblem::new(Sense::Maximize, x.len());
    let mut names = vec![String::new(); x.len()];
    let mut integral = Vec::new();
    let vid = net.validator_ids();
    let sid = net.service_ids();

    for s in 0..m {
        lp.objective[x.attacked(s)] = net.prize(s).clone();
        lp.bounds[x.attacked(s)] = binary();
        names[x.attacked(s)] = format!("attacked[{}]", sid[s]);
        integral.push(x.attacked(s));
    }
    for v in 0..n {
        for s in 0..m {
            lp.bounds[x.stake_used(v, s)] = Bound::between(T::zero(), net.allocation(v, s).clone());
            names[x.stake_used(v, s)] = format!("stake_used[{},{}]", vid[v], sid[s]);
        }
        lp.objective[x.cost(v)] = -T::one();
        lp.bounds[x.cost(v)] = Bound::between(T::zero(), net.stake(v).clone());
        names[x.cost(v)] = format!("cost[{}]", vid[v]);
        lp.bounds[x.cost_flag(v)] = binary();
        names[x.cost_flag(v)] = format!("cost_flag[{}]", vid[v]);
        integral.push(x.cost_flag(v));
    }

    let all_attacked: Vec<_> = (0..m).map(|s| (x.attacked(s), T::one())).collect();
    lp.add_sparse(&all_attacked, Relation::Ge, T::one());
    for s in 0..m {
        let mut terms: Vec<_> = (0..n).map(|v| (x.stake_used(v, s), T::one())).collect();
        terms.push((x.attacked(s), -big.m1.clone()));
        let rhs = net.threshold(s).clone() * net.total_allocation(s) - big.m1.clone();
        lp.add_sparse(&terms, Relation::Ge, rhs);
    }
    for v in 0..n {
        let used: Vec<_> = (0..m).map(|s| (x.stake_used(v, s), T::one())).collect();
        // c ≤ Σα
        let mut terms = vec![(x.cost(v), T::one())];
        terms.extend(used.iter().map(|(j, c)| (*j, -c.clone())));
        lp.add_sparse(&terms, Relation::Le, T::zero());
        // c ≥ σ − M2 z
        lp.add_sparse(&[(x.cost(v), T::one()), (x.cost_flag(v), big.m2.clone())], Relation::Ge, net.stake(v).clone());
        // c ≥ Σα − M2 (1 − z)
        let mut terms = vec![(x.cost(v), T::one()), (x.cost_flag(v), -big.m2.clone())];
        terms.extend(used.iter().map(|(j, c)| (*j, -c.clone())));
        lp.add_sparse(&terms, Relation::Ge, -big.m2.clone());
    }
    MipProblem { lp, integral, variable_names: names }
}

/// Minimizes the total weight `Σ (π_j/θ_j) y_j` of Byzantine services after
/// which a `budget`-costly attack exists.
///
/// The costliness row is `Σ π_j b_j − Σ c_i ≥ −budget`, i.e. cost at most prize
/// plus budget. Base services and services with threshold 0 are never
/// Byzantine.
pub fn build_byzantine_mip<T: Scalar>(net: &Network<T>, budget: &T) -> Result<MipProblem<T>, MipError> {
    if !(*budget >= T::zero()) {
        return Err(MipError::NegativeBudget);
    }
    let (n, m) = (net.n_validators(), net.n_services());
    let x = byzantine_vars(net);
    let big = big_m_constants(net);
    let mut lp = LpProblem::new(Sense::Minimize, x.len());
    let mut names = vec![String::new(); x.len()];
    let mut integral = Vec::new();
    let vid = net.validator_ids();
    let sid = net.service_ids();

    for s in 0..m {
        lp.bounds[x.attacked(s)] = binary();
        names[x.attacked(s)] = format!("attacked[{}]", sid[s]);
        integral.push(x.attacked(s));
        names[x.byzantine(s)] = format!("byz[{}]", sid[s]);
        integral.push(x.byzantine(s));
        match net.weight(s) {
            Some(w) if !net.is_base(s) => {
                lp.objective[x.byzantine(s)] = w;
                lp.bounds[x.byzantine(s)] = binary();
            }
            _ => lp.bounds[x.byzantine(s)] = Bound::between(T::zero(), T::zero()),
        }
    }
    for v in 0..n {
        for s in 0..m {
            let w = net.allocation(v, s).clone();
            lp.bounds[x.stake_used(v, s)] = Bound::between(T::zero(), w.clone());
            names[x.stake_used(v, s)] = format!("stake_used[{},{}]", vid[v], sid[s]);
            lp.bounds[x.remaining_allocation(v, s)] = Bound::between(T::zero(), w);
            names[x.remaining_allocation(v, s)] = format!("remaining_allocation[{},{}]", vid[v], sid[s]);
            lp.bounds[x.allocation_flag(v, s)] = binary();
            names[x.allocation_flag(v, s)] = format!("allocation_flag[{},{}]", vid[v], sid[s]);
            integral.push(x.allocation_flag(v, s));
        }
        let sigma = net.stake(v).clone();
        lp.bounds[x.cost(v)] = Bound::between(T::zero(), sigma.clone());
        names[x.cost(v)] = format!("cost[{}]", vid[v]);
        lp.bounds[x.cost_flag(v)] = binary();
        names[x.cost_flag(v)] = format!("cost_flag[{}]", vid[v]);
        integral.push(x.cost_flag(v));
        lp.bounds[x.remaining_stake(v)] = Bound::between(T::zero(), sigma);
        names[x.remaining_stake(v)] = format!("remaining_stake[{}]", vid[v]);
        lp.bounds[x.remaining_flag(v)] = binary();
        names[x.remaining_flag(v)] = format!("remaining_flag[{}]", vid[v]);
        integral.push(x.remaining_flag(v));
    }
    let u = x.all_byzantine();
    lp.bounds[u] = binary();
    names[u] = "all_byzantine".into();
    integral.push(u);
    integral.sort_unstable();

    // Σb ≥ 1 − M5 u ; Σy ≥ |S| − M5 (1 − u)
    let mut terms: Vec<_> = (0..m).map(|s| (x.attacked(s), T::one())).collect();
    terms.push((u, big.m5.clone()));
    lp.add_sparse(&terms, Relation::Ge, T::one());
    let mut terms: Vec<_> = (0..m).map(|s| (x.byzantine(s), T::one())).collect();
    terms.push((u, -big.m5.clone()));
    lp.add_sparse(&terms, Relation::Ge, T::from_count(m) - big.m5.clone());
    // Σπb − Σc ≥ −β
    let mut terms: Vec<_> = (0..m).map(|s| (x.attacked(s), net.prize(s).clone())).collect();
    terms.extend((0..n).map(|v| (x.cost(v), -T::one())));
    lp.add_sparse(&terms, Relation::Ge, -budget.clone());

    for v in 0..n {
        let sigma = net.stake(v).clone();
        let (c, z, r, zr) = (x.cost(v), x.cost_flag(v), x.remaining_stake(v), x.remaining_flag(v));
        let used: Vec<_> = (0..m).map(|s| (x.stake_used(v, s), T::one())).collect();
        // c ≤ r ; c ≤ Σα
        lp.add_sparse(&[(c, T::one()), (r, -T::one())], Relation::Le, T::zero());
        let mut terms = vec![(c, T::one())];
        terms.extend(used.iter().map(|(j, k)| (*j, -k.clone())));
        lp.add_sparse(&terms, Relation::Le, T::zero());
        // c ≥ r − M2 z ; c ≥ Σα − M2 (1 − z)
        lp.add_sparse(&[(c, T::one()), (r, -T::one()), (z, big.m2.clone())], Relation::Ge, T::zero());
        let mut terms = vec![(c, T::one()), (z, -big.m2.clone())];
        terms.extend(used.iter().map(|(j, k)| (*j, -k.clone())));
        lp.add_sparse(&terms, Relation::Ge, -big.m2.clone());
        // r ≥ σ − Σ w y ; r ≤ σ − Σ w y + M3 z' ; r ≤ M3 (1 − z')
        let slashed: Vec<_> = (0..m).map(|s| (x.byzantine(s), net.allocation(v, s).clone())).collect();
        let mut terms = vec![(r, T::one())];
        terms.extend(slashed.iter().cloned());
        lp.add_sparse(&terms, Relation::Ge, sigma.clone());
        let mut terms = vec![(r, T::one()), (zr, -big.m3.clone())];
        terms.extend(slashed.iter().cloned());
        lp.add_sparse(&terms, Relation::Le, sigma);
        lp.add_sparse(&[(r, T::one()), (zr, big.m3.clone())], Relation::Le, big.m3.clone());
        for s in 0..m {
            let w = net.allocation(v, s).clone();
            let (a, za, al) = (x.remaining_allocation(v, s), x.allocation_flag(v, s), x.stake_used(v, s));
            // α ≤ a ; a ≤ r ; a ≥ w − M4 z'' ; a ≥ r − M4 (1 − z'')
            lp.add_sparse(&[(al, T::one()), (a, -T::one())], Relation::Le, T::zero());
            lp.add_sparse(&[(a, T::one()), (r, -T::one())], Relation::Le, T::zero());
            lp.add_sparse(&[(a, T::one()), (za, big.m4.clone())], Relation::Ge, w);
            lp.add_sparse(&[(a, T::one()), (r, -T::one()), (za, -big.m4.clone())], Relation::Ge, -big.m4.clone());
        }
    }
    for s in 0..m {
        // b + y ≤ 1
        lp.add_sparse(&[(x.attacked(s), T::one()), (x.byzantine(s), T::one())], Relation::Le, T::one());
        // Σα ≥ θ Σa − M1 (1 − b)
        let mut terms: Vec<_> = (0..n).map(|v| (x.stake_used(v, s), T::one())).collect();
        terms.extend((0..n).map(|v| (x.remaining_allocation(v, s), -net.threshold(s).clone())));
        terms.push((x.attacked(s), -big.m1.clone()));
        lp.add_sparse(&terms, Relation::Ge, -big.m1.clone());
    }
    Ok(MipProblem { lp, integral, variable_names: names })
}

/// Most profitable attack found by the budget program.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetOutcome<T> {
    /// Optimal `prize − cost`; non-negative means insecure.
    pub margin: T,
    pub attack: Attack<T>,
}

/// Solves the budget program. `None` when the network has no services.
pub fn solve_budget<T: Scalar>(net: &Network<T>, settings: &MipSettings) -> Result<Option<BudgetOutcome<T>>, MipError> {
    let p = build_budget_mip(net);
    let sol = solve_mip(&p, settings)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let x = budget_vars(net);
    let matrix = (0..net.n_validators())
        .map(|v| {
            (0..net.n_services())
                .map(|s| sol.values[x.stake_used(v, s)].clone().min_of(net.allocation(v, s)).max_of(&T::zero()))
                .collect()
        })
        .collect();
    Ok(Some(BudgetOutcome { margin: sol.objective_value, attack: Attack::from_raw(matrix) }))
}

/// Supremum of the budgets against which the network is robust: `−y` clamped
/// at 0, where `y` is the budget-program optimum. `None` means robust against
/// any budget (no service can be attacked).
pub fn min_budget<T: Scalar>(net: &Network<T>) -> Result<Option<T>, MipError> {
    min_budget_with(net, &MipSettings::default())
}

pub fn min_budget_with<T: Scalar>(net: &Network<T>, settings: &MipSettings) -> Result<Option<T>, MipError> {
    Ok(solve_budget(net, settings)?.map(|o| (-o.margin).max_of(&T::zero())))
}

/// Whether no attack costs at most `prize + budget`, via the budget program.
pub fn is_beta_robust_mip<T: Scalar>(net: &Network<T>, budget: &T, settings: &MipSettings) -> Result<bool, MipError> {
    Ok(match solve_budget(net, settings)? {
        None => true,
        Some(o) => (-budget.clone()).definitely_gt(&o.margin),
    })
}

/// Smallest Byzantine weight that breaks `budget`-robustness.
#[derive(Debug, Clone, PartialEq)]
pub struct ByzantineThreshold<T> {
    /// `None` when no admissible Byzantine set leaves a budget-costly attack.
    pub breaking_weight: Option<T>,
    /// Total weight of the services that may turn Byzantine.
    pub total_weight: T,
    pub byzantine: Vec<usize>,
}

impl<T: Scalar> ByzantineThreshold<T> {
    /// Supremum of the fractions `f` with `(f, budget)`-robustness, read as an
    /// open bound; 1 when nothing breaks the network.
    pub fn fraction(&self) -> T {
        match &self.breaking_weight {
            None => T::one(),
            Some(w) if self.total_weight.is_zero() => {
                if w.is_zero() {
                    T::zero()
                } else {
                    T::one()
                }
            }
            Some(w) => w.clone() / self.total_weight.clone(),
        }
    }

    /// `(fraction, budget)`-robustness.
    pub fn is_robust_at(&self, fraction: &T) -> bool {
        match &self.breaking_weight {
            None => true,
            Some(w) => !(fraction.clone() * self.total_weight.clone()).approx_ge(w),
        }
    }
}

/// Non-base services with finite weight can be swapped for one another
/// without changing the post-slash network.
fn interchangeable_byzantine<T: Scalar>(net: &Network<T>) -> Option<Vec<usize>> {
    let cands: Vec<usize> = (0..net.n_services())
        .filter(|&s| !net.is_base(s) && net.weight(s).is_some())
        .collect();
    let first = *cands.first()?;
    let same = cands.iter().all(|&s| {
        net.prize(s) == net.prize(first)
            && net.threshold(s) == net.threshold(first)
            && (0..net.n_validators()).all(|v| net.allocation(v, s) == net.allocation(v, first))
    });
    same.then_some(cands)
}

/// Byzantine threshold at `budget`.
///
/// When all selectable services are interchangeable, iterates the Byzantine
/// count and solves only the budget program on each slashed network;
/// otherwise solves the full Byzantine program.
pub fn byzantine_threshold<T: Scalar>(
    net: &Network<T>,
    budget: &T,
    settings: &MipSettings,
) -> Result<ByzantineThreshold<T>, MipError> {
    if !(*budget >= T::zero()) {
        return Err(MipError::NegativeBudget);
    }
    let total_weight = net.byzantine_weight_total();
    if let Some(cands) = interchangeable_byzantine(net) {
        for k in 0..=cands.len() {
            let slashed = net.apply_byzantine(&cands[..k])?;
            if !is_beta_robust_mip(&slashed, budget, settings)? {
                let weight = sum(cands[..k].iter().map(|&s| net.weight(s).expect("finite weight")));
                return Ok(ByzantineThreshold {
                    breaking_weight: Some(weight),
                    total_weight,
                    byzantine: cands[..k].to_vec(),
                });
            }
        }
        return Ok(ByzantineThreshold { breaking_weight: None, total_weight, byzantine: Vec::new() });
    }
    if is_beta_robust_mip(net, budget, settings)? {
        let p = build_byzantine_mip(net, budget)?;
        let sol = solve_mip(&p, settings)?;
        let x = byzantine_vars(net);
        if sol.status == LpStatus::Optimal {
            let byzantine: Vec<usize> = (0..net.n_services()).filter(|&s| sol.values[x.byzantine(s)].is_one()).collect();
            // Slashing every service leaves nothing to attack.
            if byzantine.len() < net.n_services() {
                return Ok(ByzantineThreshold { breaking_weight: Some(sol.objective_value), total_weight, byzantine });
            }
        }
        Ok(ByzantineThreshold { breaking_weight: None, total_weight, byzantine: Vec::new() })
    } else {
        Ok(ByzantineThreshold { breaking_weight: Some(T::zero()), total_weight, byzantine: Vec::new() })
    }
}

/// [`ByzantineThreshold::fraction`] with default settings.
pub fn max_byzantine_fraction<T: Scalar>(net: &Network<T>, budget: &T) -> Result<T, MipError> {
    Ok(byzantine_threshold(net, budget, &MipSettings::default())?.fraction())
}

/// `(fraction, budget)`-robustness decided by the programs.
pub fn is_f_beta_robust_mip<T: Scalar>(
    net: &Network<T>,
    fraction: &T,
    budget: &T,
    settings: &MipSettings,
) -> Result<bool, MipError> {
    Ok(byzantine_threshold(net, budget, settings)?.is_robust_at(fraction))
}

fn lp_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string()
}

fn lp_terms<T: Scalar>(coeffs: &[T], names: &[String]) -> String {
    let mut out = String::new();
    for (j, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let v = c.to_f64_lossy();
        let sign = if v < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {} {}", v.abs(), lp_name(&names[j]));
    }
    if out.is_empty() {
        out.push_str(" 0");
    }
    out
}

/// Renders the program in CPLEX LP format.
pub fn to_lp_format<T: Scalar>(p: &MipProblem<T>) -> String {
    let names = &p.variable_names;
    let mut out = String::new();
    out.push_str(match p.lp.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let _ = writeln!(out, " obj:{}", lp_terms(&p.lp.objective, names));
    out.push_str("Subject To\n");
    for (k, c) in p.lp.constraints.iter().enumerate() {
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " r{}:{} {rel} {}", k + 1, lp_terms(&c.coeffs, names), c.rhs.to_f64_lossy());
    }
    out.push_str("Bounds\n");
    for (j, b) in p.lp.bounds.iter().enumerate() {
        if p.integral.contains(&j) {
            continue;
        }
        let name = lp_name(&names[j]);
        match &b.hi {
            Some(hi) => {
                let _ = writeln!(out, " {} <= {name} <= {}", b.lo.to_f64_lossy(), hi.to_f64_lossy());
            }
            None => {
                let _ = writeln!(out, " {name} >= {}", b.lo.to_f64_lossy());
            }
        }
    }
    out.push_str("Binaries\n");
    for &j in &p.integral {
        let _ = writeln!(out, " {}", lp_name(&names[j]));
    }
    out.push_str("End\n");
    out
}
