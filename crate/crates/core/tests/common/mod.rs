//! Random network generators shared by the property tests.
#![allow(dead_code)]

use elastic_restaking::{Network, Scalar};
use proptest::prelude::*;

/// Thresholds as `(numerator, denominator)`.
pub const THRESHOLDS: [(usize, usize); 5] = [(1, 4), (1, 3), (1, 2), (2, 3), (1, 1)];

pub fn frac<T: Scalar>(num: usize, den: usize) -> T {
    T::from_count(num) / T::from_count(den)
}

/// Integer description of a network, buildable over any scalar.
#[derive(Debug, Clone)]
pub struct NetSpec {
    pub stake: Vec<usize>,
    /// Allocation in quarters of the validator's stake.
    pub quarters: Vec<Vec<usize>>,
    pub threshold: Vec<usize>,
    pub prize: Vec<usize>,
}

impl NetSpec {
    pub fn build<T: Scalar>(&self) -> Network<T> {
        let stake: Vec<T> = self.stake.iter().map(|&s| T::from_count(s)).collect();
        let allocation = self
            .quarters
            .iter()
            .zip(&self.stake)
            .map(|(row, &s)| row.iter().map(|&q| frac::<T>(q * s, 4)).collect())
            .collect();
        let threshold = self.threshold.iter().map(|&k| frac(THRESHOLDS[k].0, THRESHOLDS[k].1)).collect();
        let prize = self.prize.iter().map(|&p| T::from_count(p)).collect();
        Network::from_matrix(stake, allocation, threshold, prize).expect("generated networks are valid")
    }
}

pub fn net_spec(max_v: usize, max_s: usize) -> impl Strategy<Value = NetSpec> {
    (1..=max_v, 1..=max_s).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(1usize..=8, n),
            prop::collection::vec(prop::collection::vec(0usize..=4, m), n),
            prop::collection::vec(0..THRESHOLDS.len(), m),
            prop::collection::vec(1usize..=8, m),
        )
            .prop_map(|(stake, quarters, threshold, prize)| NetSpec { stake, quarters, threshold, prize })
    })
}

/// Symmetric network: equal stakes, per-service allocations shared by all
/// validators, one threshold.
pub fn symmetric_spec(max_v: usize, max_s: usize) -> impl Strategy<Value = NetSpec> {
    (1..=max_v, 1..=max_s).prop_flat_map(|(n, m)| {
        (
            1usize..=8,
            prop::collection::vec(0usize..=4, m),
            0..THRESHOLDS.len(),
            prop::collection::vec(1usize..=8, m),
        )
            .prop_map(move |(stake, row, threshold, prize)| NetSpec {
                stake: vec![stake; n],
                quarters: vec![row; n],
                threshold: vec![threshold; m],
                prize,
            })
    })
}

/// Symmetric network whose services are also identical.
pub fn identical_spec(max_v: usize, max_s: usize) -> impl Strategy<Value = NetSpec> {
    (1..=max_v, 1..=max_s, 1usize..=8, 1usize..=4, 0..THRESHOLDS.len(), 1usize..=8).prop_map(
        |(n, m, stake, q, threshold, prize)| NetSpec {
            stake: vec![stake; n],
            quarters: vec![vec![q; m]; n],
            threshold: vec![threshold; m],
            prize: vec![prize; m],
        },
    )
}

/// Attack aiming `parts[v][s]/4` of each allocation.
pub fn attack_matrix<T: Scalar>(net: &Network<T>, parts: &[Vec<usize>]) -> Vec<Vec<T>> {
    (0..net.n_validators())
        .map(|v| {
            (0..net.n_services())
                .map(|s| net.allocation(v, s).clone() * frac(parts[v][s], 4))
                .collect()
        })
        .collect()
}

pub fn attack_parts(n: usize, m: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..=4, m), n)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
