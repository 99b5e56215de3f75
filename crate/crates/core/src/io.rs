//! JSON network description files.
//!
//! ```json
//! { "validators": [{"id": "v1", "stake": 20}],
//!   "services": [{"id": "s1", "threshold": 0.5, "prize": 5, "base": false}],
//!   "allocations": [{"validator": "v1", "service": "s1", "amount": 20}],
//!   "rewards": {"s1": 1}, "target_degree": 1 }
//! ```
//!
//! Omitted allocation pairs are 0. `rewards` and `target_degree` are only
//! needed for the incentive analysis. Numbers are read as decimals, so
//! `0.1` becomes exactly 1/10 under rational arithmetic.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::incentives::{IncentiveError, RewardPools};
use crate::model::{ModelError, Network, NetworkBuilder};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Incentive(#[from] IncentiveError),
    #[error("file has no `rewards` and `target_degree`")]
    NoRewards,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidatorEntry {
    pub id: String,
    pub stake: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceEntry {
    pub id: String,
    pub threshold: f64,
    pub prize: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub base: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationEntry {
    pub validator: String,
    pub service: String,
    pub amount: f64,
}

/// Raw contents of a network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub validators: Vec<ValidatorEntry>,
    pub services: Vec<ServiceEntry>,
    #[serde(default)]
    pub allocations: Vec<AllocationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_degree: Option<f64>,
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| IoError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Describes `net`, listing only non-zero allocations.
    pub fn from_network<T: Scalar>(net: &Network<T>) -> Self {
        let mut allocations = Vec::new();
        for (v, vid) in net.validator_ids().iter().enumerate() {
            for (s, sid) in net.service_ids().iter().enumerate() {
                if !net.allocation(v, s).is_zero() {
                    allocations.push(AllocationEntry {
                        validator: vid.clone(),
                        service: sid.clone(),
                        amount: net.allocation(v, s).to_f64_lossy(),
                    });
                }
            }
        }
        Self {
            validators: net
                .validator_ids()
                .iter()
                .zip(net.stakes())
                .map(|(id, stake)| ValidatorEntry { id: id.clone(), stake: stake.to_f64_lossy() })
                .collect(),
            services: (0..net.n_services())
                .map(|s| ServiceEntry {
                    id: net.service_ids()[s].clone(),
                    threshold: net.threshold(s).to_f64_lossy(),
                    prize: net.prize(s).to_f64_lossy(),
                    base: net.is_base(s),
                })
                .collect(),
            allocations,
            rewards: None,
            target_degree: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn network<T: Scalar>(&self) -> Result<Network<T>, IoError> {
        let mut b = NetworkBuilder::new();
        for v in &self.validators {
            b = b.validator(v.id.clone(), T::from_literal(v.stake));
        }
        for s in &self.services {
            let (t, p) = (T::from_literal(s.threshold), T::from_literal(s.prize));
            b = if s.base { b.base_service(s.id.clone(), t, p) } else { b.service(s.id.clone(), t, p) };
        }
        for a in &self.allocations {
            b = b.allocate(a.validator.clone(), a.service.clone(), T::from_literal(a.amount));
        }
        Ok(b.build()?)
    }

    /// Reward pools for `net`; fails when the file has none.
    pub fn reward_pools<T: Scalar>(&self, net: &Network<T>) -> Result<RewardPools<T>, IoError> {
        let (Some(rewards), Some(d)) = (&self.rewards, self.target_degree) else {
            return Err(IoError::NoRewards);
        };
        let rewards = rewards.iter().map(|(k, r)| (k.clone(), T::from_literal(*r))).collect();
        Ok(RewardPools::for_network(net, &rewards, T::from_literal(d))?)
    }
}

/// Reads and validates a network file.
pub fn read_network<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>, IoError> {
    NetworkFile::read(path)?.network()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::{ratio, Rational};

    const SHARED_SERVICE: &str = r#"{
        "validators": [{"id": "a", "stake": 20}, {"id": "b", "stake": 20}],
        "services": [{"id": "s", "threshold": 0.5, "prize": 5}],
        "allocations": [
            {"validator": "a", "service": "s", "amount": 20},
            {"validator": "b", "service": "s", "amount": 20}
        ]
    }"#;

    #[test]
    fn parses_network() {
        let net: Network<f64> = NetworkFile::parse(SHARED_SERVICE).unwrap().network().unwrap();
        assert_eq!(net.validator_ids(), &["a", "b"]);
        assert_eq!(net.allocation(1, 0), &20.0);
        assert!(!net.is_base(0));
    }

    #[test]
    fn decimals_are_exact_for_rationals() {
        let text = r#"{"validators": [{"id": "v", "stake": 1}],
            "services": [{"id": "s", "threshold": 0.1, "prize": 1}]}"#;
        let net: Network<Rational> = NetworkFile::parse(text).unwrap().network().unwrap();
        assert_eq!(net.threshold(0), &ratio(1, 10));
        assert_eq!(net.allocation(0, 0), &ratio(0, 1));
    }

    #[test]
    fn parse_errors_carry_field_path() {
        let text = r#"{"validators": [{"id": "v", "stake": "lots"}], "services": []}"#;
        match NetworkFile::parse(text) {
            Err(IoError::Parse { path, .. }) => assert_eq!(path, "validators[0].stake"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"validators": [], "services": [{"id": "s", "threshold": 0.5, "prize": 1, "bse": true}]}"#;
        match NetworkFile::parse(text) {
            Err(IoError::Parse { path, .. }) => assert!(path.starts_with("services[0]"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_the_id() {
        let text = r#"{"validators": [{"id": "v", "stake": 1}],
            "services": [{"id": "s", "threshold": 0.5, "prize": 1}],
            "allocations": [{"validator": "w", "service": "s", "amount": 1}]}"#;
        let err = NetworkFile::parse(text).unwrap().network::<f64>().unwrap_err();
        assert!(err.to_string().contains("`w`"), "{err}");
    }

    #[test]
    fn round_trip() {
        let net = fixtures::uneven_validator::<f64>();
        let back: Network<f64> = NetworkFile::parse(&NetworkFile::from_network(&net).to_json()).unwrap().network().unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn reward_pools_follow_service_order() {
        let text = r#"{"validators": [{"id": "v", "stake": 10}],
            "services": [{"id": "x", "threshold": 0.5, "prize": 1}, {"id": "y", "threshold": 0.5, "prize": 1}],
            "rewards": {"y": 3, "x": 1}, "target_degree": 1}"#;
        let file = NetworkFile::parse(text).unwrap();
        let net: Network<f64> = file.network().unwrap();
        let pools = file.reward_pools(&net).unwrap();
        assert_eq!(pools.reward, vec![1.0, 3.0]);
        assert!(matches!(NetworkFile::parse(SHARED_SERVICE).unwrap().reward_pools(&net), Err(IoError::NoRewards)));
    }
}
