//! Elastic restaking networks: security and robustness analysis.
//!
//! The numeric core is generic over [`Scalar`], implemented for `f64`, `f32`
//! and the exact [`Rational`].

pub mod brute_force;
pub mod experiments;
pub mod fixtures;
pub mod incentives;
pub mod io;
pub mod lp;
pub mod mip;
pub mod model;
pub mod scalar;
pub mod symmetric;

pub use model::{Attack, AttackEvaluation, ModelError, Network, NetworkBuilder};
pub use scalar::{decimal, ratio, Rational, Scalar};

pub type Network64 = Network<f64>;
pub type ExactNetwork = Network<Rational>;
pub type Attack64 = Attack<f64>;
