//! Small reference networks used throughout the tests and the CLI examples.
//!
//! Thresholds and prizes not pinned down by the layouts are set to
//! `1/2` and `1`.

use crate::model::Network;
use crate::scalar::Scalar;

fn s<T: Scalar>(x: f64) -> T {
    T::from_f64_lossy(x)
}

fn half<T: Scalar>() -> T {
    T::one() / T::from_count(2)
}

/// Two validators with 20 stake each fully allocated to one service with
/// threshold 1/2 and prize 5.
pub fn shared_service<T: Scalar>() -> Network<T> {
    Network::from_matrix(
        vec![s(20.0), s(20.0)],
        vec![vec![s(20.0)], vec![s(20.0)]],
        vec![half()],
        vec![s(5.0)],
    )
    .expect("fixture is valid")
}

/// One validator with stake 2 allocating 1 to each of three services.
pub fn stretched_validator<T: Scalar>() -> Network<T> {
    Network::from_matrix(
        vec![s(2.0)],
        vec![vec![T::one(), T::one(), T::one()]],
        vec![half(), half(), half()],
        vec![T::one(), T::one(), T::one()],
    )
    .expect("fixture is valid")
}

/// One validator with stake 5 allocating 3, 3 and 1.
pub fn uneven_validator<T: Scalar>() -> Network<T> {
    Network::from_matrix(
        vec![s(5.0)],
        vec![vec![s(3.0), s(3.0), T::one()]],
        vec![half(), half(), half()],
        vec![T::one(), T::one(), T::one()],
    )
    .expect("fixture is valid")
}

/// A validator with stake 2 allocating 1 to a service with threshold 1 and
/// prize 1: satisfies the validator-side sufficient condition yet is
/// insecure.
pub fn lone_validator<T: Scalar>() -> Network<T> {
    Network::from_matrix(vec![s(2.0)], vec![vec![T::one()]], vec![T::one()], vec![T::one()])
        .expect("fixture is valid")
}
