//! Threshold repetition of games and compiled protocols (sequential and
//! parallel), the Chernoff prediction for honest provers, and the
//! Fiat-Shamir two-message variant.

mod fs;
mod oracle;
mod parallel;
mod sequential;
mod threshold;

pub use fs::{
    estimate_fs_value, fiat_shamir_compile, fs_prove, run_fs, FsProof, FsProtocol, FsTranscript,
};
pub use oracle::RandomOracle;
pub use parallel::{
    estimate_parallel, parallel_repeat_protocol, run_parallel, IidProver, ParallelProtocol, ParallelProver,
    ParallelTranscript,
};
pub use sequential::{estimate_sequential, sequential_repeat_run, SequentialOutcome};
pub use threshold::{iid_strategy, threshold_count, threshold_repeat, ThresholdRepeatedGame};

use thiserror::Error;

use crate::compiler::ProtocolError;
use crate::games::GameError;
use crate::quantum::QuantumError;

#[derive(Debug, Error)]
pub enum RepetitionError {
    #[error("invalid repetition parameter: {0}")]
    Parameter(String),
    #[error("Fiat-Shamir needs a uniform last query independent of the first: {0}")]
    NotPublicCoin(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub type Result<T> = std::result::Result<T, RepetitionError>;

/// `1 - 2^(-2 t (v_star - theta)^2)`, a lower bound on the probability that
/// `t` independent runs won with probability `v_star` clear a `theta`
/// fraction.
pub fn chernoff_bound(v_star: f64, theta: f64, t: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v_star) || !(0.0..=1.0).contains(&theta) {
        return Err(RepetitionError::Parameter(format!(
            "v_star = {v_star} and theta = {theta} must lie in [0, 1]"
        )));
    }
    if v_star < theta {
        return Err(RepetitionError::Parameter(format!(
            "v_star = {v_star} is below the threshold {theta}"
        )));
    }
    let eps = v_star - theta;
    Ok(1.0 - (-2.0 * t as f64 * eps * eps).exp2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chernoff_arithmetic() {
        let b = chernoff_bound(0.8536, 0.8, 1000).unwrap();
        assert!((b - (1.0 - (-5.74592f64).exp2())).abs() < 1e-6);
        assert!((b - 0.981).abs() < 1e-3);
        assert_eq!(chernoff_bound(0.8, 0.8, 1000).unwrap(), 0.0);
        assert!(chernoff_bound(0.7, 0.8, 10).is_err());
        for t in 1..200 {
            assert!(chernoff_bound(0.85, 0.8, t + 1).unwrap() >= chernoff_bound(0.85, 0.8, t).unwrap());
        }
    }
}
