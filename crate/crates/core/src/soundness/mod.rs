//! Extraction of local classical strategies from a deterministic classical
//! prover of a compiled protocol, the distinguishing adversary built from
//! them, and the hybrid chain for k players.

mod adversary;
mod coins;
mod estimator;
mod kplayer;
mod prefix;

pub use adversary::{adversary_distinguish, AdversaryReport};
pub use coins::fix_coins;
pub use estimator::{
    build_estimator_f, conditional_win_probabilities, estimator_concentration, estimator_samples,
    exact_argmax_p1, extract_local_provers, ConcentrationReport, EstimatorF, LocalProverPair, P1Method,
};
pub use kplayer::{extract_k_provers, hybrid_values, k_estimator_samples, HybridReport, KExtraction};
pub use prefix::{build_p2, fix_prefix, prefix_from_ciphertext, Emulator, FixedPrefix};

use thiserror::Error;

use crate::compiler::ProtocolError;
use crate::games::GameError;
use crate::qhe::QheError;

/// Default cap on hardwired samples and enumerated answers.
pub const DEFAULT_SOUNDNESS_GUARD: u128 = 100_000_000;

#[derive(Debug, Error)]
pub enum SoundnessError {
    #[error("extraction needs a deterministic prover: {0}")]
    Nondeterministic(String),
    #[error("expected a 2-player game, got {0} players")]
    NotTwoPlayer(usize),
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("{what} needs {needed} steps, guard is {guard}")]
    Guard { what: String, needed: u128, guard: u128 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Qhe(#[from] QheError),
}

pub type Result<T> = std::result::Result<T, SoundnessError>;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(SoundnessError::Epsilon(epsilon))
    }
}

fn check_guard(what: &str, needed: u128, guard: u128) -> Result<()> {
    if needed > guard {
        return Err(SoundnessError::Guard {
            what: what.into(),
            needed,
            guard,
        });
    }
    Ok(())
}

/// `ceil(x)` that ignores floating error just above an integer.
fn ceil_count(x: f64) -> u64 {
    (x - 1e-9).ceil().max(1.0) as u64
}

/// First maximizer.
fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
