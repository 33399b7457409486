//! The compiled single-prover protocol: for each of the first `k - 1`
//! players the verifier sends that player's query encrypted under a fresh
//! key and receives an encrypted answer; the last player's query and answer
//! travel in the clear. The verifier decrypts and applies the game predicate.

mod message;
mod prover;
mod run;

pub use message::{Payload, ProverMessage, RoundMessage, Sender, Transcript, VerifierMessage};
pub use prover::{
    encrypted_lookup, BestLocalProver, BiasedRandomProver, ConstantProver, DecryptingProver,
    HonestQuantumProver, Prover, RejectingProver,
};
pub use run::{estimate_value, honest_answer_distribution, run_protocol};
pub(crate) use run::check_answer;

use std::sync::Arc;

use thiserror::Error;

use crate::games::{GameError, NonLocalGame};
use crate::qhe::{QheError, QheMode, QheParams};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("compiled protocols need at least 2 players, got {0}")]
    TooFewPlayers(usize),
    #[error("circuit not evaluable under encryption: {0}")]
    NotEvaluable(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("prover failed: {0}")]
    Prover(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Qhe(#[from] QheError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// A game compiled into a `2k`-message single-prover protocol.
#[derive(Clone, Debug)]
pub struct CompiledProtocol {
    game: Arc<NonLocalGame>,
    lambda: u32,
    mode: QheMode,
    params: QheParams,
}

/// Compiles `game` with security parameter `lambda` in the ideal mode.
pub fn compile(game: NonLocalGame, lambda: u32) -> Result<CompiledProtocol> {
    CompiledProtocol::new(Arc::new(game), lambda, QheMode::Ideal, QheParams::default())
}

impl CompiledProtocol {
    pub fn new(game: Arc<NonLocalGame>, lambda: u32, mode: QheMode, params: QheParams) -> Result<Self> {
        if game.k() < 2 {
            return Err(ProtocolError::TooFewPlayers(game.k()));
        }
        if lambda == 0 {
            return Err(QheError::Precondition("security parameter must be at least 1".into()).into());
        }
        Ok(CompiledProtocol {
            game,
            lambda,
            mode,
            params,
        })
    }

    pub fn with_mode(mut self, mode: QheMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_params(mut self, params: QheParams) -> Self {
        self.params = params;
        self
    }

    pub fn game(&self) -> &NonLocalGame {
        &self.game
    }

    pub fn game_arc(&self) -> Arc<NonLocalGame> {
        self.game.clone()
    }

    pub fn k(&self) -> usize {
        self.game.k()
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn mode(&self) -> QheMode {
        self.mode
    }

    pub fn params(&self) -> QheParams {
        self.params
    }

    /// Total messages per execution.
    pub fn rounds(&self) -> usize {
        2 * self.k()
    }

    /// Independent keys sampled per execution.
    pub fn keys_per_run(&self) -> usize {
        self.k() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{chsh_game, ghz3_game, QueryEntry, Weight};

    #[test]
    fn round_plans() {
        let p = compile(chsh_game(), 8).unwrap();
        assert_eq!((p.rounds(), p.keys_per_run()), (4, 1));
        let p = compile(ghz3_game(), 8).unwrap();
        assert_eq!((p.rounds(), p.keys_per_run()), (6, 2));
    }

    #[test]
    fn single_player_game_rejected() {
        let g = NonLocalGame::new(
            "solo",
            vec![1],
            vec![1],
            vec![QueryEntry { queries: vec![0], weight: Weight::from_integer(1) }],
            Arc::new(|_, _| true),
        )
        .unwrap();
        assert!(matches!(compile(g, 8), Err(ProtocolError::TooFewPlayers(1))));
    }
}
