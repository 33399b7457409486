//! k-player non-local games: query tables, exact classical values, exact
//! values of quantum strategies, and the built-in CHSH, GHZ and magic-square
//! games.

mod builtin;
mod game;
mod json;
mod strategy;
mod value;

pub use builtin::{
    builtin_game, chsh_game, chsh_strategy, ghz3_game, ghz3_strategy, magic_square_game,
    magic_square_strategy, BuiltinGame,
};
pub use game::{ConditionalQuerySampler, NonLocalGame, Predicate, QueryEntry, Weight};
pub use json::{game_from_json, game_to_json, GameJson, QueryJson};
pub use strategy::{quantum_strategy_value, PlayerStrategy, QuantumStrategy};
pub use value::{
    classical_optimum, classical_value_bruteforce, strategy_space_size, AnswerTable,
    ClassicalOptimum, DEFAULT_STRATEGY_GUARD,
};


use thiserror::Error;

use crate::quantum::QuantumError;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("malformed game: {0}")]
    Shape(String),
    #[error("invalid query weights: {0}")]
    Weights(String),
    #[error("strategy search space of {size} tuples exceeds guard {guard}")]
    GuardExceeded { size: u128, guard: u128 },
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("query {value} of player {player} has zero probability")]
    ZeroProbability { player: usize, value: u64 },
    #[error("strategy does not match game: {0}")]
    StrategyMismatch(String),
    #[error("game JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub type Result<T> = std::result::Result<T, GameError>;

/// Exact rational as `f64`.
pub fn weight_to_f64(w: Weight) -> f64 {
    *w.numer() as f64 / *w.denom() as f64
}
