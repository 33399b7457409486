use serde::{Deserialize, Serialize};

use crate::games::NonLocalGame;
use crate::qhe::{ClassicalAnswer, EncryptedBits, EvalKey, KeyId};

/// Verifier-to-prover message.
#[derive(Clone, Debug)]
pub enum VerifierMessage {
    /// Player `player`'s query under a fresh key; `key` is the public
    /// evaluation capability for that key.
    Encrypted {
        player: usize,
        query: EncryptedBits,
        key: EvalKey,
    },
    Plain { player: usize, query: u64 },
}

impl VerifierMessage {
    pub fn player(&self) -> usize {
        match self {
            VerifierMessage::Encrypted { player, .. } | VerifierMessage::Plain { player, .. } => *player,
        }
    }
}

/// Prover-to-verifier message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProverMessage {
    Encrypted { answer: ClassicalAnswer },
    Plain { answer: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sender {
    Verifier,
    Prover,
}

/// Serializable message body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    EncryptedQuery { player: usize, query: EncryptedBits },
    PlainQuery { player: usize, query: u64 },
    EncryptedAnswer { answer: ClassicalAnswer },
    PlainAnswer { answer: u64 },
    /// The prover produced no message.
    Missing { cause: String },
}

impl From<&VerifierMessage> for Payload {
    fn from(m: &VerifierMessage) -> Self {
        match m {
            VerifierMessage::Encrypted { player, query, .. } => Payload::EncryptedQuery {
                player: *player,
                query: query.clone(),
            },
            VerifierMessage::Plain { player, query } => Payload::PlainQuery {
                player: *player,
                query: *query,
            },
        }
    }
}

impl From<&ProverMessage> for Payload {
    fn from(m: &ProverMessage) -> Self {
        match m {
            ProverMessage::Encrypted { answer } => Payload::EncryptedAnswer { answer: answer.clone() },
            ProverMessage::Plain { answer } => Payload::PlainAnswer { answer: *answer },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundMessage {
    pub round: usize,
    pub sender: Sender,
    pub payload: Payload,
}

/// Record of one protocol execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub game: String,
    pub queries: Vec<u64>,
    pub keys: Vec<KeyId>,
    pub messages: Vec<RoundMessage>,
    /// Decrypted answers; absent when some answer was malformed.
    pub answers: Option<Vec<u64>>,
    pub accept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Transcript {
    /// Re-evaluates the predicate on the recorded queries and answers.
    pub fn recompute_accept(&self, game: &NonLocalGame) -> bool {
        match &self.answers {
            Some(a) if self.error.is_none() => game.accepts(&self.queries, a),
            _ => false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}
