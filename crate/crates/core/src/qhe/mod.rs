//! Toy qubit-by-qubit quantum homomorphic encryption.
//!
//! Qubits are hidden by a Pauli one-time pad `Z^z X^x`; the pad bits are
//! encrypted under an ideal classical scheme modelled as a key escrow.
//! Clifford gates update the encrypted pads by conjugation. A Toffoli is
//! applied directly and the resulting pad-dependent Clifford correction is
//! undone with three encrypted CNOTs, each run through a toy trapdoor
//! claw-free pair.

mod checks;
mod classical;
mod eval;
mod pad;
mod tcf;

pub use checks::{
    aux_correctness_suite, check_aux_correctness, check_locality, claw_check,
    exhaustive_gate_check, locality_suite, plain_cq_output, qhe_selftest, random_circuit,
    random_circuit_check, random_gate, random_joint_state, random_state, toffoli_cnot_count,
    SelfTestReport,
};
pub use classical::{ClassicalCt, EvalKey, KeyId, QheMode, SecretKey};
pub use eval::{
    eval_circuit, AuxPad, ClassicalAnswer, EncryptedBits, EvalOutput, EvalStats, Evaluator,
    PadCt, QheCiphertext,
};
pub use pad::PauliPad;
pub use tcf::{TcfDescription, ToyTcf};

use thiserror::Error;

use crate::quantum::QuantumError;

/// Scheme parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct QheParams {
    /// Width of the claw randomness `r`.
    pub rho: usize,
}

impl Default for QheParams {
    fn default() -> Self {
        QheParams { rho: 2 }
    }
}

#[derive(Debug, Error)]
pub enum QheError {
    #[error("ciphertext under key {found}, expected key {expected}")]
    ForeignKey { expected: KeyId, found: KeyId },
    #[error("unknown handle {0:032x}")]
    UnknownHandle(u128),
    #[error("gate {0} cannot be evaluated homomorphically")]
    UnsupportedGate(String),
    #[error("register mismatch: {0}")]
    RegisterMismatch(String),
    #[error("register `{0}` is already encrypted")]
    AlreadyEncrypted(String),
    #[error("encrypted CNOT needs {needed} qubits, cap is {cap}")]
    AncillaExhausted { needed: usize, cap: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub type Result<T> = std::result::Result<T, QheError>;
