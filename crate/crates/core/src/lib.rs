//! Compile k-player non-local games into single-prover interactive protocols
//! using a toy qubit-by-qubit quantum homomorphic encryption scheme, and check
//! completeness, soundness extraction, repetition and Fiat-Shamir behaviour
//! by exact simulation.

pub mod compiler;
pub mod games;
pub mod qhe;
pub mod quantum;
pub mod repetition;
pub mod rng;
pub mod soundness;
pub mod stats;
