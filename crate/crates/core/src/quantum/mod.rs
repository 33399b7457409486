//! Exact statevector simulation of small qubit systems.

mod circuit;
mod density;
mod gate;
mod state;

pub use circuit::{controlled_via_swap, fredkin, Circuit};
pub use density::{trace_distance, DensityMatrix};
pub use gate::GateOp;
pub use state::{Register, Statevector, DEFAULT_QUBIT_CAP};

use thiserror::Error;

/// Tolerance for normalization and density-matrix validity checks.
pub const STATE_TOL: f64 = 1e-9;
/// Tolerance for algebraic identities (involutions, exact rewrites).
pub const ALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("qubit count {requested} is outside [1, {cap}]")]
    QubitCount { requested: usize, cap: usize },
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("register `{0}` overlaps an existing register")]
    RegisterOverlap(String),
    #[error("register `{0}` already exists")]
    DuplicateRegister(String),
    #[error("discarding qubits would split register `{0}`")]
    SplitRegister(String),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not a valid density operator: {0}")]
    InvalidDensity(String),
}

pub type Result<T> = std::result::Result<T, QuantumError>;
