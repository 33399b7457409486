use serde::{Deserialize, Serialize};

/// An elementary gate on explicit qubit indices.
///
/// `Ry` is only used by plain (unencrypted) strategy circuits; the homomorphic
/// evaluator accepts the Clifford+Toffoli subset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GateOp {
    X(usize),
    Z(usize),
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
    Ry { target: usize, theta: f64 },
}

impl GateOp {
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            GateOp::X(q) | GateOp::Z(q) | GateOp::H(q) | GateOp::S(q) => vec![q],
            GateOp::Ry { target, .. } => vec![target],
            GateOp::Cnot { control, target } => vec![control, target],
            GateOp::Toffoli { c1, c2, target } => vec![c1, c2, target],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateOp::Cnot { .. } => 2,
            GateOp::Toffoli { .. } => 3,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateOp::X(_) => "X",
            GateOp::Z(_) => "Z",
            GateOp::H(_) => "H",
            GateOp::S(_) => "S",
            GateOp::Cnot { .. } => "CNOT",
            GateOp::Toffoli { .. } => "Toffoli",
            GateOp::Ry { .. } => "Ry",
        }
    }

    pub fn is_clifford(&self) -> bool {
        !matches!(self, GateOp::Toffoli { .. } | GateOp::Ry { .. })
    }

    /// Same gate with every qubit index passed through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> GateOp {
        match *self {
            GateOp::X(q) => GateOp::X(f(q)),
            GateOp::Z(q) => GateOp::Z(f(q)),
            GateOp::H(q) => GateOp::H(f(q)),
            GateOp::S(q) => GateOp::S(f(q)),
            GateOp::Ry { target, theta } => GateOp::Ry { target: f(target), theta },
            GateOp::Cnot { control, target } => GateOp::Cnot {
                control: f(control),
                target: f(target),
            },
            GateOp::Toffoli { c1, c2, target } => GateOp::Toffoli {
                c1: f(c1),
                c2: f(c2),
                target: f(target),
            },
        }
    }

    /// Rotation that maps `cos(theta)|0> + sin(theta)|1>` to `|0>`, so that a
    /// standard-basis measurement afterwards measures in the `theta` basis.
    pub fn basis_rotation(target: usize, theta: f64) -> GateOp {
        GateOp::Ry {
            target,
            theta: -2.0 * theta,
        }
    }
}
