use serde::{Deserialize, Serialize};

use super::{GateOp, QuantumError, Result};

/// A gate list over a local qubit layout, bound to concrete qubits at run time.
///
/// Local indices are laid out as `[inputs | data | ancillas]`: `inputs` carry
/// classical input bits (loaded in the computational basis), `data` is the
/// register the circuit acts on, and `ancillas` start in `|0>`. Output bit `j`
/// is the measurement of local qubit `measured[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub inputs: usize,
    pub data: usize,
    pub ancillas: usize,
    pub gates: Vec<GateOp>,
    pub measured: Vec<usize>,
}

impl Circuit {
    pub fn width(&self) -> usize {
        self.inputs + self.data + self.ancillas
    }

    pub fn identity(data: usize, measured: Vec<usize>) -> Self {
        Circuit {
            inputs: 0,
            data,
            ancillas: 0,
            gates: Vec::new(),
            measured,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.width();
        for g in &self.gates {
            let t = g.targets();
            for (i, &q) in t.iter().enumerate() {
                if q >= w {
                    return Err(QuantumError::QubitOutOfRange {
                        index: q,
                        num_qubits: w,
                    });
                }
                if t[..i].contains(&q) {
                    return Err(QuantumError::DuplicateQubit(q));
                }
            }
        }
        for (i, &q) in self.measured.iter().enumerate() {
            if q >= w {
                return Err(QuantumError::QubitOutOfRange {
                    index: q,
                    num_qubits: w,
                });
            }
            if self.measured[..i].contains(&q) {
                return Err(QuantumError::DuplicateQubit(q));
            }
        }
        Ok(())
    }

    pub fn toffoli_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, GateOp::Toffoli { .. }))
            .count()
    }

    /// Gates rewritten onto global qubit indices, `binding[local] = global`.
    pub fn bind(&self, binding: &[usize]) -> Vec<GateOp> {
        self.gates.iter().map(|g| g.remap(|q| binding[q])).collect()
    }
}

/// Controlled-SWAP of `a` and `b` on `control`: one Toffoli between two CNOTs.
pub fn fredkin(control: usize, a: usize, b: usize) -> [GateOp; 3] {
    [
        GateOp::Cnot { control: b, target: a },
        GateOp::Toffoli {
            c1: control,
            c2: a,
            target: b,
        },
        GateOp::Cnot { control: b, target: a },
    ]
}

/// Apply `body` (single-qubit gates on `scratch`) to `target` iff `control` is
/// set, by swapping `target` into a `|0>` scratch qubit and back. If `body`
/// does not fix `|0>`, the scratch qubit is left in `body|0>` when the control
/// is off, as a product factor.
pub fn controlled_via_swap(
    control: usize,
    target: usize,
    scratch: usize,
    body: &[GateOp],
) -> Vec<GateOp> {
    let mut gates = fredkin(control, target, scratch).to_vec();
    gates.extend_from_slice(body);
    gates.extend(fredkin(control, target, scratch));
    gates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Statevector;

    #[test]
    fn fredkin_swaps_only_when_control_set() {
        for input in 0..8usize {
            let mut s = Statevector::basis(3, input).unwrap();
            s.apply_all(&fredkin(0, 1, 2)).unwrap();
            let (c, a, b) = (input & 1, input >> 1 & 1, input >> 2 & 1);
            let expect = if c == 1 { c | b << 1 | a << 2 } else { input };
            assert_eq!(s.amplitudes()[expect].re, 1.0, "input {input:03b}");
        }
    }

    #[test]
    fn validate_catches_bad_indices() {
        let mut c = Circuit::identity(1, vec![0]);
        assert!(c.validate().is_ok());
        c.gates.push(GateOp::H(1));
        assert!(c.validate().is_err());
        let dup = Circuit::identity(2, vec![1, 1]);
        assert_eq!(dup.validate(), Err(QuantumError::DuplicateQubit(1)));
    }
}
