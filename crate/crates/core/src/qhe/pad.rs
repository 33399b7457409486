use rand::Rng;

use crate::quantum::GateOp;

/// Plain Pauli pad `Z^z X^x` on a block of qubits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PauliPad {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl PauliPad {
    pub fn zero(n: usize) -> Self {
        PauliPad {
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        PauliPad {
            x: (0..n).map(|_| rng.gen()).collect(),
            z: (0..n).map(|_| rng.gen()).collect(),
        }
    }

    /// Pad number `index` in `0..4^n`: bit `2i` is `x_i`, bit `2i+1` is `z_i`.
    pub fn from_index(n: usize, index: usize) -> Self {
        PauliPad {
            x: (0..n).map(|i| index >> (2 * i) & 1 == 1).collect(),
            z: (0..n).map(|i| index >> (2 * i + 1) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Gates that apply the pad to `qubits`: X first, then Z.
    pub fn gates(&self, qubits: &[usize]) -> Vec<GateOp> {
        let mut g = Vec::new();
        for (i, q) in qubits.iter().enumerate() {
            if self.x[i] {
                g.push(GateOp::X(*q));
            }
            if self.z[i] {
                g.push(GateOp::Z(*q));
            }
        }
        g
    }

    /// Pad after moving a Clifford gate past it: `G P = P' G` up to phase.
    /// Returns `None` for non-Clifford gates.
    pub fn conjugate(&self, gate: &GateOp) -> Option<PauliPad> {
        let mut p = self.clone();
        match *gate {
            GateOp::X(_) | GateOp::Z(_) => {}
            GateOp::H(q) => std::mem::swap(&mut p.x[q], &mut p.z[q]),
            GateOp::S(q) => p.z[q] ^= p.x[q],
            GateOp::Cnot { control, target } => {
                p.x[target] ^= p.x[control];
                p.z[control] ^= p.z[target];
            }
            GateOp::Toffoli { .. } | GateOp::Ry { .. } => return None,
        }
        Some(p)
    }

    /// The Pauli part of the Toffoli rewrite on qubits `(c1, c2, t)`:
    /// `T P = C P' T` where `C` is a product of pad-controlled CNOTs and
    /// Hadamards.
    pub fn toffoli_rewrite(&self, c1: usize, c2: usize, t: usize) -> PauliPad {
        let mut p = self.clone();
        let (x1, x2, x3) = (self.x[c1], self.x[c2], self.x[t]);
        let (z1, z2, z3) = (self.z[c1], self.z[c2], self.z[t]);
        p.z[c1] = z1 ^ (x2 & z3);
        p.z[c2] = z2 ^ (x1 & z3);
        p.x[t] = (x1 & x2) ^ x3;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{trace_distance, Statevector};
    use crate::rng::Seed;
    use num_complex::Complex64;

    fn random_state(n: usize, seed: u64) -> Statevector {
        let mut rng = Seed::from_u64(seed).rng();
        let amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    #[test]
    fn clifford_rules_hold_for_every_pad() {
        let gates = [
            GateOp::X(0),
            GateOp::Z(0),
            GateOp::H(0),
            GateOp::S(0),
            GateOp::Cnot { control: 0, target: 1 },
            GateOp::Cnot { control: 1, target: 0 },
        ];
        let psi = random_state(2, 1);
        for g in &gates {
            for idx in 0..16 {
                let p = PauliPad::from_index(2, idx);
                // G P |psi>
                let mut lhs = psi.clone();
                lhs.apply_all(&p.gates(&[0, 1])).unwrap();
                lhs.apply(g).unwrap();
                // P' G |psi>
                let mut rhs = psi.clone();
                rhs.apply(g).unwrap();
                rhs.apply_all(&p.conjugate(g).unwrap().gates(&[0, 1])).unwrap();
                let d = trace_distance(&lhs.density(), &rhs.density()).unwrap();
                assert!(d < 1e-12, "{g:?} pad {idx}: {d}");
            }
        }
    }

    #[test]
    fn toffoli_rewrite_matches_correction_circuit() {
        // T P |psi> = C P' T |psi> with
        // C = CNOT^{x2}(1->3) CNOT^{x1}(2->3) H_2 CNOT^{z3}(1->2) H_2.
        let psi = random_state(3, 2);
        for idx in 0..64 {
            let p = PauliPad::from_index(3, idx);
            let mut lhs = psi.clone();
            lhs.apply_all(&p.gates(&[0, 1, 2])).unwrap();
            lhs.apply(&GateOp::Toffoli { c1: 0, c2: 1, target: 2 }).unwrap();

            let mut rhs = psi.clone();
            rhs.apply(&GateOp::Toffoli { c1: 0, c2: 1, target: 2 }).unwrap();
            rhs.apply_all(&p.toffoli_rewrite(0, 1, 2).gates(&[0, 1, 2])).unwrap();
            rhs.apply(&GateOp::H(1)).unwrap();
            if p.z[2] {
                rhs.apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
            }
            rhs.apply(&GateOp::H(1)).unwrap();
            if p.x[0] {
                rhs.apply(&GateOp::Cnot { control: 1, target: 2 }).unwrap();
            }
            if p.x[1] {
                rhs.apply(&GateOp::Cnot { control: 0, target: 2 }).unwrap();
            }
            let d = trace_distance(&lhs.density(), &rhs.density()).unwrap();
            assert!(d < 1e-12, "pad {idx}: {d}");
        }
    }

    #[test]
    fn uniform_pads_hide_a_qubit() {
        let psi = random_state(1, 3);
        let mut avg = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
        for idx in 0..4 {
            let mut s = psi.clone();
            s.apply_all(&PauliPad::from_index(1, idx).gates(&[0])).unwrap();
            avg += s.density().matrix() * Complex64::new(0.25, 0.0);
        }
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 0.5 } else { 0.0 };
                assert!((avg[(r, c)] - Complex64::new(want, 0.0)).norm() < 1e-9);
            }
        }
    }
}
