use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::{Circuit, GateOp, Statevector};

use super::classical::{ClassicalCt, EvalKey, KeyId, SecretKey};
use super::pad::PauliPad;
use super::{QheError, QheParams, Result};

/// Encryptions of the X and Z pad bits of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadCt {
    pub x: ClassicalCt,
    pub z: ClassicalCt,
}

/// Pauli-padded qubits of a [`Statevector`] together with their pad
/// ciphertexts. The qubits themselves stay inside the simulator.
#[derive(Clone, Debug, PartialEq)]
pub struct QheCiphertext {
    key_id: KeyId,
    qubits: Vec<usize>,
    pads: Vec<PadCt>,
}

impl QheCiphertext {
    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn pads(&self) -> &[PadCt] {
        &self.pads
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Concatenation of two ciphertexts under the same key.
    pub fn join(mut self, other: QheCiphertext) -> Result<QheCiphertext> {
        if self.key_id != other.key_id {
            return Err(QheError::ForeignKey {
                expected: self.key_id,
                found: other.key_id,
            });
        }
        self.qubits.extend(other.qubits);
        self.pads.extend(other.pads);
        Ok(self)
    }
}

/// An encrypted classical string: bit `j` is sent as `q_j xor x_j` with an
/// encryption of `x_j`; its Z pad is an encryption of 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncryptedBits {
    pub key_id: KeyId,
    pub padded: Vec<bool>,
    pub pads: Vec<PadCt>,
}

impl EncryptedBits {
    pub fn width(&self) -> usize {
        self.padded.len()
    }
}

/// Padded measurement outcomes plus encryptions of their X pads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalAnswer {
    pub bits: Vec<bool>,
    pub pads: Vec<ClassicalCt>,
}

/// How the evaluator pads an unencrypted auxiliary register before use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AuxPad {
    #[default]
    Random,
    Trivial,
}

fn pack(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (j, b)| acc | (*b as u64) << j)
}

impl SecretKey {
    pub fn encrypt_bits<R: Rng + ?Sized>(&self, value: u64, width: usize, rng: &mut R) -> EncryptedBits {
        let mut padded = Vec::with_capacity(width);
        let mut pads = Vec::with_capacity(width);
        for j in 0..width {
            let x: bool = rng.gen();
            padded.push((value >> j & 1 == 1) ^ x);
            pads.push(PadCt {
                x: self.encrypt(x),
                z: self.encrypt(false),
            });
        }
        EncryptedBits {
            key_id: self.key_id(),
            padded,
            pads,
        }
    }

    pub fn decrypt_bits(&self, ct: &EncryptedBits) -> Result<u64> {
        let mut out = Vec::with_capacity(ct.width());
        for (b, p) in ct.padded.iter().zip(&ct.pads) {
            out.push(b ^ self.decrypt(&p.x)?);
        }
        Ok(pack(&out))
    }

    pub fn decrypt_answer(&self, ans: &ClassicalAnswer) -> Result<u64> {
        if ans.bits.len() != ans.pads.len() {
            return Err(QheError::Precondition(format!(
                "{} answer bits with {} pads",
                ans.bits.len(),
                ans.pads.len()
            )));
        }
        let mut out = Vec::with_capacity(ans.bits.len());
        for (b, x) in ans.bits.iter().zip(&ans.pads) {
            out.push(b ^ self.decrypt(x)?);
        }
        Ok(pack(&out))
    }

    /// One-time pads a named register with fresh uniform pads.
    pub fn enc_qubits<R: Rng + ?Sized>(
        &self,
        state: &mut Statevector,
        register: &str,
        rng: &mut R,
    ) -> Result<QheCiphertext> {
        let qubits = state.register(register)?.qubits();
        self.claim_register(register)?;
        let pad = PauliPad::random(qubits.len(), rng);
        self.enc_qubits_with_pad(state, &qubits, &pad)
    }

    /// Pads `qubits` with a caller-chosen pad.
    pub fn enc_qubits_with_pad(
        &self,
        state: &mut Statevector,
        qubits: &[usize],
        pad: &PauliPad,
    ) -> Result<QheCiphertext> {
        encrypt_with(state, qubits, pad, |b| self.encrypt(b), self.key_id())
    }

    /// The plain pad behind a ciphertext.
    pub fn decrypt_pad(&self, ct: &QheCiphertext) -> Result<PauliPad> {
        self.check(ct.key_id)?;
        let mut pad = PauliPad::zero(ct.len());
        for (i, p) in ct.pads.iter().enumerate() {
            pad.x[i] = self.decrypt(&p.x)?;
            pad.z[i] = self.decrypt(&p.z)?;
        }
        Ok(pad)
    }

    /// Removes the pads in place.
    pub fn dec_qubits(&self, state: &mut Statevector, ct: &QheCiphertext) -> Result<()> {
        let pad = self.decrypt_pad(ct)?;
        // Z^z X^x is undone by Z then X, up to phase
        state.apply_all(pad.gates(&ct.qubits).iter().rev())?;
        Ok(())
    }

    fn check(&self, id: KeyId) -> Result<()> {
        if id != self.key_id() {
            return Err(QheError::ForeignKey {
                expected: self.key_id(),
                found: id,
            });
        }
        Ok(())
    }
}

fn encrypt_with(
    state: &mut Statevector,
    qubits: &[usize],
    pad: &PauliPad,
    mut enc: impl FnMut(bool) -> ClassicalCt,
    key_id: KeyId,
) -> Result<QheCiphertext> {
    if pad.len() != qubits.len() {
        return Err(QheError::RegisterMismatch(format!(
            "pad of {} qubits for {} qubits",
            pad.len(),
            qubits.len()
        )));
    }
    state.apply_all(&pad.gates(qubits))?;
    let pads = (0..qubits.len())
        .map(|i| PadCt {
            x: enc(pad.x[i]),
            z: enc(pad.z[i]),
        })
        .collect();
    Ok(QheCiphertext {
        key_id,
        qubits: qubits.to_vec(),
        pads,
    })
}

/// Resource counters for one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub encrypted_cnots: usize,
    pub toffolis: usize,
    /// Ancilla qubits consumed, summed over encrypted CNOTs.
    pub ancillas_consumed: usize,
    /// Size of the reusable ancilla block.
    pub ancilla_block: usize,
}

/// Homomorphic evaluator holding a public evaluation key.
#[derive(Debug)]
pub struct Evaluator {
    ek: EvalKey,
    params: QheParams,
    block: Option<usize>,
    stats: EvalStats,
}

impl Evaluator {
    pub fn new(ek: EvalKey, params: QheParams) -> Self {
        Evaluator {
            ek,
            params,
            block: None,
            stats: EvalStats::default(),
        }
    }

    pub fn eval_key(&self) -> &EvalKey {
        &self.ek
    }

    pub fn stats(&self) -> EvalStats {
        self.stats
    }

    fn check(&self, id: KeyId) -> Result<()> {
        if id != self.ek.key_id() {
            return Err(QheError::ForeignKey {
                expected: self.ek.key_id(),
                found: id,
            });
        }
        Ok(())
    }

    /// Evaluator-side encryption of an unencrypted register.
    pub fn encrypt_aux<R: Rng + ?Sized>(
        &self,
        state: &mut Statevector,
        qubits: &[usize],
        aux: AuxPad,
        rng: &mut R,
    ) -> Result<QheCiphertext> {
        let pad = match aux {
            AuxPad::Random => PauliPad::random(qubits.len(), rng),
            AuxPad::Trivial => PauliPad::zero(qubits.len()),
        };
        encrypt_with(state, qubits, &pad, |b| self.ek.encrypt(b), self.ek.key_id())
    }

    /// Apply one gate under encryption. Gate indices refer to positions in
    /// `ct`, not to qubits of the state.
    pub fn eval_gate<R: Rng + ?Sized>(
        &mut self,
        state: &mut Statevector,
        ct: &mut QheCiphertext,
        gate: &GateOp,
        rng: &mut R,
    ) -> Result<()> {
        self.check(ct.key_id)?;
        for t in gate.targets() {
            if t >= ct.len() {
                return Err(QheError::RegisterMismatch(format!(
                    "{} targets position {t} of a {}-qubit ciphertext",
                    gate.name(),
                    ct.len()
                )));
            }
        }
        let ek = self.ek.clone();
        let global = gate.remap(|q| ct.qubits[q]);
        match *gate {
            GateOp::X(_) | GateOp::Z(_) => state.apply(&global)?,
            GateOp::H(q) => {
                state.apply(&global)?;
                let p = &mut ct.pads[q];
                std::mem::swap(&mut p.x, &mut p.z);
            }
            GateOp::S(q) => {
                state.apply(&global)?;
                let p = ct.pads[q];
                ct.pads[q].z = ek.xor(&p.z, &p.x)?;
            }
            GateOp::Cnot { control, target } => {
                state.apply(&global)?;
                let (pc, pt) = (ct.pads[control], ct.pads[target]);
                ct.pads[target].x = ek.xor(&pt.x, &pc.x)?;
                ct.pads[control].z = ek.xor(&pc.z, &pt.z)?;
            }
            GateOp::Toffoli { c1, c2, target } => {
                self.eval_toffoli(state, ct, [c1, c2, target], rng)?;
            }
            GateOp::Ry { .. } => return Err(QheError::UnsupportedGate(gate.name().to_string())),
        }
        Ok(())
    }

    fn eval_toffoli<R: Rng + ?Sized>(
        &mut self,
        state: &mut Statevector,
        ct: &mut QheCiphertext,
        pos: [usize; 3],
        rng: &mut R,
    ) -> Result<()> {
        let ek = self.ek.clone();
        let q = pos.map(|p| ct.qubits[p]);
        let p = pos.map(|i| ct.pads[i]);
        state.apply(&GateOp::Toffoli {
            c1: q[0],
            c2: q[1],
            target: q[2],
        })?;
        // P': (z1 + x2 z3, x1), (z2 + x1 z3, x2), (z3, x1 x2 + x3)
        let rewritten = [
            PadCt { x: p[0].x, z: ek.xor_and(&p[0].z, &p[1].x, &p[2].z)? },
            PadCt { x: p[1].x, z: ek.xor_and(&p[1].z, &p[0].x, &p[2].z)? },
            PadCt { x: ek.xor_and(&p[2].x, &p[0].x, &p[1].x)?, z: p[2].z },
        ];
        // Pauli frame picked up while undoing the correction circuit, which
        // sits to the left of the rewritten pad.
        let zero = ek.encrypt(false);
        let mut left = [PadCt { x: zero, z: zero }; 3];
        let cnot = |ev: &mut Self, state: &mut Statevector, left: &mut [PadCt; 3], c: usize, t: usize, s: &ClassicalCt, rng: &mut R| -> Result<()> {
            left[t].x = ek.xor_and(&left[t].x, s, &left[c].x)?;
            left[c].z = ek.xor_and(&left[c].z, s, &left[t].z)?;
            let (zc, xc) = ev.cnot_core(state, q[c], q[t], s, rng)?;
            left[c].z = ek.xor(&left[c].z, &zc)?;
            left[t].x = ek.xor(&left[t].x, &xc)?;
            Ok(())
        };
        cnot(self, state, &mut left, 0, 2, &p[1].x, rng)?;
        cnot(self, state, &mut left, 1, 2, &p[0].x, rng)?;
        state.apply(&GateOp::H(q[1]))?;
        std::mem::swap(&mut left[1].x, &mut left[1].z);
        cnot(self, state, &mut left, 0, 1, &p[2].z, rng)?;
        state.apply(&GateOp::H(q[1]))?;
        std::mem::swap(&mut left[1].x, &mut left[1].z);
        for i in 0..3 {
            ct.pads[pos[i]] = PadCt {
                x: ek.xor(&left[i].x, &rewritten[i].x)?,
                z: ek.xor(&left[i].z, &rewritten[i].z)?,
            };
        }
        self.stats.toffolis += 1;
        Ok(())
    }

    /// `CNOT^s` from position `i` to position `j` of `ct`, where `s` is known
    /// only through its encryption.
    pub fn encrypted_cnot<R: Rng + ?Sized>(
        &mut self,
        state: &mut Statevector,
        ct: &mut QheCiphertext,
        i: usize,
        j: usize,
        s: &ClassicalCt,
        rng: &mut R,
    ) -> Result<()> {
        self.check(ct.key_id)?;
        if i >= ct.len() || j >= ct.len() || i == j {
            return Err(QheError::RegisterMismatch(format!(
                "encrypted CNOT on positions ({i}, {j}) of a {}-qubit ciphertext",
                ct.len()
            )));
        }
        let ek = self.ek.clone();
        let (pi, pj) = (ct.pads[i], ct.pads[j]);
        ct.pads[j].x = ek.xor_and(&pj.x, s, &pi.x)?;
        ct.pads[i].z = ek.xor_and(&pi.z, s, &pj.z)?;
        let (zc, xc) = self.cnot_core(state, ct.qubits[i], ct.qubits[j], s, rng)?;
        ct.pads[i].z = ek.xor(&ct.pads[i].z, &zc)?;
        ct.pads[j].x = ek.xor(&ct.pads[j].x, &xc)?;
        Ok(())
    }

    fn ancilla_block(&mut self, state: &mut Statevector) -> Result<usize> {
        let n = 2 * (1 + self.params.rho);
        if let Some(b) = self.block {
            return Ok(b);
        }
        if state.num_qubits() + n > state.cap() {
            return Err(QheError::AncillaExhausted {
                needed: state.num_qubits() + n,
                cap: state.cap(),
            });
        }
        let b = state.append_qubits(n)?;
        self.block = Some(b);
        self.stats.ancilla_block = n;
        Ok(b)
    }

    /// Physically applies `Z_i^e X_j^mu0 CNOT^s_{i,j}` and returns
    /// encryptions of `(e, mu0)`.
    fn cnot_core<R: Rng + ?Sized>(
        &mut self,
        state: &mut Statevector,
        qi: usize,
        qj: usize,
        s: &ClassicalCt,
        rng: &mut R,
    ) -> Result<(ClassicalCt, ClassicalCt)> {
        let w = 1 + self.params.rho;
        let base = self.ancilla_block(state)?;
        let claw: Vec<usize> = (base..base + w).collect();
        let image: Vec<usize> = (base + w..base + 2 * w).collect();
        let tcf = self.ek.derive_tcf(s, self.params.rho)?;

        for &c in &claw {
            state.apply(&GateOp::H(c))?;
        }
        let mask = (1usize << w) - 1;
        state.apply_basis_permutation(|idx| {
            let a = idx >> qi & 1 == 1;
            let x = idx >> base & mask;
            let y = tcf.eval(a, x);
            idx ^ (y << (base + w))
        });
        let y = bits_to_usize(&state.measure(&image, rng)?);
        state.apply(&GateOp::Cnot {
            control: claw[0],
            target: qj,
        })?;
        for &c in &claw {
            state.apply(&GateOp::H(c))?;
        }
        let d = bits_to_usize(&state.measure(&claw, rng)?);
        let corrections = self.ek.claw_correction(&tcf, y, d)?;

        // reset the block for the next use
        for (k, &c) in claw.iter().enumerate() {
            if d >> k & 1 == 1 {
                state.apply(&GateOp::X(c))?;
            }
        }
        for (k, &c) in image.iter().enumerate() {
            if y >> k & 1 == 1 {
                state.apply(&GateOp::X(c))?;
            }
        }
        self.stats.encrypted_cnots += 1;
        self.stats.ancillas_consumed += 2 * w;
        Ok(corrections)
    }

    /// Removes the ancilla block, which is back in `|0...0>` between
    /// encrypted CNOTs. Only possible while it is the top of the state.
    pub fn release<R: Rng + ?Sized>(&mut self, state: &mut Statevector, rng: &mut R) -> Result<()> {
        if let Some(b) = self.block {
            let n = 2 * (1 + self.params.rho);
            if b + n != state.num_qubits() {
                return Err(QheError::Precondition("ancilla block is not on top of the state".into()));
            }
            let qubits: Vec<usize> = (b..b + n).collect();
            state.discard(&qubits, rng)?;
            self.block = None;
        }
        Ok(())
    }

    /// Lays out `[inputs | data | ancillas]` for `circuit`: appends and loads
    /// the encrypted input bits, appends trivially padded ancillas.
    pub fn assemble(
        &mut self,
        state: &mut Statevector,
        circuit: &Circuit,
        input: Option<&EncryptedBits>,
        data: QheCiphertext,
    ) -> Result<QheCiphertext> {
        circuit
            .validate()
            .map_err(|e| QheError::Precondition(e.to_string()))?;
        self.check(data.key_id)?;
        if data.len() != circuit.data {
            return Err(QheError::RegisterMismatch(format!(
                "circuit acts on {} data qubits, ciphertext has {}",
                circuit.data,
                data.len()
            )));
        }
        let width = input.map_or(0, |i| i.width());
        if width != circuit.inputs {
            return Err(QheError::RegisterMismatch(format!(
                "circuit reads {} input bits, got {width}",
                circuit.inputs
            )));
        }
        let mut qubits = Vec::with_capacity(circuit.width());
        let mut pads = Vec::with_capacity(circuit.width());
        if let Some(input) = input {
            self.check(input.key_id)?;
            if circuit.inputs > 0 {
                let start = state.append_qubits(circuit.inputs)?;
                for (j, b) in input.padded.iter().enumerate() {
                    if *b {
                        state.apply(&GateOp::X(start + j))?;
                    }
                }
                qubits.extend(start..start + circuit.inputs);
                pads.extend_from_slice(&input.pads);
            }
        }
        qubits.extend_from_slice(&data.qubits);
        pads.extend_from_slice(&data.pads);
        if circuit.ancillas > 0 {
            let start = state.append_qubits(circuit.ancillas)?;
            let zero = self.ek.encrypt(false);
            qubits.extend(start..start + circuit.ancillas);
            pads.extend(std::iter::repeat(PadCt { x: zero, z: zero }).take(circuit.ancillas));
        }
        Ok(QheCiphertext {
            key_id: self.ek.key_id(),
            qubits,
            pads,
        })
    }

    /// Evaluates every gate of `circuit` on an assembled ciphertext.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        state: &mut Statevector,
        circuit: &Circuit,
        ct: &mut QheCiphertext,
        rng: &mut R,
    ) -> Result<()> {
        if ct.len() != circuit.width() {
            return Err(QheError::RegisterMismatch(format!(
                "circuit of width {} on a {}-qubit ciphertext",
                circuit.width(),
                ct.len()
            )));
        }
        for g in &circuit.gates {
            self.eval_gate(state, ct, g, rng)?;
        }
        Ok(())
    }

    /// Measures ciphertext positions; the outcomes are padded by the X pads.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        state: &mut Statevector,
        ct: &QheCiphertext,
        positions: &[usize],
        rng: &mut R,
    ) -> Result<ClassicalAnswer> {
        let qubits: Vec<usize> = positions.iter().map(|p| ct.qubits[*p]).collect();
        let bits = state.measure(&qubits, rng)?;
        Ok(ClassicalAnswer {
            bits,
            pads: positions.iter().map(|p| ct.pads[*p].x).collect(),
        })
    }
}

fn bits_to_usize(bits: &[bool]) -> usize {
    pack(bits) as usize
}

/// Result of [`eval_circuit`].
#[derive(Clone, Debug)]
pub struct EvalOutput {
    pub answer: ClassicalAnswer,
    pub stats: EvalStats,
}

/// Homomorphically evaluates `circuit` on encrypted input bits and the
/// unencrypted register `data`, measures the designated qubits and removes
/// every qubit the evaluation appended. `data` stays in the state, padded.
#[allow(clippy::too_many_arguments)]
pub fn eval_circuit<R: Rng + ?Sized>(
    ek: &EvalKey,
    params: QheParams,
    state: &mut Statevector,
    circuit: &Circuit,
    input: &EncryptedBits,
    data: &[usize],
    aux: AuxPad,
    rng: &mut R,
) -> Result<EvalOutput> {
    let base = state.num_qubits();
    let mut ev = Evaluator::new(ek.clone(), params);
    let data_ct = ev.encrypt_aux(state, data, aux, rng)?;
    let mut ct = ev.assemble(state, circuit, Some(input), data_ct)?;
    ev.run(state, circuit, &mut ct, rng)?;
    let answer = ev.measure(state, &ct, &circuit.measured, rng)?;
    let extra: Vec<usize> = (base..state.num_qubits()).collect();
    if !extra.is_empty() {
        state.discard(&extra, rng)?;
    }
    Ok(EvalOutput {
        answer,
        stats: ev.stats(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qhe::QheMode;
    use crate::quantum::{trace_distance, DensityMatrix};
    use crate::rng::Seed;

    fn key(seed: u64) -> (SecretKey, crate::rng::SimRng) {
        let mut rng = Seed::from_u64(seed).rng();
        (SecretKey::gen(8, QheMode::Ideal, &mut rng).unwrap(), rng)
    }

    fn assert_close(a: &DensityMatrix, b: &DensityMatrix, what: &str) {
        let d = trace_distance(a, b).unwrap();
        assert!(d < 1e-9, "{what}: distance {d}");
    }

    /// Encrypt `input` on `n` qubits with `pad`, evaluate `gate`, decrypt,
    /// and compare with the plain gate.
    fn gate_roundtrip(gate: &GateOp, n: usize, input: usize, pad: &PauliPad, seed: u64) {
        let (sk, mut rng) = key(seed);
        let mut st = Statevector::basis(n, input).unwrap();
        let qubits: Vec<usize> = (0..n).collect();
        let mut ct = sk.enc_qubits_with_pad(&mut st, &qubits, pad).unwrap();
        let mut ev = Evaluator::new(sk.eval_key(), QheParams::default());
        ev.eval_gate(&mut st, &mut ct, gate, &mut rng).unwrap();
        sk.dec_qubits(&mut st, &ct).unwrap();
        let mut plain = Statevector::basis(n, input).unwrap();
        plain.apply(gate).unwrap();
        assert_close(
            &st.reduced_density(&qubits).unwrap(),
            &plain.density(),
            &format!("{gate:?} input {input} pad {pad:?}"),
        );
    }

    #[test]
    fn every_gate_every_pad_every_basis_input() {
        let gates = [
            (GateOp::X(0), 1),
            (GateOp::Z(0), 1),
            (GateOp::H(0), 1),
            (GateOp::S(0), 1),
            (GateOp::Cnot { control: 0, target: 1 }, 2),
            (GateOp::Cnot { control: 1, target: 0 }, 2),
            (GateOp::Toffoli { c1: 0, c2: 1, target: 2 }, 3),
            (GateOp::Toffoli { c1: 2, c2: 0, target: 1 }, 3),
        ];
        for (g, n) in &gates {
            for p in 0..1usize << (2 * n) {
                for input in 0..1usize << n {
                    gate_roundtrip(g, *n, input, &PauliPad::from_index(*n, p), (p * 8 + input) as u64);
                }
            }
        }
    }

    #[test]
    fn toffoli_on_110_gives_111_for_all_pads() {
        for p in 0..64 {
            let (sk, mut rng) = key(p as u64);
            let mut st = Statevector::basis(3, 0b011).unwrap();
            let mut ct = sk
                .enc_qubits_with_pad(&mut st, &[0, 1, 2], &PauliPad::from_index(3, p))
                .unwrap();
            let mut ev = Evaluator::new(sk.eval_key(), QheParams::default());
            ev.eval_gate(&mut st, &mut ct, &GateOp::Toffoli { c1: 0, c2: 1, target: 2 }, &mut rng)
                .unwrap();
            assert_eq!(ev.stats().encrypted_cnots, 3);
            assert_eq!(ev.stats().ancillas_consumed, 3 * 2 * 3);
            sk.dec_qubits(&mut st, &ct).unwrap();
            let probs = st.outcome_distribution(&[0, 1, 2]).unwrap();
            assert!((probs[0b111] - 1.0).abs() < 1e-9, "pad {p}");
        }
    }

    #[test]
    fn encrypted_cnot_applies_cnot_to_the_power_s() {
        for s in [false, true] {
            for input in 0..4usize {
                for p in 0..16 {
                    let (sk, mut rng) = key(100 + p as u64);
                    let mut st = Statevector::basis(2, input).unwrap();
                    let mut ct = sk
                        .enc_qubits_with_pad(&mut st, &[0, 1], &PauliPad::from_index(2, p))
                        .unwrap();
                    let mut ev = Evaluator::new(sk.eval_key(), QheParams::default());
                    let s_ct = sk.encrypt(s);
                    ev.encrypted_cnot(&mut st, &mut ct, 0, 1, &s_ct, &mut rng).unwrap();
                    sk.dec_qubits(&mut st, &ct).unwrap();
                    let a = input & 1;
                    let b = input >> 1 & 1;
                    let want = a | (b ^ (a & s as usize)) << 1;
                    let probs = st.outcome_distribution(&[0, 1]).unwrap();
                    assert!((probs[want] - 1.0).abs() < 1e-9, "s={s} input={input} pad={p}");
                }
            }
        }
    }

    #[test]
    fn encrypted_cnot_on_superpositions_and_other_rho() {
        for rho in [0, 1, 3] {
            for seed in 0..8 {
                let (sk, mut rng) = key(200 + seed);
                let mut st = Statevector::new(3).unwrap();
                st.apply_all(&[GateOp::H(0), GateOp::Cnot { control: 0, target: 2 }, GateOp::H(1)]).unwrap();
                let plain = {
                    let mut p = st.clone();
                    p.apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
                    p.density()
                };
                let mut ct = sk.enc_qubits_with_pad(&mut st, &[0, 1], &PauliPad::random(2, &mut rng)).unwrap();
                let mut ev = Evaluator::new(sk.eval_key(), QheParams { rho });
                ev.encrypted_cnot(&mut st, &mut ct, 0, 1, &sk.encrypt(true), &mut rng).unwrap();
                sk.dec_qubits(&mut st, &ct).unwrap();
                assert_close(&st.reduced_density(&[0, 1, 2]).unwrap(), &plain, "superposition");
            }
        }
    }

    #[test]
    fn h_twice_is_identity_and_h_on_zero_is_plus() {
        let (sk, mut rng) = key(7);
        let mut st = Statevector::new(1).unwrap();
        st.name_register("A", 0, 1).unwrap();
        let mut ct = sk.enc_qubits(&mut st, "A", &mut rng).unwrap();
        let mut ev = Evaluator::new(sk.eval_key(), QheParams::default());
        ev.eval_gate(&mut st, &mut ct, &GateOp::H(0), &mut rng).unwrap();
        let mut once = st.clone();
        sk.dec_qubits(&mut once, &ct).unwrap();
        let mut plus = Statevector::new(1).unwrap();
        plus.apply(&GateOp::H(0)).unwrap();
        assert_close(&once.density(), &plus.density(), "H|0>");
        ev.eval_gate(&mut st, &mut ct, &GateOp::H(0), &mut rng).unwrap();
        sk.dec_qubits(&mut st, &ct).unwrap();
        assert_close(&st.density(), &DensityMatrix::basis(1, 0), "HH|0>");
    }

    #[test]
    fn double_encryption_rejected() {
        let (sk, mut rng) = key(8);
        let mut st = Statevector::new(1).unwrap();
        st.name_register("A", 0, 1).unwrap();
        sk.enc_qubits(&mut st, "A", &mut rng).unwrap();
        assert!(matches!(
            sk.enc_qubits(&mut st, "A", &mut rng),
            Err(QheError::AlreadyEncrypted(_))
        ));
    }

    #[test]
    fn classical_bits_roundtrip() {
        let (sk, mut rng) = key(9);
        for v in 0..8u64 {
            let ct = sk.encrypt_bits(v, 3, &mut rng);
            assert_eq!(sk.decrypt_bits(&ct).unwrap(), v);
        }
        let one = sk.encrypt_bits(1, 1, &mut rng);
        let x = sk.decrypt(&one.pads[0].x).unwrap();
        assert_eq!(one.padded[0], x ^ true);
        assert!(!sk.decrypt(&one.pads[0].z).unwrap());
    }

    #[test]
    fn wrong_key_and_unsupported_gate() {
        let (sk, mut rng) = key(10);
        let (other, _) = key(11);
        let mut st = Statevector::new(1).unwrap();
        let mut ct = sk.enc_qubits_with_pad(&mut st, &[0], &PauliPad::zero(1)).unwrap();
        assert!(matches!(other.dec_qubits(&mut st, &ct), Err(QheError::ForeignKey { .. })));
        let mut ev = Evaluator::new(sk.eval_key(), QheParams::default());
        assert!(matches!(
            ev.eval_gate(&mut st, &mut ct, &GateOp::basis_rotation(0, 0.3), &mut rng),
            Err(QheError::UnsupportedGate(_))
        ));
        assert!(matches!(
            ev.eval_gate(&mut st, &mut ct, &GateOp::H(1), &mut rng),
            Err(QheError::RegisterMismatch(_))
        ));
    }

    #[test]
    fn ancilla_exhaustion_is_reported() {
        let (sk, mut rng) = key(12);
        let mut st = Statevector::with_cap(3, 6).unwrap();
        let mut ct = sk.enc_qubits_with_pad(&mut st, &[0, 1, 2], &PauliPad::zero(3)).unwrap();
        let mut ev = Evaluator::new(sk.eval_key(), QheParams::default());
        assert!(matches!(
            ev.eval_gate(&mut st, &mut ct, &GateOp::Toffoli { c1: 0, c2: 1, target: 2 }, &mut rng),
            Err(QheError::AncillaExhausted { .. })
        ));
    }

    #[test]
    fn eval_circuit_identity_and_cleanup() {
        let (sk, mut rng) = key(13);
        let mut st = Statevector::basis(2, 0b01).unwrap();
        let c = Circuit::identity(1, vec![0]);
        let input = sk.encrypt_bits(0, 0, &mut rng);
        let out = eval_circuit(&sk.eval_key(), QheParams::default(), &mut st, &c, &input, &[0], AuxPad::Random, &mut rng)
            .unwrap();
        assert_eq!(sk.decrypt_answer(&out.answer).unwrap(), 1);
        assert_eq!(st.num_qubits(), 2);
    }
}
