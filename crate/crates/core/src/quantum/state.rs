use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use super::{DensityMatrix, GateOp, QuantumError, Result, STATE_TOL};

pub const DEFAULT_QUBIT_CAP: usize = 20;

/// A named, contiguous range of qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn qubits(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }

    pub fn contains(&self, q: usize) -> bool {
        q >= self.start && q < self.start + self.len
    }

    fn overlaps(&self, start: usize, len: usize) -> bool {
        self.start < start + len && start < self.start + self.len
    }
}

/// Pure state of `num_qubits` qubits.
///
/// Qubit `i` is bit `i` of the amplitude index (little-endian).
#[derive(Clone, Debug)]
pub struct Statevector {
    amps: Vec<Complex64>,
    num_qubits: usize,
    registers: Vec<Register>,
    cap: usize,
}

impl Statevector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self> {
        Self::with_cap(num_qubits, DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(num_qubits: usize, cap: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > cap {
            return Err(QuantumError::QubitCount {
                requested: num_qubits,
                cap,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector {
            amps,
            num_qubits,
            registers: Vec::new(),
            cap,
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::new(num_qubits)?;
        if index >= s.amps.len() {
            return Err(QuantumError::QubitOutOfRange {
                index,
                num_qubits,
            });
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QuantumError::BadLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > DEFAULT_QUBIT_CAP {
            return Err(QuantumError::QubitCount {
                requested: num_qubits,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Statevector {
            amps,
            num_qubits,
            registers: Vec::new(),
            cap: DEFAULT_QUBIT_CAP,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| QuantumError::UnknownRegister(name.to_string()))
    }

    /// Name an existing qubit range.
    pub fn name_register(&mut self, name: &str, start: usize, len: usize) -> Result<()> {
        if start + len > self.num_qubits || len == 0 {
            return Err(QuantumError::QubitOutOfRange {
                index: start + len.max(1) - 1,
                num_qubits: self.num_qubits,
            });
        }
        if self.registers.iter().any(|r| r.name == name) {
            return Err(QuantumError::DuplicateRegister(name.to_string()));
        }
        if self.registers.iter().any(|r| r.overlaps(start, len)) {
            return Err(QuantumError::RegisterOverlap(name.to_string()));
        }
        self.registers.push(Register {
            name: name.to_string(),
            start,
            len,
        });
        Ok(())
    }

    /// Append `n` fresh `|0>` qubits at the top; returns the index of the first.
    pub fn append_qubits(&mut self, n: usize) -> Result<usize> {
        let start = self.num_qubits;
        if start + n > self.cap {
            return Err(QuantumError::QubitCount {
                requested: start + n,
                cap: self.cap,
            });
        }
        self.amps.resize(1 << (start + n), Complex64::new(0.0, 0.0));
        self.num_qubits += n;
        Ok(start)
    }

    /// Append `n` fresh `|0>` qubits as a named register.
    pub fn append_register(&mut self, name: &str, n: usize) -> Result<Register> {
        if self.registers.iter().any(|r| r.name == name) {
            return Err(QuantumError::DuplicateRegister(name.to_string()));
        }
        let start = self.append_qubits(n)?;
        self.name_register(name, start, n)?;
        Ok(self.register(name)?.clone())
    }

    /// `self ⊗ other`, with `other`'s qubits placed above `self`'s.
    pub fn tensor(&self, other: &Statevector) -> Result<Statevector> {
        let n = self.num_qubits + other.num_qubits;
        let cap = self.cap.max(other.cap);
        if n > cap {
            return Err(QuantumError::QubitCount { requested: n, cap });
        }
        let mut amps = Vec::with_capacity(1 << n);
        for hi in &other.amps {
            for lo in &self.amps {
                amps.push(lo * hi);
            }
        }
        let mut registers = self.registers.clone();
        for r in &other.registers {
            if registers.iter().any(|x| x.name == r.name) {
                return Err(QuantumError::DuplicateRegister(r.name.clone()));
            }
            registers.push(Register {
                name: r.name.clone(),
                start: r.start + self.num_qubits,
                len: r.len,
            });
        }
        Ok(Statevector {
            amps,
            num_qubits: n,
            registers,
            cap,
        })
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(QuantumError::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
            if qubits[..i].contains(&q) {
                return Err(QuantumError::DuplicateQubit(q));
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        self.check_qubits(&gate.targets())?;
        match *gate {
            GateOp::X(q) => {
                let m = 1 << q;
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        self.amps.swap(i, i | m);
                    }
                }
            }
            GateOp::Z(q) => {
                let m = 1 << q;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & m != 0 {
                        *a = -*a;
                    }
                }
            }
            GateOp::S(q) => {
                let m = 1 << q;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & m != 0 {
                        *a *= Complex64::i();
                    }
                }
            }
            GateOp::H(q) => {
                let m = 1 << q;
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        let a = self.amps[i];
                        let b = self.amps[i | m];
                        self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                        self.amps[i | m] = (a - b) * FRAC_1_SQRT_2;
                    }
                }
            }
            GateOp::Ry { target, theta } => {
                let m = 1 << target;
                let (s, c) = (theta / 2.0).sin_cos();
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        let a = self.amps[i];
                        let b = self.amps[i | m];
                        self.amps[i] = a * c - b * s;
                        self.amps[i | m] = a * s + b * c;
                    }
                }
            }
            GateOp::Cnot { control, target } => {
                let (cm, tm) = (1 << control, 1 << target);
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
            GateOp::Toffoli { c1, c2, target } => {
                let cm = (1 << c1) | (1 << c2);
                let tm = 1 << target;
                for i in 0..self.amps.len() {
                    if i & cm == cm && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a GateOp>) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// Apply the unitary `|i> -> |perm(i)>`. `perm` must be a bijection on
    /// basis indices; this is how classical reversible maps (such as
    /// evaluating a function into a fresh register) are simulated.
    pub fn apply_basis_permutation(&mut self, perm: impl Fn(usize) -> usize) {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let j = perm(i);
            debug_assert!(out[j] == Complex64::new(0.0, 0.0) || a.norm_sqr() == 0.0);
            out[j] = *a;
        }
        self.amps = out;
    }

    /// Exact Born distribution of measuring `qubits`; entry `k` has bit `j` equal
    /// to the outcome of `qubits[j]`.
    pub fn outcome_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_qubits(qubits)?;
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            probs[extract_bits(i, qubits)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Measure `qubits` in the standard basis, collapsing the state.
    pub fn measure<R: Rng + ?Sized>(&mut self, qubits: &[usize], rng: &mut R) -> Result<Vec<bool>> {
        let probs = self.outcome_distribution(qubits)?;
        let total: f64 = probs.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut outcome = probs.len() - 1;
        for (k, p) in probs.iter().enumerate() {
            if u < *p {
                outcome = k;
                break;
            }
            u -= p;
        }
        // never land on a zero-probability branch through rounding
        if probs[outcome] == 0.0 {
            outcome = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        }
        let scale = 1.0 / probs[outcome].sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if extract_bits(i, qubits) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok((0..qubits.len()).map(|j| outcome >> j & 1 == 1).collect())
    }

    /// Measure and then remove `qubits`, renumbering the qubits above them.
    /// Registers lying entirely inside the discarded set are dropped.
    pub fn discard<R: Rng + ?Sized>(&mut self, qubits: &[usize], rng: &mut R) -> Result<Vec<bool>> {
        self.check_qubits(qubits)?;
        for r in &self.registers {
            let inside = qubits.iter().filter(|q| r.contains(**q)).count();
            if inside != 0 && inside != r.len {
                return Err(QuantumError::SplitRegister(r.name.clone()));
            }
        }
        if qubits.len() >= self.num_qubits {
            return Err(QuantumError::QubitCount {
                requested: 0,
                cap: self.cap,
            });
        }
        let bits = self.measure(qubits, rng)?;
        let mut outcome = 0usize;
        for (j, &q) in qubits.iter().enumerate() {
            if bits[j] {
                outcome |= 1 << q;
            }
        }
        let removed_mask: usize = qubits.iter().map(|q| 1usize << q).sum();
        let kept: Vec<usize> = (0..self.num_qubits)
            .filter(|q| removed_mask >> q & 1 == 0)
            .collect();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << kept.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if i & removed_mask == outcome {
                amps[extract_bits(i, &kept)] = *a;
            }
        }
        self.amps = amps;
        self.num_qubits = kept.len();
        self.registers.retain(|r| !qubits.contains(&r.start));
        for r in &mut self.registers {
            let shift = qubits.iter().filter(|q| **q < r.start).count();
            r.start -= shift;
        }
        Ok(bits)
    }

    /// Reduced density operator on `keep` (bit `j` of the row index is
    /// `keep[j]`), tracing out everything else.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        self.check_qubits(keep)?;
        let keep_mask: usize = keep.iter().map(|q| 1usize << q).sum();
        let rest: Vec<usize> = (0..self.num_qubits)
            .filter(|q| keep_mask >> q & 1 == 0)
            .collect();
        let dk = 1 << keep.len();
        let dr = 1 << rest.len();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dk, dr);
        for (i, a) in self.amps.iter().enumerate() {
            m[(extract_bits(i, keep), extract_bits(i, &rest))] = *a;
        }
        Ok(DensityMatrix::from_matrix_unchecked(&m * m.adjoint()))
    }

    /// Reduced density operator of a named register.
    pub fn density_of(&self, register: &str) -> Result<DensityMatrix> {
        let qubits = self.register(register)?.qubits();
        self.reduced_density(&qubits)
    }

    /// Full pure-state density matrix `|ψ><ψ|`.
    pub fn density(&self) -> DensityMatrix {
        let all: Vec<usize> = (0..self.num_qubits).collect();
        self.reduced_density(&all).expect("all qubits are in range")
    }
}

/// Gather bits `positions[j]` of `index` into bit `j` of the result.
pub(crate) fn extract_bits(index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &q)| acc | ((index >> q) & 1) << j)
}
