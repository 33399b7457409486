use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::quantum::{trace_distance, Circuit, DensityMatrix, GateOp, Statevector};
use crate::rng::Seed;

use super::classical::{QheMode, SecretKey};
use super::eval::{AuxPad, Evaluator};
use super::pad::PauliPad;
use super::tcf::ToyTcf;
use super::{QheError, QheParams, Result};

/// Zero the entries that are off-diagonal in the low `nbits` index bits.
fn dephase_low(m: &DMatrix<Complex64>, nbits: usize) -> DMatrix<Complex64> {
    let mask = (1usize << nbits) - 1;
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if r & mask == c & mask {
            m[(r, c)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Relabel the low `nbits` classical bits by `y -> y xor flip`.
fn flip_low(m: &DMatrix<Complex64>, flip: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r ^ flip, c ^ flip)])
}

fn cq_state(state: &Statevector, measured: &[usize], keep: &[usize]) -> Result<DMatrix<Complex64>> {
    let qubits: Vec<usize> = measured.iter().chain(keep).copied().collect();
    let rho = state.reduced_density(&qubits)?;
    Ok(dephase_low(rho.matrix(), measured.len()))
}

fn check_circuit_fits(circuit: &Circuit, data: usize) -> Result<()> {
    circuit
        .validate()
        .map_err(|e| QheError::Precondition(format!("circuit leaves its declared registers: {e}")))?;
    if circuit.data != data {
        return Err(QheError::Precondition(format!(
            "circuit declares {} data qubits but the register has {data}",
            circuit.data
        )));
    }
    Ok(())
}

/// Game 1: the joint state of (plain output y, register B) after running
/// `circuit` on `x` and register A, as a classical-quantum density matrix.
pub fn plain_cq_output(state: &Statevector, a: &str, b: &str, circuit: &Circuit, x: u64) -> Result<DensityMatrix> {
    let a_qubits = state.register(a)?.qubits();
    let b_qubits = state.register(b)?.qubits();
    check_circuit_fits(circuit, a_qubits.len())?;
    let mut st = state.clone();
    let mut binding = Vec::with_capacity(circuit.width());
    if circuit.inputs > 0 {
        let start = st.append_qubits(circuit.inputs)?;
        for j in 0..circuit.inputs {
            if x >> j & 1 == 1 {
                st.apply(&GateOp::X(start + j))?;
            }
        }
        binding.extend(start..start + circuit.inputs);
    }
    binding.extend(&a_qubits);
    if circuit.ancillas > 0 {
        let start = st.append_qubits(circuit.ancillas)?;
        binding.extend(start..start + circuit.ancillas);
    }
    st.apply_all(&circuit.bind(&binding))?;
    let measured: Vec<usize> = circuit.measured.iter().map(|q| binding[*q]).collect();
    Ok(DensityMatrix::from_matrix_unchecked(cq_state(&st, &measured, &b_qubits)?))
}

/// Trace distance between the plain (y, B) state and the decrypted
/// homomorphic one. The mid-circuit randomness of evaluation is averaged over
/// `samples` independent runs; the final measurement is kept exact.
pub fn check_aux_correctness(
    circuit: &Circuit,
    state: &Statevector,
    a: &str,
    b: &str,
    x: u64,
    params: QheParams,
    seed: Seed,
    samples: usize,
) -> Result<f64> {
    let game1 = plain_cq_output(state, a, b, circuit, x)?;
    let a_qubits = state.register(a)?.qubits();
    let b_qubits = state.register(b)?.qubits();
    let samples = samples.max(1);
    let mut acc = DMatrix::<Complex64>::zeros(game1.dim(), game1.dim());
    for i in 0..samples {
        let mut rng = seed.fork_index("aux-correctness", i as u64).rng();
        let sk = SecretKey::gen(8, QheMode::Ideal, &mut rng)?;
        let input = sk.encrypt_bits(x, circuit.inputs, &mut rng);
        let mut st = state.clone();
        let mut ev = Evaluator::new(sk.eval_key(), params);
        let data = ev.encrypt_aux(&mut st, &a_qubits, AuxPad::Random, &mut rng)?;
        let mut ct = ev.assemble(&mut st, circuit, Some(&input), data)?;
        ev.run(&mut st, circuit, &mut ct, &mut rng)?;
        let measured: Vec<usize> = circuit.measured.iter().map(|p| ct.qubits()[*p]).collect();
        let mut flip = 0usize;
        for (j, p) in circuit.measured.iter().enumerate() {
            if sk.decrypt(&ct.pads()[*p].x)? {
                flip |= 1 << j;
            }
        }
        let cq = cq_state(&st, &measured, &b_qubits)?;
        acc += flip_low(&cq, flip);
    }
    acc /= Complex64::new(samples as f64, 0.0);
    Ok(trace_distance(&game1, &DensityMatrix::from_matrix_unchecked(acc))?)
}

/// Evaluates `circuit ⊗ Id` on a joint ciphertext over registers A and B and
/// `circuit` on A alone, from identical randomness. True iff B's pad
/// ciphertexts are untouched and B's reduced padded state is the same.
pub fn check_locality(
    circuit: &Circuit,
    state: &Statevector,
    a: &str,
    b: &str,
    input: Option<u64>,
    params: QheParams,
    seed: Seed,
) -> Result<bool> {
    let a_qubits = state.register(a)?.qubits();
    let b_qubits = state.register(b)?.qubits();
    check_circuit_fits(circuit, a_qubits.len())?;
    let run = |joint: bool| -> Result<(Statevector, Vec<super::PadCt>, Vec<super::PadCt>)> {
        let mut rng = seed.fork("locality").rng();
        let sk = SecretKey::gen(8, QheMode::Ideal, &mut rng)?;
        let mut st = state.clone();
        let ct_a = sk.enc_qubits(&mut st, a, &mut rng)?;
        let ct_b = sk.enc_qubits(&mut st, b, &mut rng)?;
        let b_before = ct_b.pads().to_vec();
        let x = input.unwrap_or(0);
        let enc_input = sk.encrypt_bits(x, circuit.inputs, &mut rng);
        let mut ev = Evaluator::new(sk.eval_key(), params);
        let (c, data) = if joint {
            // C ⊗ Id: widen the data block by B, shift ancilla indices past it
            let nb = b_qubits.len();
            let start_anc = circuit.inputs + circuit.data;
            let widened = Circuit {
                inputs: circuit.inputs,
                data: circuit.data + nb,
                ancillas: circuit.ancillas,
                gates: circuit
                    .gates
                    .iter()
                    .map(|g| g.remap(|q| if q >= start_anc { q + nb } else { q }))
                    .collect(),
                measured: circuit
                    .measured
                    .iter()
                    .map(|q| if *q >= start_anc { q + nb } else { *q })
                    .collect(),
            };
            (widened, ct_a.join(ct_b)?)
        } else {
            (circuit.clone(), ct_a)
        };
        let mut ct = ev.assemble(&mut st, &c, Some(&enc_input), data)?;
        ev.run(&mut st, &c, &mut ct, &mut rng)?;
        let b_after = if joint {
            let off = c.inputs + circuit.data;
            ct.pads()[off..off + b_qubits.len()].to_vec()
        } else {
            b_before.clone()
        };
        Ok((st, b_before, b_after))
    };
    let (joint_state, before, after) = run(true)?;
    let (alone_state, _, _) = run(false)?;
    if before != after {
        return Ok(false);
    }
    let d = trace_distance(
        &joint_state.reduced_density(&b_qubits)?,
        &alone_state.reduced_density(&b_qubits)?,
    )?;
    Ok(d <= 1e-12)
}

/// Summary of [`qhe_selftest`].
#[derive(Clone, Debug, Serialize)]
pub struct SelfTestReport {
    pub rho: usize,
    pub gate_cases: usize,
    pub gate_max_distance: f64,
    pub random_circuits: usize,
    pub random_max_distance: f64,
    pub aux_cases: usize,
    pub aux_max_distance: f64,
    pub locality_cases: usize,
    pub locality_failures: usize,
    pub claw_draws: usize,
    pub claw_failures: usize,
    pub toffoli_encrypted_cnots: usize,
    pub pass: bool,
}

const GATE_TOL: f64 = 1e-9;

pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Statevector {
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).expect("normalized")
}

fn distinct<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        v.swap(i, j);
    }
    v.truncate(k);
    v
}

/// Random gate over `{X, Z, H, S, CNOT, Toffoli}` on `n` qubits.
pub fn random_gate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GateOp {
    let kinds = match n {
        1 => 4,
        2 => 5,
        _ => 6,
    };
    match rng.gen_range(0..kinds) {
        0 => GateOp::X(rng.gen_range(0..n)),
        1 => GateOp::Z(rng.gen_range(0..n)),
        2 => GateOp::H(rng.gen_range(0..n)),
        3 => GateOp::S(rng.gen_range(0..n)),
        4 => {
            let q = distinct(n, 2, rng);
            GateOp::Cnot { control: q[0], target: q[1] }
        }
        _ => {
            let q = distinct(n, 3, rng);
            GateOp::Toffoli { c1: q[0], c2: q[1], target: q[2] }
        }
    }
}

/// Random circuit on `[inputs | data | ancillas]` measuring a random
/// non-empty subset of the data and ancilla qubits.
pub fn random_circuit<R: Rng + ?Sized>(
    inputs: usize,
    data: usize,
    ancillas: usize,
    gates: usize,
    rng: &mut R,
) -> Circuit {
    let width = inputs + data + ancillas;
    let mut measured: Vec<usize> = (inputs..width).filter(|_| rng.gen_bool(0.6)).collect();
    if measured.is_empty() {
        measured.push(rng.gen_range(inputs..width));
    }
    Circuit {
        inputs,
        data,
        ancillas,
        gates: (0..gates).map(|_| random_gate(width, rng)).collect(),
        measured,
    }
}

/// Exhaustive gate/pad check: every supported gate, every pad of its arity,
/// every computational-basis input. Returns (cases, max distance).
pub fn exhaustive_gate_check(params: QheParams, seed: Seed) -> Result<(usize, f64)> {
    let gates = [
        (GateOp::X(0), 1),
        (GateOp::Z(0), 1),
        (GateOp::H(0), 1),
        (GateOp::S(0), 1),
        (GateOp::Cnot { control: 0, target: 1 }, 2),
        (GateOp::Cnot { control: 1, target: 0 }, 2),
        (GateOp::Toffoli { c1: 0, c2: 1, target: 2 }, 3),
    ];
    let mut cases = 0;
    let mut worst = 0.0f64;
    for (gi, (g, n)) in gates.iter().enumerate() {
        let qubits: Vec<usize> = (0..*n).collect();
        for p in 0..1usize << (2 * n) {
            for input in 0..1usize << n {
                let mut rng = seed.fork_index("gate", ((gi * 64 + p) * 8 + input) as u64).rng();
                let sk = SecretKey::gen(8, QheMode::Ideal, &mut rng)?;
                let mut st = Statevector::basis(*n, input)?;
                let mut ct = sk.enc_qubits_with_pad(&mut st, &qubits, &PauliPad::from_index(*n, p))?;
                let mut ev = Evaluator::new(sk.eval_key(), params);
                ev.eval_gate(&mut st, &mut ct, g, &mut rng)?;
                sk.dec_qubits(&mut st, &ct)?;
                let mut plain = Statevector::basis(*n, input)?;
                plain.apply(g)?;
                worst = worst.max(trace_distance(&st.reduced_density(&qubits)?, &plain.density())?);
                cases += 1;
            }
        }
    }
    Ok((cases, worst))
}

/// Random circuits on random states of 1..=4 qubits: decrypted state after
/// homomorphic evaluation against plain evaluation.
pub fn random_circuit_check(count: usize, params: QheParams, seed: Seed) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..count {
        let mut rng = seed.fork_index("random-circuit", i as u64).rng();
        let n = rng.gen_range(1..=4);
        let len = rng.gen_range(1..=8);
        let gates: Vec<GateOp> = (0..len).map(|_| random_gate(n, &mut rng)).collect();
        let psi = random_state(n, &mut rng);
        let qubits: Vec<usize> = (0..n).collect();
        let sk = SecretKey::gen(8, QheMode::Ideal, &mut rng)?;
        let mut st = psi.clone();
        let pad = PauliPad::random(n, &mut rng);
        let mut ct = sk.enc_qubits_with_pad(&mut st, &qubits, &pad)?;
        let mut ev = Evaluator::new(sk.eval_key(), params);
        for g in &gates {
            ev.eval_gate(&mut st, &mut ct, g, &mut rng)?;
        }
        sk.dec_qubits(&mut st, &ct)?;
        let mut plain = psi;
        plain.apply_all(&gates)?;
        worst = worst.max(trace_distance(&st.reduced_density(&qubits)?, &plain.density())?);
    }
    Ok(worst)
}

/// A joint random state over registers `A` (na qubits) and `B` (nb qubits).
pub fn random_joint_state<R: Rng + ?Sized>(na: usize, nb: usize, rng: &mut R) -> Statevector {
    let mut st = random_state(na + nb, rng);
    st.name_register("A", 0, na).expect("fresh");
    st.name_register("B", na, nb).expect("fresh");
    st
}

pub(crate) fn chsh_player_a() -> Circuit {
    crate::games::chsh_strategy().players[0]
        .encrypted_form
        .clone()
        .expect("CHSH player A has a query-controlled circuit")
}

fn epr_ab() -> Statevector {
    let mut st = Statevector::new(2).expect("2 qubits");
    st.apply_all(&[GateOp::H(0), GateOp::Cnot { control: 0, target: 1 }])
        .expect("in range");
    st.name_register("A", 0, 1).expect("fresh");
    st.name_register("B", 1, 1).expect("fresh");
    st
}

/// Aux-input correctness over the CHSH player-A circuit on both queries and
/// `random` random circuits on random joint states.
pub fn aux_correctness_suite(random: usize, params: QheParams, seed: Seed) -> Result<(usize, f64)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let chsh = chsh_player_a();
    let epr = epr_ab();
    for q in 0..2 {
        let d = check_aux_correctness(&chsh, &epr, "A", "B", q, params, seed.fork_index("aux-chsh", q), 4)?;
        worst = worst.max(d);
        cases += 1;
    }
    for i in 0..random {
        let mut rng = seed.fork_index("aux-random", i as u64).rng();
        let na = rng.gen_range(1..=2);
        let nb = rng.gen_range(1..=2);
        let inputs = rng.gen_range(0..=1);
        let anc = rng.gen_range(0..=1);
        let st = random_joint_state(na, nb, &mut rng);
        let c = random_circuit(inputs, na, anc, rng.gen_range(1..=6), &mut rng);
        let x = rng.gen_range(0..1u64 << inputs);
        let d = check_aux_correctness(&c, &st, "A", "B", x, params, seed.fork_index("aux-run", i as u64), 3)?;
        worst = worst.max(d);
        cases += 1;
    }
    Ok((cases, worst))
}

/// Locality over the identity circuit, the CHSH player-A circuit, and
/// `random` random circuits. Returns (cases, failures).
pub fn locality_suite(random: usize, params: QheParams, seed: Seed) -> Result<(usize, usize)> {
    let mut failures = 0;
    let mut cases = 0;
    let epr = epr_ab();
    let mut fixed = vec![(Circuit::identity(1, vec![0]), None)];
    fixed.push((chsh_player_a(), Some(0)));
    fixed.push((chsh_player_a(), Some(1)));
    for (i, (c, input)) in fixed.into_iter().enumerate() {
        cases += 1;
        if !check_locality(&c, &epr, "A", "B", input, params, seed.fork_index("loc-fixed", i as u64))? {
            failures += 1;
        }
    }
    for i in 0..random {
        let mut rng = seed.fork_index("loc-random", i as u64).rng();
        let na = rng.gen_range(1..=2);
        let nb = rng.gen_range(1..=2);
        let inputs = rng.gen_range(0..=1);
        let st = random_joint_state(na, nb, &mut rng);
        let c = random_circuit(inputs, na, rng.gen_range(0..=1), rng.gen_range(1..=6), &mut rng);
        let x = rng.gen_range(0..1u64 << inputs);
        cases += 1;
        if !check_locality(&c, &st, "A", "B", Some(x), params, seed.fork_index("loc-run", i as u64))? {
            failures += 1;
        }
    }
    Ok((cases, failures))
}

/// Claw relation `mu0 xor mu1 = s` on random images of fresh pairs.
pub fn claw_check(draws: usize, rho: usize, seed: Seed) -> usize {
    let mut rng = seed.fork("claw").rng();
    let mut failures = 0;
    for _ in 0..draws {
        let s: bool = rng.gen();
        let t = ToyTcf::sample(s, rho, &mut rng);
        let y = rng.gen_range(0..t.size());
        let (x0, x1) = t.invert(y);
        let ok = t.eval(false, x0) == y && t.eval(true, x1) == y && ((x0 ^ x1) & 1 == 1) == s;
        failures += !ok as usize;
    }
    failures
}

/// Encrypted CNOTs spent on one homomorphic Toffoli.
pub fn toffoli_cnot_count(params: QheParams, seed: Seed) -> Result<usize> {
    let mut rng = seed.fork("toffoli-count").rng();
    let sk = SecretKey::gen(8, QheMode::Ideal, &mut rng)?;
    let mut st = Statevector::new(3)?;
    let mut ct = sk.enc_qubits_with_pad(&mut st, &[0, 1, 2], &PauliPad::random(3, &mut rng))?;
    let mut ev = Evaluator::new(sk.eval_key(), params);
    ev.eval_gate(&mut st, &mut ct, &GateOp::Toffoli { c1: 0, c2: 1, target: 2 }, &mut rng)?;
    Ok(ev.stats().encrypted_cnots)
}

/// The full gate, random-circuit, aux-correctness, locality and claw suite.
pub fn qhe_selftest(params: QheParams, seed: Seed) -> Result<SelfTestReport> {
    let (gate_cases, gate_max_distance) = exhaustive_gate_check(params, seed.fork("gates"))?;
    let random_circuits = 200;
    let random_max_distance = random_circuit_check(random_circuits, params, seed.fork("random"))?;
    let (aux_cases, aux_max_distance) = aux_correctness_suite(50, params, seed.fork("aux"))?;
    let (locality_cases, locality_failures) = locality_suite(20, params, seed.fork("locality"))?;
    let claw_draws = 1000;
    let claw_failures = claw_check(claw_draws, params.rho, seed);
    let toffoli_encrypted_cnots = toffoli_cnot_count(params, seed)?;
    let pass = gate_max_distance <= GATE_TOL
        && random_max_distance <= GATE_TOL
        && aux_max_distance <= GATE_TOL
        && locality_failures == 0
        && claw_failures == 0
        && toffoli_encrypted_cnots == 3;
    Ok(SelfTestReport {
        rho: params.rho,
        gate_cases,
        gate_max_distance,
        random_circuits,
        random_max_distance,
        aux_cases,
        aux_max_distance,
        locality_cases,
        locality_failures,
        claw_draws,
        claw_failures,
        toffoli_encrypted_cnots,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> QheParams {
        QheParams::default()
    }

    #[test]
    fn constant_circuit_has_zero_distance() {
        // ignores A, writes 1 into an ancilla and measures it
        let c = Circuit {
            inputs: 0,
            data: 1,
            ancillas: 1,
            gates: vec![GateOp::X(1)],
            measured: vec![1],
        };
        let d = check_aux_correctness(&c, &epr_ab(), "A", "B", 0, params(), Seed::from_u64(1), 2).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn chsh_player_a_aux_correct_and_uniform() {
        let c = chsh_player_a();
        for q in 0..2 {
            let d = check_aux_correctness(&c, &epr_ab(), "A", "B", q, params(), Seed::from_u64(2 + q), 4).unwrap();
            assert!(d <= 1e-9, "q1={q}: {d}");
            // a1 marginal is uniform
            let g1 = plain_cq_output(&epr_ab(), "A", "B", &c, q).unwrap();
            let p0 = g1.entry(0, 0).re + g1.entry(2, 2).re;
            assert!((p0 - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn random_circuits_small_batch() {
        assert!(random_circuit_check(20, params(), Seed::from_u64(3)).unwrap() <= 1e-9);
        let (_, worst) = aux_correctness_suite(10, params(), Seed::from_u64(4)).unwrap();
        assert!(worst <= 1e-9);
    }

    #[test]
    fn locality_holds_and_out_of_register_circuit_is_rejected() {
        let (cases, failures) = locality_suite(5, params(), Seed::from_u64(5)).unwrap();
        assert_eq!(failures, 0, "of {cases}");
        let rogue = Circuit {
            inputs: 0,
            data: 1,
            ancillas: 0,
            gates: vec![GateOp::Cnot { control: 0, target: 1 }],
            measured: vec![0],
        };
        assert!(matches!(
            check_locality(&rogue, &epr_ab(), "A", "B", None, params(), Seed::from_u64(6)),
            Err(QheError::Precondition(_))
        ));
        assert!(matches!(
            check_aux_correctness(&rogue, &epr_ab(), "A", "B", 0, params(), Seed::from_u64(6), 1),
            Err(QheError::Precondition(_))
        ));
    }

    #[test]
    fn claw_and_toffoli_counts() {
        assert_eq!(claw_check(1000, 2, Seed::from_u64(7)), 0);
        assert_eq!(toffoli_cnot_count(params(), Seed::from_u64(8)).unwrap(), 3);
    }
}
