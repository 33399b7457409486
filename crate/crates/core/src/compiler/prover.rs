use std::sync::Arc;

use rand::{Rng, SeedableRng};

use crate::games::{classical_optimum, AnswerTable, NonLocalGame, QuantumStrategy, DEFAULT_STRATEGY_GUARD};
use crate::qhe::{eval_circuit, AuxPad, ClassicalAnswer, ClassicalCt, EncryptedBits, EvalKey, QheParams};
use crate::quantum::{GateOp, Statevector};
use crate::rng::{Seed, SimRng};

use super::message::{ProverMessage, VerifierMessage};
use super::{ProtocolError, Result};

/// A stateful prover driven one verifier message at a time.
pub trait Prover: Send + Sync {
    fn name(&self) -> String;

    fn respond(&mut self, msg: &VerifierMessage) -> Result<ProverMessage>;

    /// Back to the state before the first message.
    fn reset(&mut self);

    /// Fresh private randomness for the next execution. Provers with fixed
    /// coins ignore this.
    fn reseed(&mut self, _seed: Seed) {}

    /// True iff responses are a function of the message history alone.
    fn is_deterministic(&self) -> bool;

    fn box_clone(&self) -> Box<dyn Prover>;
}

impl Clone for Box<dyn Prover> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

fn unpack(v: u64, width: usize) -> Vec<bool> {
    (0..width).map(|j| v >> j & 1 == 1).collect()
}

/// An answer sent in the clear: the bits themselves with encryptions of 0
/// as pads.
fn trivially_padded(ek: &EvalKey, value: u64, width: usize) -> ClassicalAnswer {
    let zero = ek.encrypt(false);
    ClassicalAnswer {
        bits: unpack(value, width),
        pads: vec![zero; width],
    }
}

/// Homomorphically evaluates the classical function `f` on an encrypted
/// query, as a sum of minterms over the encrypted query bits.
pub fn encrypted_lookup(
    ek: &EvalKey,
    query: &EncryptedBits,
    answer_bits: usize,
    f: impl Fn(u64) -> u64,
) -> Result<ClassicalAnswer> {
    let n = query.width();
    if n > 12 {
        return Err(ProtocolError::Prover(format!("lookup over {n} query bits is too large")));
    }
    let one = ek.encrypt(true);
    // encryption of q_j = padded_j xor x_j, and of its negation
    let mut lits: Vec<[ClassicalCt; 2]> = Vec::with_capacity(n);
    for (p, pad) in query.padded.iter().zip(&query.pads) {
        let q = if *p { ek.xor(&pad.x, &one)? } else { pad.x };
        let nq = ek.xor(&q, &one)?;
        lits.push([nq, q]);
    }
    let mut out: Vec<ClassicalCt> = (0..answer_bits).map(|_| ek.encrypt(false)).collect();
    for v in 0..1u64 << n {
        let a = f(v);
        if a == 0 {
            continue;
        }
        let mut term = one;
        for (j, l) in lits.iter().enumerate() {
            term = ek.and(&term, &l[(v >> j & 1) as usize])?;
        }
        for (k, slot) in out.iter_mut().enumerate() {
            if a >> k & 1 == 1 {
                *slot = ek.xor(slot, &term)?;
            }
        }
    }
    Ok(ClassicalAnswer {
        bits: vec![false; answer_bits],
        pads: out,
    })
}

/// Holds the shared state and answers each round with the player's circuit:
/// homomorphically on encrypted queries, directly on the plain one.
#[derive(Clone, Debug)]
pub struct HonestQuantumProver {
    strategy: Arc<QuantumStrategy>,
    params: QheParams,
    aux: AuxPad,
    state: Statevector,
    rng: SimRng,
}

impl HonestQuantumProver {
    pub fn new(game: &NonLocalGame, strategy: QuantumStrategy, params: QheParams) -> Result<Self> {
        strategy.validate(game)?;
        for (i, p) in strategy.players.iter().enumerate().take(game.k() - 1) {
            let c = p.encrypted_form.as_ref().ok_or_else(|| {
                ProtocolError::NotEvaluable(format!("player {i} has no query-controlled circuit"))
            })?;
            if let Some(g) = c.gates.iter().find(|g| matches!(g, GateOp::Ry { .. })) {
                return Err(ProtocolError::NotEvaluable(format!("player {i} uses {}", g.name())));
            }
        }
        let state = strategy.shared_state.clone();
        Ok(HonestQuantumProver {
            strategy: Arc::new(strategy),
            params,
            aux: AuxPad::Random,
            state,
            rng: Seed::from_u64(0).fork("honest-prover").rng(),
        })
    }

    pub fn with_aux_pad(mut self, aux: AuxPad) -> Self {
        self.aux = aux;
        self
    }
}

impl Prover for HonestQuantumProver {
    fn name(&self) -> String {
        "honest".into()
    }

    fn respond(&mut self, msg: &VerifierMessage) -> Result<ProverMessage> {
        let player = self
            .strategy
            .players
            .get(msg.player())
            .ok_or_else(|| ProtocolError::Malformed(format!("no player {}", msg.player())))?;
        let data = self.state.register(&player.register).map_err(|e| ProtocolError::Prover(e.to_string()))?.qubits();
        match msg {
            VerifierMessage::Encrypted { query, key, .. } => {
                let circuit = player
                    .encrypted_form
                    .as_ref()
                    .ok_or_else(|| ProtocolError::NotEvaluable(player.register.clone()))?;
                let out = eval_circuit(key, self.params, &mut self.state, circuit, query, &data, self.aux, &mut self.rng)?;
                Ok(ProverMessage::Encrypted { answer: out.answer })
            }
            VerifierMessage::Plain { query, .. } => {
                let circuit = player
                    .per_query
                    .get(query)
                    .ok_or_else(|| ProtocolError::Malformed(format!("query {query} outside the strategy")))?;
                let mut binding = data;
                if circuit.ancillas > 0 {
                    let start = self
                        .state
                        .append_qubits(circuit.ancillas)
                        .map_err(|e| ProtocolError::Prover(e.to_string()))?;
                    binding.extend(start..start + circuit.ancillas);
                }
                let st = &mut self.state;
                st.apply_all(&circuit.bind(&binding))
                    .map_err(|e| ProtocolError::Prover(e.to_string()))?;
                let measured: Vec<usize> = circuit.measured.iter().map(|q| binding[*q]).collect();
                let bits = st
                    .measure(&measured, &mut self.rng)
                    .map_err(|e| ProtocolError::Prover(e.to_string()))?;
                let answer = bits.iter().enumerate().fold(0u64, |a, (j, b)| a | (*b as u64) << j);
                Ok(ProverMessage::Plain { answer })
            }
        }
    }

    fn reset(&mut self) {
        self.state = self.strategy.shared_state.clone();
    }

    fn reseed(&mut self, seed: Seed) {
        self.rng = seed.rng();
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn box_clone(&self) -> Box<dyn Prover> {
        Box::new(self.clone())
    }
}

/// Plays fixed local answer tables; encrypted rounds evaluate the table
/// homomorphically on the encrypted query.
#[derive(Clone, Debug)]
pub struct BestLocalProver {
    tables: Vec<AnswerTable>,
    answer_bits: Vec<usize>,
    name: String,
}

impl BestLocalProver {
    /// Uses an optimal deterministic classical strategy of `game`.
    pub fn optimal(game: &NonLocalGame) -> Result<Self> {
        let opt = classical_optimum(game, DEFAULT_STRATEGY_GUARD)?;
        Ok(Self::from_tables(game, opt.strategy, "best-classical"))
    }

    pub fn from_tables(game: &NonLocalGame, tables: Vec<AnswerTable>, name: &str) -> Self {
        BestLocalProver {
            tables,
            answer_bits: game.answer_bits().to_vec(),
            name: name.into(),
        }
    }

    pub fn tables(&self) -> &[AnswerTable] {
        &self.tables
    }
}

impl Prover for BestLocalProver {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn respond(&mut self, msg: &VerifierMessage) -> Result<ProverMessage> {
        let i = msg.player();
        let table = self
            .tables
            .get(i)
            .ok_or_else(|| ProtocolError::Malformed(format!("no player {i}")))?;
        match msg {
            VerifierMessage::Encrypted { query, key, .. } => Ok(ProverMessage::Encrypted {
                answer: encrypted_lookup(key, query, self.answer_bits[i], |q| *table.get(&q).unwrap_or(&0))?,
            }),
            VerifierMessage::Plain { query, .. } => Ok(ProverMessage::Plain {
                answer: *table.get(query).unwrap_or(&0),
            }),
        }
    }

    fn reset(&mut self) {}

    fn is_deterministic(&self) -> bool {
        true
    }

    fn box_clone(&self) -> Box<dyn Prover> {
        Box::new(self.clone())
    }
}

/// Answers every round with a fixed value, ignoring the query.
#[derive(Clone, Debug)]
pub struct ConstantProver {
    answers: Vec<u64>,
    answer_bits: Vec<usize>,
}

impl ConstantProver {
    pub fn new(game: &NonLocalGame, answers: Vec<u64>) -> Self {
        ConstantProver {
            answers,
            answer_bits: game.answer_bits().to_vec(),
        }
    }
}

impl Prover for ConstantProver {
    fn name(&self) -> String {
        "constant".into()
    }

    fn respond(&mut self, msg: &VerifierMessage) -> Result<ProverMessage> {
        let i = msg.player();
        let a = *self.answers.get(i).unwrap_or(&0);
        Ok(match msg {
            VerifierMessage::Encrypted { key, .. } => ProverMessage::Encrypted {
                answer: trivially_padded(key, a, self.answer_bits[i]),
            },
            VerifierMessage::Plain { .. } => ProverMessage::Plain { answer: a },
        })
    }

    fn reset(&mut self) {}

    fn is_deterministic(&self) -> bool {
        true
    }

    fn box_clone(&self) -> Box<dyn Prover> {
        Box::new(self.clone())
    }
}

/// Each player answers with a random function of its query whose bits are 1
/// with probability `bias`. With a fixed coin tape the functions are fixed
/// (and evaluated homomorphically in encrypted rounds); without one, every
/// answer is a fresh coin flip, so replays disagree.
#[derive(Clone, Debug)]
pub struct BiasedRandomProver {
    bias: f64,
    tape: Option<Seed>,
    answer_bits: Vec<usize>,
    rng: SimRng,
}

impl BiasedRandomProver {
    pub fn with_tape(game: &NonLocalGame, bias: f64, tape: Seed) -> Self {
        BiasedRandomProver {
            bias,
            tape: Some(tape),
            answer_bits: game.answer_bits().to_vec(),
            rng: tape.rng(),
        }
    }

    pub fn without_tape(game: &NonLocalGame, bias: f64, seed: Seed) -> Self {
        BiasedRandomProver {
            bias,
            tape: None,
            answer_bits: game.answer_bits().to_vec(),
            rng: seed.rng(),
        }
    }

    pub fn tape(&self) -> Option<Seed> {
        self.tape
    }

    fn coins(bias: f64, width: usize, rng: &mut impl Rng) -> u64 {
        (0..width).fold(0, |a, j| a | (rng.gen_bool(bias) as u64) << j)
    }

    /// The fixed answer function of player `i` under the tape.
    pub fn answer_for(&self, player: usize, query: u64) -> Option<u64> {
        self.tape.map(|t| {
            let mut r = SimRng::from_seed(*t.fork_index("player", player as u64).fork_index("query", query).as_bytes());
            Self::coins(self.bias, self.answer_bits[player], &mut r)
        })
    }
}

impl Prover for BiasedRandomProver {
    fn name(&self) -> String {
        "biased-random".into()
    }

    fn respond(&mut self, msg: &VerifierMessage) -> Result<ProverMessage> {
        let i = msg.player();
        let width = *self
            .answer_bits
            .get(i)
            .ok_or_else(|| ProtocolError::Malformed(format!("no player {i}")))?;
        match (msg, self.tape.is_some()) {
            (VerifierMessage::Encrypted { query, key, .. }, true) => {
                let this = self.clone();
                Ok(ProverMessage::Encrypted {
                    answer: encrypted_lookup(key, query, width, |q| this.answer_for(i, q).unwrap_or(0))?,
                })
            }
            (VerifierMessage::Encrypted { key, .. }, false) => {
                let a = Self::coins(self.bias, width, &mut self.rng);
                Ok(ProverMessage::Encrypted {
                    answer: trivially_padded(key, a, width),
                })
            }
            (VerifierMessage::Plain { query, .. }, true) => Ok(ProverMessage::Plain {
                answer: self.answer_for(i, *query).unwrap_or(0),
            }),
            (VerifierMessage::Plain { .. }, false) => Ok(ProverMessage::Plain {
                answer: Self::coins(self.bias, width, &mut self.rng),
            }),
        }
    }

    fn reset(&mut self) {}

    fn reseed(&mut self, seed: Seed) {
        if self.tape.is_none() {
            self.rng = seed.rng();
        }
    }

    fn is_deterministic(&self) -> bool {
        self.tape.is_some()
    }

    fn box_clone(&self) -> Box<dyn Prover> {
        Box::new(self.clone())
    }
}

/// Reads encrypted queries off the low handle bit (meaningful only in the
/// leaky mode), answers 0 in encrypted rounds, and picks the last answer to
/// satisfy the predicate given every query.
#[derive(Clone, Debug)]
pub struct DecryptingProver {
    game: Arc<NonLocalGame>,
    queries: Vec<u64>,
    answers: Vec<u64>,
}

impl DecryptingProver {
    pub fn new(game: Arc<NonLocalGame>) -> Self {
        let k = game.k();
        DecryptingProver {
            game,
            queries: vec![0; k],
            answers: vec![0; k],
        }
    }

    /// The query as read from the handles.
    pub fn read_query(query: &EncryptedBits) -> u64 {
        query
            .padded
            .iter()
            .zip(&query.pads)
            .enumerate()
            .fold(0, |a, (j, (p, pad))| a | ((*p as u64) ^ (pad.x.handle & 1) as u64) << j)
    }
}

impl Prover for DecryptingProver {
    fn name(&self) -> String {
        "decrypting".into()
    }

    fn respond(&mut self, msg: &VerifierMessage) -> Result<ProverMessage> {
        let i = msg.player();
        let k = self.game.k();
        if i >= k {
            return Err(ProtocolError::Malformed(format!("no player {i}")));
        }
        match msg {
            VerifierMessage::Encrypted { query, key, .. } => {
                self.queries[i] = Self::read_query(query);
                self.answers[i] = 0;
                Ok(ProverMessage::Encrypted {
                    answer: trivially_padded(key, 0, self.game.answer_bits()[i]),
                })
            }
            VerifierMessage::Plain { query, .. } => {
                self.queries[i] = *query;
                let mut answers = self.answers.clone();
                let best = (0..1u64 << self.game.answer_bits()[i])
                    .find(|a| {
                        answers[i] = *a;
                        self.game.accepts(&self.queries, &answers)
                    })
                    .unwrap_or(0);
                Ok(ProverMessage::Plain { answer: best })
            }
        }
    }

    fn reset(&mut self) {
        self.queries.iter_mut().for_each(|q| *q = 0);
        self.answers.iter_mut().for_each(|a| *a = 0);
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn box_clone(&self) -> Box<dyn Prover> {
        Box::new(self.clone())
    }
}

/// Sends ill-formed messages in every round.
#[derive(Clone, Debug, Default)]
pub struct RejectingProver;

impl Prover for RejectingProver {
    fn name(&self) -> String {
        "reject".into()
    }

    fn respond(&mut self, msg: &VerifierMessage) -> Result<ProverMessage> {
        Ok(match msg {
            VerifierMessage::Encrypted { .. } => ProverMessage::Encrypted {
                answer: ClassicalAnswer { bits: vec![], pads: vec![] },
            },
            VerifierMessage::Plain { .. } => ProverMessage::Plain { answer: u64::MAX },
        })
    }

    fn reset(&mut self) {}

    fn is_deterministic(&self) -> bool {
        true
    }

    fn box_clone(&self) -> Box<dyn Prover> {
        Box::new(self.clone())
    }
}
