use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compiler::{check_answer, CompiledProtocol, Prover, ProverMessage, Result as ProtocolResult, VerifierMessage};
use crate::games::NonLocalGame;
use crate::qhe::{KeyId, QheMode, QheParams, SecretKey};
use crate::rng::{Seed, SimRng};
use crate::stats::RateEstimate;

use super::threshold::{threshold_repeat, ThresholdRepeatedGame};
use super::{RepetitionError, Result};

/// The compiled threshold-repeated game: every round carries one message per
/// copy, each encrypted query under its own key.
#[derive(Clone, Debug)]
pub struct ParallelProtocol {
    pub repeated: ThresholdRepeatedGame,
    pub instance: CompiledProtocol,
}

pub fn parallel_repeat_protocol(game: NonLocalGame, t: usize, theta: f64, lambda: u32) -> Result<ParallelProtocol> {
    let instance = crate::compiler::compile(game.clone(), lambda)?;
    Ok(ParallelProtocol {
        repeated: threshold_repeat(game, t, theta)?,
        instance,
    })
}

impl ParallelProtocol {
    pub fn with_mode(mut self, mode: QheMode) -> Self {
        self.instance = self.instance.with_mode(mode);
        self
    }

    pub fn with_params(mut self, params: QheParams) -> Self {
        self.instance = self.instance.with_params(params);
        self
    }

    pub fn t(&self) -> usize {
        self.repeated.t
    }

    pub fn theta(&self) -> f64 {
        self.repeated.theta
    }

    pub fn rounds(&self) -> usize {
        self.instance.rounds()
    }

    pub fn keys_per_run(&self) -> usize {
        self.t() * self.instance.keys_per_run()
    }
}

/// A prover for the parallel protocol: one reply per copy each round.
pub trait ParallelProver: Send + Sync {
    fn name(&self) -> String;

    fn respond(&mut self, msgs: &[VerifierMessage]) -> ProtocolResult<Vec<ProverMessage>>;

    fn reset(&mut self);

    fn reseed(&mut self, _seed: Seed) {}

    fn box_clone(&self) -> Box<dyn ParallelProver>;
}

/// Plays each copy with an independent instance of a single-copy prover.
pub struct IidProver {
    instances: Vec<Box<dyn Prover>>,
}

impl IidProver {
    pub fn new(prover: &dyn Prover, t: usize) -> Self {
        IidProver {
            instances: (0..t).map(|_| prover.box_clone()).collect(),
        }
    }
}

impl ParallelProver for IidProver {
    fn name(&self) -> String {
        format!("iid-{}", self.instances.first().map_or_else(String::new, |p| p.name()))
    }

    fn respond(&mut self, msgs: &[VerifierMessage]) -> ProtocolResult<Vec<ProverMessage>> {
        self.instances.iter_mut().zip(msgs).map(|(p, m)| p.respond(m)).collect()
    }

    fn reset(&mut self) {
        self.instances.iter_mut().for_each(|p| p.reset());
    }

    fn reseed(&mut self, seed: Seed) {
        for (j, p) in self.instances.iter_mut().enumerate() {
            p.reseed(seed.fork_index("copy", j as u64));
        }
    }

    fn box_clone(&self) -> Box<dyn ParallelProver> {
        Box::new(IidProver {
            instances: self.instances.iter().map(|p| p.box_clone()).collect(),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParallelTranscript {
    /// per copy, the query tuple
    pub queries: Vec<Vec<u64>>,
    pub keys: Vec<KeyId>,
    pub rounds: usize,
    pub copy_accepts: Vec<bool>,
    pub accepted: usize,
    pub accept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn run_parallel(protocol: &ParallelProtocol, prover: &mut dyn ParallelProver, rng: &mut SimRng) -> ParallelTranscript {
    let inst = &protocol.instance;
    let game = inst.game();
    let k = game.k();
    let t = protocol.t();
    let queries: Vec<Vec<u64>> = (0..t).map(|_| game.sample_queries(rng)).collect();
    let keys: Vec<Vec<SecretKey>> = (0..t)
        .map(|_| {
            (0..k - 1)
                .map(|_| SecretKey::gen(inst.lambda(), inst.mode(), rng).expect("lambda checked at compile time"))
                .collect()
        })
        .collect();
    let mut answers = vec![vec![0u64; k]; t];
    let mut ok = vec![true; t];
    let mut error = None;
    let mut rounds = 0;
    for i in 0..k {
        let msgs: Vec<VerifierMessage> = (0..t)
            .map(|c| {
                if i + 1 < k {
                    VerifierMessage::Encrypted {
                        player: i,
                        query: keys[c][i].encrypt_bits(queries[c][i], game.query_bits()[i], rng),
                        key: keys[c][i].eval_key(),
                    }
                } else {
                    VerifierMessage::Plain {
                        player: i,
                        query: queries[c][i],
                    }
                }
            })
            .collect();
        rounds += 2;
        match prover.respond(&msgs) {
            Ok(replies) if replies.len() == t => {
                for (c, m) in replies.iter().enumerate() {
                    match check_answer(inst, keys[c].get(i), i, m) {
                        Ok(a) => answers[c][i] = a,
                        Err(e) => {
                            ok[c] = false;
                            error.get_or_insert(format!("copy {c}: {e}"));
                        }
                    }
                }
            }
            Ok(replies) => {
                ok.iter_mut().for_each(|o| *o = false);
                error.get_or_insert(format!("{} replies for {t} copies", replies.len()));
            }
            Err(e) => {
                ok.iter_mut().for_each(|o| *o = false);
                error.get_or_insert(e.to_string());
            }
        }
    }
    let copy_accepts: Vec<bool> = (0..t).map(|c| ok[c] && game.accepts(&queries[c], &answers[c])).collect();
    let accepted = copy_accepts.iter().filter(|a| **a).count();
    ParallelTranscript {
        queries,
        keys: keys.iter().flatten().map(|k| k.key_id()).collect(),
        rounds,
        copy_accepts,
        accepted,
        accept: protocol.repeated.accepts_count(accepted),
        error,
    }
}

pub fn estimate_parallel(
    protocol: &ParallelProtocol,
    prover: &dyn ParallelProver,
    trials: u64,
    seed: Seed,
) -> Result<RateEstimate> {
    if trials == 0 {
        return Err(RepetitionError::Parameter("trials must be at least 1".into()));
    }
    let wins: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut p = prover.box_clone();
            p.reseed(seed.fork_index("prover", i));
            p.reset();
            let mut rng = seed.fork_index("verifier", i).rng();
            run_parallel(protocol, p.as_mut(), &mut rng).accept as u64
        })
        .sum();
    Ok(RateEstimate::new(wins, trials))
}
