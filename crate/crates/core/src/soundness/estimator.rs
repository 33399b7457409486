use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compiler::{CompiledProtocol, Prover};
use crate::games::{weight_to_f64, AnswerTable, NonLocalGame, Weight};
use crate::rng::Seed;

use super::prefix::{build_p2, fix_prefix};
use super::{argmax, ceil_count, check_epsilon, check_guard, Result, SoundnessError, DEFAULT_SOUNDNESS_GUARD};

/// `ceil(9 (lambda + |a_1|) / epsilon^2)`.
pub fn estimator_samples(lambda: u32, answer_bits: usize, epsilon: f64) -> u64 {
    ceil_count(9.0 * (lambda as f64 + answer_bits as f64) / (epsilon * epsilon))
}

fn require_two(game: &NonLocalGame) -> Result<()> {
    match game.k() {
        2 => Ok(()),
        k => Err(SoundnessError::NotTwoPlayer(k)),
    }
}

/// Exact `Pr_{q_2 | q_1}[V(q_1, q_2, a_1, p2(q_2))]` for every `a_1`.
pub fn conditional_win_probabilities(game: &NonLocalGame, p2: &AnswerTable, q1: u64) -> Result<Vec<Weight>> {
    require_two(game)?;
    let cond = game.conditional(0, q1)?;
    let mut out = vec![Weight::zero(); 1 << game.answer_bits()[0]];
    for (a1, slot) in out.iter_mut().enumerate() {
        for (q, w) in cond.rows() {
            let a2 = p2.get(&q[1]).copied().unwrap_or(0);
            if game.accepts(q, &[a1 as u64, a2]) {
                *slot += w;
            }
        }
    }
    Ok(out)
}

/// `P*_1` by exact maximization over the conditional query table.
pub fn exact_argmax_p1(game: &NonLocalGame, p2: &AnswerTable, guard: u128) -> Result<AnswerTable> {
    require_two(game)?;
    let support = game.support(0);
    check_guard(
        "exact argmax",
        (support.len() as u128) << game.answer_bits()[0],
        guard,
    )?;
    support
        .into_iter()
        .map(|q1| {
            let p = conditional_win_probabilities(game, p2, q1)?;
            Ok((q1, argmax(&p) as u64))
        })
        .collect()
}

/// The sampled maximizer `F`: for each `q_1`, the multiplicities of `N`
/// draws from `Q | q_1` and the empirical win rate of every `a_1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimatorF {
    pub n: u64,
    pub epsilon: f64,
    /// per `q_1`: draw counts over the rows of the conditional table
    pub counts: BTreeMap<u64, Vec<u64>>,
    /// per `q_1`: `p'_{q_1, a_1}` indexed by `a_1`
    pub p_prime: BTreeMap<u64, Vec<f64>>,
    pub table: AnswerTable,
}

impl EstimatorF {
    pub fn answer(&self, q1: u64) -> Option<u64> {
        self.table.get(&q1).copied()
    }

    /// `max_{q_1, a_1} |p' - p|` against the exact conditional probabilities.
    pub fn max_deviation(&self, game: &NonLocalGame, p2: &AnswerTable) -> Result<f64> {
        let mut worst = 0.0f64;
        for (q1, est) in &self.p_prime {
            let exact = conditional_win_probabilities(game, p2, *q1)?;
            for (e, x) in est.iter().zip(exact) {
                worst = worst.max((e - weight_to_f64(x)).abs());
            }
        }
        Ok(worst)
    }
}

/// Builds `F` with `N = estimator_samples(lambda, |a_1|, epsilon)` draws per
/// query value; ties go to the smallest `a_1`.
pub fn build_estimator_f<R: Rng + ?Sized>(
    game: &NonLocalGame,
    p2: &AnswerTable,
    lambda: u32,
    epsilon: f64,
    guard: u128,
    rng: &mut R,
) -> Result<EstimatorF> {
    require_two(game)?;
    check_epsilon(epsilon)?;
    let n = estimator_samples(lambda, game.answer_bits()[0], epsilon);
    let support = game.support(0);
    check_guard("estimator samples", n as u128 * support.len() as u128, guard)?;
    let answers = 1usize << game.answer_bits()[0];
    let mut counts = BTreeMap::new();
    let mut p_prime = BTreeMap::new();
    let mut table = AnswerTable::new();
    for q1 in support {
        let cond = game.conditional(0, q1)?;
        let mut c = vec![0u64; cond.len()];
        for _ in 0..n {
            c[cond.sample_position(rng)] += 1;
        }
        let mut wins = vec![0u64; answers];
        for (pos, m) in c.iter().enumerate().filter(|(_, m)| **m > 0) {
            let q = cond.row(pos);
            let a2 = p2.get(&q[1]).copied().unwrap_or(0);
            for (a1, w) in wins.iter_mut().enumerate() {
                if game.accepts(q, &[a1 as u64, a2]) {
                    *w += m;
                }
            }
        }
        let p: Vec<f64> = wins.iter().map(|w| *w as f64 / n as f64).collect();
        table.insert(q1, argmax(&wins) as u64);
        counts.insert(q1, c);
        p_prime.insert(q1, p);
    }
    Ok(EstimatorF {
        n,
        epsilon,
        counts,
        p_prime,
        table,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P1Method {
    Estimator,
    ExactArgmax,
}

/// Local provers extracted from an interactive prover, with their exact
/// value in the underlying game.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalProverPair {
    pub p1: AnswerTable,
    pub p2: AnswerTable,
    pub value: Weight,
    pub method: P1Method,
    /// samples per query value, 0 for the exact method
    pub samples: u64,
}

impl LocalProverPair {
    pub fn value_f64(&self) -> f64 {
        weight_to_f64(self.value)
    }
}

fn pair_value(game: &NonLocalGame, p1: &AnswerTable, p2: &AnswerTable) -> Weight {
    game.local_value(&[
        &|q| p1.get(&q).copied().unwrap_or(0),
        &|q| p2.get(&q).copied().unwrap_or(0),
    ])
}

pub fn extract_local_provers<R: Rng + ?Sized>(
    protocol: &CompiledProtocol,
    prover: &dyn Prover,
    epsilon: f64,
    method: P1Method,
    rng: &mut R,
) -> Result<LocalProverPair> {
    check_epsilon(epsilon)?;
    let game = protocol.game();
    let prefix = fix_prefix(protocol, prover, 2, rng)?;
    let p2 = build_p2(protocol, &prefix)?;
    let (p1, samples) = match method {
        P1Method::Estimator => {
            let f = build_estimator_f(game, &p2, protocol.lambda(), epsilon, DEFAULT_SOUNDNESS_GUARD, rng)?;
            (f.table, f.n)
        }
        P1Method::ExactArgmax => (exact_argmax_p1(game, &p2, DEFAULT_SOUNDNESS_GUARD)?, 0),
    };
    let value = pair_value(game, &p1, &p2);
    Ok(LocalProverPair {
        p1,
        p2,
        value,
        method,
        samples,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub builds: u64,
    pub samples: u64,
    pub threshold: f64,
    /// builds with `max |p' - p| > threshold`
    pub exceeded: u64,
    pub max_deviation: f64,
}

/// Builds `F` `builds` times from independent seeds and counts how often
/// some `p'` misses its exact value by more than `epsilon / 3`.
pub fn estimator_concentration(
    game: &NonLocalGame,
    p2: &AnswerTable,
    lambda: u32,
    epsilon: f64,
    builds: u64,
    seed: Seed,
) -> Result<ConcentrationReport> {
    use rayon::prelude::*;
    let devs = (0..builds)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.fork_index("estimator-build", b).rng();
            build_estimator_f(game, p2, lambda, epsilon, DEFAULT_SOUNDNESS_GUARD, &mut rng)?.max_deviation(game, p2)
        })
        .collect::<Result<Vec<f64>>>()?;
    let threshold = epsilon / 3.0;
    Ok(ConcentrationReport {
        builds,
        samples: estimator_samples(lambda, game.answer_bits()[0], epsilon),
        threshold,
        exceeded: devs.iter().filter(|d| **d > threshold).count() as u64,
        max_deviation: devs.iter().copied().fold(0.0, f64::max),
    })
}
