use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compiler::{CompiledProtocol, Prover};
use crate::games::{weight_to_f64, AnswerTable, Weight};
use crate::qhe::SecretKey;
use crate::rng::Seed;
use crate::stats::RateEstimate;

use super::prefix::Emulator;
use super::{argmax, ceil_count, check_epsilon, check_guard, Result, SoundnessError};

/// `ceil(18 k^2 (lambda + |a_i|) / epsilon^2)`.
pub fn k_estimator_samples(k: usize, lambda: u32, answer_bits: usize, epsilon: f64) -> u64 {
    ceil_count(18.0 * (k * k) as f64 * (lambda as f64 + answer_bits as f64) / (epsilon * epsilon))
}

/// Local provers for every player plus the emulators they were built from.
/// `emulators[m]` is the prover after the first `m` dummy ciphertexts.
#[derive(Clone, Debug)]
pub struct KExtraction {
    pub epsilon: f64,
    pub dummies: Vec<u64>,
    pub keys: Vec<SecretKey>,
    pub emulators: Vec<Emulator>,
    /// `F_1..F_{k-1}` followed by `P*_k`
    pub tables: Vec<AnswerTable>,
    /// samples per query value at each estimated level
    pub samples: Vec<u64>,
    pub value: Weight,
}

impl KExtraction {
    pub fn value_f64(&self) -> f64 {
        weight_to_f64(self.value)
    }
}

/// Recursive extraction. Player `l` answers with the sampled maximizer over
/// `Q | q_l`, where earlier players use the already built `F_j` and later
/// players are emulated by the prover holding the first `l + 1` dummy
/// ciphertexts, run on fresh encryptions. The last player emulates the final
/// message after all dummy ciphertexts.
pub fn extract_k_provers(
    protocol: &CompiledProtocol,
    prover: &dyn Prover,
    epsilon: f64,
    guard: u128,
    seed: Seed,
) -> Result<KExtraction> {
    check_epsilon(epsilon)?;
    if !prover.is_deterministic() {
        return Err(SoundnessError::Nondeterministic(format!(
            "prover `{}` has no fixed coins",
            prover.name()
        )));
    }
    let game = protocol.game();
    let k = game.k();
    let mut rng = seed.fork("extract-k").rng();
    let dummies = game.sample_queries(&mut rng);
    let keys = (0..k - 1)
        .map(|_| SecretKey::gen(protocol.lambda(), protocol.mode(), &mut rng))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let cts: Vec<_> = (0..k - 1)
        .map(|i| keys[i].encrypt_bits(dummies[i], game.query_bits()[i], &mut rng))
        .collect();

    let build = || {
        let mut em = vec![Emulator::fresh(prover)];
        let mut answers = Vec::new();
        for (key, ct) in keys.iter().zip(&cts) {
            let mut next = em.last().expect("nonempty").clone();
            answers.push(next.extend(protocol, key, ct).1);
            em.push(next);
        }
        (em, answers)
    };
    let (emulators, first) = build();
    let (_, second) = build();
    if first != second {
        return Err(SoundnessError::Nondeterministic(format!(
            "replay of prover `{}` differs",
            prover.name()
        )));
    }

    let mut tables: Vec<AnswerTable> = Vec::with_capacity(k);
    let mut samples = Vec::with_capacity(k - 1);
    for l in 0..k - 1 {
        let n = k_estimator_samples(k, protocol.lambda(), game.answer_bits()[l], epsilon);
        let support = game.support(l);
        check_guard("estimator samples", n as u128 * support.len() as u128, guard)?;
        let candidates = 1u64 << game.answer_bits()[l];
        let mut table = AnswerTable::new();
        for q in support {
            let cond = game.conditional(l, q)?;
            let positions: Vec<usize> = (0..n).map(|_| cond.sample_position(&mut rng)).collect();
            let level_seed = Seed::from_u64(rng.gen()).fork_index("level", l as u64);
            let emulator = &emulators[l + 1];
            let wins = positions
                .par_iter()
                .enumerate()
                .map(|(s, pos)| {
                    let row = cond.row(*pos);
                    let mut r = level_seed.fork_index("sample", s as u64).rng();
                    let mut w = vec![0u64; candidates as usize];
                    let Some(tail) = emulator.tail(protocol, row, &mut r) else {
                        return w;
                    };
                    let mut answers: Vec<u64> = (0..l).map(|j| tables[j].get(&row[j]).copied().unwrap_or(0)).collect();
                    answers.push(0);
                    answers.extend(tail);
                    for (a, slot) in w.iter_mut().enumerate() {
                        answers[l] = a as u64;
                        if game.accepts(row, &answers) {
                            *slot += 1;
                        }
                    }
                    w
                })
                .reduce(
                    || vec![0u64; candidates as usize],
                    |mut x, y| {
                        x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                        x
                    },
                );
            table.insert(q, argmax(&wins) as u64);
        }
        tables.push(table);
        samples.push(n);
    }
    let last = emulators.last().expect("nonempty");
    tables.push(
        game.support(k - 1)
            .into_iter()
            .map(|q| (q, last.last_answer(protocol, q).unwrap_or(0)))
            .collect(),
    );
    let value = game.value_of(|q| {
        q.iter()
            .zip(&tables)
            .map(|(qi, t)| t.get(qi).copied().unwrap_or(0))
            .collect()
    });
    Ok(KExtraction {
        epsilon,
        dummies,
        keys,
        emulators,
        tables,
        samples,
        value,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HybridReport {
    /// `Hyb_0 .. Hyb_{k-1}`
    pub values: Vec<RateEstimate>,
    /// largest `Hyb_{j-1} - Hyb_j`
    pub max_drop: f64,
    /// `epsilon / (4k)`
    pub step_bound: f64,
}

/// Estimates every hybrid: the first `j` players answer with the extracted
/// functions, the rest are emulated from `emulators[j]` on fresh
/// encryptions.
pub fn hybrid_values(
    protocol: &CompiledProtocol,
    extraction: &KExtraction,
    trials: u64,
    seed: Seed,
) -> Result<HybridReport> {
    if trials == 0 {
        return Err(SoundnessError::NoTrials);
    }
    let game = protocol.game();
    let k = game.k();
    let values: Vec<RateEstimate> = (0..k)
        .map(|j| {
            let wins: u64 = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = seed.fork_index("hybrid", j as u64).fork_index("trial", i).rng();
                    let q = game.sample_queries(&mut rng);
                    let Some(tail) = extraction.emulators[j].tail(protocol, &q, &mut rng) else {
                        return 0;
                    };
                    let mut answers: Vec<u64> = (0..j)
                        .map(|p| extraction.tables[p].get(&q[p]).copied().unwrap_or(0))
                        .collect();
                    answers.extend(tail);
                    game.accepts(&q, &answers) as u64
                })
                .sum();
            RateEstimate::new(wins, trials)
        })
        .collect();
    let max_drop = values
        .windows(2)
        .map(|w| w[0].rate - w[1].rate)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HybridReport {
        values,
        max_drop,
        step_bound: extraction.epsilon / (4.0 * k as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, estimate_value, BestLocalProver, ConstantProver, DecryptingProver};
    use crate::games::{chsh_game, ghz3_game, NonLocalGame, QueryEntry};
    use crate::qhe::QheMode;
    use crate::soundness::{build_p2, fix_prefix, DEFAULT_SOUNDNESS_GUARD};
    use std::sync::Arc;

    #[test]
    fn sample_count_formula() {
        assert_eq!(k_estimator_samples(3, 8, 1, 0.3), 16_200);
        assert_eq!(k_estimator_samples(2, 8, 1, 0.3), 7_200);
    }

    #[test]
    fn two_players_match_pairwise_extraction() {
        let g = chsh_game();
        let proto = compile(g.clone(), 8).unwrap();
        let p = BestLocalProver::optimal(&g).unwrap();
        let ex = extract_k_provers(&proto, &p, 0.2, DEFAULT_SOUNDNESS_GUARD, Seed::from_u64(1)).unwrap();
        let prefix = fix_prefix(&proto, &p, 2, &mut Seed::from_u64(1).rng()).unwrap();
        assert_eq!(ex.tables[1], build_p2(&proto, &prefix).unwrap());
        assert_eq!(ex.value, Weight::new(3, 4));
    }

    #[test]
    fn always_accept_three_players() {
        let g = NonLocalGame::new(
            "accept3",
            vec![1, 1, 1],
            vec![1, 1, 1],
            (0..8)
                .map(|q| QueryEntry { queries: vec![q >> 2, q >> 1 & 1, q & 1], weight: Weight::new(1, 8) })
                .collect(),
            Arc::new(|_, _| true),
        )
        .unwrap();
        let proto = compile(g.clone(), 8).unwrap();
        let p = ConstantProver::new(&g, vec![1, 0, 1]);
        let ex = extract_k_provers(&proto, &p, 0.5, DEFAULT_SOUNDNESS_GUARD, Seed::from_u64(2)).unwrap();
        assert_eq!(ex.value, Weight::from_integer(1));
    }

    #[test]
    fn ghz3_best_local_extracts_and_hybrids_chain() {
        let g = ghz3_game();
        let proto = compile(g.clone(), 8).unwrap();
        let p = BestLocalProver::optimal(&g).unwrap();
        let ex = extract_k_provers(&proto, &p, 0.3, DEFAULT_SOUNDNESS_GUARD, Seed::from_u64(3)).unwrap();
        assert!(ex.value_f64() >= 0.75 - 0.05);
        let h = hybrid_values(&proto, &ex, 2000, Seed::from_u64(4)).unwrap();
        assert_eq!(h.values.len(), 3);
        let interactive = estimate_value(&proto, &p, 2000, Seed::from_u64(5));
        assert!((h.values[0].rate - interactive.rate).abs() < 0.05);
        assert!((h.values[2].rate - ex.value_f64()).abs() < 0.05);
    }

    #[test]
    fn leaky_decrypting_prover_drops_somewhere() {
        let proto = compile(chsh_game(), 8).unwrap().with_mode(QheMode::Leaky);
        let p = DecryptingProver::new(proto.game_arc());
        let ex = extract_k_provers(&proto, &p, 0.3, DEFAULT_SOUNDNESS_GUARD, Seed::from_u64(6)).unwrap();
        let h = hybrid_values(&proto, &ex, 2000, Seed::from_u64(7)).unwrap();
        assert_eq!(h.values[0].successes, 2000);
        assert!(h.max_drop > h.step_bound);
    }
}
