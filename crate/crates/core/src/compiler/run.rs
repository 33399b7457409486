use rayon::prelude::*;

use crate::games::QuantumStrategy;
use crate::qhe::{AuxPad, QheMode, SecretKey};
use crate::rng::{Seed, SimRng};
use crate::stats::RateEstimate;
use crate::qhe::Evaluator;

use super::message::{Payload, ProverMessage, RoundMessage, Sender, Transcript, VerifierMessage};
use super::prover::Prover;
use super::{CompiledProtocol, ProtocolError, Result};

/// Validates and decrypts player `player`'s answer; `key` is that player's
/// key in encrypted rounds.
pub(crate) fn check_answer(
    protocol: &CompiledProtocol,
    key: Option<&SecretKey>,
    player: usize,
    msg: &ProverMessage,
) -> Result<u64> {
    let width = protocol.game().answer_bits()[player];
    match (msg, key) {
        (ProverMessage::Encrypted { answer }, Some(key)) => {
            if answer.bits.len() != width || answer.pads.len() != width {
                return Err(ProtocolError::Malformed(format!(
                    "player {player}: {} bits and {} pads for a {width}-bit answer",
                    answer.bits.len(),
                    answer.pads.len()
                )));
            }
            Ok(key.decrypt_answer(answer)?)
        }
        (ProverMessage::Plain { answer }, None) => {
            if width < 64 && *answer >> width != 0 {
                return Err(ProtocolError::Malformed(format!(
                    "player {player}: answer {answer} exceeds {width} bits"
                )));
            }
            Ok(*answer)
        }
        _ => Err(ProtocolError::Malformed(format!("player {player}: wrong message kind"))),
    }
}

/// One execution against `prover`. The verifier draws the queries and keys
/// from `rng`. Prover errors and malformed answers reject and are recorded.
pub fn run_protocol(protocol: &CompiledProtocol, prover: &mut dyn Prover, rng: &mut SimRng) -> Transcript {
    let game = protocol.game();
    let k = game.k();
    let queries = game.sample_queries(rng);
    let keys: Vec<SecretKey> = (0..k - 1)
        .map(|_| SecretKey::gen(protocol.lambda(), protocol.mode(), rng).expect("lambda checked at compile time"))
        .collect();
    let mut messages = Vec::with_capacity(2 * k);
    let mut answers = vec![0u64; k];
    let mut error: Option<String> = None;
    for i in 0..k {
        let msg = if i + 1 < k {
            VerifierMessage::Encrypted {
                player: i,
                query: keys[i].encrypt_bits(queries[i], game.query_bits()[i], rng),
                key: keys[i].eval_key(),
            }
        } else {
            VerifierMessage::Plain {
                player: i,
                query: queries[i],
            }
        };
        messages.push(RoundMessage {
            round: 2 * i + 1,
            sender: Sender::Verifier,
            payload: (&msg).into(),
        });
        let reply = prover.respond(&msg);
        let payload = match &reply {
            Ok(m) => m.into(),
            Err(e) => Payload::Missing { cause: e.to_string() },
        };
        messages.push(RoundMessage {
            round: 2 * i + 2,
            sender: Sender::Prover,
            payload,
        });
        match reply.and_then(|m| check_answer(protocol, keys.get(i), i, &m)) {
            Ok(a) => answers[i] = a,
            Err(e) => {
                error.get_or_insert(e.to_string());
            }
        }
    }
    let accept = error.is_none() && game.accepts(&queries, &answers);
    Transcript {
        game: game.name().to_string(),
        queries,
        keys: keys.iter().map(|k| k.key_id()).collect(),
        messages,
        answers: error.is_none().then_some(answers),
        accept,
        error,
    }
}

/// Acceptance rate over `trials` independent executions. Trial `i` uses a
/// fresh clone of `prover` reseeded from `seed`, so the result does not
/// depend on scheduling.
pub fn estimate_value(protocol: &CompiledProtocol, prover: &dyn Prover, trials: u64, seed: Seed) -> RateEstimate {
    let wins: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut p = prover.box_clone();
            p.reseed(seed.fork_index("prover", i));
            p.reset();
            let mut rng = seed.fork_index("verifier", i).rng();
            run_protocol(protocol, p.as_mut(), &mut rng).accept as u64
        })
        .sum();
    RateEstimate::new(wins, trials)
}

/// Exact distribution of the decrypted honest answers on `queries`, averaged
/// over `samples` draws of keys, pads and evaluation randomness. Indexed by
/// the packed answers, player 0 in the low bits.
pub fn honest_answer_distribution(
    protocol: &CompiledProtocol,
    strategy: &QuantumStrategy,
    queries: &[u64],
    samples: u64,
    seed: Seed,
) -> Result<Vec<f64>> {
    let game = protocol.game();
    strategy.validate(game)?;
    let k = game.k();
    let total: usize = game.answer_bits().iter().sum();
    let mut acc = vec![0.0; 1 << total];
    for s in 0..samples {
        let mut rng = seed.fork_index("honest-distribution", s).rng();
        let mut st = strategy.shared_state.clone();
        let mut measured = Vec::new();
        let mut flips = 0usize;
        let mut offset = 0;
        for (i, p) in strategy.players.iter().enumerate() {
            let data = st.register(&p.register).map_err(|e| ProtocolError::Prover(e.to_string()))?.qubits();
            if i + 1 < k {
                let circuit = p
                    .encrypted_form
                    .as_ref()
                    .ok_or_else(|| ProtocolError::NotEvaluable(format!("player {i}")))?;
                let sk = SecretKey::gen(protocol.lambda(), QheMode::Ideal, &mut rng)?;
                let input = sk.encrypt_bits(queries[i], game.query_bits()[i], &mut rng);
                let mut ev = Evaluator::new(sk.eval_key(), protocol.params());
                let data_ct = ev.encrypt_aux(&mut st, &data, AuxPad::Random, &mut rng)?;
                let mut ct = ev.assemble(&mut st, circuit, Some(&input), data_ct)?;
                ev.run(&mut st, circuit, &mut ct, &mut rng)?;
                ev.release(&mut st, &mut rng)?;
                for (j, pos) in circuit.measured.iter().enumerate() {
                    measured.push(ct.qubits()[*pos]);
                    if sk.decrypt(&ct.pads()[*pos].x)? {
                        flips |= 1 << (offset + j);
                    }
                }
            } else {
                let circuit = p
                    .per_query
                    .get(&queries[i])
                    .ok_or_else(|| ProtocolError::Malformed(format!("query {} outside the strategy", queries[i])))?;
                let mut binding = data;
                if circuit.ancillas > 0 {
                    let start = st.append_qubits(circuit.ancillas).map_err(|e| ProtocolError::Prover(e.to_string()))?;
                    binding.extend(start..start + circuit.ancillas);
                }
                st.apply_all(&circuit.bind(&binding))
                    .map_err(|e| ProtocolError::Prover(e.to_string()))?;
                measured.extend(circuit.measured.iter().map(|q| binding[*q]));
            }
            offset += game.answer_bits()[i];
        }
        let probs = st
            .outcome_distribution(&measured)
            .map_err(|e| ProtocolError::Prover(e.to_string()))?;
        for (idx, p) in probs.iter().enumerate() {
            acc[idx ^ flips] += p / samples as f64;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{
        compile, BestLocalProver, BiasedRandomProver, ConstantProver, DecryptingProver, HonestQuantumProver,
        RejectingProver,
    };
    use crate::games::{builtin_game, BuiltinGame};
    use crate::qhe::QheParams;

    fn packed(strategy: &QuantumStrategy, game: &crate::games::NonLocalGame, q: &[u64]) -> Vec<f64> {
        let total: usize = game.answer_bits().iter().sum();
        let mut out = vec![0.0; 1 << total];
        for (a, p) in strategy.answer_distribution(game, q).unwrap() {
            let mut idx = 0usize;
            let mut off = 0;
            for (i, ai) in a.iter().enumerate() {
                idx |= (*ai as usize) << off;
                off += game.answer_bits()[i];
            }
            out[idx] += p;
        }
        out
    }

    #[test]
    fn honest_transcripts_are_well_formed() {
        for which in [BuiltinGame::Chsh, BuiltinGame::Ghz3] {
            let (g, s) = builtin_game(which);
            let proto = compile(g.clone(), 8).unwrap();
            let mut prover = HonestQuantumProver::new(&g, s, QheParams::default()).unwrap();
            let mut rng = Seed::from_u64(1).rng();
            for _ in 0..20 {
                prover.reset();
                let t = run_protocol(&proto, &mut prover, &mut rng);
                assert_eq!(t.messages.len(), proto.rounds());
                assert!(t.error.is_none(), "{:?}", t.error);
                assert_eq!(t.keys.len(), proto.keys_per_run());
                assert_eq!(t.accept, t.recompute_accept(&g));
                for (r, m) in t.messages.iter().enumerate() {
                    assert_eq!(m.round, r + 1);
                    assert_eq!(m.sender, if r % 2 == 0 { Sender::Verifier } else { Sender::Prover });
                }
            }
        }
    }

    #[test]
    fn honest_distribution_matches_plain_strategy() {
        for which in [BuiltinGame::Chsh, BuiltinGame::Ghz3] {
            let (g, s) = builtin_game(which);
            let proto = compile(g.clone(), 8).unwrap();
            for e in g.table() {
                let got = honest_answer_distribution(&proto, &s, &e.queries, 8, Seed::from_u64(3)).unwrap();
                let want = packed(&s, &g, &e.queries);
                let tv: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
                assert!(tv < 1e-9, "{which:?} {:?}: {tv}", e.queries);
            }
        }
    }

    #[test]
    fn classical_provers_hit_their_values() {
        let (g, _) = builtin_game(BuiltinGame::Chsh);
        let proto = compile(g.clone(), 8).unwrap();
        let best = BestLocalProver::optimal(&g).unwrap();
        let r = estimate_value(&proto, &best, 4000, Seed::from_u64(5));
        assert!((r.rate - 0.75).abs() < 4.0 * r.sigma_at(0.75), "{}", r.rate);
        let reject = estimate_value(&proto, &RejectingProver, 200, Seed::from_u64(5));
        assert_eq!(reject.successes, 0);
        let constant = ConstantProver::new(&g, vec![0, 0]);
        let r = estimate_value(&proto, &constant, 4000, Seed::from_u64(6));
        assert!((r.rate - 0.75).abs() < 4.0 * r.sigma_at(0.75));
    }

    #[test]
    fn decrypting_prover_wins_only_when_leaky() {
        let (g, _) = builtin_game(BuiltinGame::Chsh);
        let leaky = compile(g.clone(), 8).unwrap().with_mode(QheMode::Leaky);
        let p = DecryptingProver::new(leaky.game_arc());
        assert_eq!(estimate_value(&leaky, &p, 500, Seed::from_u64(7)).successes, 500);
        let ideal = compile(g, 8).unwrap();
        let r = estimate_value(&ideal, &p, 4000, Seed::from_u64(7));
        assert!(r.rate < 0.8, "{}", r.rate);
    }

    #[test]
    fn taped_random_prover_is_replayable() {
        let (g, _) = builtin_game(BuiltinGame::Ghz3);
        let proto = compile(g.clone(), 8).unwrap();
        let mut p = BiasedRandomProver::with_tape(&g, 0.3, Seed::from_u64(9));
        assert!(p.is_deterministic());
        let run = |p: &mut BiasedRandomProver| {
            p.reset();
            run_protocol(&proto, p, &mut Seed::from_u64(11).rng()).answers
        };
        assert_eq!(run(&mut p), run(&mut p));
        let mut free = BiasedRandomProver::without_tape(&g, 0.5, Seed::from_u64(9));
        assert!(!free.is_deterministic());
        let outs: Vec<_> = (0..20).map(|_| run(&mut free)).collect();
        assert!(outs.iter().any(|o| *o != outs[0]));
    }

    #[test]
    fn keys_are_fresh_per_run() {
        let (g, _) = builtin_game(BuiltinGame::Ghz3);
        let proto = compile(g.clone(), 8).unwrap();
        let mut p = ConstantProver::new(&g, vec![0, 0, 0]);
        let mut rng = Seed::from_u64(2).rng();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..100 {
            for id in run_protocol(&proto, &mut p, &mut rng).keys {
                assert!(seen.insert(id));
            }
        }
    }

    #[test]
    fn magic_square_is_not_evaluable() {
        let (g, s) = builtin_game(BuiltinGame::MagicSquare);
        assert!(matches!(
            HonestQuantumProver::new(&g, s, QheParams::default()),
            Err(ProtocolError::NotEvaluable(_))
        ));
    }
}
