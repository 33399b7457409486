use std::collections::BTreeMap;

use crate::quantum::{Circuit, Statevector};

use super::game::NonLocalGame;
use super::{GameError, Result};

/// One player's measurement strategy.
#[derive(Clone, Debug)]
pub struct PlayerStrategy {
    /// Register of the shared state this player holds.
    pub register: String,
    /// Circuit per query value, acting on `[register | ancillas]`.
    pub per_query: BTreeMap<u64, Circuit>,
    /// Single circuit that reads the query from input qubits. This is the form
    /// a homomorphic evaluator runs on an encrypted query.
    pub encrypted_form: Option<Circuit>,
}

/// Shared entangled state plus per-player local circuits.
#[derive(Clone, Debug)]
pub struct QuantumStrategy {
    pub shared_state: Statevector,
    pub players: Vec<PlayerStrategy>,
}

impl QuantumStrategy {
    /// Checks registers, circuit locality and answer widths against `game`.
    pub fn validate(&self, game: &NonLocalGame) -> Result<()> {
        if self.players.len() != game.k() {
            return Err(GameError::StrategyMismatch(format!(
                "{} player strategies for a {}-player game",
                self.players.len(),
                game.k()
            )));
        }
        for (i, p) in self.players.iter().enumerate() {
            let reg = self
                .shared_state
                .register(&p.register)
                .map_err(|e| GameError::StrategyMismatch(e.to_string()))?;
            let check = |c: &Circuit, inputs: usize| -> Result<()> {
                c.validate()
                    .map_err(|e| GameError::StrategyMismatch(format!("player {i}: {e}")))?;
                if c.data != reg.len || c.inputs != inputs {
                    return Err(GameError::StrategyMismatch(format!(
                        "player {i}: circuit layout ({} inputs, {} data) does not match register `{}` of {} qubits",
                        c.inputs, c.data, p.register, reg.len
                    )));
                }
                if c.measured.len() != game.answer_bits()[i] {
                    return Err(GameError::StrategyMismatch(format!(
                        "player {i}: measures {} qubits for {}-bit answers",
                        c.measured.len(),
                        game.answer_bits()[i]
                    )));
                }
                Ok(())
            };
            for q in game.support(i) {
                let c = p.per_query.get(&q).ok_or_else(|| {
                    GameError::StrategyMismatch(format!("player {i} has no circuit for query {q}"))
                })?;
                check(c, 0)?;
            }
            if let Some(c) = &p.encrypted_form {
                check(c, game.query_bits()[i])?;
            }
        }
        Ok(())
    }

    /// Exact joint answer distribution for one query tuple.
    pub fn answer_distribution(
        &self,
        game: &NonLocalGame,
        queries: &[u64],
    ) -> Result<Vec<(Vec<u64>, f64)>> {
        let mut state = self.shared_state.clone();
        let mut measured = Vec::new();
        let mut widths = Vec::new();
        for (i, p) in self.players.iter().enumerate() {
            let circuit = p.per_query.get(&queries[i]).ok_or_else(|| {
                GameError::StrategyMismatch(format!(
                    "player {i} has no circuit for query {}",
                    queries[i]
                ))
            })?;
            let reg = state.register(&p.register)?.clone();
            let mut binding = reg.qubits();
            if circuit.ancillas > 0 {
                let start = state.append_qubits(circuit.ancillas)?;
                binding.extend(start..start + circuit.ancillas);
            }
            state.apply_all(&circuit.bind(&binding))?;
            measured.extend(circuit.measured.iter().map(|q| binding[*q]));
            widths.push(game.answer_bits()[i]);
        }
        let probs = state.outcome_distribution(&measured)?;
        Ok(probs
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(outcome, p)| (split_answers(outcome as u64, &widths), p))
            .collect())
    }
}

/// Split packed measurement bits into per-player answers (player 0 lowest).
pub(crate) fn split_answers(mut bits: u64, widths: &[usize]) -> Vec<u64> {
    widths
        .iter()
        .map(|w| {
            let a = bits & ((1u64 << w) - 1);
            bits >>= w;
            a
        })
        .collect()
}

/// Exact winning probability of `strat`, summed over the query table.
pub fn quantum_strategy_value(game: &NonLocalGame, strat: &QuantumStrategy) -> Result<f64> {
    strat.validate(game)?;
    let mut total = 0.0;
    for e in game.table() {
        let w = *e.weight.numer() as f64 / *e.weight.denom() as f64;
        let win: f64 = strat
            .answer_distribution(game, &e.queries)?
            .iter()
            .filter(|(a, _)| game.accepts(&e.queries, a))
            .map(|(_, p)| p)
            .sum();
        total += w * win;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin::{builtin_game, BuiltinGame};
    use crate::games::game::{QueryEntry, Weight};
    use crate::quantum::GateOp;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn chsh_optimal_strategy_hits_cos2_pi_8() {
        let (g, s) = builtin_game(BuiltinGame::Chsh);
        let v = quantum_strategy_value(&g, &s).unwrap();
        assert!((v - (PI / 8.0).cos().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn chsh_standard_basis_strategy_is_three_quarters() {
        // Both players measure the EPR pair in the standard basis: a1 = a2
        // always, so the referee accepts exactly when q1 q2 = 0.
        let (g, mut s) = builtin_game(BuiltinGame::Chsh);
        for p in &mut s.players {
            for c in p.per_query.values_mut() {
                c.gates.clear();
            }
        }
        let v = quantum_strategy_value(&g, &s).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ghz3_and_magic_square_win_with_certainty() {
        for which in [BuiltinGame::Ghz3, BuiltinGame::MagicSquare] {
            let (g, s) = builtin_game(which);
            let v = quantum_strategy_value(&g, &s).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{which:?} -> {v}");
        }
    }

    #[test]
    fn encrypted_forms_match_per_query_circuits() {
        // Running the query-controlled circuit with the query loaded in the
        // computational basis must reproduce the per-query distribution.
        for which in [BuiltinGame::Chsh, BuiltinGame::Ghz3] {
            let (g, s) = builtin_game(which);
            for (i, p) in s.players.iter().enumerate() {
                let Some(enc) = &p.encrypted_form else { continue };
                for q in g.support(i) {
                    let direct = {
                        let mut st = s.shared_state.clone();
                        let c = &p.per_query[&q];
                        let mut b = st.register(&p.register).unwrap().qubits();
                        if c.ancillas > 0 {
                            let a = st.append_qubits(c.ancillas).unwrap();
                            b.extend(a..a + c.ancillas);
                        }
                        st.apply_all(&c.bind(&b)).unwrap();
                        let m: Vec<usize> = c.measured.iter().map(|x| b[*x]).collect();
                        st.reduced_density(&m).unwrap()
                    };
                    let via_input = {
                        let mut st = s.shared_state.clone();
                        let inp = st.append_qubits(enc.inputs).unwrap();
                        for bit in 0..enc.inputs {
                            if q >> bit & 1 == 1 {
                                st.apply(&GateOp::X(inp + bit)).unwrap();
                            }
                        }
                        let mut b: Vec<usize> = (inp..inp + enc.inputs).collect();
                        b.extend(st.register(&p.register).unwrap().qubits());
                        let a = st.append_qubits(enc.ancillas).unwrap();
                        b.extend(a..a + enc.ancillas);
                        st.apply_all(&enc.bind(&b)).unwrap();
                        let m: Vec<usize> = enc.measured.iter().map(|x| b[*x]).collect();
                        st.reduced_density(&m).unwrap()
                    };
                    // compare diagonal (outcome distributions) of the measured qubits
                    for d in 0..direct.dim() {
                        assert!(
                            (direct.entry(d, d) - via_input.entry(d, d)).norm() < 1e-12,
                            "{which:?} player {i} query {q}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn product_state_matches_induced_classical_strategy() {
        // |1>_A |0>_B measured directly: a1 = 1, a2 = 0 for every query.
        let g = builtin_game(BuiltinGame::Chsh).0;
        let mut st = Statevector::basis(2, 0b01).unwrap();
        st.name_register("A", 0, 1).unwrap();
        st.name_register("B", 1, 1).unwrap();
        let player = |reg: &str| PlayerStrategy {
            register: reg.into(),
            per_query: (0..2).map(|q| (q, Circuit::identity(1, vec![0]))).collect(),
            encrypted_form: None,
        };
        let s = QuantumStrategy {
            shared_state: st,
            players: vec![player("A"), player("B")],
        };
        let quantum = quantum_strategy_value(&g, &s).unwrap();
        let classical = g.local_value(&[&|_| 1, &|_| 0]);
        assert!((quantum - *classical.numer() as f64 / *classical.denom() as f64).abs() < 1e-12);
    }

    #[test]
    fn mismatched_register_is_rejected() {
        let g = NonLocalGame::new(
            "one",
            vec![1, 1],
            vec![1, 1],
            vec![QueryEntry { queries: vec![0, 0], weight: Weight::from_integer(1) }],
            Arc::new(|_, _| true),
        )
        .unwrap();
        let (_, mut s) = builtin_game(BuiltinGame::Chsh);
        s.players[1].register = "Z".into();
        assert!(matches!(
            quantum_strategy_value(&g, &s),
            Err(GameError::StrategyMismatch(_))
        ));
    }
}
