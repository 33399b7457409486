use std::sync::Arc;

use crate::games::{NonLocalGame, PlayerStrategy, QuantumStrategy, QueryEntry, Weight};
use crate::quantum::{Circuit, Statevector};

use super::{RepetitionError, Result};

/// Largest product query table built by [`ThresholdRepeatedGame::to_game`].
const MAX_PRODUCT_ROWS: usize = 1 << 20;

/// Number of accepted copies out of `t` needed at threshold `theta`.
pub fn threshold_count(t: usize, theta: f64) -> usize {
    ((theta * t as f64) - 1e-9).ceil().max(0.0) as usize
}

/// `t` i.i.d. copies of a game; accepted when at least a `theta` fraction
/// of the copies are.
#[derive(Clone, Debug)]
pub struct ThresholdRepeatedGame {
    pub base: Arc<NonLocalGame>,
    pub t: usize,
    pub theta: f64,
}

pub fn threshold_repeat(game: NonLocalGame, t: usize, theta: f64) -> Result<ThresholdRepeatedGame> {
    if t == 0 {
        return Err(RepetitionError::Parameter("t must be at least 1".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(RepetitionError::Parameter(format!("theta = {theta} outside (0, 1]")));
    }
    Ok(ThresholdRepeatedGame {
        base: Arc::new(game),
        t,
        theta,
    })
}

impl ThresholdRepeatedGame {
    pub fn required(&self) -> usize {
        threshold_count(self.t, self.theta)
    }

    pub fn accepts_count(&self, accepted: usize) -> bool {
        accepted >= self.required()
    }

    /// The repeated game as a single game: player `i`'s query and answer pack
    /// the copies, copy `c` at bit offset `c` times the base width.
    pub fn to_game(&self) -> Result<NonLocalGame> {
        let base = &self.base;
        let k = base.k();
        let t = self.t;
        let qb: Vec<usize> = base.query_bits().iter().map(|b| b * t).collect();
        let ab: Vec<usize> = base.answer_bits().iter().map(|b| b * t).collect();
        if qb.iter().chain(&ab).any(|b| *b > 63) {
            return Err(RepetitionError::Parameter(format!("{t} copies exceed 63-bit messages")));
        }
        let rows = base.table().len();
        if (rows as f64).powi(t as i32) > MAX_PRODUCT_ROWS as f64 {
            return Err(RepetitionError::Parameter(format!(
                "product table of {rows}^{t} rows is too large"
            )));
        }
        let mut table = Vec::new();
        let mut idx = vec![0usize; t];
        loop {
            let mut queries = vec![0u64; k];
            let mut weight = Weight::from_integer(1);
            for (c, r) in idx.iter().enumerate() {
                let e = &base.table()[*r];
                weight *= e.weight;
                for i in 0..k {
                    queries[i] |= e.queries[i] << (c * base.query_bits()[i]);
                }
            }
            table.push(QueryEntry { queries, weight });
            let mut c = 0;
            loop {
                if c == t {
                    let g = base.clone();
                    let required = self.required();
                    let (bq, ba) = (base.query_bits().to_vec(), base.answer_bits().to_vec());
                    let predicate = Arc::new(move |q: &[u64], a: &[u64]| {
                        let won = (0..t)
                            .filter(|c| {
                                let qc: Vec<u64> =
                                    q.iter().zip(&bq).map(|(x, w)| x >> (c * w) & ((1 << w) - 1)).collect();
                                let ac: Vec<u64> =
                                    a.iter().zip(&ba).map(|(x, w)| x >> (c * w) & ((1 << w) - 1)).collect();
                                g.accepts(&qc, &ac)
                            })
                            .count();
                        won >= required
                    });
                    let name = format!("{}^({t},{})", base.name(), self.theta);
                    return Ok(NonLocalGame::new(name, qb, ab, table, predicate)?);
                }
                idx[c] += 1;
                if idx[c] < rows {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
        }
    }
}

/// `t` independent copies of a quantum strategy for the packed repeated
/// game. Each player's register holds its `t` copies contiguously.
pub fn iid_strategy(base: &QuantumStrategy, game: &NonLocalGame, t: usize) -> Result<QuantumStrategy> {
    base.validate(game)?;
    let n = base.shared_state.num_qubits();
    let mut st = Statevector::from_amplitudes(base.shared_state.amplitudes().to_vec())?;
    let single = st.clone();
    for _ in 1..t {
        st = st.tensor(&single)?;
    }
    let regs: Vec<_> = base
        .players
        .iter()
        .map(|p| base.shared_state.register(&p.register).cloned())
        .collect::<std::result::Result<_, _>>()?;
    let owned: Vec<bool> = (0..n).map(|q| regs.iter().any(|r| r.contains(q))).collect();
    let free: Vec<usize> = (0..n).filter(|q| !owned[*q]).collect();
    // new position of qubit j of copy c
    let mut target = vec![0usize; n * t];
    let mut offset = 0;
    for r in &regs {
        for c in 0..t {
            for j in 0..r.len {
                target[c * n + r.start + j] = offset + c * r.len + j;
            }
        }
        offset += t * r.len;
    }
    for c in 0..t {
        for (f, q) in free.iter().enumerate() {
            target[c * n + q] = offset + c * free.len() + f;
        }
    }
    st.apply_basis_permutation(|i| {
        (0..n * t).fold(0usize, |acc, q| acc | (i >> q & 1) << target[q])
    });
    let mut offset = 0;
    for (p, r) in base.players.iter().zip(&regs) {
        st.name_register(&p.register, offset, t * r.len)?;
        offset += t * r.len;
    }

    let players = base
        .players
        .iter()
        .enumerate()
        .zip(&regs)
        .map(|((i, p), r)| {
            let qb = game.query_bits()[i];
            let d = r.len;
            let per_query = (0..1u64 << (qb * t))
                .filter(|q| (0..t).all(|c| p.per_query.contains_key(&(q >> (c * qb) & ((1 << qb) - 1)))))
                .map(|q| {
                    let copies: Vec<&Circuit> =
                        (0..t).map(|c| &p.per_query[&(q >> (c * qb) & ((1 << qb) - 1))]).collect();
                    let anc: Vec<usize> = copies.iter().map(|c| c.ancillas).collect();
                    let total_anc: usize = anc.iter().sum();
                    let mut gates = Vec::new();
                    let mut measured = Vec::new();
                    let mut anc_off = t * d;
                    for (c, circ) in copies.iter().enumerate() {
                        let binding: Vec<usize> = (0..d)
                            .map(|j| c * d + j)
                            .chain(anc_off..anc_off + circ.ancillas)
                            .collect();
                        gates.extend(circ.bind(&binding));
                        measured.extend(circ.measured.iter().map(|m| binding[*m]));
                        anc_off += circ.ancillas;
                    }
                    (
                        q,
                        Circuit {
                            inputs: 0,
                            data: t * d,
                            ancillas: total_anc,
                            gates,
                            measured,
                        },
                    )
                })
                .collect();
            PlayerStrategy {
                register: p.register.clone(),
                per_query,
                encrypted_form: None,
            }
        })
        .collect();
    Ok(QuantumStrategy {
        shared_state: st,
        players,
    })
}
