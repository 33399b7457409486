use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::game::{NonLocalGame, QueryEntry, Weight};
use super::{GameError, Result};

/// Largest truth table (in entries) accepted on import or produced on export.
const MAX_TABLE_BITS: usize = 24;

/// Wire form of a game. The predicate is a 0/1 truth table indexed by
/// `qidx * 2^(sum of answer bits) + aidx`, where `qidx` concatenates
/// `q_1..q_k` with player 1 in the most significant position, and `aidx`
/// concatenates the answers the same way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub k: usize,
    pub query_bits: Vec<usize>,
    pub answer_bits: Vec<usize>,
    pub queries: Vec<QueryJson>,
    pub predicate: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryJson {
    pub q: Vec<u64>,
    /// Exact weight as `"n/d"`, an integer, or a finite decimal.
    pub w: String,
}

fn pack(values: &[u64], widths: &[usize]) -> u64 {
    values
        .iter()
        .zip(widths)
        .fold(0u64, |acc, (v, w)| (acc << w) | v)
}

fn unpack(mut idx: u64, widths: &[usize]) -> Vec<u64> {
    let mut out = vec![0u64; widths.len()];
    for (slot, w) in out.iter_mut().zip(widths).rev() {
        *slot = idx & ((1u64 << w) - 1);
        idx >>= w;
    }
    out
}

fn table_bits(query_bits: &[usize], answer_bits: &[usize]) -> Result<(usize, usize)> {
    let qb: usize = query_bits.iter().sum();
    let ab: usize = answer_bits.iter().sum();
    if qb + ab > MAX_TABLE_BITS {
        return Err(GameError::Json(format!(
            "predicate table of 2^{} entries exceeds 2^{MAX_TABLE_BITS}",
            qb + ab
        )));
    }
    Ok((qb, ab))
}

/// Parse `"n/d"`, `"n"` or a finite decimal like `"0.25"` exactly.
pub(crate) fn parse_weight(s: &str) -> Result<Weight> {
    let s = s.trim();
    let bad = || GameError::Json(format!("bad weight `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n = i64::from_str(n.trim()).map_err(|_| bad())?;
        let d = i64::from_str(d.trim()).map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Weight::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let neg = int.starts_with('-');
        let int = if int.is_empty() || int == "-" { 0 } else { i64::from_str(int).map_err(|_| bad())? };
        let frac = if frac.is_empty() { 0 } else { i64::from_str(frac).map_err(|_| bad())? };
        let mag = int.abs().checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        return Ok(Weight::new(if neg { -mag } else { mag }, den));
    }
    Ok(Weight::from_integer(i64::from_str(s).map_err(|_| bad())?))
}

pub fn game_from_json(text: &str) -> Result<NonLocalGame> {
    let g: GameJson = serde_json::from_str(text).map_err(|e| GameError::Json(e.to_string()))?;
    if g.k != g.query_bits.len() || g.k != g.answer_bits.len() {
        return Err(GameError::Shape(format!(
            "k = {} but {} query widths and {} answer widths",
            g.k,
            g.query_bits.len(),
            g.answer_bits.len()
        )));
    }
    let (qb, ab) = table_bits(&g.query_bits, &g.answer_bits)?;
    if g.predicate.len() != 1usize << (qb + ab) {
        return Err(GameError::Json(format!(
            "predicate has {} entries, expected {}",
            g.predicate.len(),
            1usize << (qb + ab)
        )));
    }
    if g.predicate.iter().any(|b| *b > 1) {
        return Err(GameError::Json("predicate entries must be 0 or 1".into()));
    }
    let table = g
        .queries
        .iter()
        .map(|e| {
            Ok(QueryEntry {
                queries: e.q.clone(),
                weight: parse_weight(&e.w)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bits: Vec<bool> = g.predicate.iter().map(|b| *b == 1).collect();
    let (qw, aw) = (g.query_bits.clone(), g.answer_bits.clone());
    let predicate = Arc::new(move |q: &[u64], a: &[u64]| {
        bits[((pack(q, &qw) << ab) | pack(a, &aw)) as usize]
    });
    NonLocalGame::new(
        g.name.unwrap_or_else(|| "custom".into()),
        g.query_bits,
        g.answer_bits,
        table,
        predicate,
    )
}

/// Exports the query table and the full predicate truth table.
pub fn game_to_json(game: &NonLocalGame) -> Result<GameJson> {
    let (qb, ab) = table_bits(game.query_bits(), game.answer_bits())?;
    let mut predicate = Vec::with_capacity(1usize << (qb + ab));
    for qi in 0..1u64 << qb {
        let q = unpack(qi, game.query_bits());
        for ai in 0..1u64 << ab {
            predicate.push(game.accepts(&q, &unpack(ai, game.answer_bits())) as u8);
        }
    }
    Ok(GameJson {
        name: Some(game.name().to_string()),
        k: game.k(),
        query_bits: game.query_bits().to_vec(),
        answer_bits: game.answer_bits().to_vec(),
        queries: game
            .table()
            .iter()
            .map(|e| QueryJson {
                q: e.queries.clone(),
                w: e.weight.to_string(),
            })
            .collect(),
        predicate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{builtin_game, classical_value_bruteforce, BuiltinGame};

    #[test]
    fn builtins_roundtrip_bit_exactly() {
        for which in BuiltinGame::ALL {
            let (g, _) = builtin_game(which);
            let j = game_to_json(&g).unwrap();
            let text = serde_json::to_string(&j).unwrap();
            let back = game_from_json(&text).unwrap();
            assert_eq!(game_to_json(&back).unwrap(), j);
            assert_eq!(back.table(), g.table());
            assert_eq!(
                classical_value_bruteforce(&back).unwrap(),
                classical_value_bruteforce(&g).unwrap()
            );
        }
    }

    #[test]
    fn chsh_truth_table_layout() {
        let j = game_to_json(&builtin_game(BuiltinGame::Chsh).0).unwrap();
        // rows q = 00, 01, 10, 11; columns a = 00, 01, 10, 11
        assert_eq!(
            j.predicate,
            vec![1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0]
        );
        assert_eq!(j.queries[0].w, "1/4");
    }

    #[test]
    fn weights_parse_exactly() {
        assert_eq!(parse_weight("1/4").unwrap(), Weight::new(1, 4));
        assert_eq!(parse_weight("0.25").unwrap(), Weight::new(1, 4));
        assert_eq!(parse_weight("1").unwrap(), Weight::from_integer(1));
        assert!(parse_weight("1/0").is_err());
        assert!(parse_weight("x").is_err());
    }

    #[test]
    fn bad_weight_sum_is_rejected() {
        let mut j = game_to_json(&builtin_game(BuiltinGame::Chsh).0).unwrap();
        j.queries[0].w = "1/2".into();
        let text = serde_json::to_string(&j).unwrap();
        assert!(matches!(game_from_json(&text), Err(GameError::Weights(_))));
    }

    #[test]
    fn wrong_predicate_length_is_rejected() {
        let mut j = game_to_json(&builtin_game(BuiltinGame::Chsh).0).unwrap();
        j.predicate.pop();
        let text = serde_json::to_string(&j).unwrap();
        assert!(matches!(game_from_json(&text), Err(GameError::Json(_))));
    }
}
