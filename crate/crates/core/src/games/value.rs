use std::collections::BTreeMap;

use super::game::{ratio, NonLocalGame, Weight};
use super::{GameError, Result};

/// Largest number of deterministic strategy tuples the brute force will visit.
pub const DEFAULT_STRATEGY_GUARD: u128 = 100_000_000;

/// A deterministic local answer table for one player, keyed by query value.
pub type AnswerTable = BTreeMap<u64, u64>;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalOptimum {
    pub value: Weight,
    /// One optimal answer table per player over that player's query support.
    pub strategy: Vec<AnswerTable>,
}

/// Number of deterministic strategy tuples over the query supports.
pub fn strategy_space_size(game: &NonLocalGame) -> u128 {
    (0..game.k()).fold(1u128, |acc, i| {
        let per_query = 1u128 << game.answer_bits()[i];
        let n = game.support(i).len() as u32;
        acc.saturating_mul(per_query.saturating_pow(n))
    })
}

pub fn classical_value_bruteforce(game: &NonLocalGame) -> Result<Weight> {
    Ok(classical_optimum(game, DEFAULT_STRATEGY_GUARD)?.value)
}

/// Maximum acceptance probability over all deterministic strategy tuples.
///
/// Players `0..k-1` are enumerated exhaustively; the last player's best
/// response is computed per query, which is the same maximum. Ties keep the
/// first tuple in enumeration order.
pub fn classical_optimum(game: &NonLocalGame, guard: u128) -> Result<ClassicalOptimum> {
    let size = strategy_space_size(game);
    if size > guard {
        return Err(GameError::GuardExceeded { size, guard });
    }
    let k = game.k();
    let supports: Vec<Vec<u64>> = (0..k).map(|i| game.support(i)).collect();
    let (weights, den) = game.integer_weights();
    let table = game.table();

    // row -> position of each player's query inside its support
    let positions: Vec<Vec<usize>> = table
        .iter()
        .map(|e| {
            (0..k)
                .map(|i| supports[i].binary_search(&e.queries[i]).expect("in support"))
                .collect()
        })
        .collect();

    let last = k - 1;
    let last_answers = 1u64 << game.answer_bits()[last];
    let enumerated: Vec<(usize, u64)> = (0..last)
        .flat_map(|i| {
            let base = 1u64 << game.answer_bits()[i];
            (0..supports[i].len()).map(move |_| (i, base))
        })
        .collect();

    let mut digits = vec![0u64; enumerated.len()];
    let mut best_num = -1i128;
    let mut best_digits = digits.clone();
    let mut best_last = vec![0u64; supports[last].len()];
    let mut answers = vec![0u64; k];
    let mut score = vec![0i128; supports[last].len() * last_answers as usize];

    loop {
        // answer tables for players 0..last from the digit vector
        let lookup = |player: usize, pos: usize, digits: &[u64]| -> u64 {
            let offset: usize = (0..player).map(|p| supports[p].len()).sum();
            digits[offset + pos]
        };
        score.iter_mut().for_each(|s| *s = 0);
        for (r, e) in table.iter().enumerate() {
            for p in 0..last {
                answers[p] = lookup(p, positions[r][p], &digits);
            }
            let g = positions[r][last];
            for a in 0..last_answers {
                answers[last] = a;
                if game.accepts(&e.queries, &answers) {
                    score[g * last_answers as usize + a as usize] += weights[r];
                }
            }
        }
        let mut total = 0i128;
        let mut response = vec![0u64; supports[last].len()];
        for (g, resp) in response.iter_mut().enumerate() {
            let row = &score[g * last_answers as usize..(g + 1) * last_answers as usize];
            let (arg, max) = row
                .iter()
                .enumerate()
                .fold((0, -1i128), |(ba, bm), (a, s)| if *s > bm { (a, *s) } else { (ba, bm) });
            *resp = arg as u64;
            total += max;
        }
        if total > best_num {
            best_num = total;
            best_digits.clone_from(&digits);
            best_last = response;
        }

        // next tuple (mixed radix)
        let mut i = 0;
        loop {
            if i == digits.len() {
                let strategy = build_tables(&supports, &enumerated, &best_digits, &best_last);
                return Ok(ClassicalOptimum {
                    value: ratio(best_num, den),
                    strategy,
                });
            }
            digits[i] += 1;
            if digits[i] < enumerated[i].1 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn build_tables(
    supports: &[Vec<u64>],
    enumerated: &[(usize, u64)],
    digits: &[u64],
    last: &[u64],
) -> Vec<AnswerTable> {
    let k = supports.len();
    let mut tables = vec![AnswerTable::new(); k];
    let mut offset = 0;
    for (p, table) in tables.iter_mut().enumerate().take(k - 1) {
        for (j, q) in supports[p].iter().enumerate() {
            table.insert(*q, digits[offset + j]);
        }
        offset += supports[p].len();
    }
    debug_assert_eq!(offset, enumerated.len());
    for (j, q) in supports[k - 1].iter().enumerate() {
        tables[k - 1].insert(*q, last[j]);
    }
    tables
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin::{chsh_game, ghz3_game, magic_square_game};
    use crate::games::game::QueryEntry;
    use std::sync::Arc;

    /// Independent oracle: full enumeration over every strategy tuple,
    /// evaluating each tuple's value from scratch.
    fn naive_value(game: &NonLocalGame) -> Weight {
        let k = game.k();
        let supports: Vec<Vec<u64>> = (0..k).map(|i| game.support(i)).collect();
        let radices: Vec<u64> = (0..k)
            .flat_map(|i| supports[i].iter().map(move |_| 1u64 << game.answer_bits()[i]))
            .collect();
        let mut digits = vec![0u64; radices.len()];
        let mut best = Weight::from_integer(-1);
        loop {
            let mut offs = vec![0usize; k];
            for i in 1..k {
                offs[i] = offs[i - 1] + supports[i - 1].len();
            }
            let v = game.value_of(|q| {
                (0..k)
                    .map(|i| digits[offs[i] + supports[i].binary_search(&q[i]).unwrap()])
                    .collect()
            });
            if v > best {
                best = v;
            }
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return best;
                }
                digits[i] += 1;
                if digits[i] < radices[i] {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn chsh_classical_value_is_three_quarters() {
        assert_eq!(classical_value_bruteforce(&chsh_game()).unwrap(), Weight::new(3, 4));
    }

    #[test]
    fn ghz3_and_magic_square_match_naive_enumeration() {
        let ghz = ghz3_game();
        let v = classical_value_bruteforce(&ghz).unwrap();
        assert_eq!(v, naive_value(&ghz));
        assert_eq!(v, Weight::new(3, 4));
        let ms = magic_square_game();
        let v = classical_value_bruteforce(&ms).unwrap();
        assert_eq!(v, Weight::new(8, 9));
    }

    #[test]
    fn always_accept_is_one() {
        let g = NonLocalGame::new(
            "accept",
            vec![1, 1],
            vec![1, 1],
            vec![QueryEntry { queries: vec![0, 1], weight: Weight::new(1, 1) }],
            Arc::new(|_, _| true),
        )
        .unwrap();
        assert_eq!(classical_value_bruteforce(&g).unwrap(), Weight::from_integer(1));
    }

    #[test]
    fn optimum_strategy_attains_value() {
        let g = chsh_game();
        let opt = classical_optimum(&g, DEFAULT_STRATEGY_GUARD).unwrap();
        let v = g.value_of(|q| {
            q.iter()
                .enumerate()
                .map(|(i, qi)| opt.strategy[i][qi])
                .collect()
        });
        assert_eq!(v, opt.value);
    }

    #[test]
    fn guard_is_enforced() {
        assert!(matches!(
            classical_optimum(&magic_square_game(), 1000),
            Err(GameError::GuardExceeded { .. })
        ));
    }

    #[test]
    fn value_invariant_under_answer_relabeling() {
        // Permute the answer encoding of player 1 via a ^ 1; value unchanged.
        let base = chsh_game();
        let pred = base.predicate().clone();
        let relabeled = NonLocalGame::new(
            "chsh-relabeled",
            vec![1, 1],
            vec![1, 1],
            base.table().to_vec(),
            Arc::new(move |q, a| pred(q, &[a[0] ^ 1, a[1]])),
        )
        .unwrap();
        assert_eq!(
            classical_value_bruteforce(&base).unwrap(),
            classical_value_bruteforce(&relabeled).unwrap()
        );
        let ms = magic_square_game();
        let pred = ms.predicate().clone();
        let rotated = NonLocalGame::new(
            "ms-relabeled",
            vec![2, 2],
            vec![3, 3],
            ms.table().to_vec(),
            Arc::new(move |q, a| pred(q, &[(a[0] + 3) % 8, a[1] ^ 0b101])),
        )
        .unwrap();
        assert_eq!(
            classical_value_bruteforce(&ms).unwrap(),
            classical_value_bruteforce(&rotated).unwrap()
        );
    }
}
