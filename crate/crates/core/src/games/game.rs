use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::Rng;

use super::{GameError, Result};

/// Exact probability weight.
pub type Weight = Ratio<i64>;

/// Verification predicate `V(q_1..q_k, a_1..a_k)`.
pub type Predicate = Arc<dyn Fn(&[u64], &[u64]) -> bool + Send + Sync>;

/// One row of the query distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryEntry {
    pub queries: Vec<u64>,
    pub weight: Weight,
}

/// A k-player non-local game with an explicit query table.
#[derive(Clone)]
pub struct NonLocalGame {
    name: String,
    query_bits: Vec<usize>,
    answer_bits: Vec<usize>,
    table: Vec<QueryEntry>,
    /// numerators of `table` weights over `denominator`
    numerators: Vec<i128>,
    denominator: i128,
    predicate: Predicate,
}

impl fmt::Debug for NonLocalGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonLocalGame")
            .field("name", &self.name)
            .field("query_bits", &self.query_bits)
            .field("answer_bits", &self.answer_bits)
            .field("table_len", &self.table.len())
            .finish()
    }
}

impl NonLocalGame {
    /// Builds and validates a game. Zero-weight rows are dropped.
    pub fn new(
        name: impl Into<String>,
        query_bits: Vec<usize>,
        answer_bits: Vec<usize>,
        table: Vec<QueryEntry>,
        predicate: Predicate,
    ) -> Result<Self> {
        let k = query_bits.len();
        if k == 0 || answer_bits.len() != k {
            return Err(GameError::Shape(format!(
                "query_bits has {} players, answer_bits has {}",
                k,
                answer_bits.len()
            )));
        }
        if query_bits.iter().chain(&answer_bits).any(|b| *b > 32) {
            return Err(GameError::Shape("at most 32 bits per query or answer".into()));
        }
        let mut total = Weight::zero();
        let mut rows = Vec::with_capacity(table.len());
        for e in table {
            if e.queries.len() != k {
                return Err(GameError::Shape(format!(
                    "query tuple {:?} does not have {k} entries",
                    e.queries
                )));
            }
            for (i, q) in e.queries.iter().enumerate() {
                if *q >> query_bits[i] != 0 {
                    return Err(GameError::Shape(format!(
                        "query {q} of player {i} exceeds {} bits",
                        query_bits[i]
                    )));
                }
            }
            if e.weight < Weight::zero() {
                return Err(GameError::Weights(format!("negative weight {}", e.weight)));
            }
            if rows.iter().any(|r: &QueryEntry| r.queries == e.queries) {
                return Err(GameError::Shape(format!("duplicate query row {:?}", e.queries)));
            }
            total += e.weight;
            if !e.weight.is_zero() {
                rows.push(e);
            }
        }
        if total != Weight::one() {
            return Err(GameError::Weights(format!("weights sum to {total}, not 1")));
        }
        let denominator = rows
            .iter()
            .fold(1i128, |l, e| lcm(l, *e.weight.denom() as i128));
        let numerators = rows
            .iter()
            .map(|e| *e.weight.numer() as i128 * (denominator / *e.weight.denom() as i128))
            .collect();
        Ok(NonLocalGame {
            name: name.into(),
            query_bits,
            answer_bits,
            table: rows,
            numerators,
            denominator,
            predicate,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn k(&self) -> usize {
        self.query_bits.len()
    }

    pub fn query_bits(&self) -> &[usize] {
        &self.query_bits
    }

    pub fn answer_bits(&self) -> &[usize] {
        &self.answer_bits
    }

    /// Support of the query distribution (non-zero rows only).
    pub fn table(&self) -> &[QueryEntry] {
        &self.table
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn accepts(&self, queries: &[u64], answers: &[u64]) -> bool {
        (self.predicate)(queries, answers)
    }

    /// Weights as integers over the common denominator.
    pub(crate) fn integer_weights(&self) -> (&[i128], i128) {
        (&self.numerators, self.denominator)
    }

    /// Exact marginal distribution of player `i`'s query, sorted by value.
    pub fn marginal(&self, player: usize) -> Vec<(u64, Weight)> {
        let mut out: Vec<(u64, Weight)> = Vec::new();
        for e in &self.table {
            let q = e.queries[player];
            match out.iter_mut().find(|(v, _)| *v == q) {
                Some((_, w)) => *w += e.weight,
                None => out.push((q, e.weight)),
            }
        }
        out.sort_by_key(|(v, _)| *v);
        out
    }

    /// Support of player `i`'s marginal, sorted.
    pub fn support(&self, player: usize) -> Vec<u64> {
        self.marginal(player).into_iter().map(|(v, _)| v).collect()
    }

    /// Draw a query tuple exactly from the table.
    pub fn sample_queries<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let idx = sample_index(&self.numerators, self.denominator, rng);
        self.table[idx].queries.clone()
    }

    /// Acceptance probability of a deterministic answer rule, exact.
    pub fn value_of(&self, mut answer: impl FnMut(&[u64]) -> Vec<u64>) -> Weight {
        let mut num = 0i128;
        for (e, w) in self.table.iter().zip(&self.numerators) {
            if self.accepts(&e.queries, &answer(&e.queries)) {
                num += w;
            }
        }
        ratio(num, self.denominator)
    }

    /// Exact value of a tuple of local deterministic strategies.
    pub fn local_value(&self, players: &[&dyn Fn(u64) -> u64]) -> Weight {
        self.value_of(|q| q.iter().zip(players).map(|(qi, p)| p(*qi)).collect())
    }

    pub fn conditional(&self, player: usize, value: u64) -> Result<ConditionalQuerySampler> {
        ConditionalQuerySampler::new(self, player, value)
    }
}

/// Draw from `weights / total` with exact integer arithmetic.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[i128], total: i128, rng: &mut R) -> usize {
    debug_assert!(total > 0);
    let mut u = rng.gen_range(0..total as u128) as i128;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    unreachable!("weights sum to total")
}

pub(crate) fn ratio(num: i128, den: i128) -> Weight {
    let g = gcd(num.abs(), den);
    Weight::new((num / g) as i64, (den / g) as i64)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i128, b: i128) -> i128 {
    a / gcd(a, b) * b
}

/// The distribution `Q | q_i = value`: rows with the fixed query, renormalized.
#[derive(Clone, Debug)]
pub struct ConditionalQuerySampler {
    player: usize,
    value: u64,
    rows: Vec<Vec<u64>>,
    numerators: Vec<i128>,
    total: i128,
    marginal: Weight,
}

impl ConditionalQuerySampler {
    pub fn new(game: &NonLocalGame, player: usize, value: u64) -> Result<Self> {
        if player >= game.k() {
            return Err(GameError::Shape(format!("no player {player}")));
        }
        let (nums, den) = game.integer_weights();
        let mut rows = Vec::new();
        let mut numerators = Vec::new();
        for (e, w) in game.table().iter().zip(nums) {
            if e.queries[player] == value {
                rows.push(e.queries.clone());
                numerators.push(*w);
            }
        }
        let total: i128 = numerators.iter().sum();
        if total == 0 {
            return Err(GameError::ZeroProbability { player, value });
        }
        Ok(ConditionalQuerySampler {
            player,
            value,
            rows,
            numerators,
            total,
            marginal: ratio(total, den),
        })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// `Pr[q_i = value]`.
    pub fn marginal(&self) -> Weight {
        self.marginal
    }

    /// Rows of the conditional table with exact conditional weights.
    pub fn rows(&self) -> impl Iterator<Item = (&[u64], Weight)> + '_ {
        self.rows
            .iter()
            .zip(&self.numerators)
            .map(move |(r, w)| (r.as_slice(), ratio(*w, self.total)))
    }

    /// Draws a full query tuple whose entry for the fixed player equals the
    /// fixed value; the other entries follow the conditional distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        self.sample_row(rng).to_vec()
    }

    /// As [`sample`](Self::sample), borrowing the row.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> &[u64] {
        &self.rows[self.sample_position(rng)]
    }

    /// Position of a sampled row in [`rows`](Self::rows).
    pub fn sample_position<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.numerators, self.total, rng)
    }

    pub fn row(&self, position: usize) -> &[u64] {
        &self.rows[position]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{chsh_game, ghz3_game};
    use crate::rng::Seed;
    use proptest::prelude::*;

    fn point_mass() -> NonLocalGame {
        NonLocalGame::new(
            "point",
            vec![1, 1],
            vec![1, 1],
            vec![QueryEntry { queries: vec![1, 0], weight: Weight::one() }],
            Arc::new(|_, _| true),
        )
        .unwrap()
    }

    #[test]
    fn chsh_sampling_passes_chi_square() {
        let g = chsh_game();
        let mut rng = Seed::from_u64(11).rng();
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let q = g.sample_queries(&mut rng);
            counts[(q[0] << 1 | q[1]) as usize] += 1;
        }
        let expected = n as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn point_mass_always_sampled() {
        let g = point_mass();
        let mut rng = Seed::from_u64(3).rng();
        for _ in 0..100 {
            assert_eq!(g.sample_queries(&mut rng), vec![1, 0]);
        }
        let c = g.conditional(0, 1).unwrap();
        assert_eq!(c.sample(&mut rng), vec![1, 0]);
        assert!(matches!(g.conditional(0, 0), Err(GameError::ZeroProbability { player: 0, value: 0 })));
    }

    #[test]
    fn ghz_marginals_uniform() {
        let g = ghz3_game();
        let mut rng = Seed::from_u64(5).rng();
        let n = 100_000;
        let mut ones = [0usize; 3];
        for _ in 0..n {
            for (i, q) in g.sample_queries(&mut rng).iter().enumerate() {
                ones[i] += *q as usize;
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        for c in ones {
            assert!((c as f64 - n as f64 / 2.0).abs() < 4.0 * sigma, "{ones:?}");
        }
        for i in 0..3 {
            assert_eq!(g.marginal(i), vec![(0, Weight::new(1, 2)), (1, Weight::new(1, 2))]);
        }
    }

    #[test]
    fn conditional_frequencies_match_table() {
        let g = chsh_game();
        let c = g.conditional(0, 0).unwrap();
        assert_eq!(c.marginal(), Weight::new(1, 2));
        let total: Weight = c.rows().map(|(_, w)| w).sum();
        assert_eq!(total, Weight::one());
        let mut rng = Seed::from_u64(9).rng();
        let n = 100_000;
        let mut ones = 0usize;
        for _ in 0..n {
            let q = c.sample(&mut rng);
            assert_eq!(q[0], 0);
            ones += q[1] as usize;
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn invalid_tables_rejected() {
        let pred: Predicate = Arc::new(|_, _| true);
        let half = |q: Vec<u64>| QueryEntry { queries: q, weight: Weight::new(1, 2) };
        assert!(matches!(
            NonLocalGame::new("x", vec![1, 1], vec![1, 1], vec![half(vec![0, 0])], pred.clone()),
            Err(GameError::Weights(_))
        ));
        assert!(matches!(
            NonLocalGame::new("x", vec![1, 1], vec![1, 1], vec![half(vec![0, 0]), half(vec![0, 0])], pred.clone()),
            Err(GameError::Shape(_))
        ));
        assert!(matches!(
            NonLocalGame::new("x", vec![1, 1], vec![1, 1], vec![half(vec![0, 2]), half(vec![0, 0])], pred.clone()),
            Err(GameError::Shape(_))
        ));
        assert!(matches!(
            NonLocalGame::new("x", vec![1], vec![1, 1], vec![], pred),
            Err(GameError::Shape(_))
        ));
    }

    proptest! {
        #[test]
        fn sample_index_respects_support(weights in proptest::collection::vec(0i128..5, 1..8), seed in any::<u64>()) {
            let total: i128 = weights.iter().sum();
            prop_assume!(total > 0);
            let mut rng = Seed::from_u64(seed).rng();
            for _ in 0..20 {
                let i = sample_index(&weights, total, &mut rng);
                prop_assert!(weights[i] > 0);
            }
        }
    }
}
