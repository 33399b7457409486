use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compiler::{CompiledProtocol, Prover};
use crate::qhe::{QheMode, SecretKey};
use crate::rng::Seed;
use crate::stats::{Interval, RateEstimate};

use super::estimator::build_estimator_f;
use super::prefix::{build_p2, prefix_from_ciphertext};
use super::{check_epsilon, Result, SoundnessError, DEFAULT_SOUNDNESS_GUARD};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub mode: QheMode,
    pub epsilon: f64,
    pub trials: u64,
    pub correct: u64,
    /// `Pr[guess = b*] - 1/2`
    pub advantage: f64,
    pub sigma: f64,
    pub interval95: Interval,
    /// only the execution on `q_{1,b*}` wins
    pub e_good: u64,
    /// only the other execution wins
    pub e_bad: u64,
    /// both win
    pub e_both: u64,
    pub neither: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Event {
    Good,
    Bad,
    Both,
    Neither,
}

/// Distinguishes encryptions of two sampled first queries using the
/// extracted `(F, P*_2)`: guesses the execution that wins when exactly one
/// does, otherwise a coin.
pub fn adversary_distinguish(
    protocol: &CompiledProtocol,
    prover: &dyn Prover,
    epsilon: f64,
    trials: u64,
    seed: Seed,
) -> Result<AdversaryReport> {
    check_epsilon(epsilon)?;
    if protocol.k() != 2 {
        return Err(SoundnessError::NotTwoPlayer(protocol.k()));
    }
    if trials == 0 {
        return Err(SoundnessError::NoTrials);
    }
    let game = protocol.game();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.fork_index("adversary", i).rng();
            let q = [game.sample_queries(&mut rng), game.sample_queries(&mut rng)];
            let b_star = rng.gen_range(0..2usize);
            let sk = SecretKey::gen(protocol.lambda(), protocol.mode(), &mut rng)?;
            let ct = sk.encrypt_bits(q[b_star][0], game.query_bits()[0], &mut rng);
            let prefix = prefix_from_ciphertext(protocol, prover, &sk, ct, 1)?;
            let p2 = build_p2(protocol, &prefix)?;
            let f = build_estimator_f(game, &p2, protocol.lambda(), epsilon, DEFAULT_SOUNDNESS_GUARD, &mut rng)?;
            let wins: Vec<bool> = q
                .iter()
                .map(|qb| {
                    let a1 = f.answer(qb[0]).unwrap_or(0);
                    let a2 = p2.get(&qb[1]).copied().unwrap_or(0);
                    game.accepts(qb, &[a1, a2])
                })
                .collect();
            let guess = match (wins[0], wins[1]) {
                (true, false) => 0,
                (false, true) => 1,
                _ => rng.gen_range(0..2usize),
            };
            let event = match (wins[b_star], wins[1 - b_star]) {
                (true, false) => Event::Good,
                (false, true) => Event::Bad,
                (true, true) => Event::Both,
                (false, false) => Event::Neither,
            };
            Ok((guess == b_star, event))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |e: Event| outcomes.iter().filter(|(_, x)| *x == e).count() as u64;
    let correct = outcomes.iter().filter(|(c, _)| *c).count() as u64;
    let rate = RateEstimate::new(correct, trials);
    Ok(AdversaryReport {
        mode: protocol.mode(),
        epsilon,
        trials,
        correct,
        advantage: rate.rate - 0.5,
        sigma: rate.sigma_at(0.5),
        interval95: Interval {
            lo: rate.interval95.lo - 0.5,
            hi: rate.interval95.hi - 0.5,
        },
        e_good: count(Event::Good),
        e_bad: count(Event::Bad),
        e_both: count(Event::Both),
        neither: count(Event::Neither),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, BestLocalProver, DecryptingProver};
    use crate::games::{chsh_game, NonLocalGame, QueryEntry, Weight};
    use std::sync::Arc;

    #[test]
    fn ideal_mode_has_no_advantage() {
        let g = chsh_game();
        let proto = compile(g.clone(), 8).unwrap();
        for p in [
            Box::new(DecryptingProver::new(proto.game_arc())) as Box<dyn Prover>,
            Box::new(BestLocalProver::optimal(&g).unwrap()),
        ] {
            let r = adversary_distinguish(&proto, p.as_ref(), 0.3, 2000, Seed::from_u64(1)).unwrap();
            assert!(r.advantage.abs() <= 3.0 * r.sigma, "{r:?}");
            assert_eq!(r.e_good + r.e_bad + r.e_both + r.neither, 2000);
        }
    }

    #[test]
    fn leaky_mode_is_distinguished() {
        let proto = compile(chsh_game(), 8).unwrap().with_mode(QheMode::Leaky);
        let p = DecryptingProver::new(proto.game_arc());
        let r = adversary_distinguish(&proto, &p, 0.3, 2000, Seed::from_u64(2)).unwrap();
        assert!(r.advantage >= 0.05, "{r:?}");
        assert!(r.e_good > r.e_bad);
    }

    #[test]
    fn single_query_game_has_no_advantage() {
        let g = NonLocalGame::new(
            "single",
            vec![1, 1],
            vec![1, 1],
            vec![QueryEntry { queries: vec![1, 1], weight: Weight::from_integer(1) }],
            Arc::new(|_, a| a[0] == a[1]),
        )
        .unwrap();
        let proto = compile(g, 8).unwrap().with_mode(QheMode::Leaky);
        let p = DecryptingProver::new(proto.game_arc());
        let r = adversary_distinguish(&proto, &p, 0.3, 2000, Seed::from_u64(3)).unwrap();
        assert_eq!(r.e_good + r.e_bad, 0);
        assert!(r.advantage.abs() <= 3.0 * r.sigma);
    }
}
