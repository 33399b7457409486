use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compiler::{
    check_answer, CompiledProtocol, ProtocolError, Prover, ProverMessage, Result as ProtocolResult, VerifierMessage,
};
use crate::games::{NonLocalGame, Weight};
use crate::qhe::{ClassicalAnswer, EncryptedBits, EvalKey, KeyId, SecretKey};
use crate::rng::{Seed, SimRng};
use crate::stats::RateEstimate;

use super::oracle::RandomOracle;
use super::{RepetitionError, Result};

/// Two-message protocol: the verifier sends the encrypted first query, the
/// prover answers it, derives the second query from the oracle and answers
/// that too.
#[derive(Clone, Debug)]
pub struct FsProtocol {
    pub base: CompiledProtocol,
    pub oracle: Arc<RandomOracle>,
}

/// The prover's single message; `q2` echoes the derived challenge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsProof {
    pub answer: ClassicalAnswer,
    pub q2: u64,
    pub a2: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FsTranscript {
    pub q1: u64,
    pub key: KeyId,
    pub setup: EncryptedBits,
    pub proof: Option<FsProof>,
    /// Challenge recomputed by the verifier.
    pub q2: Option<u64>,
    /// Decrypted `a_1` and plain `a_2`.
    pub answers: Option<[u64; 2]>,
    pub messages: usize,
    pub accept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn check_public_coin(game: &NonLocalGame) -> Result<()> {
    if game.k() != 2 {
        return Err(RepetitionError::NotPublicCoin(format!("{} players", game.k())));
    }
    let width = game.query_bits()[1];
    let mut joint: BTreeMap<(u64, u64), Weight> = BTreeMap::new();
    for e in game.table() {
        *joint.entry((e.queries[0], e.queries[1])).or_insert_with(Weight::zero) += e.weight;
    }
    let each = Weight::new(1, 1i64 << width);
    for (q1, m) in game.marginal(0) {
        for q2 in 0..1u64 << width {
            let p = joint.get(&(q1, q2)).copied().unwrap_or_else(Weight::zero);
            if p != m * each {
                return Err(RepetitionError::NotPublicCoin(format!(
                    "Pr[q1 = {q1}, q2 = {q2}] = {p}, expected {}",
                    m * each
                )));
            }
        }
    }
    Ok(())
}

pub fn fiat_shamir_compile(protocol: CompiledProtocol, oracle: Arc<RandomOracle>) -> Result<FsProtocol> {
    check_public_coin(protocol.game())?;
    if oracle.out_bits() < protocol.game().query_bits()[1] {
        return Err(RepetitionError::Parameter(format!(
            "oracle outputs {} bits, second query has {}",
            oracle.out_bits(),
            protocol.game().query_bits()[1]
        )));
    }
    Ok(FsProtocol {
        base: protocol,
        oracle,
    })
}

impl FsProtocol {
    /// `q_2 = H(ct_1 || answer)` truncated to the query width.
    pub fn challenge(&self, ct: &EncryptedBits, answer: &ClassicalAnswer) -> u64 {
        let a = serde_json::to_vec(ct).expect("serializable");
        let b = serde_json::to_vec(answer).expect("serializable");
        let w = self.base.game().query_bits()[1];
        self.oracle.query(&[b"fs-challenge", &a, &b]) & ((1u64 << w) - 1)
    }
}

/// Runs an interactive prover non-interactively: its second-round input is
/// the oracle's challenge on the transcript so far.
pub fn fs_prove(fs: &FsProtocol, prover: &mut dyn Prover, ct: &EncryptedBits, key: &EvalKey) -> ProtocolResult<FsProof> {
    let first = prover.respond(&VerifierMessage::Encrypted {
        player: 0,
        query: ct.clone(),
        key: key.clone(),
    })?;
    let ProverMessage::Encrypted { answer } = first else {
        return Err(ProtocolError::Malformed("first answer must be encrypted".into()));
    };
    let q2 = fs.challenge(ct, &answer);
    let second = prover.respond(&VerifierMessage::Plain { player: 1, query: q2 })?;
    let ProverMessage::Plain { answer: a2 } = second else {
        return Err(ProtocolError::Malformed("second answer must be plain".into()));
    };
    Ok(FsProof { answer, q2, a2 })
}

pub fn run_fs(fs: &FsProtocol, prover: &mut dyn Prover, rng: &mut SimRng) -> FsTranscript {
    let base = &fs.base;
    let game = base.game();
    let marginal: Vec<(u64, Weight)> = game.marginal(0);
    let (nums, den): (Vec<i128>, i128) = {
        let den = marginal.iter().fold(1i128, |d, (_, w)| lcm(d, *w.denom() as i128));
        (
            marginal.iter().map(|(_, w)| *w.numer() as i128 * (den / *w.denom() as i128)).collect(),
            den,
        )
    };
    let q1 = marginal[pick(&nums, den, rng)].0;
    let sk = SecretKey::gen(base.lambda(), base.mode(), rng).expect("lambda checked at compile time");
    let setup = sk.encrypt_bits(q1, game.query_bits()[0], rng);
    let mut t = FsTranscript {
        q1,
        key: sk.key_id(),
        setup: setup.clone(),
        proof: None,
        q2: None,
        answers: None,
        messages: 2,
        accept: false,
        error: None,
    };
    let proof = match fs_prove(fs, prover, &setup, &sk.eval_key()) {
        Ok(p) => p,
        Err(e) => {
            t.error = Some(e.to_string());
            return t;
        }
    };
    let q2 = fs.challenge(&setup, &proof.answer);
    t.q2 = Some(q2);
    t.proof = Some(proof.clone());
    if proof.q2 != q2 {
        t.error = Some(format!("challenge echo {} differs from {q2}", proof.q2));
        return t;
    }
    let a1 = check_answer(base, Some(&sk), 0, &ProverMessage::Encrypted { answer: proof.answer });
    let a2 = check_answer(base, None, 1, &ProverMessage::Plain { answer: proof.a2 });
    match (a1, a2) {
        (Ok(a1), Ok(a2)) => {
            t.answers = Some([a1, a2]);
            t.accept = game.accepts(&[q1, q2], &[a1, a2]);
        }
        (Err(e), _) | (_, Err(e)) => t.error = Some(e.to_string()),
    }
    t
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i128, b: i128) -> i128 {
    a / gcd(a, b) * b
}

fn pick(weights: &[i128], total: i128, rng: &mut SimRng) -> usize {
    use rand::Rng;
    let mut u = rng.gen_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

pub fn estimate_fs_value(fs: &FsProtocol, prover: &dyn Prover, trials: u64, seed: Seed) -> RateEstimate {
    let wins: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut p = prover.box_clone();
            p.reseed(seed.fork_index("prover", i));
            p.reset();
            let mut rng = seed.fork_index("verifier", i).rng();
            run_fs(fs, p.as_mut(), &mut rng).accept as u64
        })
        .sum();
    RateEstimate::new(wins, trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, BestLocalProver, HonestQuantumProver};
    use crate::games::{builtin_game, chsh_game, BuiltinGame, QueryEntry};
    use std::f64::consts::PI;

    fn oracle(bits: usize) -> Arc<RandomOracle> {
        Arc::new(RandomOracle::new(Seed::from_u64(99), bits))
    }

    #[test]
    fn correlated_second_query_is_refused() {
        let g = NonLocalGame::new(
            "diag",
            vec![1, 1],
            vec![1, 1],
            vec![
                QueryEntry { queries: vec![0, 0], weight: Weight::new(1, 2) },
                QueryEntry { queries: vec![1, 1], weight: Weight::new(1, 2) },
            ],
            Arc::new(|_, _| true),
        )
        .unwrap();
        assert!(matches!(
            fiat_shamir_compile(compile(g, 8).unwrap(), oracle(1)),
            Err(RepetitionError::NotPublicCoin(_))
        ));
        let ghz = compile(crate::games::ghz3_game(), 8).unwrap();
        assert!(fiat_shamir_compile(ghz, oracle(1)).is_err());
    }

    #[test]
    fn challenge_is_deterministic() {
        let fs = fiat_shamir_compile(compile(chsh_game(), 8).unwrap(), oracle(1)).unwrap();
        let mut rng = Seed::from_u64(1).rng();
        let sk = SecretKey::gen(8, Default::default(), &mut rng).unwrap();
        let ct = sk.encrypt_bits(1, 1, &mut rng);
        let ans = ClassicalAnswer { bits: vec![true], pads: vec![sk.eval_key().encrypt(false)] };
        assert_eq!(fs.challenge(&ct, &ans), fs.challenge(&ct, &ans));
    }

    #[test]
    fn transcripts_replay_under_the_interactive_verifier() {
        let g = chsh_game();
        let fs = fiat_shamir_compile(compile(g.clone(), 8).unwrap(), oracle(1)).unwrap();
        let mut p = BestLocalProver::optimal(&g).unwrap();
        let mut rng = Seed::from_u64(2).rng();
        for _ in 0..200 {
            let t = run_fs(&fs, &mut p, &mut rng);
            assert_eq!(t.messages, 2);
            assert!(t.error.is_none());
            let [a1, a2] = t.answers.unwrap();
            assert_eq!(t.accept, g.accepts(&[t.q1, t.q2.unwrap()], &[a1, a2]));
        }
    }

    #[test]
    fn honest_fs_value_near_interactive() {
        let (g, s) = builtin_game(BuiltinGame::Chsh);
        let fs = fiat_shamir_compile(compile(g.clone(), 8).unwrap(), oracle(1)).unwrap();
        let p = HonestQuantumProver::new(&g, s, Default::default()).unwrap();
        let r = estimate_fs_value(&fs, &p, 4000, Seed::from_u64(3));
        let v = (PI / 8.0).cos().powi(2);
        assert!((r.rate - v).abs() < 4.0 * r.sigma_at(v), "{}", r.rate);
    }
}
