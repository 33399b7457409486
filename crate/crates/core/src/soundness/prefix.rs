use rand::Rng;

use crate::compiler::{check_answer, CompiledProtocol, Prover, ProverMessage, VerifierMessage};
use crate::games::AnswerTable;
use crate::qhe::{EncryptedBits, SecretKey};

use super::{Result, SoundnessError};

/// A prover after answering a fixed sequence of encrypted queries.
pub struct Emulator {
    state: Box<dyn Prover>,
    depth: usize,
}

impl Clone for Emulator {
    fn clone(&self) -> Self {
        Emulator {
            state: self.state.box_clone(),
            depth: self.depth,
        }
    }
}

impl std::fmt::Debug for Emulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Emulator")
            .field("prover", &self.state.name())
            .field("depth", &self.depth)
            .finish()
    }
}

impl Emulator {
    pub fn fresh(prover: &dyn Prover) -> Self {
        let mut state = prover.box_clone();
        state.reset();
        Emulator { state, depth: 0 }
    }

    /// Number of rounds answered so far.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Feeds the next encrypted query. Returns the raw response and its
    /// decryption; both are `None` for a failed or malformed response.
    pub fn extend(
        &mut self,
        protocol: &CompiledProtocol,
        key: &SecretKey,
        query: &EncryptedBits,
    ) -> (Option<ProverMessage>, Option<u64>) {
        let msg = VerifierMessage::Encrypted {
            player: self.depth,
            query: query.clone(),
            key: key.eval_key(),
        };
        let player = self.depth;
        self.depth += 1;
        match self.state.respond(&msg) {
            Ok(m) => {
                let a = check_answer(protocol, Some(key), player, &m).ok();
                (Some(m), a)
            }
            Err(_) => (None, None),
        }
    }

    /// The last-round answer on `query`, when this emulator sits just
    /// before the plain round.
    pub fn last_answer(&self, protocol: &CompiledProtocol, query: u64) -> Option<u64> {
        let player = protocol.k() - 1;
        debug_assert_eq!(self.depth, player);
        let mut st = self.state.box_clone();
        let m = st.respond(&VerifierMessage::Plain { player, query }).ok()?;
        check_answer(protocol, None, player, &m).ok()
    }

    /// Runs the remaining rounds on `queries` (a full tuple; entries before
    /// the depth are ignored) with fresh keys, returning the decrypted
    /// answers of players `depth..k`, or `None` if any is malformed.
    pub fn tail<R: Rng + ?Sized>(&self, protocol: &CompiledProtocol, queries: &[u64], rng: &mut R) -> Option<Vec<u64>> {
        let k = protocol.k();
        let game = protocol.game();
        let mut st = self.clone();
        let mut out = Vec::with_capacity(k - self.depth);
        while st.depth + 1 < k {
            let i = st.depth;
            let key = SecretKey::gen(protocol.lambda(), protocol.mode(), rng).ok()?;
            let ct = key.encrypt_bits(queries[i], game.query_bits()[i], rng);
            out.push(st.extend(protocol, &key, &ct).1?);
        }
        out.push(st.last_answer(protocol, queries[k - 1])?);
        Some(out)
    }
}

/// The dummy first query, its encryption and the prover's fixed response.
#[derive(Clone, Debug)]
pub struct FixedPrefix {
    pub dummy: u64,
    pub key: SecretKey,
    pub ct1: EncryptedBits,
    pub ct2: Option<ProverMessage>,
    /// Decryption of `ct2`; `None` if malformed.
    pub a1: Option<u64>,
    pub emulator: Emulator,
}

fn require_two_players(protocol: &CompiledProtocol) -> Result<()> {
    match protocol.k() {
        2 => Ok(()),
        k => Err(SoundnessError::NotTwoPlayer(k)),
    }
}

/// Fixes the first message to an encryption of the all-zero query and
/// records the prover's answer, after checking `replays` replays agree.
pub fn fix_prefix<R: Rng + ?Sized>(
    protocol: &CompiledProtocol,
    prover: &dyn Prover,
    replays: usize,
    rng: &mut R,
) -> Result<FixedPrefix> {
    require_two_players(protocol)?;
    let key = SecretKey::gen(protocol.lambda(), protocol.mode(), rng)?;
    let ct1 = key.encrypt_bits(0, protocol.game().query_bits()[0], rng);
    prefix_from_ciphertext(protocol, prover, &key, ct1, replays)
}

/// As [`fix_prefix`] with a given first ciphertext.
pub fn prefix_from_ciphertext(
    protocol: &CompiledProtocol,
    prover: &dyn Prover,
    key: &SecretKey,
    ct1: EncryptedBits,
    replays: usize,
) -> Result<FixedPrefix> {
    require_two_players(protocol)?;
    if !prover.is_deterministic() {
        return Err(SoundnessError::Nondeterministic(format!(
            "prover `{}` has no fixed coins",
            prover.name()
        )));
    }
    let dummy = key.decrypt_bits(&ct1)?;
    let mut emulator = Emulator::fresh(prover);
    let (ct2, a1) = emulator.extend(protocol, key, &ct1);
    if replays > 1 {
        let support = protocol.game().support(1);
        let reference: Vec<Option<u64>> = support.iter().map(|q| emulator.last_answer(protocol, *q)).collect();
        for r in 1..replays {
            let mut again = Emulator::fresh(prover);
            let (_, b1) = again.extend(protocol, key, &ct1);
            let tail: Vec<Option<u64>> = support.iter().map(|q| again.last_answer(protocol, *q)).collect();
            if b1 != a1 || tail != reference {
                return Err(SoundnessError::Nondeterministic(format!(
                    "replay {r} of prover `{}` differs",
                    prover.name()
                )));
            }
        }
    }
    Ok(FixedPrefix {
        dummy,
        key: key.clone(),
        ct1,
        ct2,
        a1,
        emulator,
    })
}

/// `P*_2`: the prover's last answer after the fixed prefix, tabulated over
/// the support of `q_2`. Malformed answers are replaced by 0.
pub fn build_p2(protocol: &CompiledProtocol, prefix: &FixedPrefix) -> Result<AnswerTable> {
    require_two_players(protocol)?;
    Ok(protocol
        .game()
        .support(1)
        .into_iter()
        .map(|q| (q, prefix.emulator.last_answer(protocol, q).unwrap_or(0)))
        .collect())
}
