use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rng::SimRng;

use super::tcf::{TcfDescription, ToyTcf};
use super::{QheError, Result};

/// Opaque key identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyId(pub u64);

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for KeyId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KeyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(KeyId)
            .map_err(serde::de::Error::custom)
    }
}

/// Classical ciphertext: a handle into the issuing key's escrow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClassicalCt {
    pub key_id: KeyId,
    pub handle: u128,
}

#[derive(Serialize, Deserialize)]
struct CtWire {
    key: KeyId,
    handle: String,
}

impl Serialize for ClassicalCt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CtWire {
            key: self.key_id,
            handle: format!("{:032x}", self.handle),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassicalCt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = CtWire::deserialize(d)?;
        let handle = u128::from_str_radix(&w.handle, 16).map_err(serde::de::Error::custom)?;
        Ok(ClassicalCt {
            key_id: w.key,
            handle,
        })
    }
}

/// How handles relate to plaintexts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QheMode {
    /// Handles are uniformly random and independent of the plaintext.
    #[default]
    Ideal,
    /// The plaintext is the low bit of every handle. Insecure on purpose.
    Leaky,
}

impl std::str::FromStr for QheMode {
    type Err = QheError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(QheMode::Ideal),
            "leaky" => Ok(QheMode::Leaky),
            other => Err(QheError::Precondition(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug)]
struct EscrowInner {
    bits: HashMap<u128, bool>,
    tcfs: HashMap<u128, ToyTcf>,
    registers: HashSet<String>,
    rng: SimRng,
}

/// Plaintext table behind every handle issued under one key.
#[derive(Debug)]
struct Escrow {
    key_id: KeyId,
    mode: QheMode,
    inner: Mutex<EscrowInner>,
}

impl Escrow {
    fn lock(&self) -> MutexGuard<'_, EscrowInner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn check(&self, ct: &ClassicalCt) -> Result<()> {
        if ct.key_id != self.key_id {
            return Err(QheError::ForeignKey {
                expected: self.key_id,
                found: ct.key_id,
            });
        }
        Ok(())
    }

    fn lookup(&self, inner: &EscrowInner, ct: &ClassicalCt) -> Result<bool> {
        self.check(ct)?;
        inner
            .bits
            .get(&ct.handle)
            .copied()
            .ok_or(QheError::UnknownHandle(ct.handle))
    }

    fn issue(&self, inner: &mut EscrowInner, bit: bool) -> ClassicalCt {
        loop {
            let r: u128 = inner.rng.gen();
            let handle = match self.mode {
                QheMode::Ideal => r,
                QheMode::Leaky => (r << 1) | bit as u128,
            };
            if let std::collections::hash_map::Entry::Vacant(e) = inner.bits.entry(handle) {
                e.insert(bit);
                return ClassicalCt {
                    key_id: self.key_id,
                    handle,
                };
            }
        }
    }
}

/// Secret key of the classical scheme. Decrypts handles and owns trapdoors.
#[derive(Clone, Debug)]
pub struct SecretKey {
    lambda: u32,
    escrow: Arc<Escrow>,
}

/// Public evaluation capability: encrypt, XOR and AND under one key, and
/// derive claw-free pairs from encrypted bits. Cannot decrypt.
#[derive(Clone, Debug)]
pub struct EvalKey {
    escrow: Arc<Escrow>,
}

impl SecretKey {
    pub fn gen<R: Rng + ?Sized>(lambda: u32, mode: QheMode, rng: &mut R) -> Result<SecretKey> {
        if lambda == 0 {
            return Err(QheError::Precondition("security parameter must be at least 1".into()));
        }
        let key_id = KeyId(rng.gen());
        let inner = EscrowInner {
            bits: HashMap::new(),
            tcfs: HashMap::new(),
            registers: HashSet::new(),
            rng: SimRng::from_seed(rng.gen()),
        };
        Ok(SecretKey {
            lambda,
            escrow: Arc::new(Escrow {
                key_id,
                mode,
                inner: Mutex::new(inner),
            }),
        })
    }

    pub fn key_id(&self) -> KeyId {
        self.escrow.key_id
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn mode(&self) -> QheMode {
        self.escrow.mode
    }

    pub fn eval_key(&self) -> EvalKey {
        EvalKey {
            escrow: self.escrow.clone(),
        }
    }

    pub fn encrypt(&self, bit: bool) -> ClassicalCt {
        let mut inner = self.escrow.lock();
        self.escrow.issue(&mut inner, bit)
    }

    pub fn decrypt(&self, ct: &ClassicalCt) -> Result<bool> {
        let inner = self.escrow.lock();
        self.escrow.lookup(&inner, ct)
    }

    /// Number of handles issued so far.
    pub fn escrow_len(&self) -> usize {
        self.escrow.lock().bits.len()
    }

    /// The trapdoor behind a claw-free pair derived under this key.
    pub fn tcf_trapdoor(&self, desc: &TcfDescription) -> Result<ToyTcf> {
        if desc.key_id() != self.key_id() {
            return Err(QheError::ForeignKey {
                expected: self.key_id(),
                found: desc.key_id(),
            });
        }
        self.escrow
            .lock()
            .tcfs
            .get(&desc.id())
            .cloned()
            .ok_or_else(|| QheError::Precondition("missing trapdoor".into()))
    }

    /// Records that `register` has been encrypted; errors on the second call.
    pub(crate) fn claim_register(&self, register: &str) -> Result<()> {
        if !self.escrow.lock().registers.insert(register.to_string()) {
            return Err(QheError::AlreadyEncrypted(register.to_string()));
        }
        Ok(())
    }
}

impl EvalKey {
    pub fn key_id(&self) -> KeyId {
        self.escrow.key_id
    }

    pub fn mode(&self) -> QheMode {
        self.escrow.mode
    }

    pub fn encrypt(&self, bit: bool) -> ClassicalCt {
        let mut inner = self.escrow.lock();
        self.escrow.issue(&mut inner, bit)
    }

    fn binary(&self, a: &ClassicalCt, b: &ClassicalCt, op: impl Fn(bool, bool) -> bool) -> Result<ClassicalCt> {
        let mut inner = self.escrow.lock();
        let va = self.escrow.lookup(&inner, a)?;
        let vb = self.escrow.lookup(&inner, b)?;
        Ok(self.escrow.issue(&mut inner, op(va, vb)))
    }

    pub fn xor(&self, a: &ClassicalCt, b: &ClassicalCt) -> Result<ClassicalCt> {
        self.binary(a, b, |x, y| x ^ y)
    }

    pub fn and(&self, a: &ClassicalCt, b: &ClassicalCt) -> Result<ClassicalCt> {
        self.binary(a, b, |x, y| x & y)
    }

    /// `a xor (b and c)`.
    pub fn xor_and(&self, a: &ClassicalCt, b: &ClassicalCt, c: &ClassicalCt) -> Result<ClassicalCt> {
        let mut inner = self.escrow.lock();
        let v = self.escrow.lookup(&inner, a)?
            ^ (self.escrow.lookup(&inner, b)? & self.escrow.lookup(&inner, c)?);
        Ok(self.escrow.issue(&mut inner, v))
    }

    /// Fails unless `ct` is a live handle under this key.
    pub fn validate(&self, ct: &ClassicalCt) -> Result<()> {
        let inner = self.escrow.lock();
        self.escrow.lookup(&inner, ct).map(|_| ())
    }

    /// Classically derive a claw-free pair whose claws encode the bit under
    /// `s`. The trapdoor stays in escrow.
    pub fn derive_tcf(&self, s: &ClassicalCt, rho: usize) -> Result<TcfDescription> {
        let mut inner = self.escrow.lock();
        let bit = self.escrow.lookup(&inner, s)?;
        let tcf = ToyTcf::sample(bit, rho, &mut inner.rng);
        let id: u128 = inner.rng.gen();
        let desc = TcfDescription::new(id, self.escrow.key_id, &tcf);
        inner.tcfs.insert(id, tcf);
        Ok(desc)
    }

    /// Homomorphic trapdoor step: from the measured image `y` and the
    /// Hadamard-basis outcome `d`, encryptions of `d·(x0 xor x1)` and `mu0`.
    pub fn claw_correction(&self, desc: &TcfDescription, y: usize, d: usize) -> Result<(ClassicalCt, ClassicalCt)> {
        if desc.key_id() != self.escrow.key_id {
            return Err(QheError::ForeignKey {
                expected: self.escrow.key_id,
                found: desc.key_id(),
            });
        }
        let mut inner = self.escrow.lock();
        let tcf = inner
            .tcfs
            .get(&desc.id())
            .ok_or_else(|| QheError::Precondition("missing trapdoor".into()))?;
        let (x0, x1) = tcf.invert(y);
        let z = (d & (x0 ^ x1)).count_ones() % 2 == 1;
        let mu0 = x0 & 1 == 1;
        let zc = self.escrow.issue(&mut inner, z);
        let xc = self.escrow.issue(&mut inner, mu0);
        Ok((zc, xc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use proptest::prelude::{any, prop_assert_eq, proptest};

    fn key(seed: u64, mode: QheMode) -> SecretKey {
        SecretKey::gen(8, mode, &mut Seed::from_u64(seed).rng()).unwrap()
    }

    #[test]
    fn roundtrip_and_distinct_keys() {
        let mut rng = Seed::from_u64(1).rng();
        let a = SecretKey::gen(8, QheMode::Ideal, &mut rng).unwrap();
        let b = SecretKey::gen(8, QheMode::Ideal, &mut rng).unwrap();
        assert_ne!(a.key_id(), b.key_id());
        for bit in [false, true] {
            assert_eq!(a.decrypt(&a.encrypt(bit)).unwrap(), bit);
        }
        assert!(SecretKey::gen(0, QheMode::Ideal, &mut rng).is_err());
    }

    #[test]
    fn foreign_and_unknown_handles_rejected() {
        let a = key(1, QheMode::Ideal);
        let b = key(2, QheMode::Ideal);
        let ct = a.encrypt(true);
        assert!(matches!(b.decrypt(&ct), Err(QheError::ForeignKey { .. })));
        let forged = ClassicalCt { key_id: a.key_id(), handle: ct.handle ^ 1 };
        assert!(matches!(a.decrypt(&forged), Err(QheError::UnknownHandle(_))));
        assert!(b.eval_key().xor(&ct, &b.encrypt(false)).is_err());
    }

    #[test]
    fn handles_across_keys_never_collide() {
        let mut rng = Seed::from_u64(4).rng();
        let mut seen = HashSet::new();
        for _ in 0..1000 {
            let k = SecretKey::gen(8, QheMode::Ideal, &mut rng).unwrap();
            for _ in 0..100 {
                assert!(seen.insert(k.encrypt(rng.gen()).handle));
            }
        }
    }

    #[test]
    fn xor_of_equal_bits_is_zero() {
        let k = key(3, QheMode::Ideal);
        let ek = k.eval_key();
        let one = ek.encrypt(true);
        assert!(!k.decrypt(&ek.xor(&one, &k.encrypt(true)).unwrap()).unwrap());
    }

    #[test]
    fn pad_polynomial_matches_plain_bits() {
        let k = key(5, QheMode::Ideal);
        let ek = k.eval_key();
        let mut rng = Seed::from_u64(6).rng();
        for _ in 0..10_000 {
            let (x1, x2, x3): (bool, bool, bool) = rng.gen();
            let c = ek
                .xor_and(&ek.encrypt(x3), &ek.encrypt(x1), &ek.encrypt(x2))
                .unwrap();
            let via_ops = ek
                .xor(&ek.and(&ek.encrypt(x1), &ek.encrypt(x2)).unwrap(), &ek.encrypt(x3))
                .unwrap();
            assert_eq!(k.decrypt(&c).unwrap(), (x1 & x2) ^ x3);
            assert_eq!(k.decrypt(&via_ops).unwrap(), (x1 & x2) ^ x3);
        }
    }

    #[test]
    fn leaky_mode_exposes_low_bit() {
        let k = key(7, QheMode::Leaky);
        for bit in [false, true, true, false] {
            assert_eq!(k.encrypt(bit).handle & 1 == 1, bit);
        }
    }

    #[test]
    fn serde_uses_hex() {
        let k = key(8, QheMode::Ideal);
        let ct = k.encrypt(true);
        let s = serde_json::to_string(&ct).unwrap();
        assert!(s.contains(&format!("{:032x}", ct.handle)));
        let back: ClassicalCt = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ct);
    }

    proptest! {
        #[test]
        fn decrypt_inverts_encrypt(seed in any::<u64>(), bits in proptest::collection::vec(any::<bool>(), 1..32)) {
            let k = key(seed, QheMode::Ideal);
            for b in bits {
                prop_assert_eq!(k.decrypt(&k.encrypt(b)).unwrap(), b);
            }
        }
    }
}
