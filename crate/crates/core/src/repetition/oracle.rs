use std::collections::HashMap;
use std::sync::RwLock;

use sha2::{Digest, Sha256};

use crate::rng::Seed;

/// A random function from framed byte strings to `out_bits`-bit values,
/// sampled lazily from the seed and memoized.
#[derive(Debug)]
pub struct RandomOracle {
    seed: Seed,
    out_bits: usize,
    table: RwLock<HashMap<Vec<u8>, u64>>,
}

impl RandomOracle {
    pub fn new(seed: Seed, out_bits: usize) -> Self {
        assert!((1..=64).contains(&out_bits), "oracle output width must be 1..=64 bits");
        RandomOracle {
            seed,
            out_bits,
            table: RwLock::new(HashMap::new()),
        }
    }

    pub fn out_bits(&self) -> usize {
        self.out_bits
    }

    /// Number of distinct inputs queried so far.
    pub fn len(&self) -> usize {
        self.table.read().expect("oracle lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `H(parts)`, with each part length-prefixed.
    pub fn query(&self, parts: &[&[u8]]) -> u64 {
        let mut frame = Vec::new();
        for p in parts {
            frame.extend_from_slice(&(p.len() as u64).to_le_bytes());
            frame.extend_from_slice(p);
        }
        if let Some(v) = self.table.read().expect("oracle lock").get(&frame) {
            return *v;
        }
        let mut h = Sha256::new();
        h.update(self.seed.as_bytes());
        h.update(&frame);
        let digest = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        let mut v = u64::from_le_bytes(bytes);
        if self.out_bits < 64 {
            v &= (1u64 << self.out_bits) - 1;
        }
        *self.table.write().expect("oracle lock").entry(frame).or_insert(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_and_framed() {
        let h = RandomOracle::new(Seed::from_u64(1), 8);
        assert_eq!(h.query(&[b"ab", b"c"]), h.query(&[b"ab", b"c"]));
        assert_eq!(h.len(), 1);
        // same concatenation, different framing
        let a: Vec<u64> = (0..32u8).map(|i| h.query(&[&[i], b"bc"])).collect();
        let b: Vec<u64> = (0..32u8).map(|i| h.query(&[&[i, b'b'], b"c"])).collect();
        assert_ne!(a, b);
        assert!(a.iter().all(|v| *v < 256));
    }

    #[test]
    fn outputs_look_uniform() {
        let h = RandomOracle::new(Seed::from_u64(2), 1);
        let n = 20_000u64;
        let ones: u64 = (0..n).map(|i| h.query(&[&i.to_le_bytes()])).sum();
        let p = ones as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        let other = RandomOracle::new(Seed::from_u64(3), 1);
        let agree = (0..n).filter(|i| h.query(&[&i.to_le_bytes()]) == other.query(&[&i.to_le_bytes()])).count();
        assert!((agree as f64 / n as f64 - 0.5).abs() < 0.02);
    }
}
