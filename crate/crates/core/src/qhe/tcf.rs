use rand::seq::SliceRandom;
use rand::Rng;

use super::classical::KeyId;

/// Functionally correct, insecure claw-free pair over `{0,1} x {0,1}^rho`.
///
/// A domain point is packed as `mu | r << 1`. With a random permutation `pi`,
/// `f0(x) = pi(x)` and `f1(x) = pi(x xor s)`, so the two preimages of any
/// image differ exactly in `mu` when `s = 1`.
#[derive(Clone, Debug)]
pub struct ToyTcf {
    s: bool,
    rho: usize,
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl ToyTcf {
    pub fn sample<R: Rng + ?Sized>(s: bool, rho: usize, rng: &mut R) -> ToyTcf {
        let n = 1usize << (1 + rho);
        let mut forward: Vec<u32> = (0..n as u32).collect();
        forward.shuffle(rng);
        let mut inverse = vec![0u32; n];
        for (x, y) in forward.iter().enumerate() {
            inverse[*y as usize] = x as u32;
        }
        ToyTcf {
            s,
            rho,
            forward,
            inverse,
        }
    }

    pub fn s(&self) -> bool {
        self.s
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    /// Domain (and image) size `2^(1+rho)`.
    pub fn size(&self) -> usize {
        self.forward.len()
    }

    pub fn eval(&self, a: bool, x: usize) -> usize {
        let shift = (a & self.s) as usize;
        self.forward[x ^ shift] as usize
    }

    /// The claw `(x0, x1)` with `f0(x0) = f1(x1) = y`.
    pub fn invert(&self, y: usize) -> (usize, usize) {
        let x0 = self.inverse[y] as usize;
        (x0, x0 ^ self.s as usize)
    }
}

/// Public description of a derived pair: evaluation tables only.
#[derive(Clone, Debug)]
pub struct TcfDescription {
    id: u128,
    key_id: KeyId,
    rho: usize,
    tables: [Vec<u32>; 2],
}

impl TcfDescription {
    pub(crate) fn new(id: u128, key_id: KeyId, tcf: &ToyTcf) -> Self {
        let table = |a: bool| (0..tcf.size()).map(|x| tcf.eval(a, x) as u32).collect();
        TcfDescription {
            id,
            key_id,
            rho: tcf.rho,
            tables: [table(false), table(true)],
        }
    }

    pub fn id(&self) -> u128 {
        self.id
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    /// Width of the domain register, `1 + rho`.
    pub fn width(&self) -> usize {
        1 + self.rho
    }

    pub fn eval(&self, a: bool, x: usize) -> usize {
        self.tables[a as usize][x] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qhe::{QheMode, SecretKey};
    use crate::rng::Seed;

    #[test]
    fn both_branches_are_permutations() {
        let mut rng = Seed::from_u64(1).rng();
        for rho in 0..5 {
            for s in [false, true] {
                let t = ToyTcf::sample(s, rho, &mut rng);
                for a in [false, true] {
                    let mut img: Vec<usize> = (0..t.size()).map(|x| t.eval(a, x)).collect();
                    img.sort_unstable();
                    assert_eq!(img, (0..t.size()).collect::<Vec<_>>());
                }
            }
        }
    }

    #[test]
    fn claw_relation_on_random_images() {
        let mut rng = Seed::from_u64(2).rng();
        for _ in 0..1000 {
            let s: bool = rng.gen();
            let t = ToyTcf::sample(s, 2, &mut rng);
            let y = rng.gen_range(0..t.size());
            let (x0, x1) = t.invert(y);
            assert_eq!(t.eval(false, x0), y);
            assert_eq!(t.eval(true, x1), y);
            assert_eq!((x0 ^ x1) & 1 == 1, s);
            assert_eq!(x0 >> 1, x1 >> 1);
        }
    }

    #[test]
    fn escrowed_trapdoor_matches_description() {
        let mut rng = Seed::from_u64(3).rng();
        let sk = SecretKey::gen(8, QheMode::Ideal, &mut rng).unwrap();
        let ek = sk.eval_key();
        for bit in [false, true] {
            let desc = ek.derive_tcf(&sk.encrypt(bit), 3).unwrap();
            let td = sk.tcf_trapdoor(&desc).unwrap();
            assert_eq!(td.s(), bit);
            for x in 0..td.size() {
                assert_eq!(desc.eval(true, x), td.eval(true, x));
            }
        }
    }
}
