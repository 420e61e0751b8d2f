//! Random streams.
//!
//! Two flavours are used throughout the crate:
//!
//! * [`EntryStream`]: a counter-addressed stream of standard normal pairs.
//!   Draw number `k` is a pure function of `(seed, k)`, which lets lazily
//!   materialized matrices produce the same entries regardless of the order in
//!   which corners are requested.
//! * [`task_rng`]: an ordinary sequential generator for one task, keyed by a
//!   seed and a stream id. Haar sampling and Monte-Carlo averages take one of
//!   these by `&mut`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

/// 32-bit words consumed by one normal pair (two `u64` draws).
const WORDS_PER_PAIR: u128 = 4;

/// Sequential generator for stream `stream` under `seed`.
pub fn task_rng(seed: u64, stream: u64) -> TaskRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; used to fold names into seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Counter-addressed standard normal pairs.
#[derive(Clone, Debug)]
pub struct EntryStream {
    rng: ChaCha8Rng,
}

impl EntryStream {
    pub fn new(seed: u64) -> Self {
        EntryStream { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Position the stream so that the next pair is pair number `counter`.
    pub fn seek(&mut self, counter: u64) {
        self.rng.set_word_pos(u128::from(counter) * WORDS_PER_PAIR);
    }

    /// Next pair of independent standard normals (Box-Muller).
    pub fn next_pair(&mut self) -> (f64, f64) {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    pub fn pair_at(&mut self, counter: u64) -> (f64, f64) {
        self.seek(counter);
        self.next_pair()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_are_addressable_by_counter() {
        let mut seq = EntryStream::new(17);
        let sequential: Vec<_> = (0..50).map(|_| seq.next_pair()).collect();
        let mut random_access = EntryStream::new(17);
        for k in (0..50u64).rev() {
            assert_eq!(random_access.pair_at(k), sequential[k as usize]);
        }
    }

    #[test]
    fn normal_pairs_have_unit_variance() {
        let mut s = EntryStream::new(3);
        let n = 200_000;
        let (mut m, mut v) = (0.0, 0.0);
        for _ in 0..n {
            let (a, b) = s.next_pair();
            m += a + b;
            v += a * a + b * b;
        }
        let m = m / (2 * n) as f64;
        let v = v / (2 * n) as f64;
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((v - 1.0).abs() < 0.01, "variance {v}");
    }

    #[test]
    fn task_streams_differ() {
        let mut a = task_rng(5, 0);
        let mut b = task_rng(5, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
