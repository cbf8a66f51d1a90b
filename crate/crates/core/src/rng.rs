//! Seeded pseudo-random streams.
//!
//! Every random draw in a run comes from a stream addressed by
//! (node, purpose). Stream states are derived from the master seed by stable
//! hashing, so adding a node or enabling a scheme never perturbs the draws of
//! unrelated streams, and the same (seed, stream, draw-index) yields the same
//! value on every platform. The generator is xoshiro256** seeded through
//! splitmix64; both are fixed algorithms with no platform dependence.

use crate::time::SimTime;
use std::collections::BTreeMap;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// One independent xoshiro256** generator.
#[derive(Clone, Debug)]
pub struct RngStream {
    state: [u64; 4],
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for s in &mut state {
            *s = splitmix64(&mut sm);
        }
        // An all-zero state would be degenerate; splitmix64 cannot produce
        // four zero outputs in a row for any input, so no check is needed.
        RngStream { state }
    }

    /// Derive the stream for (master seed, node, purpose).
    pub fn derive(master: u64, node: usize, purpose: &str) -> Self {
        let mut h = FNV_OFFSET;
        h = fnv1a(&master.to_le_bytes(), h);
        h = fnv1a(&(node as u64).to_le_bytes(), h);
        h = fnv1a(purpose.as_bytes(), h);
        RngStream::from_seed(h)
    }

    pub fn next_u64(&mut self) -> u64 {
        let [s0, s1, s2, s3] = self.state;
        let result = s1.wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s1 << 17;
        let mut s2n = s2 ^ s0;
        let mut s3n = s3 ^ s1;
        let s1n = s1 ^ s2n;
        let s0n = s0 ^ s3n;
        s2n ^= t;
        s3n = s3n.rotate_left(45);
        self.state = [s0n, s1n, s2n, s3n];
        result
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        // Modulo bias is negligible for the small ranges used here.
        self.next_u64() % n
    }

    /// Uniform jitter in [0, max_jitter].
    pub fn jitter(&mut self, max_jitter: SimTime) -> SimTime {
        if max_jitter == SimTime::ZERO {
            return SimTime::ZERO;
        }
        SimTime::from_micros(self.below(max_jitter.micros() + 1))
    }
}

/// Lazily created set of streams for one run.
#[derive(Debug)]
pub struct RngSet {
    master: u64,
    streams: BTreeMap<(usize, &'static str), RngStream>,
}

impl RngSet {
    pub fn new(master: u64) -> Self {
        RngSet { master, streams: BTreeMap::new() }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&mut self, node: usize, purpose: &'static str) -> &mut RngStream {
        let master = self.master;
        self.streams
            .entry((node, purpose))
            .or_insert_with(|| RngStream::derive(master, node, purpose))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = RngStream::derive(42, 3, "tc_jitter");
        let mut b = RngStream::derive(42, 3, "tc_jitter");
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_are_independent() {
        let mut a = RngStream::derive(42, 3, "tc_jitter");
        let mut b = RngStream::derive(42, 4, "tc_jitter");
        let mut c = RngStream::derive(42, 3, "hello_offset");
        let va: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let vc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_ne!(va, vb);
        assert_ne!(va, vc);
    }

    #[test]
    fn jitter_zero_interval_is_zero() {
        let mut s = RngStream::from_seed(7);
        assert_eq!(s.jitter(SimTime::ZERO), SimTime::ZERO);
    }

    #[test]
    fn jitter_stays_in_interval() {
        let mut s = RngStream::from_seed(7);
        let max = SimTime::from_secs_f64(0.5);
        for _ in 0..10_000 {
            let j = s.jitter(max);
            assert!(j <= max);
        }
    }

    #[test]
    fn jitter_mean_matches_uniform_law() {
        // 1e5 draws over [0, 0.5]: the sample mean must sit within 0.25 +/- 0.01.
        let mut s = RngStream::derive(1, 0, "jitter_check");
        let max = SimTime::from_secs_f64(0.5);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| s.jitter(max).as_secs_f64()).sum();
        let mean = sum / n as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn uniform_range() {
        let mut s = RngStream::from_seed(99);
        for _ in 0..1000 {
            let v = s.uniform(1.0, 10.0);
            assert!((1.0..10.0).contains(&v));
        }
    }
}
