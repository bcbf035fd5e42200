//! Deterministic random number generation with counter-keyed substreams.
//!
//! Every random draw in a simulation comes from a substream identified by
//! `(master seed, run, frame, block, purpose)`. Substream states are derived
//! by hashing the key with SplitMix64, so independent Monte Carlo runs can be
//! executed serially or on a worker pool and still consume identical random
//! sequences.

use num_complex::Complex64;
use std::f64::consts::PI;

/// What a substream is consumed for. Keeps draws for different signals
/// independent even when they share a (run, frame, block) coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Geometry,
    AlphaFading,
    BetaFading,
    Noise,
    DataBits,
    AlsInit,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Geometry => 1,
            Purpose::AlphaFading => 2,
            Purpose::BetaFading => 3,
            Purpose::Noise => 4,
            Purpose::DataBits => 5,
            Purpose::AlsInit => 6,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256** stream seeded from a hashed substream key.
#[derive(Clone, Debug)]
pub struct Stream {
    s: [u64; 4],
}

impl Stream {
    /// Derives the stream for `(master, run, frame, block, purpose)`.
    pub fn from_key(master: u64, run: u64, frame: u64, block: u64, purpose: Purpose) -> Self {
        // Absorb each key component through the SplitMix64 sequence so that
        // nearby keys land on unrelated states.
        let mut acc = master;
        for part in [run, frame, block, purpose.tag()] {
            let mixed = splitmix64(&mut acc);
            acc ^= part.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ mixed;
        }
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut acc);
        }
        // xoshiro must not start from the all-zero state.
        if s == [0, 0, 0, 0] {
            s[0] = 0x9e37_79b9_7f4a_7c15;
        }
        Stream { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller (one value per call; pairs are not cached
    /// so the draw count stays easy to reason about).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Circularly-symmetric complex normal CN(0, var).
    pub fn next_cn(&mut self, var: f64) -> Complex64 {
        let s = (var / 2.0).sqrt();
        Complex64::new(s * self.next_gaussian(), s * self.next_gaussian())
    }

    /// Vector of CN(0, var) entries.
    pub fn cn_vector(&mut self, len: usize, var: f64) -> Vec<Complex64> {
        (0..len).map(|_| self.next_cn(var)).collect()
    }

    /// Random bit (fair coin).
    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }
}

/// Substream factory bound to one (master seed, run) pair.
#[derive(Clone, Copy, Debug)]
pub struct RunStreams {
    master: u64,
    run: u64,
}

impl RunStreams {
    pub fn new(master: u64, run: u64) -> Self {
        RunStreams { master, run }
    }

    pub fn stream(&self, frame: u64, block: u64, purpose: Purpose) -> Stream {
        Stream::from_key(self.master, self.run, frame, block, purpose)
    }
}
