//! Deterministic pseudo-random numbers.
//!
//! `Prng` is an xorshift64* generator. The state recurrence is
//!
//! ```text
//! x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;
//! output = x.wrapping_mul(0x2545_F491_4F6C_DD1D)
//! ```
//!
//! It is tiny, fast and produces the identical sequence on every platform,
//! which keeps generated datasets, weight initializations and embeddings
//! bit-reproducible from a single 64-bit seed.

/// SplitMix64 finalizer, used to turn arbitrary seeds into well-mixed state
/// and to derive independent substreams.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded xorshift64* generator. Cloning yields an identical future sequence.
#[derive(Debug, Clone)]
pub struct Prng {
    seed: u64,
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        let mut state = mix64(seed);
        if state == 0 {
            // xorshift state must be nonzero
            state = 0x9E37_79B9_7F4A_7C15;
        }
        Prng { seed, state }
    }

    /// The seed this generator (or its fork parent) was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n). `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller (two uniforms per draw, no spare cached).
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1], keeps ln finite
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Derive an independent generator for substream `stream`.
    ///
    /// Forks depend only on the original seed and the stream id, never on how
    /// much of this generator's sequence has been consumed, so per-item
    /// substreams are order-independent.
    pub fn fork(&self, stream: u64) -> Prng {
        Prng::new(mix64(self.seed ^ mix64(stream)))
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
