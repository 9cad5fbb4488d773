//! Counter-based random stream.
//!
//! Every draw is a pure hash of `(seed, counter)`, so a stream can be
//! replayed from any position and child streams can be derived without
//! sharing state. Not cryptographically secure.

/// Uniform draws are clamped into `[UNIFORM_EPS, 1 - UNIFORM_EPS]`.
pub const UNIFORM_EPS: f64 = 1e-12;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a key and counter. Two rounds so nearby keys decorrelate.
#[inline]
pub fn hash2(key: u64, counter: u64) -> u64 {
    let z = mix64(key ^ counter.wrapping_mul(GOLDEN));
    mix64(z ^ key.rotate_left(29).wrapping_add(GOLDEN))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed: mix64(seed.wrapping_add(GOLDEN)), counter: 0 }
    }

    /// Stream keyed by this stream's key and `id`; independent of the parent's position.
    pub fn fork(&self, id: u64) -> Self {
        Self { seed: hash2(self.seed, id ^ 0xA5A5_A5A5_5A5A_5A5A), counter: 0 }
    }

    /// Number of 64-bit draws consumed so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn seek(&mut self, counter: u64) {
        self.counter = counter;
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = hash2(self.seed, self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval, clamped to `[UNIFORM_EPS, 1 - UNIFORM_EPS]`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        self.next_f64().clamp(UNIFORM_EPS, 1.0 - UNIFORM_EPS)
    }

    /// Uniform integer in `[0, bound)`. Panics on `bound == 0`.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        // Lemire's multiply-shift with rejection.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn next_usize(&mut self, bound: usize) -> usize {
        self.next_below(bound as u64) as usize
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        lo + self.next_usize(hi - lo + 1)
    }

    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal via Box-Muller (two draws).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_usize(i + 1);
            items.swap(i, j);
        }
    }
}
