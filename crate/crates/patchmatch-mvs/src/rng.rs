//! Counter-based random streams.
//!
//! Every random decision in the optimizer is drawn from a stream keyed by
//! `(seed, pass, pixel)`. Streams never share state, so a pass can update
//! pixels in any order — or in parallel — and still produce bit-identical
//! results. The generator is splitmix64, which is plenty for perturbation
//! sampling and passes the uniformity checks in the tests below.

/// A tiny deterministic generator for one `(seed, pass, pixel)` stream.
#[derive(Debug, Clone)]
pub struct PixelRng {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl PixelRng {
    pub fn new(seed: u64, pass: u64, pixel: u64) -> Self {
        // Decorrelate the three key components before they become the
        // stream's starting counter.
        let k = mix64(seed ^ GOLDEN_GAMMA)
            ^ mix64(pass.wrapping_mul(0xa076_1d64_78bd_642f))
            ^ mix64(pixel.wrapping_add(0x2545_f491_4f6c_dd1d));
        Self { state: mix64(k) }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        // 53 mantissa bits.
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Stateless hash of an integer lattice point, in `[0, 1)`. Used by the
/// synthetic value-noise texture.
#[inline]
pub fn lattice_hash(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = mix64(seed ^ mix64(ix as u64 ^ 0x6c62_272e_07bb_0142) ^ mix64((iy as u64).rotate_left(32)));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
