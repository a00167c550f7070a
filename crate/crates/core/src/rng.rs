//! Deterministic per-path random substreams.
//!
//! Each simulation path draws from its own stream derived from the run seed
//! and the path index alone, so results do not depend on how paths are
//! scheduled across worker threads. The generator is splitmix64 with a
//! per-path starting state decorrelated through the same finalizer.

/// Independent random stream for one simulation path.
#[derive(Debug, Clone)]
pub struct PathRng {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const PATH_SALT: u64 = 0xD134_2543_DE82_EF95;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PathRng {
    /// Stream for path `path_index` of the run seeded with `seed`.
    pub fn for_path(seed: u64, path_index: u64) -> Self {
        let state = mix64(seed ^ mix64(path_index.wrapping_mul(GOLDEN_GAMMA) ^ PATH_SALT));
        PathRng { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform sample in `[0, 1)` with 53 bits of precision.
    pub fn next_unit(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Exponential sample with the given rate (mean `1/rate`), `rate > 0`.
    pub fn next_exponential(&mut self, rate: f64) -> f64 {
        debug_assert!(rate > 0.0);
        // u in [0,1) so 1-u in (0,1]: the logarithm never sees zero.
        -(1.0 - self.next_unit()).ln() / rate
    }
}
