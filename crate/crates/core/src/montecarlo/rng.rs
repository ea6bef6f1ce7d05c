//! Seeded, splittable random streams.
//!
//! Streams are ChaCha instances keyed by the 64-bit seed and selected by a
//! 64-bit stream id, so each `(sample, slot)` pair gets an independent
//! sequence that does not depend on evaluation order. ChaCha output is
//! specified bit-for-bit, and the float conversions below use only integer
//! arithmetic and [`libm`].

use rand_chacha::{ChaCha12Rng, ChaCha20Rng, ChaCha8Rng};
use rand_core::{Rng, SeedableRng};

/// Named ChaCha variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Generator {
    /// ChaCha with 8 rounds.
    ChaCha8,
    /// ChaCha with 12 rounds.
    ChaCha12,
    /// ChaCha with 20 rounds.
    #[default]
    ChaCha20,
}

impl Generator {
    /// Config-file name of the generator.
    pub fn name(self) -> &'static str {
        match self {
            Generator::ChaCha8 => "chacha8",
            Generator::ChaCha12 => "chacha12",
            Generator::ChaCha20 => "chacha20",
        }
    }

    /// Looks a generator up by its config-file name.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "chacha8" => Some(Generator::ChaCha8),
            "chacha12" => Some(Generator::ChaCha12),
            "chacha20" => Some(Generator::ChaCha20),
            _ => None,
        }
    }

    /// Independent stream `stream` of the generator keyed by `seed`.
    pub fn stream(self, seed: u64, stream: u64) -> Substream {
        let inner = match self {
            Generator::ChaCha8 => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                Inner::ChaCha8(rng)
            }
            Generator::ChaCha12 => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                Inner::ChaCha12(rng)
            }
            Generator::ChaCha20 => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                Inner::ChaCha20(rng)
            }
        };
        Substream { inner, spare: None }
    }
}

#[derive(Debug, Clone)]
enum Inner {
    ChaCha8(ChaCha8Rng),
    ChaCha12(ChaCha12Rng),
    ChaCha20(ChaCha20Rng),
}

/// One random stream with uniform and normal draws.
#[derive(Debug, Clone)]
pub struct Substream {
    inner: Inner,
    spare: Option<f64>,
}

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
// 2^-53
const UNIT: f64 = 1.0 / 9_007_199_254_740_992.0;

impl Substream {
    /// Raw 64 bits.
    pub fn next_u64(&mut self) -> u64 {
        match &mut self.inner {
            Inner::ChaCha8(r) => r.next_u64(),
            Inner::ChaCha12(r) => r.next_u64(),
            Inner::ChaCha20(r) => r.next_u64(),
        }
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_closed(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Unbiased uniform index in `0..n` (widening multiply with rejection).
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            let wide = (x as u128) * (n as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as usize;
            }
        }
    }

    /// Standard normal draw (Box-Muller; the second variate is cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open_closed();
        let u2 = self.uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = TWO_PI * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }

    /// Normal draw with the given mean and standard deviation.
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }
}
