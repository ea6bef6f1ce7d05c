//! Sample statistics shared by the other modules.
//!
//! Means and standard deviations are accumulated with Welford's update so
//! that a constant input yields a mean equal to that constant and a
//! standard deviation of exactly zero.

use alloc::vec::Vec;

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    /// Empty accumulator.
    pub const fn new() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    /// Adds one observation.
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Number of observations so far.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Arithmetic mean, `0.0` when empty.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance with divisor `n - 1`; zero for fewer than two points.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            // m2 can pick up a negative ulp on near-constant data
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Sample standard deviation with divisor `n - 1`.
    pub fn sample_std(&self) -> f64 {
        libm::sqrt(self.sample_variance())
    }
}

impl Extend<f64> for Welford {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Welford::new();
        acc.extend(iter);
        acc
    }
}

/// Arithmetic mean of `xs`.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<Welford>().mean()
}

/// Sample standard deviation (divisor `n - 1`) of `xs`.
pub fn sample_std(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<Welford>().sample_std()
}

/// One-period log returns `ln(p[k] / p[k-1])`.
///
/// Callers are responsible for rejecting non-positive prices first.
pub fn log_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| libm::log(w[1] / w[0])).collect()
}

/// Pearson sample correlation of two equally long series.
///
/// Returns `None` when either series has zero variance or the lengths differ
/// or fewer than two points are given. The result is clamped to `[-1, 1]`.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}
