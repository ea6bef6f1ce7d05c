//! Bracketing root finder.

use thiserror::Error;

/// Bisection failures.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RootError {
    /// `f(lo)` and `f(hi)` have the same sign.
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange {
        /// Lower end of the bracket.
        lo: f64,
        /// Upper end of the bracket.
        hi: f64,
    },
    /// The function returned NaN or an infinity.
    #[error("function is not finite at {0}")]
    NonFinite(f64),
}

/// A converged bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    /// Midpoint of the final bracket.
    pub x: f64,
    /// Function value at `x`.
    pub fx: f64,
    /// Halvings performed.
    pub iterations: u32,
}

/// Finds a zero of `f` inside `[lo, hi]` by bisection.
///
/// Stops when the bracket is narrower than `x_tol`, when `f` hits zero
/// exactly, or after `max_iter` halvings.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: u32) -> Result<Root, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !f_lo.is_finite() {
        return Err(RootError::NonFinite(lo));
    }
    if !f_hi.is_finite() {
        return Err(RootError::NonFinite(hi));
    }
    if f_lo == 0.0 {
        return Ok(Root {
            x: lo,
            fx: 0.0,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            x: hi,
            fx: 0.0,
            iterations: 0,
        });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NoSignChange { lo, hi });
    }

    let mut iterations = 0;
    loop {
        let mid = lo + 0.5 * (hi - lo);
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return Err(RootError::NonFinite(mid));
        }
        iterations += 1;
        if f_mid == 0.0 || hi - lo <= x_tol || iterations >= max_iter || mid <= lo || mid >= hi {
            return Ok(Root {
                x: mid,
                fx: f_mid,
                iterations,
            });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r.x - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn reversed_bracket_is_accepted() {
        let r = bisect(|x| x - 0.25, 1.0, 0.0, 1e-14, 200).unwrap();
        assert!((r.x - 0.25).abs() < 1e-14);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert_eq!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100),
            Err(RootError::NoSignChange { lo: -1.0, hi: 1.0 })
        );
    }

    #[test]
    fn endpoint_root_short_circuits() {
        let r = bisect(|x| x, 0.0, 1.0, 1e-12, 100).unwrap();
        assert_eq!((r.x, r.iterations), (0.0, 0));
    }
}
