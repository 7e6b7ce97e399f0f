//! Bracketed bisection shared by the threshold, mixed-strategy and task
//! solvers.

use crate::error::{Error, Result};

/// Largest bracket width accepted as converged.
pub const BISECTION_TOLERANCE: f64 = 1e-10;
pub const MAX_BISECTION_ITERATIONS: usize = 200;

/// Root of `f` on `[lo, hi]`, given `f(lo)` and `f(hi)` of opposite sign
/// (either may be zero). Bisects until the bracket collapses to adjacent
/// floats or the iteration cap; the cap is an error only if the bracket is
/// still wider than [`BISECTION_TOLERANCE`].
pub fn bisect<F>(mut f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::numerical(format!(
            "no sign change on [{lo}, {hi}]: f = ({f_lo}, {f_hi})"
        )));
    }
    let lo_positive = f_lo > 0.0;
    for _ in 0..MAX_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if !fm.is_finite() {
            return Err(Error::numerical(format!("f({mid}) = {fm}")));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= BISECTION_TOLERANCE {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::numerical(format!(
            "bisection did not converge; final bracket [{lo}, {hi}]"
        )))
    }
}

/// Last point of `{x : f(x) >= 0}` before `f` turns negative, for
/// `f(lo) >= 0 > f(hi)`. Zero values count as nonnegative, so an exact or
/// underflowed zero at `lo` does not end the search.
pub fn bisect_boundary<F>(mut f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_hi >= 0.0 {
        return Ok(hi);
    }
    if f_lo < 0.0 {
        return Err(Error::numerical(format!(
            "boundary search needs f(lo) >= 0 > f(hi) on [{lo}, {hi}]: f = ({f_lo}, {f_hi})"
        )));
    }
    for _ in 0..MAX_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(lo);
        }
        let fm = f(mid)?;
        if !fm.is_finite() {
            return Err(Error::numerical(format!("f({mid}) = {fm}")));
        }
        if fm >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= BISECTION_TOLERANCE {
        Ok(lo)
    } else {
        Err(Error::numerical(format!(
            "bisection did not converge; final bracket [{lo}, {hi}]"
        )))
    }
}

/// Indices `k` with a sign change (or an exact zero at `k + 1`) between
/// consecutive samples.
pub(crate) fn sign_change_indices(values: &[f64]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] * w[1] < 0.0 || (w[1] == 0.0 && w[0] != 0.0))
        .map(|(k, _)| k)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let r = bisect(|x| Ok(1.0 - x), 0.0, 3.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn endpoint_roots_are_returned() {
        assert_eq!(bisect(Ok, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(bisect(|x| Ok(x - 1.0), 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn missing_sign_change_is_an_error() {
        assert!(matches!(
            bisect(|x| Ok(x * x + 1.0), -1.0, 1.0),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn boundary_skips_zero_plateau() {
        let f = |x: f64| Ok(if x < 1.0 { 0.0 } else if x < 2.0 { 2.0 - x - 0.5 } else { -1.0 });
        let r = bisect_boundary(f, 0.0, 3.0).unwrap();
        assert!((r - 1.5).abs() < 1e-12);
        assert_eq!(bisect_boundary(|x| Ok(1.0 - x), 0.0, 1.0).unwrap(), 1.0);
        assert!(bisect_boundary(|_| Ok(-1.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn sign_changes() {
        assert_eq!(sign_change_indices(&[1.0, 0.5, -1.0, -2.0, 3.0]), vec![1, 3]);
        assert_eq!(sign_change_indices(&[1.0, 0.0, -1.0]), vec![0]);
    }
}
