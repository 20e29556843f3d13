//! Bracketed root finding for monotone scalar maps.
//!
//! Every inversion in the solver (the auxiliary function branches, the
//! effective Hamiltonian, the switch point) is a root of a function whose
//! monotonicity is known in advance, so plain bisection on a sign-change
//! bracket is all we need. Bisection is also safe where the derivative
//! vanishes, which Newton is not.

use super::NumericsError;

/// Maximum number of bracket doublings before giving up.
pub const MAX_EXPANSIONS: usize = 60;

/// Declared monotonicity of the function handed to the root finder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

/// How a bracket end is moved when the sign condition is not met yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// Move the offending end outward by the current width, doubling it.
    Additive,
    /// Positive domain: halve the lower end or double the upper end.
    Geometric,
}

/// Grows `[lo, hi]` until the monotone function `f` changes sign on it.
///
/// Only the end that is on the wrong side of the root is moved. Fails with
/// [`NumericsError::NoSignChange`] after [`MAX_EXPANSIONS`] doublings.
pub fn expand_bracket<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    direction: Direction,
    growth: Growth,
) -> Result<(f64, f64), NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(lo < hi) {
        return Err(NumericsError::InvalidBracket { lo, hi });
    }
    if growth == Growth::Geometric && lo <= 0.0 {
        return Err(NumericsError::InvalidBracket { lo, hi });
    }
    let s = direction.sign();
    let mut f_lo = checked(lo, f(lo))?;
    let mut f_hi = checked(hi, f(hi))?;
    for _ in 0..=MAX_EXPANSIONS {
        // Normalized so that g = s*f is increasing: need g(lo) <= 0 <= g(hi).
        let lo_ok = s * f_lo <= 0.0;
        let hi_ok = s * f_hi >= 0.0;
        if lo_ok && hi_ok {
            return Ok((lo, hi));
        }
        let width = hi - lo;
        if !lo_ok {
            // Root lies below lo.
            hi = lo;
            f_hi = f_lo;
            lo = match growth {
                Growth::Additive => lo - 2.0 * width,
                Growth::Geometric => lo / 2.0,
            };
            f_lo = checked(lo, f(lo))?;
        } else {
            lo = hi;
            f_lo = f_hi;
            hi = match growth {
                Growth::Additive => hi + 2.0 * width,
                Growth::Geometric => hi * 2.0,
            };
            f_hi = checked(hi, f(hi))?;
        }
    }
    Err(NumericsError::NoSignChange { lo, hi })
}

/// Bisection on a bracket where the monotone function `f` changes sign.
///
/// Returns the midpoint of the final bracket once its width is at most
/// `tol` (or floating point can no longer split it). The iteration sequence
/// depends only on the inputs, so identical calls give bit-identical results.
///
/// Midpoint values that fall outside the range spanned by the current
/// bracket ends by more than a small slack are reported as
/// [`NumericsError::NonMonotone`].
pub fn find_root_monotone<F>(
    mut f: F,
    bracket: (f64, f64),
    direction: Direction,
    tol: f64,
) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = bracket;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(NumericsError::InvalidBracket { lo, hi });
    }
    if !(tol > 0.0) {
        return Err(NumericsError::InvalidTolerance(tol));
    }
    let s = direction.sign();
    let mut g_lo = s * checked(lo, f(lo))?;
    let mut g_hi = s * checked(hi, f(hi))?;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(NumericsError::NoSignChange { lo, hi });
    }
    // Value slack for the monotonicity audit: the requested tolerance plus
    // room for rounding and discretization noise in the evaluated map.
    let scale = g_lo.abs().max(g_hi.abs());
    let slack = tol + 1e-10 * scale;

    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = s * checked(mid, f(mid))?;
        if g_mid < g_lo - slack || g_mid > g_hi + slack {
            return Err(NumericsError::NonMonotone { at: mid });
        }
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid < 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    Ok(lo + 0.5 * (hi - lo))
}

fn checked(x: f64, fx: f64) -> Result<f64, NumericsError> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(NumericsError::NonFinite { at: x })
    }
}
