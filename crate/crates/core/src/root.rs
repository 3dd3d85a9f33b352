//! Safeguarded bisection/Newton root search on a sign-changing bracket.

use crate::error::{Result, SteklovError};

/// Bracket width below which bisection hands over to Newton.
const BISECT_WIDTH: f64 = 1e-3;
const MAX_ITER: usize = 400;

/// Finds a root of `f` in `[lo, hi]`, where `f` returns `(value, derivative)`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them vanish).
/// Converges when `|f| <= ftol` or the bracket collapses to a few ulps.
pub(crate) fn find_root<F>(f: F, lo: f64, hi: f64, ftol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, _) = f(a);
    if fa == 0.0 {
        return Ok(a);
    }
    let (fb, _) = f(b);
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(SteklovError::NonConvergence {
            lo: a,
            hi: b,
            iterations: 0,
        });
    }
    // orient so that f(a) < 0 < f(b)
    let flip = fa > 0.0;
    let g = |x: f64| {
        let (v, d) = f(x);
        if flip {
            (-v, -d)
        } else {
            (v, d)
        }
    };

    let mut iter = 0;
    while b - a > BISECT_WIDTH && iter < MAX_ITER {
        let mid = 0.5 * (a + b);
        let (v, _) = g(mid);
        if v.abs() <= ftol {
            return Ok(mid);
        }
        if v < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        iter += 1;
    }

    let mut x = 0.5 * (a + b);
    while iter < MAX_ITER {
        let (v, d) = g(x);
        if v.abs() <= ftol {
            return Ok(x);
        }
        if v < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(a.abs()).max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
        let newton = x - v / d;
        x = if d.is_finite() && d != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if x == a || x == b {
            return Ok(x);
        }
        iter += 1;
    }
    Err(SteklovError::NonConvergence {
        lo: a,
        hi: b,
        iterations: iter,
    })
}
