//! One-dimensional Steklov factors.
//!
//! A separated eigenfunction factor on `[-a, a]` is `sin`/`cos` (rate `alpha`)
//! or `sinh`/`cosh` (rate `beta`). The boundary condition ties the rate to the
//! eigenvalue through
//!
//! ```text
//! T(a, l, x) = x cot(a x + l pi/2)        trigonometric
//! H(a, 0, x) = x coth(a x),  H(a, 1, x) = x tanh(a x)   hyperbolic
//! ```
//!
//! On each fine-grid box `(m pi/(2a), (m+1) pi/(2a)]` with parity `l = m mod 2`,
//! `T` is decreasing. Writing `t = a x - m pi/2 in (0, pi/2]` turns both parities
//! into `T = x cot t`, which is what the inverse works with.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::root::find_root;

/// Arguments this close to a pole of cot/tan are rejected.
pub const POLE_TOL: f64 = 1e-12;

/// Beyond this value of `a x`, tanh and coth are taken as exactly 1.
pub const SATURATION: f64 = 30.0;

/// Trigonometric factor parameter `T_{a,l}(x)`.
pub fn trig_value(a: f64, ell: u8, x: f64) -> Result<f64> {
    let arg = a * x;
    match ell {
        0 => {
            let s = arg.sin();
            if s.abs() < POLE_TOL {
                return Err(SteklovError::NearPole { x, tol: POLE_TOL });
            }
            Ok(x * arg.cos() / s)
        }
        1 => {
            let c = arg.cos();
            if c.abs() < POLE_TOL {
                return Err(SteklovError::NearPole { x, tol: POLE_TOL });
            }
            Ok(-x * arg.sin() / c)
        }
        _ => Err(SteklovError::arg("ell", format!("must be 0 or 1, got {ell}"))),
    }
}

/// Hyperbolic factor parameter `H_{a,l}(x)` for `x >= 0`.
///
/// At `x = 0` the value is the limit: `1/a` for `l = 0`, `0` for `l = 1`.
pub fn hyp_value(a: f64, ell: u8, x: f64) -> f64 {
    let ax = a * x;
    match ell {
        0 => {
            if ax > SATURATION {
                x
            } else if ax < 1e-4 {
                // x coth(ax) = (1/a)(1 + (ax)^2/3 - (ax)^4/45 + ...)
                (1.0 + ax * ax / 3.0 - ax.powi(4) / 45.0) / a
            } else {
                x / ax.tanh()
            }
        }
        _ => {
            if ax > SATURATION {
                x
            } else {
                x * ax.tanh()
            }
        }
    }
}

/// Derivative of `H_{a,l}` with respect to `x`.
pub fn hyp_derivative(a: f64, ell: u8, x: f64) -> f64 {
    let ax = a * x;
    if ax > SATURATION {
        return 1.0;
    }
    match ell {
        0 => {
            if ax < 1e-4 {
                2.0 * a * x / 3.0
            } else {
                let sh = ax.sinh();
                1.0 / ax.tanh() - ax / (sh * sh)
            }
        }
        _ => {
            let ch = ax.cosh();
            ax.tanh() + ax / (ch * ch)
        }
    }
}

/// One monotone branch of `T_{a,l}` on the fine-grid box with index `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigBranch {
    pub a: f64,
    pub m: u64,
}

impl TrigBranch {
    pub fn new(a: f64, m: u64) -> Self {
        TrigBranch { a, m }
    }

    /// Parity: 0 for sin, 1 for cos.
    pub fn ell(&self) -> u8 {
        (self.m % 2) as u8
    }

    /// Open left endpoint `m pi / (2a)`.
    pub fn left(&self) -> f64 {
        self.m as f64 * FRAC_PI_2 / self.a
    }

    /// Closed right endpoint `(m + 1) pi / (2a)`, where `T = 0`.
    pub fn right(&self) -> f64 {
        (self.m + 1) as f64 * FRAC_PI_2 / self.a
    }

    /// Supremum of `T` on the branch: `1/a` for the first sine box, else infinite.
    pub fn sup(&self) -> f64 {
        if self.m == 0 {
            1.0 / self.a
        } else {
            f64::INFINITY
        }
    }

    fn offset(&self) -> f64 {
        self.m as f64 * FRAC_PI_2
    }

    /// `a T(x)` as a function of `t = a x - m pi/2`, with its t-derivative.
    fn scaled_in_t(&self, t: f64) -> (f64, f64) {
        let base = self.offset() + t;
        if self.m == 0 && t < 1e-4 {
            // t cot t = 1 - t^2/3 - t^4/45
            let t2 = t * t;
            return (1.0 - t2 / 3.0 - t2 * t2 / 45.0, -2.0 * t / 3.0 - 4.0 * t2 * t / 45.0);
        }
        let (s, c) = t.sin_cos();
        let cot = c / s;
        (base * cot, cot - base / (s * s))
    }

    /// `T` at `x` computed through the branch variable, free of pole cancellation.
    pub fn value(&self, x: f64) -> f64 {
        self.scaled_in_t(self.a * x - self.offset()).0 / self.a
    }

    /// `dT/dx` on the branch.
    pub fn derivative(&self, x: f64) -> f64 {
        // d(a T)/dt * dt/dx / a = d(aT)/dt
        self.scaled_in_t(self.a * x - self.offset()).1
    }
}

/// The unique `x` on the branch with `T(x) = sigma`.
///
/// `sigma = 0` gives the right endpoint. On the first sine box (`m = 0`) the
/// range of `T` is `[0, 1/a)`, so larger `sigma` has no solution.
pub fn invert_trig(branch: TrigBranch, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(SteklovError::arg("sigma", format!("must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(branch.right());
    }
    if sigma >= branch.sup() {
        return Err(SteklovError::NoSolution(format!(
            "sigma {sigma} is outside the range [0, {}) of the first sine branch",
            branch.sup()
        )));
    }
    let target = branch.a * sigma;
    let f = |t: f64| {
        let (v, dv) = branch.scaled_in_t(t);
        (v - target, dv)
    };
    // f decreases in t; find a left point with f > 0
    let mut lo = FRAC_PI_2 / 2.0;
    let mut guard = 0;
    while f(lo).0 <= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 1100 || lo == 0.0 {
            return Err(SteklovError::NonConvergence { lo, hi: FRAC_PI_2, iterations: guard });
        }
    }
    let t = find_root(f, lo, FRAC_PI_2, 1e-14 * target.max(1.0))?;
    Ok((branch.offset() + t) / branch.a)
}

/// The unique `x >= 0` with `H_{a,l}(x) = sigma`.
///
/// For `l = 0` the range of `H` is `[1/a, inf)`; smaller `sigma` is the
/// no-solution case.
pub fn invert_hyp(a: f64, ell: u8, sigma: f64) -> Result<f64> {
    if !sigma.is_finite() {
        return Err(SteklovError::arg("sigma", format!("must be finite, got {sigma}")));
    }
    let (lo, hi) = match ell {
        0 => {
            let floor = 1.0 / a;
            if sigma < floor {
                return Err(SteklovError::NoSolution(format!(
                    "x coth(ax) >= 1/a = {floor} > sigma = {sigma}"
                )));
            }
            if sigma == floor {
                return Ok(0.0);
            }
            (0.0, sigma)
        }
        1 => {
            if sigma < 0.0 {
                return Err(SteklovError::NoSolution(format!(
                    "x tanh(ax) >= 0 > sigma = {sigma}"
                )));
            }
            if sigma == 0.0 {
                return Ok(0.0);
            }
            (sigma, sigma + 1.0 / a)
        }
        _ => return Err(SteklovError::arg("ell", format!("must be 0 or 1, got {ell}"))),
    };
    if a * lo > SATURATION {
        return Ok(sigma);
    }
    find_root(
        |x| (hyp_value(a, ell, x) - sigma, hyp_derivative(a, ell, x)),
        lo,
        hi,
        1e-14 * sigma.max(1.0),
    )
}
