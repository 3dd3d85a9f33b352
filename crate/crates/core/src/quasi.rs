//! Closed-form approximate eigenvalues and lattice counting.
//!
//! For a strictly positive fine-grid box `m` with lower corner
//! `x_i = m_i pi / (2 a_i)`, the approximate rates are
//!
//! ```text
//! alpha~_i = x_i + (1/a_i) arccot( |x| / (sqrt(q) x_i) )
//! sigma~   = |alpha~| / sqrt(q)
//! ```
//!
//! and the exact eigenvalues of the `2^q` hyperbolic parities attached to the
//! box lie within `O(1/|m|)` of `sigma~`. Counting `sigma~ < sigma` over all
//! boxes therefore reproduces the eigenvalue counting function up to the
//! finitely many exceptional eigenvalues.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::exact::{sort_records, EigenvalueRecord, Method};
use crate::geometry::{bipartitions, default_margin, for_each_box, Bipartition, BoxIndex, Cuboid};

/// Principal branch with range `(0, pi)`; `arccot(+inf) = 0`.
pub fn arccot(x: f64) -> f64 {
    if x > 0.0 {
        (1.0 / x).atan()
    } else if x == 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        std::f64::consts::PI + (1.0 / x).atan()
    }
}

/// One approximate eigenvalue; it stands for `multiplicity = 2^q` exact ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiEigenvalue {
    pub sigma_tilde: f64,
    pub alpha_tilde: Vec<f64>,
    pub box_index: BoxIndex,
    pub bipartition: Bipartition,
    pub multiplicity: u64,
}

fn check_box(b: &Bipartition, m: &BoxIndex) -> Result<()> {
    if m.len() != b.p() {
        return Err(SteklovError::arg(
            "box",
            format!("expected {} entries, got {}", b.p(), m.len()),
        ));
    }
    if !m.is_strictly_positive() {
        return Err(SteklovError::arg(
            "box",
            format!("entries must be >= 1, got {:?}", m.entries()),
        ));
    }
    Ok(())
}

/// Lower corners `m_i pi / (2 a_i)` of a box.
fn corners(c: &Cuboid, b: &Bipartition, m: &[u64]) -> Vec<f64> {
    b.trig()
        .iter()
        .zip(m)
        .map(|(&i, &mi)| mi as f64 * std::f64::consts::FRAC_PI_2 / c.a(i))
        .collect()
}

fn alpha_from_corners(c: &Cuboid, b: &Bipartition, x: &[f64], out: &mut Vec<f64>) {
    let sq = (b.q() as f64).sqrt();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    out.clear();
    for (&i, &xi) in b.trig().iter().zip(x) {
        // arccot(|x| / (sqrt(q) x_i)) with a positive argument
        out.push(xi + (sq * xi / norm).atan() / c.a(i));
    }
}

fn sigma_from_alpha(q: usize, alpha: &[f64]) -> f64 {
    (alpha.iter().map(|v| v * v).sum::<f64>() / q as f64).sqrt()
}

/// Approximate trigonometric rates of a strictly positive box.
pub fn alpha_tilde(c: &Cuboid, b: &Bipartition, m: &BoxIndex) -> Result<Vec<f64>> {
    check_box(b, m)?;
    let x = corners(c, b, m.entries());
    let mut out = Vec::with_capacity(x.len());
    alpha_from_corners(c, b, &x, &mut out);
    Ok(out)
}

/// Approximate eigenvalue `|alpha~| / sqrt(q)` of a strictly positive box.
pub fn sigma_tilde(c: &Cuboid, b: &Bipartition, m: &BoxIndex) -> Result<f64> {
    Ok(sigma_from_alpha(b.q(), &alpha_tilde(c, b, m)?))
}

impl QuasiEigenvalue {
    pub fn new(c: &Cuboid, b: &Bipartition, m: BoxIndex) -> Result<Self> {
        let alpha = alpha_tilde(c, b, &m)?;
        Ok(QuasiEigenvalue {
            sigma_tilde: sigma_from_alpha(b.q(), &alpha),
            alpha_tilde: alpha,
            box_index: m,
            bipartition: b.clone(),
            multiplicity: 1 << b.q(),
        })
    }
}

/// Sorted `sigma~ < sigma_max` over the strictly positive boxes of one bipartition.
fn sigmas_below(c: &Cuboid, b: &Bipartition, sigma_max: f64) -> Vec<f64> {
    let mut boxes: Vec<u64> = Vec::new();
    let radius = (b.q() as f64).sqrt() * (sigma_max + default_margin(c));
    for_each_box(c, b, radius, 1, &mut |m| boxes.extend_from_slice(m));
    let p = b.p();
    let mut out: Vec<f64> = boxes
        .par_chunks(p)
        .fold(
            || (Vec::new(), Vec::with_capacity(p)),
            |(mut acc, mut alpha), m| {
                let x = corners(c, b, m);
                alpha_from_corners(c, b, &x, &mut alpha);
                let s = sigma_from_alpha(b.q(), &alpha);
                if s < sigma_max {
                    acc.push(s);
                }
                (acc, alpha)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(Vec::new, |mut x, y| {
            x.extend(y);
            x
        });
    out.par_sort_unstable_by(f64::total_cmp);
    out
}

/// Number of strictly positive boxes of one bipartition with `sigma~ < sigma`
/// (without the `2^q` weight).
pub fn count_boxes_below(c: &Cuboid, b: &Bipartition, sigma: f64) -> usize {
    sigmas_below(c, b, sigma).len()
}

/// Number of quasi-eigenvalues with `p` trigonometric factors below `sigma`,
/// each counted `2^q` times.
pub fn count_p(c: &Cuboid, p: usize, sigma: f64) -> Result<u64> {
    let mut total = 0;
    for b in bipartitions(c.dim(), p)? {
        total += (sigmas_below(c, &b, sigma).len() as u64) << b.q();
    }
    Ok(total)
}

/// `1 + sum_p count_p`: the constant eigenfunction plus all quasi-eigenvalues.
pub fn count_total(c: &Cuboid, sigma: f64) -> u64 {
    (1..c.dim())
        .map(|p| count_p(c, p, sigma).expect("p in range"))
        .sum::<u64>()
        + if sigma > 0.0 { 1 } else { 0 }
}

/// Precomputed counting function, valid for arguments up to `sigma_max`.
///
/// Building it once and querying a grid is far cheaper than repeated
/// [`count_total`] calls.
#[derive(Debug, Clone)]
pub struct CountingFunction {
    sigma_max: f64,
    /// Sorted distinct-position values with cumulative weights.
    values: Vec<f64>,
    cumulative: Vec<u64>,
}

impl CountingFunction {
    pub fn new(c: &Cuboid, sigma_max: f64) -> Result<Self> {
        if !(sigma_max >= 0.0) || !sigma_max.is_finite() {
            return Err(SteklovError::arg(
                "sigma_max",
                format!("must be finite and >= 0, got {sigma_max}"),
            ));
        }
        let mut weighted: Vec<(f64, u64)> = vec![(0.0, 1)];
        for p in 1..c.dim() {
            for b in bipartitions(c.dim(), p)? {
                let w = 1u64 << b.q();
                weighted.extend(sigmas_below(c, &b, sigma_max).into_iter().map(|s| (s, w)));
            }
        }
        weighted.par_sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
        let mut values = Vec::with_capacity(weighted.len());
        let mut cumulative = Vec::with_capacity(weighted.len());
        let mut run = 0;
        for (s, w) in weighted {
            run += w;
            values.push(s);
            cumulative.push(run);
        }
        Ok(CountingFunction { sigma_max, values, cumulative })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// `N(sigma)`: count strictly below `sigma`. Requires `sigma <= sigma_max`.
    pub fn count(&self, sigma: f64) -> Result<u64> {
        if sigma > self.sigma_max {
            return Err(SteklovError::arg(
                "sigma",
                format!("{sigma} exceeds the precomputed range {}", self.sigma_max),
            ));
        }
        let k = self.values.partition_point(|&s| s < sigma);
        Ok(if k == 0 { 0 } else { self.cumulative[k - 1] })
    }

    /// Total weight stored (all values below `sigma_max`).
    pub fn len_weighted(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

/// All quasi-eigenvalues below `sigma_max`, sorted by value, then bipartition,
/// then box.
pub fn quasi_spectrum(c: &Cuboid, sigma_max: f64) -> Result<Vec<QuasiEigenvalue>> {
    let mut out = Vec::new();
    for p in 1..c.dim() {
        for b in bipartitions(c.dim(), p)? {
            let radius = (b.q() as f64).sqrt() * (sigma_max + default_margin(c));
            let mut boxes = Vec::new();
            for_each_box(c, &b, radius, 1, &mut |m| boxes.push(BoxIndex(m.to_vec())));
            let found: Result<Vec<QuasiEigenvalue>> = boxes
                .into_par_iter()
                .map(|m| QuasiEigenvalue::new(c, &b, m))
                .collect();
            out.extend(found?.into_iter().filter(|e| e.sigma_tilde < sigma_max));
        }
    }
    out.sort_by(|x, y| {
        x.sigma_tilde
            .total_cmp(&y.sigma_tilde)
            .then_with(|| x.bipartition.p().cmp(&y.bipartition.p()))
            .then_with(|| x.bipartition.trig_mask().cmp(&y.bipartition.trig_mask()))
            .then_with(|| x.box_index.cmp(&y.box_index))
    });
    Ok(out)
}

/// Quasi spectrum as records, expanded to one row per hyperbolic parity so that
/// the row count equals the weighted count. Includes the constant eigenvalue.
pub fn quasi_records(c: &Cuboid, sigma_max: f64) -> Result<Vec<EigenvalueRecord>> {
    let mut out = vec![EigenvalueRecord::zero(Method::Quasi)];
    for e in quasi_spectrum(c, sigma_max)? {
        let b = &e.bipartition;
        for bits in 0..1u64 << b.q() {
            let ell_mask = b
                .hyp()
                .iter()
                .enumerate()
                .filter(|(k, _)| bits >> k & 1 == 1)
                .fold(0u64, |acc, (_, &j)| acc | 1 << j);
            out.push(EigenvalueRecord {
                sigma: e.sigma_tilde,
                method: Method::Quasi,
                p: b.p(),
                tau_mask: b.trig_mask(),
                box_index: e.box_index.clone(),
                ell_tau2_mask: ell_mask,
                linear_mask: 0,
                multiplicity: 1,
            });
        }
    }
    sort_records(&mut out);
    Ok(out)
}
