//! Two-term counting asymptotics
//!
//! ```text
//! N(sigma) = C1 Vol_{d-1}(boundary) sigma^{d-1} + C2 Vol_{d-2}(edges) sigma^{d-2} + O(sigma^eta)
//! ```
//!
//! with `C1 = omega_{d-1} / (2 pi)^{d-1}` and `C2` assembled from the angular
//! constants `G_{p,q}`, plus the geometry of the region `E_sigma` whose scaled
//! lattice count reproduces the approximate-eigenvalue count.
//!
//! Convention for the `p`-th correction coefficients: the `sqrt(q)` prefactor
//! enters as `sqrt(q)^{p-1}`,
//!
//! ```text
//! c'_p  = -(q+1) sqrt(q)^{p-1} G_{p,q} / pi^p
//! c''_p = -(q+1) sqrt(q)^{p-1} omega_{p-1} / (4 (2 pi)^{p-1})
//! ```
//!
//! which is what a direct volume computation of `E_sigma` and direct lattice
//! counts give. For `p = d - 1` (`q = 1`) the power is irrelevant, so `C2` does
//! not depend on it.

use std::f64::consts::{FRAC_PI_2, PI};

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::{Bipartition, Cuboid};
use crate::quasi::{count_boxes_below, CountingFunction};

/// Largest angular dimension integrated with a tensor Gauss-Legendre rule.
pub const MAX_TENSOR_DIM: usize = 4;

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    // omega_k = (2 pi / k) omega_{k-2}
    let mut w = if k.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut j = if k.is_multiple_of(2) { 2 } else { 3 };
    while j <= k {
        w *= 2.0 * PI / j as f64;
        j += 2;
    }
    w
}

/// Settings for the angular integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Gauss-Legendre nodes per angle (tensor rule).
    pub nodes: usize,
    /// Points per randomized quasi-Monte Carlo shift.
    pub qmc_points: usize,
    /// Number of independent random shifts; the spread gives the standard error.
    pub qmc_shifts: usize,
    pub seed: u64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { nodes: 32, qmc_points: 1 << 16, qmc_shifts: 16, seed: 0 }
    }
}

impl Quadrature {
    pub fn with_nodes(nodes: usize) -> Self {
        Quadrature { nodes, ..Quadrature::default() }
    }
}

/// A numerically integrated constant with its error estimate (zero for the
/// deterministic tensor rule).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Tensor Gauss-Legendre rule on `[lo, hi]^dim`. Summation order is fixed, so
/// the result does not depend on the thread count.
pub fn tensor_gauss_legendre<F>(dim: usize, nodes: usize, lo: f64, hi: f64, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if nodes < 2 {
        return Err(SteklovError::arg("nodes", format!("need at least 2, got {nodes}")));
    }
    if dim == 0 {
        return Ok(f(&[]));
    }
    let total = (nodes as f64).powi(dim as i32);
    if total > 2e8 {
        return Err(SteklovError::arg(
            "nodes",
            format!("{nodes}^{dim} evaluation points is too many"),
        ));
    }
    let rule = GaussLegendre::new(nodes)
        .map_err(|e| SteklovError::arg("nodes", e.to_string()))?;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let pts: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    let partial: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; dim];
            idx[0] = first;
            let mut x = vec![0.0; dim];
            let mut sum = 0.0;
            loop {
                let mut w = 1.0;
                for k in 0..dim {
                    x[k] = pts[idx[k]].0;
                    w *= pts[idx[k]].1;
                }
                sum += w * f(&x);
                // odometer over the trailing indices
                let mut k = dim;
                loop {
                    k -= 1;
                    if k == 0 {
                        return sum;
                    }
                    idx[k] += 1;
                    if idx[k] < nodes {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();
    Ok(partial.iter().sum())
}

/// Randomized rank-1 lattice (Kronecker sequence with the generalized golden
/// ratio) on `[0, 1]^dim`, with Cranley-Patterson shifts drawn from a seeded
/// ChaCha stream.
pub fn randomized_qmc<F>(dim: usize, points: usize, shifts: usize, seed: u64, f: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if points == 0 || shifts < 2 {
        return Err(SteklovError::arg(
            "qmc",
            format!("need points >= 1 and shifts >= 2, got {points} and {shifts}"),
        ));
    }
    // phi solves x^{dim+1} = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let gen: Vec<f64> = (1..=dim).map(|k| phi.powi(-(k as i32)).fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<Vec<f64>> = (0..shifts)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let estimates: Vec<f64> = offsets
        .par_iter()
        .map(|off| {
            let mut u = vec![0.0; dim];
            let mut sum = 0.0;
            for i in 1..=points {
                for k in 0..dim {
                    u[k] = (off[k] + i as f64 * gen[k]).fract();
                }
                sum += f(&u);
            }
            sum / points as f64
        })
        .collect();
    let n = shifts as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Estimate { value: mean, std_error: (var / n).sqrt() })
}

/// Integrand of `G_{p,q}` at angles `theta` (length `p - 1`):
/// `arctan(sqrt(q) prod sin theta_j) prod sin^k theta_k`.
fn g_integrand(sq: f64, theta: &[f64]) -> f64 {
    let mut prod = 1.0;
    let mut weight = 1.0;
    for (k, &t) in theta.iter().enumerate() {
        let s = t.sin();
        prod *= s;
        weight *= s.powi(k as i32 + 1);
    }
    // arccot(prod csc / sqrt(q)) written as an arctangent: no overflow at theta -> 0
    (sq * prod).atan() * weight
}

/// The angular constant `G_{p,q}` over `[0, pi/2]^{p-1}`.
///
/// Uses a tensor Gauss-Legendre rule up to four angles, randomized QMC beyond.
pub fn g_constant(p: usize, q: usize, quad: &Quadrature) -> Result<Estimate> {
    if p < 2 {
        return Err(SteklovError::arg("p", format!("need p >= 2, got {p}")));
    }
    if q < 1 {
        return Err(SteklovError::arg("q", format!("need q >= 1, got {q}")));
    }
    if quad.nodes < 2 {
        return Err(SteklovError::arg("nodes", format!("need at least 2, got {}", quad.nodes)));
    }
    let dim = p - 1;
    let sq = (q as f64).sqrt();
    if dim <= MAX_TENSOR_DIM {
        let v = tensor_gauss_legendre(dim, quad.nodes, 0.0, FRAC_PI_2, |t| g_integrand(sq, t))?;
        Ok(Estimate { value: v, std_error: 0.0 })
    } else {
        let scale = FRAC_PI_2.powi(dim as i32);
        let est = randomized_qmc(dim, quad.qmc_points, quad.qmc_shifts, quad.seed, |u| {
            let theta: Vec<f64> = u.iter().map(|x| x * FRAC_PI_2).collect();
            g_integrand(sq, &theta)
        })?;
        Ok(Estimate { value: est.value * scale, std_error: est.std_error * scale })
    }
}

/// Correction coefficients for `p` trigonometric factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub p: usize,
    pub q: usize,
    pub g: Estimate,
    /// From the first-order volume of `E_sigma`.
    pub c_prime: f64,
    /// From the lattice points overcounted on coordinate hyperplanes.
    pub c_double_prime: f64,
    pub c: f64,
}

/// `c'_p`, `c''_p` and `c_p = c'_p + c''_p` for the given `G_{p,q}`.
pub fn coefficients(p: usize, q: usize, g: Estimate) -> Coefficients {
    let qf = q as f64;
    let root = qf.sqrt().powi(p as i32 - 1);
    let c_prime = -(qf + 1.0) * root * g.value / PI.powi(p as i32);
    let c_double_prime = -(qf + 1.0) * root * unit_ball_volume(p - 1)
        / (4.0 * (2.0 * PI).powi(p as i32 - 1));
    Coefficients { p, q, g, c_prime, c_double_prime, c: c_prime + c_double_prime }
}

/// Leading and second coefficients of the counting function in dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylConstants {
    pub d: usize,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Closed form in terms of `G_{d-1,1}`.
    #[serde(rename = "C2")]
    pub c2: f64,
    /// `c'_{d-1} + c''_{d-1} + 2^{(d-2)/2} omega_{d-2} / (2 pi)^{d-2}`.
    #[serde(rename = "C2_assembled")]
    pub c2_assembled: f64,
    /// Coefficients for `2 <= p <= d - 1`.
    pub coefficients: Vec<Coefficients>,
}

/// `2^{(d-2)/2} omega_{d-2} / (2 pi)^{d-2}`: the edge contribution of the
/// leading term of the `p = d - 2` count.
fn lower_leading(d: usize) -> f64 {
    2f64.powf((d as f64 - 2.0) / 2.0) * unit_ball_volume(d - 2) / (2.0 * PI).powi(d as i32 - 2)
}

/// `C2` from `G_{d-1,1}` in closed form.
pub fn c2_closed_form(d: usize, g: f64) -> f64 {
    let w = unit_ball_volume(d - 2);
    lower_leading(d) - 2.0 * g / PI.powi(d as i32 - 1) - w / (2.0 * (2.0 * PI).powi(d as i32 - 2))
}

/// The same constant over a common denominator; its numerator being positive
/// is the positivity statement.
pub fn c2_common_denominator(d: usize, g: f64) -> (f64, f64) {
    let w = unit_ball_volume(d - 2);
    let num = (2f64.powf((d as f64 + 2.0) / 2.0) - 2.0) * PI * w - 2f64.powi(d as i32 + 1) * g;
    (num, 2.0 * (2.0 * PI).powi(d as i32 - 1))
}

pub fn weyl_constants(d: usize, quad: &Quadrature) -> Result<WeylConstants> {
    if d < 3 {
        return Err(SteklovError::arg("d", format!("need d >= 3, got {d}")));
    }
    let mut coeffs = Vec::with_capacity(d - 2);
    for p in 2..d {
        let g = g_constant(p, d - p, quad)?;
        coeffs.push(coefficients(p, d - p, g));
    }
    let top = coeffs.last().expect("d >= 3");
    let c2 = c2_closed_form(d, top.g.value);
    let c2_assembled = top.c_prime + top.c_double_prime + lower_leading(d);
    let rel = (c2 - c2_assembled).abs() / c2.abs().max(f64::MIN_POSITIVE);
    if rel > 1e-12 {
        return Err(SteklovError::Inconsistent(format!(
            "C2 closed form {c2} disagrees with assembly {c2_assembled}"
        )));
    }
    Ok(WeylConstants {
        d,
        c1: unit_ball_volume(d - 1) / (2.0 * PI).powi(d as i32 - 1),
        c2,
        c2_assembled,
        coefficients: coeffs,
    })
}

/// Spherical direction `omega(theta)` on the positive orthant of `S^{p-1}`
/// (last angle fixed at 0) and the surface element.
fn direction(theta: &[f64], omega: &mut [f64]) -> f64 {
    let p = omega.len();
    let mut sin_prod = 1.0;
    let mut ds = 1.0;
    for j in 0..p {
        let cos = if j < p - 1 { theta[j].cos() } else { 1.0 };
        omega[j] = cos * sin_prod;
        if j < p - 1 {
            let s = theta[j].sin();
            ds *= s.powi((p - 2 - j) as i32);
            sin_prod *= s;
        }
    }
    ds
}

/// Radial function of `E_sigma` in the direction `omega` of scaled rate space,
/// where a point `r omega` stands for corners `x = r sqrt(q) sigma omega`.
///
/// It is the positive root of `sum_j (r omega_j + A_j / (a_j sqrt(q) sigma))^2 = 1`
/// with `A_j = arctan(sqrt(q) omega_j)`.
pub fn esigma_radius(a: &[f64], q: usize, sigma: f64, omega: &[f64]) -> Result<f64> {
    let sq = (q as f64).sqrt();
    let mut lin = 0.0;
    let mut cst = 0.0;
    for (&aj, &wj) in a.iter().zip(omega) {
        let shift = (sq * wj).atan() / (aj * sq * sigma);
        lin += wj * shift;
        cst += shift * shift;
    }
    let disc = lin * lin + 1.0 - cst;
    let rho = -lin + disc.max(0.0).sqrt();
    if !(disc >= 0.0) || !(rho > 0.0) {
        return Err(SteklovError::Domain(format!(
            "E_sigma has no positive radius at sigma = {sigma}; sigma is too small"
        )));
    }
    Ok(rho)
}

/// `Vol_p(E_sigma)` in lattice coordinates `n / sigma`, over all orthants.
pub fn esigma_volume(c: &Cuboid, b: &Bipartition, sigma: f64, nodes: usize) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(SteklovError::arg("sigma", format!("must be positive, got {sigma}")));
    }
    let p = b.p();
    let q = b.q();
    let a: Vec<f64> = b.trig().iter().map(|&i| c.a(i)).collect();
    let sq = (q as f64).sqrt();
    let jac: f64 = a.iter().map(|aj| 2.0 * aj * sq / PI).product();
    let failed = std::sync::atomic::AtomicBool::new(false);
    let integral = tensor_gauss_legendre(p - 1, nodes, 0.0, FRAC_PI_2, |theta| {
        let mut omega = vec![0.0; p];
        let ds = direction(theta, &mut omega);
        match esigma_radius(&a, q, sigma, &omega) {
            Ok(rho) => rho.powi(p as i32) / p as f64 * ds,
            Err(_) => {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                0.0
            }
        }
    })?;
    if failed.into_inner() {
        return Err(SteklovError::Domain(format!(
            "E_sigma has no positive radius at some node for sigma = {sigma}"
        )));
    }
    Ok(2f64.powi(p as i32) * jac * integral)
}

/// Two-term expansion of `Vol_p(E_sigma)`: `(leading, first-order coefficient)`
/// so that `Vol ~ leading - coeff / sigma`.
pub fn esigma_expansion(c: &Cuboid, b: &Bipartition, g: f64) -> (f64, f64) {
    let p = b.p() as i32;
    let sq = (b.q() as f64).sqrt();
    let a: Vec<f64> = b.trig().iter().map(|&i| c.a(i)).collect();
    let prod: f64 = a.iter().product();
    let leading = 2f64.powi(p) * sq.powi(p) / PI.powi(p) * unit_ball_volume(p as usize) * prod;
    let sym: f64 = (0..a.len())
        .map(|j| a.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| v).product::<f64>())
        .sum();
    let coeff = 2f64.powi(2 * p) * sq.powi(p - 1) * g / PI.powi(p) * sym;
    (leading, coeff)
}

/// Leading term of the overcount on the coordinate hyperplanes for one
/// bipartition: `sqrt(q)^{p-1} omega_{p-1} sigma^{p-1} / (2 pi^{p-1}) sum_j prod_{i!=j} a_i`.
pub fn hyperplane_overcount(c: &Cuboid, b: &Bipartition, sigma: f64) -> f64 {
    let p = b.p() as i32;
    let sq = (b.q() as f64).sqrt();
    let a: Vec<f64> = b.trig().iter().map(|&i| c.a(i)).collect();
    let sym: f64 = (0..a.len())
        .map(|j| a.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| v).product::<f64>())
        .sum();
    sq.powi(p - 1) * unit_ball_volume(b.p() - 1) * sigma.powi(p - 1) / (2.0 * PI.powi(p - 1)) * sym
}

/// Direct count of the same overcount: half the number of lattice points with
/// exactly one vanishing trigonometric index whose approximate eigenvalue is
/// below `sigma`.
pub fn hyperplane_overcount_direct(c: &Cuboid, b: &Bipartition, sigma: f64) -> Result<f64> {
    if b.p() < 2 {
        return Err(SteklovError::arg("p", "need at least two trigonometric slots"));
    }
    let mut total = 0usize;
    for &drop in b.trig() {
        // a zero index contributes alpha~ = 0; the rest see a smaller trig set
        let keep: Vec<usize> = b.trig().iter().copied().filter(|&i| i != drop).collect();
        let sides: Vec<f64> = keep.iter().chain(b.hyp()).map(|&i| c.a(i)).collect();
        let sub = Cuboid::new(sides)?;
        let sub_b = Bipartition::from_trig(sub.dim(), &(0..keep.len()).collect::<Vec<_>>())?;
        total += count_boxes_below(&sub, &sub_b, sigma);
    }
    Ok(0.5 * total as f64)
}

/// Exponent `eta` used to scale the remainder: `2/3` for `d = 3`,
/// `d - 2 - 1/(d - 1)` for `d >= 4`, and `0` for `d = 2`.
pub fn remainder_exponent(d: usize) -> f64 {
    match d {
        0..=2 => 0.0,
        3 => 2.0 / 3.0,
        _ => d as f64 - 2.0 - 1.0 / (d as f64 - 1.0),
    }
}

/// One sample of the counting function against its asymptotics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub main: f64,
    /// Absent in dimension 2, where the law has one term.
    pub second: Option<f64>,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Leading and second Weyl terms for a cuboid, usable at any `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylTerms {
    d: usize,
    main_coeff: f64,
    second_coeff: Option<f64>,
}

impl WeylTerms {
    pub fn new(c: &Cuboid, quad: &Quadrature) -> Result<Self> {
        let d = c.dim();
        if d == 2 {
            let c1 = unit_ball_volume(1) / (2.0 * PI);
            return Ok(WeylTerms { d, main_coeff: c1 * c.surface_area(), second_coeff: None });
        }
        let k = weyl_constants(d, quad)?;
        Ok(WeylTerms {
            d,
            main_coeff: k.c1 * c.facet_volume(1)?,
            second_coeff: Some(k.c2 * c.facet_volume(2)?),
        })
    }

    pub fn main(&self, sigma: f64) -> f64 {
        self.main_coeff * sigma.powi(self.d as i32 - 1)
    }

    pub fn second(&self, sigma: f64) -> Option<f64> {
        self.second_coeff.map(|k| k * sigma.powi(self.d as i32 - 2))
    }

    pub fn row(&self, sigma: f64, n: u64) -> WeylRow {
        let main = self.main(sigma);
        let second = self.second(sigma);
        let resid = n as f64 - main - second.unwrap_or(0.0);
        let r = if self.d == 2 { resid } else { resid / sigma.powf(remainder_exponent(self.d)) };
        WeylRow { sigma, n, main, second, r }
    }
}

/// Counting function from approximate eigenvalues against the two-term law on
/// a grid of `sigma` values.
pub fn remainder_table(c: &Cuboid, sigma_grid: &[f64], quad: &Quadrature) -> Result<Vec<WeylRow>> {
    if sigma_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SteklovError::arg("sigma_grid", "must be strictly increasing"));
    }
    if sigma_grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(SteklovError::arg("sigma_grid", "entries must be positive and finite"));
    }
    let Some(&top) = sigma_grid.last() else {
        return Ok(Vec::new());
    };
    let terms = WeylTerms::new(c, quad)?;
    let count = CountingFunction::new(c, top)?;
    sigma_grid
        .iter()
        .map(|&s| Ok(terms.row(s, count.count(s)?)))
        .collect()
}
