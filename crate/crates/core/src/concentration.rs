//! Boundary mass of separated eigenfunctions and its concentration on the
//! codimension-`q` edges where all hyperbolic coordinates sit at a face.
//!
//! A separated eigenfunction is a product of one-dimensional factors, so the
//! integral of `u^2` over an axis-aligned patch of a face is a product of 1-D
//! closed forms times the squared transverse factor at the face. Everything is
//! carried as logarithms because `cosh^2(beta a)` overflows long before the
//! mass ratios become interesting.
//!
//! Collars `{dist(x, X) < eps}` around the edges are round in the hyperbolic
//! coordinates; those pieces are integrated with composite Gauss-Legendre rules
//! on the outer variables and a closed form on the innermost one.

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::exact::{solve_box, EigenSolution};
use crate::geometry::{Bipartition, BoxIndex, Cuboid};

const LN_2: f64 = std::f64::consts::LN_2;
/// Gauss-Legendre points per panel in collar integrals.
const PANEL_NODES: usize = 20;

/// One squared separated factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    Sin(f64),
    Cos(f64),
    Sinh(f64),
    Cosh(f64),
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln int_{lo}^{hi} exp(2 s rate x) dx` for `s = +1` or `-1`.
fn log_exp_integral(rate: f64, lo: f64, hi: f64, s: f64) -> f64 {
    let w = hi - lo;
    let k = 2.0 * rate;
    let h = if k * w < 1e-12 { w } else { -(-k * w).exp_m1() / k };
    let anchor = if s > 0.0 { k * hi } else { -k * lo };
    anchor + h.ln()
}

impl Factor {
    fn rate(&self) -> f64 {
        match *self {
            Factor::Sin(r) | Factor::Cos(r) | Factor::Sinh(r) | Factor::Cosh(r) => r,
        }
    }

    /// `ln f(x)^2`; `-inf` at a zero of the factor.
    pub fn log_sq(&self, x: f64) -> f64 {
        let x = x.abs();
        match *self {
            Factor::Sin(r) => 2.0 * (r * x).sin().abs().ln(),
            Factor::Cos(r) => 2.0 * (r * x).cos().abs().ln(),
            Factor::Cosh(r) => 2.0 * (r * x + (-2.0 * r * x).exp().ln_1p() - LN_2),
            Factor::Sinh(r) => {
                let t = r * x;
                if t < 20.0 {
                    2.0 * t.sinh().ln()
                } else {
                    2.0 * (t + (-(-2.0 * t).exp()).ln_1p() - LN_2)
                }
            }
        }
    }

    /// `ln int_{lo}^{hi} f(x)^2 dx`, closed form.
    pub fn log_integral(&self, lo: f64, hi: f64) -> f64 {
        let w = hi - lo;
        if w <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            Factor::Sin(r) | Factor::Cos(r) => {
                let sign = if matches!(self, Factor::Sin(_)) { -1.0 } else { 1.0 };
                let v = if r == 0.0 {
                    if sign > 0.0 { w } else { 0.0 }
                } else {
                    0.5 * w + sign * ((2.0 * r * hi).sin() - (2.0 * r * lo).sin()) / (4.0 * r)
                };
                v.max(0.0).ln()
            }
            Factor::Cosh(r) => log_sum_exp(&[
                log_exp_integral(r, lo, hi, 1.0),
                log_exp_integral(r, lo, hi, -1.0),
                (2.0 * w).ln(),
            ]) - 2.0 * LN_2,
            Factor::Sinh(r) => {
                let t = r * lo.abs().max(hi.abs());
                if t < 1e-4 {
                    let v = r * r * (hi.powi(3) - lo.powi(3)) / 3.0
                        + r.powi(4) * (hi.powi(5) - lo.powi(5)) / 15.0;
                    v.max(0.0).ln()
                } else if t < 20.0 {
                    let v = ((2.0 * r * hi).sinh() - (2.0 * r * lo).sinh()) / (4.0 * r) - 0.5 * w;
                    v.max(0.0).ln()
                } else {
                    let s = log_sum_exp(&[
                        log_exp_integral(r, lo, hi, 1.0),
                        log_exp_integral(r, lo, hi, -1.0),
                    ]);
                    s + (-2.0 * w * (-s).exp()).ln_1p() - 2.0 * LN_2
                }
            }
        }
    }
}

/// Per-coordinate factors of a separated solution, in coordinate order.
pub fn factors(sol: &EigenSolution) -> Vec<Factor> {
    let b = &sol.bipartition;
    let mut out = vec![Factor::Cos(0.0); b.dim()];
    for (k, &i) in b.trig().iter().enumerate() {
        out[i] = if sol.box_index.ell(k) == 0 {
            Factor::Sin(sol.alpha[k])
        } else {
            Factor::Cos(sol.alpha[k])
        };
    }
    for (k, &j) in b.hyp().iter().enumerate() {
        out[j] = if sol.ell_hyp[k] == 0 {
            Factor::Sinh(sol.beta[k])
        } else {
            Factor::Cosh(sol.beta[k])
        };
    }
    out
}

/// Axis-aligned rectangle on the face `x_axis = +-a_axis`.
///
/// `ranges` has one entry per coordinate; the entry at `axis` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub axis: usize,
    pub upper: bool,
    pub ranges: Vec<(f64, f64)>,
}

impl Patch {
    /// The whole face.
    pub fn face(c: &Cuboid, axis: usize, upper: bool) -> Patch {
        Patch {
            axis,
            upper,
            ranges: c.half_lengths().iter().map(|&a| (-a, a)).collect(),
        }
    }

    /// All `2d` faces.
    pub fn full_boundary(c: &Cuboid) -> Vec<Patch> {
        (0..c.dim())
            .flat_map(|i| [Patch::face(c, i, false), Patch::face(c, i, true)])
            .collect()
    }

    /// Reflection `x_j -> -x_j`.
    pub fn mirrored(&self, j: usize) -> Patch {
        let mut p = self.clone();
        if j == self.axis {
            p.upper = !p.upper;
        } else {
            let (lo, hi) = p.ranges[j];
            p.ranges[j] = (-hi, -lo);
        }
        p
    }

    fn validate(&self, c: &Cuboid) -> Result<()> {
        if self.axis >= c.dim() || self.ranges.len() != c.dim() {
            return Err(SteklovError::arg(
                "region",
                format!("patch on axis {} with {} ranges in dimension {}", self.axis, self.ranges.len(), c.dim()),
            ));
        }
        for (j, &(lo, hi)) in self.ranges.iter().enumerate() {
            let a = c.a(j);
            let slack = 1e-12 * a;
            if j != self.axis && !(lo >= -a - slack && hi <= a + slack && lo <= hi) {
                return Err(SteklovError::arg(
                    "region",
                    format!("range [{lo}, {hi}] on axis {j} leaves [-{a}, {a}]"),
                ));
            }
        }
        Ok(())
    }

    fn overlaps(&self, other: &Patch) -> bool {
        self.axis == other.axis
            && self.upper == other.upper
            && self.ranges.iter().zip(&other.ranges).enumerate().all(|(j, (x, y))| {
                j == self.axis || x.1.min(y.1) - x.0.max(y.0) > 0.0
            })
    }
}

/// Boundary trace of a separated eigenfunction, normalized to unit `L^2` mass.
#[derive(Debug, Clone)]
pub struct Trace {
    half: Vec<f64>,
    factors: Vec<Factor>,
    log_norm: f64,
    nodes: Vec<(f64, f64)>,
}

impl Trace {
    pub fn new(c: &Cuboid, sol: &EigenSolution) -> Result<Trace> {
        if sol.bipartition.dim() != c.dim() {
            return Err(SteklovError::arg("solution", "dimension differs from the cuboid"));
        }
        Self::from_factors(c, factors(sol))
    }

    pub fn from_factors(c: &Cuboid, factors: Vec<Factor>) -> Result<Trace> {
        if factors.len() != c.dim() {
            return Err(SteklovError::arg("factors", "one factor per coordinate required"));
        }
        let half = c.half_lengths().to_vec();
        let mut faces = Vec::with_capacity(c.dim());
        for k in 0..c.dim() {
            let rest: f64 = (0..c.dim())
                .filter(|&j| j != k)
                .map(|j| factors[j].log_integral(-half[j], half[j]))
                .sum();
            // both faces carry the same mass since every squared factor is even
            faces.push(LN_2 + factors[k].log_sq(half[k]) + rest);
        }
        let log_norm = log_sum_exp(&faces);
        if !log_norm.is_finite() {
            return Err(SteklovError::Domain("eigenfunction vanishes on the boundary".into()));
        }
        let nodes = GaussLegendre::new(PANEL_NODES)
            .map_err(|e| SteklovError::Domain(format!("quadrature rule: {e}")))?
            .as_node_weight_pairs()
            .to_vec();
        Ok(Trace { half, factors, log_norm, nodes })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// `ln` of the normalized mass of a single patch (no validation).
    fn log_patch(&self, p: &Patch) -> f64 {
        let face = self.factors[p.axis].log_sq(self.half[p.axis]);
        let rest: f64 = (0..self.half.len())
            .filter(|&j| j != p.axis)
            .map(|j| self.factors[j].log_integral(p.ranges[j].0, p.ranges[j].1))
            .sum();
        face + rest - self.log_norm
    }

    /// Normalized mass of a union of non-overlapping patches.
    pub fn mass(&self, c: &Cuboid, region: &[Patch]) -> Result<f64> {
        for (n, p) in region.iter().enumerate() {
            p.validate(c)?;
            if let Some(m) = region[..n].iter().position(|q| q.overlaps(p)) {
                return Err(SteklovError::arg(
                    "region",
                    format!("patches {m} and {n} overlap"),
                ));
            }
        }
        Ok(region.iter().map(|p| self.log_patch(p).exp()).sum())
    }

    // Collar integrals in the inward distance y = a_j - |x_j| from the face,
    // scaled by the face value f_j(a_j)^2.

    fn scaled_integral(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let a = self.half[j];
        let f = &self.factors[j];
        (f.log_integral(a - hi, a - lo) - f.log_sq(a)).exp()
    }

    fn scaled_value(&self, j: usize, y: f64) -> f64 {
        let a = self.half[j];
        let f = &self.factors[j];
        (f.log_sq(a - y) - f.log_sq(a)).exp()
    }

    /// Composite Gauss-Legendre over `[0, len]`, panels sized to the decay
    /// length of coordinate `j`.
    fn composite(&self, j: usize, len: f64, g: impl Fn(f64) -> f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        let panels = (0.5 * self.factors[j].rate() * len).ceil().clamp(1.0, 400.0) as usize;
        let h = len / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * h;
            for &(x, w) in &self.nodes {
                let y = mid + 0.5 * h * x;
                total += 0.5 * h * w * self.scaled_value(j, y) * g(y);
            }
        }
        total
    }

    /// Scaled integral over `{y in prod [0, a_j] : |y| < rho}`.
    fn ball(&self, coords: &[usize], rho: f64) -> f64 {
        match coords {
            [] => 1.0,
            [j] => self.scaled_integral(*j, 0.0, rho.min(self.half[*j])),
            [j, rest @ ..] => self.composite(*j, rho.min(self.half[*j]), |y| {
                self.ball(rest, (rho * rho - y * y).max(0.0).sqrt())
            }),
        }
    }

    /// Scaled integral over `{y in prod [0, a_j] : |y| >= rho}`, computed
    /// directly rather than as a difference so tiny values keep their digits.
    fn outside_ball(&self, coords: &[usize], rho: f64) -> f64 {
        match coords {
            [] => {
                if rho > 0.0 { 0.0 } else { 1.0 }
            }
            [j] => {
                let a = self.half[*j];
                self.scaled_integral(*j, rho.min(a), a)
            }
            [j, rest @ ..] => {
                let a = self.half[*j];
                let edge = rho.min(a);
                let full: f64 = rest.iter().map(|&k| self.scaled_integral(k, 0.0, self.half[k])).product();
                self.scaled_integral(*j, edge, a) * full
                    + self.composite(*j, edge, |y| {
                        self.outside_ball(rest, (rho * rho - y * y).max(0.0).sqrt())
                    })
            }
        }
    }

    fn log_faces(&self, coords: &[usize]) -> f64 {
        coords.iter().map(|&j| self.factors[j].log_sq(self.half[j])).sum()
    }

    /// Mass of `U_eps = {x on the boundary : x_trig in U, dist(x, U) < eps}` for
    /// a box `U` on one component of the edge set where every hyperbolic
    /// coordinate sits at a face. `u` lists one range per trigonometric slot.
    ///
    /// All `2^q` components carry the same mass because the squared factors
    /// are even.
    pub fn collar_mass(&self, b: &Bipartition, u: &[(f64, f64)], eps: f64) -> f64 {
        let trig = b.trig();
        let hyp = b.hyp();
        let along = |skip: Option<usize>| -> f64 {
            trig.iter()
                .zip(u)
                .filter(|(&i, _)| Some(i) != skip)
                .map(|(&i, &(lo, hi))| self.factors[i].log_integral(lo, hi))
                .sum()
        };
        let mut logs = Vec::new();
        // faces through the component: the other hyperbolic coordinates lie in a ball
        for &k in hyp {
            let rest: Vec<usize> = hyp.iter().copied().filter(|&j| j != k).collect();
            logs.push(
                self.factors[k].log_sq(self.half[k]) + along(None) + self.log_faces(&rest)
                    + self.ball(&rest, eps).ln(),
            );
        }
        // end faces of the trigonometric directions that U reaches
        for (&i, &(lo, hi)) in trig.iter().zip(u) {
            let a = self.half[i];
            let ends = (lo <= -a * (1.0 - 1e-12)) as u8 + (hi >= a * (1.0 - 1e-12)) as u8;
            if ends > 0 {
                let l = self.factors[i].log_sq(a) + along(Some(i)) + self.log_faces(hyp)
                    + self.ball(hyp, eps).ln();
                logs.push(l + (ends as f64).ln());
            }
        }
        (log_sum_exp(&logs) - self.log_norm).exp()
    }

    /// Mass at distance at least `eps` from every component of the edge set.
    pub fn off_collar_mass(&self, b: &Bipartition, eps: f64) -> f64 {
        let trig = b.trig();
        let hyp = b.hyp();
        let full = |skip: Option<usize>| -> f64 {
            trig.iter()
                .filter(|&&i| Some(i) != skip)
                .map(|&i| self.factors[i].log_integral(-self.half[i], self.half[i]))
                .sum()
        };
        let mut logs = Vec::new();
        for &k in hyp {
            let rest: Vec<usize> = hyp.iter().copied().filter(|&j| j != k).collect();
            // two faces, 2^r quadrants each
            logs.push(
                (1 + rest.len()) as f64 * LN_2 + self.factors[k].log_sq(self.half[k]) + full(None)
                    + self.log_faces(&rest)
                    + self.outside_ball(&rest, eps).ln(),
            );
        }
        for &i in trig {
            logs.push(
                (1 + hyp.len()) as f64 * LN_2 + self.factors[i].log_sq(self.half[i]) + full(Some(i))
                    + self.log_faces(hyp)
                    + self.outside_ball(hyp, eps).ln(),
            );
        }
        (log_sum_exp(&logs) - self.log_norm).exp()
    }
}

/// Normalized mass of `u^2` over a union of boundary patches.
pub fn boundary_mass(c: &Cuboid, sol: &EigenSolution, region: &[Patch]) -> Result<f64> {
    Trace::new(c, sol)?.mass(c, region)
}

/// One step of a concentration sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub k: u64,
    pub sigma: f64,
    pub mass_in_u_eps: f64,
    pub off_collar_mass: f64,
    pub target_ratio: f64,
    pub epsilon: f64,
}

/// Reports in increasing `k`; `stopped` explains an early end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRun {
    pub reports: Vec<MassReport>,
    pub stopped: Option<String>,
}

/// `Vol(U) / Vol(edge set)`: the limiting mass of `U_eps`.
pub fn target_ratio(c: &Cuboid, b: &Bipartition, u: &[(f64, f64)]) -> f64 {
    let vol_u: f64 = u.iter().map(|(lo, hi)| hi - lo).product();
    let vol_x: f64 = b.trig().iter().map(|&i| 2.0 * c.a(i)).product::<f64>() * (1u64 << b.q()) as f64;
    vol_u / vol_x
}

fn check_patch(c: &Cuboid, b: &Bipartition, u: &[(f64, f64)], eps: f64) -> Result<()> {
    if u.len() != b.p() {
        return Err(SteklovError::arg(
            "patch",
            format!("expected {} ranges, got {}", b.p(), u.len()),
        ));
    }
    for (&i, &(lo, hi)) in b.trig().iter().zip(u) {
        let a = c.a(i);
        if !(lo < hi && lo >= -a * (1.0 + 1e-12) && hi <= a * (1.0 + 1e-12)) {
            return Err(SteklovError::arg(
                "patch",
                format!("range [{lo}, {hi}] on axis {i} must be a nonempty part of [-{a}, {a}]"),
            ));
        }
    }
    if !(eps > 0.0 && eps < c.min_half_length()) {
        return Err(SteklovError::arg(
            "eps",
            format!("must lie in (0, {}), got {eps}", c.min_half_length()),
        ));
    }
    Ok(())
}

/// Mass report for the eigenfunction in box `(2k, ..., 2k)` with sine factors
/// on the trigonometric slots and cosh on the hyperbolic ones.
pub fn mass_report(c: &Cuboid, b: &Bipartition, u: &[(f64, f64)], eps: f64, k: u64) -> Result<MassReport> {
    check_patch(c, b, u, eps)?;
    let m = BoxIndex(vec![2 * k; b.p()]);
    let sol = solve_box(c, b, &m, &vec![1; b.q()])?
        .ok_or_else(|| SteklovError::NoSolution(format!("box {} has no solution", m.joined())))?;
    let trace = Trace::new(c, &sol)?;
    Ok(MassReport {
        k,
        sigma: sol.sigma,
        mass_in_u_eps: trace.collar_mass(b, u, eps),
        off_collar_mass: trace.off_collar_mass(b, eps),
        target_ratio: target_ratio(c, b, u),
        epsilon: eps,
    })
}

/// Reports for `k = 1..=k_max`. A failure at some `k` ends the run there.
pub fn concentration_sequence(
    c: &Cuboid,
    b: &Bipartition,
    u: &[(f64, f64)],
    eps: f64,
    k_max: u64,
) -> Result<ConcentrationRun> {
    check_patch(c, b, u, eps)?;
    let results: Vec<Result<MassReport>> =
        (1..=k_max).into_par_iter().map(|k| mass_report(c, b, u, eps, k)).collect();
    let mut reports = Vec::with_capacity(results.len());
    let mut stopped = None;
    for (k, r) in (1..=k_max).zip(results) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                stopped = Some(format!("k = {k}: {e}"));
                break;
            }
        }
    }
    Ok(ConcentrationRun { reports, stopped })
}

/// Least-squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(SteklovError::arg("fit", "need at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SteklovError::arg("fit", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r_squared })
}
