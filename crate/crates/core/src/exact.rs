//! Exact eigenvalues from the compatibility and harmonicity equations.
//!
//! A separated eigenfunction with trigonometric rates `alpha` on `trig` and
//! hyperbolic rates `beta` on `hyp` is harmonic when `|alpha|^2 = |beta|^2`
//! and satisfies the boundary condition when every one-dimensional factor
//! parameter equals `sigma`. For a fixed fine-grid box and fixed hyperbolic
//! parities, `alpha(sigma)` decreases and `beta(sigma)` increases, so
//! `F(sigma) = |alpha|^2 - |beta|^2` has at most one root.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::factors1d::{hyp_derivative, hyp_value, invert_hyp, invert_trig, TrigBranch};
use crate::geometry::{
    bipartitions, ell_hyp_mask, for_each_box, hyp_patterns, Bipartition, BoxIndex, Cuboid,
};
use crate::root::find_root;

/// Relative tolerance for harmonicity when searching the linear-factor family.
pub const HARMONIC_TOL: f64 = 1e-9;

/// Relative gap below which neighbouring eigenvalues are grouped into a cluster.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Tolerance for treating two half-lengths as equal.
const EQUAL_SIDE_TOL: f64 = 1e-12;

/// One exact eigenvalue together with the rates of its eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub sigma: f64,
    /// Rates on the trigonometric slots, in the order of `bipartition.trig()`.
    pub alpha: Vec<f64>,
    /// Rates on the hyperbolic slots, in the order of `bipartition.hyp()`.
    pub beta: Vec<f64>,
    pub box_index: BoxIndex,
    /// sinh (0) / cosh (1) choice on the hyperbolic slots.
    pub ell_hyp: Vec<u8>,
    pub bipartition: Bipartition,
}

/// Largest relative compatibility and harmonicity residuals of a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub compatibility: f64,
    pub harmonicity: f64,
}

impl EigenSolution {
    pub fn residuals(&self, c: &Cuboid) -> Residuals {
        let scale = self.sigma.max(f64::MIN_POSITIVE);
        let mut compat: f64 = 0.0;
        for (k, &i) in self.bipartition.trig().iter().enumerate() {
            let br = TrigBranch::new(c.a(i), self.box_index.0[k]);
            compat = compat.max((br.value(self.alpha[k]) - self.sigma).abs() / scale);
        }
        for (k, &j) in self.bipartition.hyp().iter().enumerate() {
            let h = hyp_value(c.a(j), self.ell_hyp[k], self.beta[k]);
            compat = compat.max((h - self.sigma).abs() / scale);
        }
        let a2: f64 = self.alpha.iter().map(|x| x * x).sum();
        let b2: f64 = self.beta.iter().map(|x| x * x).sum();
        Residuals {
            compatibility: compat,
            harmonicity: (a2 - b2).abs() / a2.max(f64::MIN_POSITIVE),
        }
    }
}

/// The monotone reduction of one (box, hyperbolic parity) problem.
struct Reduction {
    branches: Vec<TrigBranch>,
    hyp: Vec<(f64, u8)>,
}

impl Reduction {
    fn new(c: &Cuboid, b: &Bipartition, m: &BoxIndex, ell_hyp: &[u8]) -> Self {
        let branches = b
            .trig()
            .iter()
            .zip(m.entries())
            .map(|(&i, &mk)| TrigBranch::new(c.a(i), mk))
            .collect();
        let hyp = b.hyp().iter().zip(ell_hyp).map(|(&j, &e)| (c.a(j), e)).collect();
        Reduction { branches, hyp }
    }

    /// Lower end of the domain: `beta` exists only once sigma reaches every `1/a_j`
    /// of a sinh slot.
    fn lower(&self) -> f64 {
        self.hyp
            .iter()
            .filter(|(_, e)| *e == 0)
            .map(|(a, _)| 1.0 / a)
            .fold(0.0, f64::max)
    }

    /// Upper end of the domain: first sine boxes only reach up to `1/a_i`.
    fn upper(&self) -> f64 {
        self.branches.iter().map(|b| b.sup()).fold(f64::INFINITY, f64::min)
    }

    fn alpha(&self, sigma: f64) -> Result<Vec<f64>> {
        self.branches
            .iter()
            .map(|&br| {
                if sigma >= br.sup() {
                    // limit at the end of the first sine box
                    Ok(0.0)
                } else {
                    invert_trig(br, sigma)
                }
            })
            .collect()
    }

    fn beta(&self, sigma: f64) -> Result<Vec<f64>> {
        self.hyp.iter().map(|&(a, e)| invert_hyp(a, e, sigma)).collect()
    }

    /// `F(sigma)` and its derivative.
    fn eval(&self, sigma: f64) -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
        let alpha = self.alpha(sigma)?;
        let beta = self.beta(sigma)?;
        let mut f = 0.0;
        let mut df = 0.0;
        for (br, &x) in self.branches.iter().zip(&alpha) {
            f += x * x;
            if x > 0.0 {
                df += 2.0 * x / br.derivative(x);
            }
        }
        for (&(a, e), &y) in self.hyp.iter().zip(&beta) {
            f -= y * y;
            let dh = hyp_derivative(a, e, y);
            if dh > 0.0 {
                df -= 2.0 * y / dh;
            }
        }
        Ok((f, df, alpha, beta))
    }

    /// Sum of squared right corners of the box, an upper bound for `|alpha|^2`.
    fn corner_sq(&self) -> f64 {
        self.branches.iter().map(|b| b.right().powi(2)).sum()
    }
}

/// Solves for the unique eigenvalue attached to a fine-grid box and a choice of
/// hyperbolic parities. Returns `Ok(None)` when the box carries no solution.
pub fn solve_box(
    c: &Cuboid,
    b: &Bipartition,
    m: &BoxIndex,
    ell_hyp: &[u8],
) -> Result<Option<EigenSolution>> {
    if b.dim() != c.dim() {
        return Err(SteklovError::arg("bipartition", "dimension differs from the cuboid"));
    }
    if m.len() != b.p() {
        return Err(SteklovError::arg(
            "box",
            format!("expected {} entries, got {}", b.p(), m.len()),
        ));
    }
    if ell_hyp.len() != b.q() || ell_hyp.iter().any(|&e| e > 1) {
        return Err(SteklovError::arg(
            "ell_hyp",
            format!("expected {} entries in {{0,1}}, got {ell_hyp:?}", b.q()),
        ));
    }
    let red = Reduction::new(c, b, m, ell_hyp);
    let lo = red.lower();
    let sup = red.upper();
    if lo >= sup {
        return Ok(None);
    }
    let (f_lo, ..) = red.eval(lo)?;
    if f_lo <= 0.0 {
        return Ok(None);
    }
    let hi = if sup.is_finite() {
        let (f_hi, ..) = red.eval(sup)?;
        if f_hi >= 0.0 {
            return Ok(None);
        }
        sup
    } else {
        // beta_j >= sigma - 1/a_j, so F < 0 beyond this point
        let q = b.q() as f64;
        red.corner_sq().sqrt() / q.sqrt() + 1.0 / c.min_half_length() + 1e-9
    };
    let scale = red.corner_sq() + 1.0;
    let sigma = find_root(
        |s| match red.eval(s) {
            Ok((f, df, ..)) => (f, df),
            Err(_) => (f64::NAN, f64::NAN),
        },
        lo,
        hi,
        1e-15 * scale,
    )?;
    let (_, _, alpha, beta) = red.eval(sigma)?;
    Ok(Some(EigenSolution {
        sigma,
        alpha,
        beta,
        box_index: m.clone(),
        ell_hyp: ell_hyp.to_vec(),
        bipartition: b.clone(),
    }))
}

/// An eigenvalue from one of the finite exceptional families: a linear factor
/// on `linear` (forcing `sigma = 1/a` there), or a box touching a coordinate
/// hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalEigenvalue {
    pub sigma: f64,
    /// Coordinates carrying the linear factor `x_i`; empty for axis boxes.
    pub linear: Vec<usize>,
    pub trig: Vec<usize>,
    pub hyp: Vec<usize>,
    pub box_index: BoxIndex,
    pub ell_hyp: Vec<u8>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ExceptionalEigenvalue {
    fn from_solution(s: EigenSolution) -> Self {
        ExceptionalEigenvalue {
            sigma: s.sigma,
            linear: Vec::new(),
            trig: s.bipartition.trig().to_vec(),
            hyp: s.bipartition.hyp().to_vec(),
            box_index: s.box_index,
            ell_hyp: s.ell_hyp,
            alpha: s.alpha,
            beta: s.beta,
        }
    }
}

/// All eigenfunctions with a linear factor, and all solutions in boxes with a
/// zero entry. Both families are finite.
pub fn enumerate_exceptional(c: &Cuboid) -> Result<Vec<ExceptionalEigenvalue>> {
    let mut out = linear_factor_family(c)?;
    out.extend(axis_box_family(c)?);
    sort_exceptional(&mut out);
    Ok(out)
}

fn sort_exceptional(v: &mut [ExceptionalEigenvalue]) {
    v.sort_by(|x, y| {
        x.sigma
            .total_cmp(&y.sigma)
            .then_with(|| x.linear.cmp(&y.linear))
            .then_with(|| x.trig.cmp(&y.trig))
            .then_with(|| x.box_index.cmp(&y.box_index))
            .then_with(|| x.ell_hyp.cmp(&y.ell_hyp))
    });
}

/// Nonempty subsets of `items`, as index vectors, in binary counting order.
fn subsets(items: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1..1usize << items.len()).map(move |bits| {
        items
            .iter()
            .enumerate()
            .filter(|(k, _)| bits >> k & 1 == 1)
            .map(|(_, &i)| i)
            .collect()
    })
}

fn linear_factor_family(c: &Cuboid) -> Result<Vec<ExceptionalEigenvalue>> {
    let d = c.dim();
    let mut out = Vec::new();
    // groups of coordinates sharing a half-length
    let mut seen = vec![false; d];
    for i in 0..d {
        if seen[i] {
            continue;
        }
        let a = c.a(i);
        let group: Vec<usize> = (0..d)
            .filter(|&j| (c.a(j) - a).abs() <= EQUAL_SIDE_TOL * a)
            .collect();
        for &j in &group {
            seen[j] = true;
        }
        let sigma = 1.0 / a;
        for linear in subsets(&group) {
            let rest: Vec<usize> = (0..d).filter(|j| !linear.contains(j)).collect();
            if rest.is_empty() {
                out.push(ExceptionalEigenvalue {
                    sigma,
                    linear,
                    trig: vec![],
                    hyp: vec![],
                    box_index: BoxIndex(vec![]),
                    ell_hyp: vec![],
                    alpha: vec![],
                    beta: vec![],
                });
                continue;
            }
            if rest.len() < 2 {
                // a single trig or hyperbolic factor cannot be harmonic
                continue;
            }
            for trig in subsets(&rest) {
                if trig.len() == rest.len() {
                    continue;
                }
                let hyp: Vec<usize> = rest.iter().copied().filter(|j| !trig.contains(j)).collect();
                for ell in hyp_patterns(hyp.len()) {
                    out.extend(linear_factor_candidates(c, sigma, &linear, &trig, &hyp, &ell)?);
                }
            }
        }
    }
    Ok(out)
}

/// Fixed-sigma search: betas are determined, so only finitely many trig boxes
/// can balance them.
fn linear_factor_candidates(
    c: &Cuboid,
    sigma: f64,
    linear: &[usize],
    trig: &[usize],
    hyp: &[usize],
    ell: &[u8],
) -> Result<Vec<ExceptionalEigenvalue>> {
    let mut beta = Vec::with_capacity(hyp.len());
    for (&j, &e) in hyp.iter().zip(ell) {
        match invert_hyp(c.a(j), e, sigma) {
            // a vanishing sinh rate is itself a linear factor, counted elsewhere
            Ok(x) if x > 0.0 => beta.push(x),
            Ok(_) | Err(SteklovError::NoSolution(_)) => return Ok(vec![]),
            Err(e) => return Err(e),
        }
    }
    let b2: f64 = beta.iter().map(|x| x * x).sum();
    // restrict to the trig coordinates through a sub-cuboid
    let sub_sides: Vec<f64> = trig.iter().chain(hyp).map(|&i| c.a(i)).collect();
    let sub = Cuboid::new(sub_sides)?;
    let sub_b = Bipartition::from_trig(sub.dim(), &(0..trig.len()).collect::<Vec<_>>())?;
    let mut boxes = Vec::new();
    let radius = b2.sqrt() * (1.0 + 1e-12) + 1e-12;
    for_each_box(&sub, &sub_b, radius, 0, &mut |m| boxes.push(m.to_vec()));

    let mut out = Vec::new();
    for m in boxes {
        let mut alpha = Vec::with_capacity(trig.len());
        let mut ok = true;
        for (&i, &mk) in trig.iter().zip(&m) {
            let br = TrigBranch::new(c.a(i), mk);
            if sigma >= br.sup() {
                ok = false;
                break;
            }
            alpha.push(invert_trig(br, sigma)?);
        }
        if !ok {
            continue;
        }
        let a2: f64 = alpha.iter().map(|x| x * x).sum();
        if (a2 - b2).abs() <= HARMONIC_TOL * a2.max(b2) {
            out.push(ExceptionalEigenvalue {
                sigma,
                linear: linear.to_vec(),
                trig: trig.to_vec(),
                hyp: hyp.to_vec(),
                box_index: BoxIndex(m),
                ell_hyp: ell.to_vec(),
                alpha,
                beta: beta.clone(),
            });
        }
    }
    Ok(out)
}

/// Boxes with a zero entry: there `sigma < 1/a_i`, which bounds `|alpha|`.
fn axis_box_family(c: &Cuboid) -> Result<Vec<ExceptionalEigenvalue>> {
    let d = c.dim();
    let inv = 1.0 / c.min_half_length();
    let mut out = Vec::new();
    for p in 1..d {
        for b in bipartitions(d, p)? {
            let radius = (b.q() as f64).sqrt() * 2.0 * inv;
            let mut boxes = Vec::new();
            for_each_box(c, &b, radius, 0, &mut |m| {
                if m.contains(&0) {
                    boxes.push(BoxIndex(m.to_vec()));
                }
            });
            for m in boxes {
                for ell in hyp_patterns(b.q()) {
                    if let Some(s) = solve_box(c, &b, &m, &ell)? {
                        out.push(ExceptionalEigenvalue::from_solution(s));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// How an eigenvalue record was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Quasi,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Quasi => "quasi",
        }
    }
}

/// One row of a computed spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub sigma: f64,
    pub method: Method,
    /// Number of trigonometric factors.
    pub p: usize,
    /// Bit `i` set when coordinate `i` is trigonometric.
    pub tau_mask: u64,
    pub box_index: BoxIndex,
    /// Bit `j` set when hyperbolic coordinate `j` carries cosh.
    pub ell_tau2_mask: u64,
    /// Bit `i` set when coordinate `i` carries a linear factor.
    pub linear_mask: u64,
    pub multiplicity: u64,
}

impl EigenvalueRecord {
    /// The constant eigenfunction.
    pub fn zero(method: Method) -> Self {
        EigenvalueRecord {
            sigma: 0.0,
            method,
            p: 0,
            tau_mask: 0,
            box_index: BoxIndex(vec![]),
            ell_tau2_mask: 0,
            linear_mask: 0,
            multiplicity: 1,
        }
    }

    fn from_solution(s: &EigenSolution) -> Self {
        EigenvalueRecord {
            sigma: s.sigma,
            method: Method::Exact,
            p: s.bipartition.p(),
            tau_mask: s.bipartition.trig_mask(),
            box_index: s.box_index.clone(),
            ell_tau2_mask: ell_hyp_mask(&s.bipartition, &s.ell_hyp),
            linear_mask: 0,
            multiplicity: 1,
        }
    }

    fn from_linear(e: &ExceptionalEigenvalue) -> Self {
        let mask = |v: &[usize]| v.iter().fold(0u64, |m, &i| m | 1 << i);
        let ell_mask = e
            .hyp
            .iter()
            .zip(&e.ell_hyp)
            .filter(|(_, &l)| l == 1)
            .fold(0u64, |m, (&j, _)| m | 1 << j);
        EigenvalueRecord {
            sigma: e.sigma,
            method: Method::Exact,
            p: e.trig.len(),
            tau_mask: mask(&e.trig),
            box_index: e.box_index.clone(),
            ell_tau2_mask: ell_mask,
            linear_mask: mask(&e.linear),
            multiplicity: 1,
        }
    }
}

/// Deterministic ordering used for every emitted spectrum.
pub fn sort_records(v: &mut [EigenvalueRecord]) {
    v.sort_by(|x, y| {
        x.sigma
            .total_cmp(&y.sigma)
            .then_with(|| x.p.cmp(&y.p))
            .then_with(|| x.tau_mask.cmp(&y.tau_mask))
            .then_with(|| x.linear_mask.cmp(&y.linear_mask))
            .then_with(|| x.box_index.cmp(&y.box_index))
            .then_with(|| x.ell_tau2_mask.cmp(&y.ell_tau2_mask))
    });
}

/// All exact solutions below `sigma_max` for one bipartition, boxes included
/// with zero entries.
pub fn solutions_below(c: &Cuboid, b: &Bipartition, sigma_max: f64) -> Result<Vec<EigenSolution>> {
    // alpha exceeds the lower corner and |alpha|^2 = |beta|^2 <= q (sigma + 1/a_min)^2
    let radius = (b.q() as f64).sqrt() * (sigma_max + 1.0 / c.min_half_length());
    let mut boxes = Vec::new();
    for_each_box(c, b, radius, 0, &mut |m| boxes.push(BoxIndex(m.to_vec())));
    let patterns = hyp_patterns(b.q());
    let found: Result<Vec<Vec<EigenSolution>>> = boxes
        .par_iter()
        .map(|m| {
            let mut v = Vec::new();
            for ell in &patterns {
                if let Some(s) = solve_box(c, b, m, ell)? {
                    if s.sigma < sigma_max {
                        v.push(s);
                    }
                }
            }
            Ok(v)
        })
        .collect();
    Ok(found?.into_iter().flatten().collect())
}

/// Every eigenvalue strictly below `sigma_max`, listed individually and sorted.
///
/// Includes the constant eigenfunction (`sigma = 0`), every box solution and
/// every linear-factor eigenfunction.
pub fn spectrum_exact(c: &Cuboid, sigma_max: f64) -> Result<Vec<EigenvalueRecord>> {
    if !(sigma_max > 0.0) || !sigma_max.is_finite() {
        return Err(SteklovError::arg(
            "sigma_max",
            format!("must be positive and finite, got {sigma_max}"),
        ));
    }
    let mut out = vec![EigenvalueRecord::zero(Method::Exact)];
    for p in 1..c.dim() {
        for b in bipartitions(c.dim(), p)? {
            out.extend(solutions_below(c, &b, sigma_max)?.iter().map(EigenvalueRecord::from_solution));
        }
    }
    for e in linear_factor_family(c)? {
        if e.sigma < sigma_max {
            out.push(EigenvalueRecord::from_linear(&e));
        }
    }
    sort_records(&mut out);
    Ok(out)
}

/// A run of eigenvalues whose consecutive gaps are below `rel_gap * sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub sigma: f64,
    pub spread: f64,
    pub size: u64,
}

/// Groups a sorted spectrum into clusters.
pub fn group_clusters(records: &[EigenvalueRecord], rel_gap: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut start = 0.0;
    let mut last = f64::NEG_INFINITY;
    for r in records {
        let joins = out
            .last()
            .map(|_| r.sigma - last <= rel_gap * r.sigma.abs().max(f64::MIN_POSITIVE))
            .unwrap_or(false);
        if joins {
            let cl = out.last_mut().expect("nonempty");
            cl.size += r.multiplicity;
            cl.spread = r.sigma - start;
            cl.sigma += (r.sigma - cl.sigma) * r.multiplicity as f64 / cl.size as f64;
        } else {
            start = r.sigma;
            out.push(Cluster { sigma: r.sigma, spread: 0.0, size: r.multiplicity });
        }
        last = r.sigma;
    }
    out
}

/// Number of listed eigenvalues strictly below `sigma`, with multiplicity.
pub fn count_below(records: &[EigenvalueRecord], sigma: f64) -> u64 {
    records.iter().filter(|r| r.sigma < sigma).map(|r| r.multiplicity).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Cuboid {
        Cuboid::cube(2, 1.0).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn square_first_box_with_cosh() {
        let b = Bipartition::from_trig(2, &[0]).unwrap();
        let s = solve_box(&square(), &b, &BoxIndex(vec![0]), &[1]).unwrap().unwrap();
        // alpha = beta = x with tan x tanh x = 1
        let x = bisect(|x| x.tan() * x.tanh() - 1.0, 0.1, 1.5);
        assert!((s.alpha[0] - x).abs() < 1e-10);
        assert!((s.sigma - x * x.tanh()).abs() < 1e-10);
        assert!((s.sigma - 0.688_252_742_336_276_3).abs() < 1e-12);
        let r = s.residuals(&square());
        assert!(r.compatibility < 1e-12 && r.harmonicity < 1e-12);
    }

    #[test]
    fn square_first_box_with_sinh_has_no_solution() {
        // cot x < coth x for every x > 0, so alpha = beta is impossible
        let b = Bipartition::from_trig(2, &[0]).unwrap();
        assert!(solve_box(&square(), &b, &BoxIndex(vec![0]), &[0]).unwrap().is_none());
    }

    #[test]
    fn solve_box_rejects_bad_shapes() {
        let b = Bipartition::from_trig(2, &[0]).unwrap();
        assert!(solve_box(&square(), &b, &BoxIndex(vec![0, 1]), &[1]).is_err());
        assert!(solve_box(&square(), &b, &BoxIndex(vec![0]), &[2]).is_err());
    }

    #[test]
    fn alpha_stays_in_its_box() {
        let c = Cuboid::new(vec![0.7, 1.2, 0.9]).unwrap();
        let b = Bipartition::from_trig(3, &[0, 2]).unwrap();
        for m0 in 0..6 {
            for m1 in 0..6 {
                for ell in hyp_patterns(1) {
                    let m = BoxIndex(vec![m0, m1]);
                    if let Some(s) = solve_box(&c, &b, &m, &ell).unwrap() {
                        for (k, &i) in b.trig().iter().enumerate() {
                            let br = TrigBranch::new(c.a(i), m.0[k]);
                            assert!(s.alpha[k] > br.left() && s.alpha[k] <= br.right());
                        }
                        let r = s.residuals(&c);
                        assert!(r.compatibility < 1e-9 && r.harmonicity < 1e-9, "{r:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn cube_cluster_is_tight() {
        let c = Cuboid::cube(3, 1.0).unwrap();
        let b = Bipartition::from_trig(3, &[0, 1]).unwrap();
        let m = BoxIndex(vec![20, 20]);
        let s0 = solve_box(&c, &b, &m, &[0]).unwrap().unwrap();
        let s1 = solve_box(&c, &b, &m, &[1]).unwrap().unwrap();
        assert!((s0.sigma - s1.sigma).abs() < 1e-10);
    }

    #[test]
    fn square_low_spectrum() {
        let eigs = spectrum_exact(&square(), 1.1).unwrap();
        let sig: Vec<f64> = eigs.iter().map(|r| r.sigma).collect();
        assert_eq!(sig.len(), 4, "{sig:?}");
        assert_eq!(sig[0], 0.0);
        assert!((sig[1] - 0.688_252_742_336_276_3).abs() < 1e-12);
        assert!((sig[2] - sig[1]).abs() < 1e-14);
        assert_eq!(sig[3], 1.0);
        assert_eq!(eigs[3].linear_mask, 0b11);
    }

    #[test]
    fn tiny_sigma_max_only_constant() {
        let c = Cuboid::new(vec![0.4, 1.1, 2.0]).unwrap();
        let eigs = spectrum_exact(&c, 1e-9).unwrap();
        assert_eq!(eigs.len(), 1);
        assert_eq!(eigs[0].sigma, 0.0);
        assert!(spectrum_exact(&c, 0.0).is_err());
    }

    #[test]
    fn product_of_coordinates_is_an_eigenfunction() {
        // u = x1 x2: on x1 = +-1 the outward derivative is +-x2 = u
        let ex = enumerate_exceptional(&square()).unwrap();
        assert!(ex.iter().any(|e| e.sigma == 1.0 && e.linear == vec![0, 1]));
    }

    #[test]
    fn unequal_rectangle_has_no_full_linear_product() {
        let c = Cuboid::new(vec![1.0, 2.0]).unwrap();
        let ex = enumerate_exceptional(&c).unwrap();
        assert!(ex.iter().all(|e| e.linear.len() < 2));
        for e in &ex {
            if !e.linear.is_empty() {
                let a = c.a(e.linear[0]);
                assert!((e.sigma - 1.0 / a).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cube_exceptional_bounded() {
        let c = Cuboid::cube(3, 1.0).unwrap();
        let ex = enumerate_exceptional(&c).unwrap();
        assert!(!ex.is_empty());
        for e in &ex {
            assert!(e.sigma <= 1.0 + 3.0);
        }
    }

    #[test]
    fn f_is_decreasing() {
        let c = Cuboid::new(vec![0.8, 1.4, 0.5]).unwrap();
        let b = Bipartition::from_trig(3, &[1]).unwrap();
        for m in [1u64, 4, 9] {
            for ell in hyp_patterns(2) {
                let red = Reduction::new(&c, &b, &BoxIndex(vec![m]), &ell);
                let lo = red.lower() + 1e-6;
                let mut prev = f64::INFINITY;
                for k in 0..200 {
                    let s = lo + k as f64 * 0.05;
                    let (f, df, ..) = red.eval(s).unwrap();
                    assert!(f < prev);
                    assert!(df < 0.0);
                    prev = f;
                }
            }
        }
    }

    #[test]
    fn clusters_group_close_values() {
        let mk = |s| EigenvalueRecord { sigma: s, ..EigenvalueRecord::zero(Method::Exact) };
        let recs = vec![mk(0.0), mk(1.0), mk(1.0 + 1e-9), mk(2.0)];
        let cl = group_clusters(&recs, CLUSTER_GAP);
        assert_eq!(cl.len(), 3);
        assert_eq!(cl[1].size, 2);
        assert_eq!(count_below(&recs, 1.5), 3);
    }

    #[test]
    fn square_count_tracks_one_term_law() {
        let eigs = spectrum_exact(&square(), 20.0).unwrap();
        for k in 10..200 {
            let s = k as f64 * 0.1;
            let n = count_below(&eigs, s) as f64;
            assert!((n - 8.0 / std::f64::consts::PI * s).abs() <= 5.0);
        }
    }
}
