//! Cuboid geometry: facet volumes, bipartitions of the coordinates into
//! trigonometric and hyperbolic slots, and enumeration of lattice boxes.
//!
//! Coordinates are 0-based throughout the crate. Masks over coordinates use
//! bit `i` for coordinate `i`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};

/// The cuboid `(-a_1, a_1) x ... x (-a_d, a_d)`, given by its half-lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    half_lengths: Vec<f64>,
}

impl Cuboid {
    pub fn new(half_lengths: Vec<f64>) -> Result<Self> {
        if half_lengths.len() < 2 {
            return Err(SteklovError::arg(
                "half_lengths",
                format!("need at least 2 coordinates, got {}", half_lengths.len()),
            ));
        }
        if let Some(bad) = half_lengths.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(SteklovError::arg(
                "half_lengths",
                format!("every half-length must be positive and finite, got {bad}"),
            ));
        }
        Ok(Cuboid { half_lengths })
    }

    /// Cube of dimension `d` with half-length `a`.
    pub fn cube(d: usize, a: f64) -> Result<Self> {
        Cuboid::new(vec![a; d])
    }

    pub fn dim(&self) -> usize {
        self.half_lengths.len()
    }

    pub fn half_lengths(&self) -> &[f64] {
        &self.half_lengths
    }

    pub fn a(&self, i: usize) -> f64 {
        self.half_lengths[i]
    }

    pub fn min_half_length(&self) -> f64 {
        self.half_lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_half_length(&self) -> f64 {
        self.half_lengths.iter().copied().fold(0.0, f64::max)
    }

    /// Uniformly rescaled copy.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Cuboid::new(self.half_lengths.iter().map(|a| a * t).collect())
    }

    /// Largest relative deviation of a half-length from the maximal one.
    pub fn aspect_deviation(&self) -> f64 {
        let max = self.max_half_length();
        (max - self.min_half_length()) / max
    }

    pub fn is_cube(&self, tol: f64) -> bool {
        self.aspect_deviation() < tol
    }

    /// `Vol_{d-k}` of the union of the codimension-`k` facets.
    ///
    /// Equals `2^k * sum over (d-k)-subsets S of prod_{i in S} 2 a_i`; `k = 0`
    /// gives the volume of the cuboid itself.
    pub fn facet_volume(&self, codim: usize) -> Result<f64> {
        let d = self.dim();
        if codim > d {
            return Err(SteklovError::arg(
                "codim",
                format!("must lie in 0..={d}, got {codim}"),
            ));
        }
        let sides: Vec<f64> = self.half_lengths.iter().map(|a| 2.0 * a).collect();
        let sum = elementary_symmetric(&sides, d - codim);
        Ok(2f64.powi(codim as i32) * sum)
    }

    /// Total (d-1)-measure of the boundary.
    pub fn surface_area(&self) -> f64 {
        self.facet_volume(1).expect("codim 1 always valid")
    }

    pub fn volume(&self) -> f64 {
        self.facet_volume(0).expect("codim 0 always valid")
    }
}

/// `e_k(x)`: sum over k-subsets of the product of entries.
fn elementary_symmetric(x: &[f64], k: usize) -> f64 {
    // e[j] after processing a prefix holds e_j of that prefix
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &v in x {
        for j in (1..=k).rev() {
            e[j] += e[j - 1] * v;
        }
    }
    e[k]
}

/// Split of the coordinates into `p` trigonometric and `q = d - p` hyperbolic slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bipartition {
    trig: Vec<usize>,
    hyp: Vec<usize>,
}

impl Bipartition {
    /// Builds a bipartition of `0..d` from its trigonometric coordinates.
    pub fn from_trig(d: usize, trig: &[usize]) -> Result<Self> {
        let mut t = trig.to_vec();
        t.sort_unstable();
        t.dedup();
        if t.len() != trig.len() || t.iter().any(|&i| i >= d) {
            return Err(SteklovError::arg(
                "tau1",
                format!("coordinates must be distinct and below {d}, got {trig:?}"),
            ));
        }
        if t.is_empty() || t.len() >= d {
            return Err(SteklovError::arg(
                "tau1",
                format!("need 1 <= p <= d-1 trigonometric slots, got {}", t.len()),
            ));
        }
        let hyp = (0..d).filter(|i| !t.contains(i)).collect();
        Ok(Bipartition { trig: t, hyp })
    }

    pub fn trig(&self) -> &[usize] {
        &self.trig
    }

    pub fn hyp(&self) -> &[usize] {
        &self.hyp
    }

    pub fn p(&self) -> usize {
        self.trig.len()
    }

    pub fn q(&self) -> usize {
        self.hyp.len()
    }

    pub fn dim(&self) -> usize {
        self.p() + self.q()
    }

    /// Bitmask with bit `i` set when coordinate `i` is trigonometric.
    pub fn trig_mask(&self) -> u64 {
        self.trig.iter().fold(0, |m, &i| m | (1 << i))
    }
}

/// All bipartitions with `p` trigonometric slots, in lexicographic order of the
/// trigonometric index set.
pub fn bipartitions(d: usize, p: usize) -> Result<Vec<Bipartition>> {
    if d < 2 {
        return Err(SteklovError::arg("d", format!("need d >= 2, got {d}")));
    }
    if p == 0 || p >= d {
        return Err(SteklovError::arg(
            "p",
            format!("need 1 <= p <= {}, got {p}", d - 1),
        ));
    }
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..p).collect();
    loop {
        out.push(Bipartition::from_trig(d, &combo)?);
        // advance to the next combination
        let mut i = p;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if combo[i] < d - p + i {
                combo[i] += 1;
                for j in i + 1..p {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Choice of sin/cos (trigonometric slots) and sinh/cosh (hyperbolic slots)
/// for every coordinate: `0` selects sin/sinh, `1` selects cos/cosh.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignPattern {
    ell: Vec<u8>,
}

impl SignPattern {
    pub fn new(ell: Vec<u8>) -> Result<Self> {
        if ell.iter().any(|&e| e > 1) {
            return Err(SteklovError::arg("ell", format!("entries must be 0 or 1, got {ell:?}")));
        }
        Ok(SignPattern { ell })
    }

    /// Pattern implied by a box (parity on trig slots) and an explicit choice on
    /// the hyperbolic slots, listed in the order of `b.hyp()`.
    pub fn from_parts(b: &Bipartition, m: &BoxIndex, ell_hyp: &[u8]) -> Result<Self> {
        if m.len() != b.p() || ell_hyp.len() != b.q() {
            return Err(SteklovError::arg("ell", "length mismatch with bipartition"));
        }
        let mut ell = vec![0u8; b.dim()];
        for (k, &i) in b.trig().iter().enumerate() {
            ell[i] = m.ell(k);
        }
        for (k, &j) in b.hyp().iter().enumerate() {
            ell[j] = ell_hyp[k];
        }
        SignPattern::new(ell)
    }

    pub fn get(&self, i: usize) -> u8 {
        self.ell[i]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.ell
    }
}

/// Bitmask over coordinates of the hyperbolic slots carrying `ell = 1` (cosh).
pub fn ell_hyp_mask(b: &Bipartition, ell_hyp: &[u8]) -> u64 {
    b.hyp()
        .iter()
        .zip(ell_hyp)
        .filter(|(_, &e)| e == 1)
        .fold(0, |m, (&j, _)| m | (1 << j))
}

/// All `2^q` choices of `ell` on the hyperbolic slots, in binary counting order.
pub fn hyp_patterns(q: usize) -> Vec<Vec<u8>> {
    (0..1usize << q)
        .map(|bits| (0..q).map(|k| ((bits >> k) & 1) as u8).collect())
        .collect()
}

/// Index of a half-period box on the fine grid: entry `m_k` for the k-th
/// trigonometric slot `i` selects `(m_k pi / (2 a_i), (m_k + 1) pi / (2 a_i)]`.
/// The parity of `m_k` is the sin (even) / cos (odd) choice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoxIndex(pub Vec<u64>);

impl BoxIndex {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn ell(&self, k: usize) -> u8 {
        (self.0[k] % 2) as u8
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&m| m > 0)
    }

    /// Euclidean norm of the integer vector.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&m| (m as f64).powi(2)).sum::<f64>().sqrt()
    }

    /// Semicolon-joined entries.
    pub fn joined(&self) -> String {
        self.0
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Default enumeration margin `max_i pi / (2 a_i) + 1`.
pub fn default_margin(c: &Cuboid) -> f64 {
    FRAC_PI_2 / c.min_half_length() + 1.0
}

/// Strictly positive boxes whose lower corner satisfies
/// `|corner| < sqrt(q) (sigma + margin)`.
///
/// Any box holding an approximate eigenvalue below `sigma` is included; with
/// `margin >= 1 / min a_i` the same holds for exact eigenvalues.
pub fn boxes_within(c: &Cuboid, b: &Bipartition, sigma: f64, margin: f64) -> Vec<BoxIndex> {
    let radius = (b.q() as f64).sqrt() * (sigma + margin);
    let mut out = Vec::new();
    for_each_box(c, b, radius, 1, &mut |m| out.push(BoxIndex(m.to_vec())));
    out
}

/// Like [`boxes_within`] but over all of `N_0^p`, including boxes touching the
/// coordinate hyperplanes.
pub fn boxes_within_nonneg(c: &Cuboid, b: &Bipartition, sigma: f64, margin: f64) -> Vec<BoxIndex> {
    let radius = (b.q() as f64).sqrt() * (sigma + margin);
    let mut out = Vec::new();
    for_each_box(c, b, radius, 0, &mut |m| out.push(BoxIndex(m.to_vec())));
    out
}

/// Calls `visit` on every box with entries `>= min_entry` whose lower corner
/// lies strictly inside the ball of the given radius, in lexicographic order.
pub(crate) fn for_each_box(
    c: &Cuboid,
    b: &Bipartition,
    radius: f64,
    min_entry: u64,
    visit: &mut dyn FnMut(&[u64]),
) {
    if !(radius > 0.0) {
        return;
    }
    let widths: Vec<f64> = b.trig().iter().map(|&i| FRAC_PI_2 / c.a(i)).collect();
    let mut m = vec![0u64; widths.len()];
    recurse(&widths, radius * radius, min_entry, 0, 0.0, &mut m, visit);
}

fn recurse(
    widths: &[f64],
    r2: f64,
    min_entry: u64,
    k: usize,
    acc: f64,
    m: &mut Vec<u64>,
    visit: &mut dyn FnMut(&[u64]),
) {
    if k == widths.len() {
        visit(m);
        return;
    }
    let mut n = min_entry;
    loop {
        let x = n as f64 * widths[k];
        let partial = acc + x * x;
        // remaining coordinates contribute at least their minimum corner
        let rest: f64 = widths[k + 1..]
            .iter()
            .map(|w| (min_entry as f64 * w).powi(2))
            .sum();
        if partial + rest >= r2 {
            break;
        }
        m[k] = n;
        recurse(widths, r2, min_entry, k + 1, partial, m, visit);
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn facet_volumes_of_unit_cube() {
        let c = Cuboid::cube(3, 1.0).unwrap();
        assert_eq!(c.facet_volume(0).unwrap(), 8.0);
        assert_eq!(c.facet_volume(1).unwrap(), 24.0);
        assert_eq!(c.facet_volume(2).unwrap(), 24.0);
        assert_eq!(c.facet_volume(3).unwrap(), 8.0);
        assert!(c.facet_volume(4).is_err());
    }

    #[test]
    fn rectangle_perimeter() {
        let c = Cuboid::new(vec![0.5, 2.0]).unwrap();
        assert!((c.facet_volume(1).unwrap() - 10.0).abs() < 1e-14);
    }

    #[test]
    fn cube_facet_formula() {
        for d in 2..=6 {
            for k in 0..=d {
                let a = 0.7;
                let c = Cuboid::cube(d, a).unwrap();
                let expect =
                    2f64.powi(k as i32) * binom(d, k) as f64 * (2.0 * a).powi((d - k) as i32);
                let got = c.facet_volume(k).unwrap();
                assert!((got - expect).abs() < 1e-12 * expect, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn rejects_bad_cuboids() {
        assert!(Cuboid::new(vec![1.0]).is_err());
        assert!(Cuboid::new(vec![1.0, -1.0]).is_err());
        assert!(Cuboid::new(vec![1.0, f64::NAN]).is_err());
        assert!(Cuboid::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn bipartition_counts() {
        assert_eq!(bipartitions(3, 2).unwrap().len(), 3);
        assert_eq!(bipartitions(2, 1).unwrap().len(), 2);
        assert_eq!(bipartitions(5, 2).unwrap().len(), 10);
        for d in 2..=8 {
            for p in 1..d {
                let bs = bipartitions(d, p).unwrap();
                assert_eq!(bs.len(), binom(d, p));
                let mut sorted = bs.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted, bs, "lexicographic and unique");
            }
        }
        assert!(bipartitions(3, 0).is_err());
        assert!(bipartitions(3, 3).is_err());
    }

    #[test]
    fn bipartition_masks() {
        let b = Bipartition::from_trig(3, &[0, 2]).unwrap();
        assert_eq!(b.hyp(), &[1]);
        assert_eq!(b.trig_mask(), 0b101);
        assert_eq!(ell_hyp_mask(&b, &[1]), 0b010);
    }

    #[test]
    fn boxes_empty_for_tiny_sigma() {
        let c = Cuboid::cube(3, 1.0).unwrap();
        let b = Bipartition::from_trig(3, &[0, 1]).unwrap();
        assert!(boxes_within(&c, &b, 1e-9, 1e-9).is_empty());
    }

    #[test]
    fn boxes_square_bound() {
        let c = Cuboid::cube(2, 1.0).unwrap();
        let b = Bipartition::from_trig(2, &[0]).unwrap();
        let boxes = boxes_within(&c, &b, 10.0, 1.0);
        let ms: Vec<u64> = boxes.iter().map(|m| m.0[0]).collect();
        assert_eq!(ms, (1..=7).collect::<Vec<_>>());
    }

    #[test]
    fn boxes_match_brute_force() {
        let c = Cuboid::new(vec![0.8, 1.3, 0.6]).unwrap();
        for b in bipartitions(3, 2).unwrap() {
            let sigma = 7.5;
            let margin = 0.4;
            let r = (b.q() as f64).sqrt() * (sigma + margin);
            let mut brute = Vec::new();
            for m0 in 1..60u64 {
                for m1 in 1..60u64 {
                    let x0 = m0 as f64 * PI / (2.0 * c.a(b.trig()[0]));
                    let x1 = m1 as f64 * PI / (2.0 * c.a(b.trig()[1]));
                    if x0 * x0 + x1 * x1 < r * r {
                        brute.push(BoxIndex(vec![m0, m1]));
                    }
                }
            }
            assert_eq!(boxes_within(&c, &b, sigma, margin), brute);
        }
    }

    #[test]
    fn box_counts_grow_like_sigma_to_the_p() {
        let c = Cuboid::cube(3, 1.0).unwrap();
        let b = Bipartition::from_trig(3, &[0, 1]).unwrap();
        let n1 = boxes_within(&c, &b, 100.0, 1.0).len() as f64;
        let n2 = boxes_within(&c, &b, 200.0, 1.0).len() as f64;
        let ratio = n2 / n1;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        // quarter disc of radius R in units of pi/2
        let r = 101.0 / FRAC_PI_2;
        let area = PI * r * r / 4.0;
        assert!((n1 / area - 1.0).abs() < 0.03);
    }
}
