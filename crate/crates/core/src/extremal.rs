//! First nonzero eigenvalue, isoperimetric comparison with cubes, and
//! recovery of a rectangle from its half-perimeter and first eigenvalue.
//!
//! The first eigenfunction has exactly one odd factor: a sine on the longest
//! axis, times cosh on every other axis. Its rates solve the single-box problem
//! with box index `0` on that axis and cosh everywhere else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::exact::{enumerate_exceptional, solve_box};
use crate::geometry::{Bipartition, BoxIndex, Cuboid};
use crate::root::find_root;

/// Aspect deviation below which a cuboid counts as a cube.
pub const CUBE_TOL: f64 = 1e-9;

/// The first nonzero eigenvalue and the rates of its eigenfunction
/// `sin(alpha x_longest) prod cosh(beta_k x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstEigen {
    pub sigma1: f64,
    pub longest_axis: usize,
    pub alpha: f64,
    /// cosh rates on the remaining axes, in increasing axis order.
    pub beta: Vec<f64>,
}

/// Lowest eigenvalue of the sine-on-`axis`, cosh-elsewhere family.
fn sine_axis_candidate(c: &Cuboid, axis: usize) -> Result<(f64, f64, Vec<f64>)> {
    let d = c.dim();
    let b = Bipartition::from_trig(d, &[axis])?;
    let s = solve_box(c, &b, &BoxIndex(vec![0]), &vec![1; d - 1])?.ok_or_else(|| {
        SteklovError::NoSolution(format!("no first-box solution with the sine on axis {axis}"))
    })?;
    Ok((s.sigma, s.alpha[0], s.beta))
}

/// `sigma_1` with the sine on the longest axis (lowest index on ties).
///
/// Checks that the result is below the candidates with the sine on any other
/// axis and below every exceptional eigenvalue.
pub fn sigma1(c: &Cuboid) -> Result<FirstEigen> {
    let amax = c.max_half_length();
    let longest = (0..c.dim())
        .find(|&i| c.a(i) == amax)
        .expect("nonempty cuboid");
    let (sigma, alpha, beta) = sine_axis_candidate(c, longest)?;
    let tol = 1e-12 * sigma;
    for i in 0..c.dim() {
        if i == longest {
            continue;
        }
        let (other, ..) = sine_axis_candidate(c, i)?;
        if other < sigma - tol {
            return Err(SteklovError::Inconsistent(format!(
                "sine on axis {i} gives {other} below {sigma}"
            )));
        }
    }
    if let Some(e) = enumerate_exceptional(c)?.iter().find(|e| e.sigma < sigma - tol) {
        return Err(SteklovError::Inconsistent(format!(
            "exceptional eigenvalue {} lies below {sigma}",
            e.sigma
        )));
    }
    Ok(FirstEigen { sigma1: sigma, longest_axis: longest, alpha, beta })
}

/// Which quantity the comparison cube shares with the cuboid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Volume,
    Area,
}

impl std::str::FromStr for Constraint {
    type Err = SteklovError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" => Ok(Constraint::Volume),
            "area" => Ok(Constraint::Area),
            other => Err(SteklovError::arg(
                "constraint",
                format!("expected `volume` or `area`, got `{other}`"),
            )),
        }
    }
}

/// Outcome of comparing a cuboid with the cube of equal volume or area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricReport {
    pub half_lengths: Vec<f64>,
    pub constraint: Constraint,
    pub cube_half_length: f64,
    pub sigma1_cuboid: f64,
    pub sigma1_cube: f64,
    /// `sigma1_cube - sigma1_cuboid`.
    pub margin: f64,
    pub aspect_deviation: f64,
    /// The cube does not lose (up to rounding).
    pub holds: bool,
}

/// Half-length of the comparison cube.
pub fn comparison_cube(c: &Cuboid, constraint: Constraint) -> f64 {
    let d = c.dim() as f64;
    match constraint {
        Constraint::Volume => (c.half_lengths().iter().map(|a| a.ln()).sum::<f64>() / d).exp(),
        Constraint::Area => {
            // surface area of the cuboid is 2^d sum_j prod_{i != j} a_i
            let sym: f64 = (0..c.dim())
                .map(|j| {
                    c.half_lengths()
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != j)
                        .map(|(_, a)| a)
                        .product::<f64>()
                })
                .sum();
            (sym / d).powf(1.0 / (d - 1.0))
        }
    }
}

pub fn isoperimetric_check(c: &Cuboid, constraint: Constraint) -> Result<IsoperimetricReport> {
    let s = sigma1(c)?.sigma1;
    let side = comparison_cube(c, constraint);
    let cube = Cuboid::cube(c.dim(), side)?;
    let sc = sigma1(&cube)?.sigma1;
    let margin = sc - s;
    Ok(IsoperimetricReport {
        half_lengths: c.half_lengths().to_vec(),
        constraint,
        cube_half_length: side,
        sigma1_cuboid: s,
        sigma1_cube: sc,
        margin,
        aspect_deviation: c.aspect_deviation(),
        holds: margin >= -1e-12 * sc,
    })
}

/// Random cuboids with half-lengths uniform in `[lo, hi]`, reproducible from
/// the seed.
pub fn random_cuboids(d: usize, n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<Cuboid>> {
    if !(0.0 < lo && lo <= hi) {
        return Err(SteklovError::arg("range", format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Cuboid::new((0..d).map(|_| rng.gen_range(lo..=hi)).collect()))
        .collect()
}

/// Recovers the half-lengths `(a1, a2)`, `a1 <= a2`, of the rectangle with
/// `a1 + a2 = half_perimeter` and first eigenvalue `sigma1`.
///
/// With the cosh factor on side `h` and the sine on side `s = L - h`,
/// `sigma1 = alpha tanh(alpha h) = alpha cot(alpha s)`, so
///
/// ```text
/// h = f(alpha) = artanh(sigma1 / alpha) / alpha            (decreasing)
/// h = g(alpha) = L - arccot(sigma1 / alpha) / alpha        (increasing)
/// ```
///
/// meet exactly once for `alpha > sigma1`. The sine must sit on the longer side;
/// otherwise no rectangle has this first eigenvalue.
pub fn invert_rectangle(half_perimeter: f64, sigma1: f64) -> Result<(f64, f64)> {
    let l = half_perimeter;
    if !(l > 0.0 && l.is_finite()) {
        return Err(SteklovError::arg("perimeter", format!("must be positive, got {l}")));
    }
    if !(sigma1 > 0.0 && sigma1.is_finite()) {
        return Err(SteklovError::arg("sigma1", format!("must be positive, got {sigma1}")));
    }
    let f = |al: f64| (sigma1 / al).atanh() / al;
    let g = |al: f64| l - (al / sigma1).atan() / al;
    let df = |al: f64| {
        let r = sigma1 / al;
        -r.atanh() / (al * al) - sigma1 / (al.powi(3) * (1.0 - r * r))
    };
    let dg = |al: f64| {
        let r = sigma1 / al;
        (al / sigma1).atan() / (al * al) - sigma1 / (al.powi(3) * (1.0 + r * r))
    };
    let h = |al: f64| (f(al) - g(al), df(al) - dg(al));

    let lo = sigma1 * (1.0 + 1e-12);
    if !(h(lo).0 > 0.0) {
        return Err(SteklovError::Inconsistent(format!(
            "no intersection near alpha = sigma1 for L = {l}, sigma1 = {sigma1}"
        )));
    }
    let mut hi = sigma1 + 10.0 / l + 10.0;
    let mut grow = 0;
    while h(hi).0 >= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(SteklovError::Inconsistent(format!(
                "curves do not cross for L = {l}, sigma1 = {sigma1}"
            )));
        }
    }
    let alpha = find_root(h, lo, hi, 1e-15 * l)?;
    let cosh_side = f(alpha);
    let sine_side = l - cosh_side;
    if cosh_side > sine_side * (1.0 + 1e-9) {
        return Err(SteklovError::Inconsistent(format!(
            "sigma1 = {sigma1} exceeds the largest first eigenvalue among rectangles with a1 + a2 = {l}"
        )));
    }
    Ok((cosh_side.min(sine_side), cosh_side.max(sine_side)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQUARE_SIGMA1: f64 = 0.688_252_742_336_276_3;

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
    fn square() {
        let r = sigma1(&Cuboid::cube(2, 1.0).unwrap()).unwrap();
        let x = bisect(|x| x.tan() * x.tanh() - 1.0, 0.1, 1.5);
        assert!((r.sigma1 - x * x.tanh()).abs() < 1e-12);
        assert!((r.sigma1 - SQUARE_SIGMA1).abs() < 1e-13);
        assert_eq!(r.longest_axis, 0);
        assert!((r.alpha - r.beta[0]).abs() < 1e-12);
    }

    #[test]
    fn unit_cube() {
        let r = sigma1(&Cuboid::cube(3, 1.0).unwrap()).unwrap();
        // beta_1 = beta_2 = alpha / sqrt 2 by symmetry
        let s2 = 2f64.sqrt();
        let al = bisect(|x| 1.0 / x.tan() - (x / s2).tanh() / s2, 0.1, 1.5);
        assert!((r.alpha - al).abs() < 1e-10);
        assert!((r.sigma1 - al / al.tan()).abs() < 1e-10);
        let norm = r.beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!((norm - r.alpha).abs() < 1e-10);
        assert!(r.alpha < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn sine_on_longest_axis() {
        let c = Cuboid::new(vec![0.4, 1.7, 0.9]).unwrap();
        let r = sigma1(&c).unwrap();
        assert_eq!(r.longest_axis, 1);
        for i in [0, 2] {
            assert!(sine_axis_candidate(&c, i).unwrap().0 > r.sigma1);
        }
    }

    #[test]
    fn scaling() {
        let c = Cuboid::new(vec![0.7, 1.3, 1.1]).unwrap();
        let s = sigma1(&c).unwrap().sigma1;
        for t in [0.5, 2.0] {
            let st = sigma1(&c.scaled(t).unwrap()).unwrap().sigma1;
            assert!((st - s / t).abs() < 1e-9);
        }
    }

    #[test]
    fn cube_is_its_own_comparison() {
        let c = Cuboid::cube(3, 0.8).unwrap();
        for k in [Constraint::Volume, Constraint::Area] {
            let r = isoperimetric_check(&c, k).unwrap();
            assert!(r.margin.abs() < 1e-10);
            assert!(r.holds);
        }
    }

    #[test]
    fn rectangle_volume_comparison() {
        let c = Cuboid::new(vec![0.5, 2.0]).unwrap();
        let r = isoperimetric_check(&c, Constraint::Volume).unwrap();
        assert!((r.cube_half_length - 1.0).abs() < 1e-15);
        assert!(r.margin > 0.0);
    }

    #[test]
    fn comparison_cubes_match_constraints() {
        let c = Cuboid::new(vec![0.3, 1.2, 2.5]).unwrap();
        let v = Cuboid::cube(3, comparison_cube(&c, Constraint::Volume)).unwrap();
        let a = Cuboid::cube(3, comparison_cube(&c, Constraint::Area)).unwrap();
        assert!((v.volume() / c.volume() - 1.0).abs() < 1e-14);
        assert!((a.surface_area() / c.surface_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inversion_round_trip() {
        for (a1, a2) in [(0.7, 1.3), (1.0, 1.0), (0.3, 3.0), (2.0, 0.5)] {
            let c = Cuboid::new(vec![a1, a2]).unwrap();
            let s = sigma1(&c).unwrap().sigma1;
            let (r1, r2) = invert_rectangle(a1 + a2, s).unwrap();
            let (e1, e2) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            assert!((r1 - e1).abs() < 1e-8 && (r2 - e2).abs() < 1e-8, "{a1},{a2} -> {r1},{r2}");
        }
    }

    #[test]
    fn inversion_rejects_too_large_sigma() {
        assert!(matches!(
            invert_rectangle(2.0, SQUARE_SIGMA1 * 1.01),
            Err(SteklovError::Inconsistent(_))
        ));
        assert!(invert_rectangle(-1.0, 0.5).is_err());
        assert!(invert_rectangle(2.0, 0.0).is_err());
    }

    #[test]
    fn decreasing_along_fixed_perimeter() {
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let a2 = 1.0 + 0.04 * k as f64;
            let c = Cuboid::new(vec![2.0 - a2, a2]).unwrap();
            let s = sigma1(&c).unwrap().sigma1;
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn seeded_cuboids_reproducible() {
        let x = random_cuboids(3, 5, 0.3, 3.0, 42).unwrap();
        let y = random_cuboids(3, 5, 0.3, 3.0, 42).unwrap();
        assert_eq!(x, y);
        assert_ne!(x, random_cuboids(3, 5, 0.3, 3.0, 43).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn curve_monotonicity(s in 0.05f64..5.0, t in 1e-6f64..50.0) {
            let al = s * (1.0 + t);
            let r = s / al;
            let df = -r.atanh() / (al * al) - s / (al.powi(3) * (1.0 - r * r));
            let dg = (al / s).atan() / (al * al) - s / (al.powi(3) * (1.0 + r * r));
            prop_assert!(df < 0.0);
            prop_assert!(dg > 0.0);
        }
    }
}
