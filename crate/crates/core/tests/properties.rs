use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use steklov::concentration::mass_report;
use steklov::exact::spectrum_exact;
use steklov::extremal::{isoperimetric_check, sigma1, Constraint};
use steklov::{Bipartition, Cuboid};

fn random_cuboid(rng: &mut ChaCha8Rng, d: usize) -> Cuboid {
    Cuboid::new((0..d).map(|_| rng.gen_range(0.3..3.0)).collect()).unwrap()
}

#[test]
fn first_eigenvalue_is_lowest_in_full_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut shapes: Vec<Cuboid> = (0..20).map(|_| random_cuboid(&mut rng, 2)).collect();
    shapes.extend((0..5).map(|_| random_cuboid(&mut rng, 3)));
    for c in shapes {
        let s1 = sigma1(&c).unwrap().sigma1;
        let eigs = spectrum_exact(&c, 2.0 * s1).unwrap();
        assert_eq!(eigs[0].sigma, 0.0);
        let tol = 1e-10 * s1;
        assert!((eigs[1].sigma - s1).abs() < tol, "{:?}: {} vs {s1}", c.half_lengths(), eigs[1].sigma);
        // nothing strictly between 0 and sigma1, and a strict gap above it for generic shapes
        assert!(eigs[2..].iter().all(|r| r.sigma > s1 + tol), "{:?}", c.half_lengths());
    }
}

#[test]
fn margin_vanishes_towards_the_cube() {
    for k in [Constraint::Volume, Constraint::Area] {
        let mut prev = f64::INFINITY;
        for t in [0.5, 0.2, 0.05, 0.01, 0.001] {
            let c = Cuboid::new(vec![1.0, 1.0 + t, 1.0 - 0.5 * t]).unwrap();
            let r = isoperimetric_check(&c, k).unwrap();
            assert!(r.margin > 0.0 && r.margin < prev, "{t}: {}", r.margin);
            prev = r.margin;
        }
    }
}

#[test]
fn component_mass_approaches_its_share() {
    let c = Cuboid::new(vec![0.8, 1.0, 1.2]).unwrap();
    for trig in [vec![0, 2], vec![1]] {
        let b = Bipartition::from_trig(3, &trig).unwrap();
        let u: Vec<(f64, f64)> = trig.iter().map(|&i| (-c.a(i), c.a(i))).collect();
        let gap = |k| {
            let r = mass_report(&c, &b, &u, 0.2, k).unwrap();
            assert_eq!(r.target_ratio, 1.0 / (1u64 << b.q()) as f64);
            (r.mass_in_u_eps - r.target_ratio).abs()
        };
        assert!(gap(40) < gap(5));
        assert!(gap(40) < 1e-6);
    }
}
