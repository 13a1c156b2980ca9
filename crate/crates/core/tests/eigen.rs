mod common;

use common::{charpoly, weierstrass_roots};
use feptrkn::eigen::{eigenvalues, spectral_radius};
use feptrkn::linalg::Matrix;
use feptrkn::poly::durand_kerner;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_five_by_five_radii_match_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let want = weierstrass_roots(&charpoly(&rows)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let got = spectral_radius(&Matrix::from_rows(&rows)).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn eigenvalues_are_roots_of_the_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..20 {
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let p = charpoly(&rows);
        for z in eigenvalues(&Matrix::from_rows(&rows)).unwrap() {
            let val = p.iter().rev().fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
            let scale: f64 = p.iter().enumerate().map(|(k, c)| c.abs() * z.norm().powi(k as i32)).sum();
            assert!(val.norm() <= 1e-10 * scale, "{z}: {val}");
        }
    }
}

#[test]
fn durand_kerner_matches_known_roots() {
    // (x - 1)(x + 2)(x - 0.5) = x^3 + 0.5 x^2 - 2.5 x + 1
    let mut roots: Vec<f64> = durand_kerner(&[1.0, -2.5, 0.5, 1.0]).unwrap().iter().map(|z| z.re).collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (r, w) in roots.iter().zip([-2.0, 0.5, 1.0]) {
        assert!((r - w).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn scaling_scales_the_radius(seed in 0u64..1000, k in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let m = Matrix::from_rows(&rows);
        let r = spectral_radius(&m).unwrap();
        let rk = spectral_radius(&m.scale(k)).unwrap();
        prop_assert!((rk - k * r).abs() <= 1e-9 * (k * r).max(1e-12));
    }
}
