mod common;

use common::{c, invariants, wp_direct};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transparent_core::weierstrass::{Weierstrass, DEFAULT_ROWS};
use transparent_core::Complex64;

fn sample_points(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| c(rng.gen::<f64>(), rng.gen::<f64>()))
        .filter(|z| {
            let w = Weierstrass::square();
            w.nearest_lattice_point(*z).1 > 0.05
        })
        .collect()
}

#[test]
fn differential_equation_against_eisenstein_sums() {
    for tau in [c(0.0, 1.0), c(0.0, 1.3)] {
        let wp = Weierstrass::new(tau, DEFAULT_ROWS).unwrap();
        let (g2, g3) = invariants(tau);
        if tau == c(0.0, 1.0) {
            // Γ(1/4)⁸ / (16π²)
            assert!((g2 - 189.072720129234).norm() < 1e-6);
            assert!(g3.norm() < 1e-9);
        }
        for z in sample_points(50, 3) {
            let z = c(z.re, z.im * tau.im);
            if wp.nearest_lattice_point(z).1 < 0.05 {
                continue;
            }
            let (p, dp) = wp.value_and_derivative(z).unwrap();
            let res = (dp * dp - (4.0 * p * p * p - g2 * p - g3)).norm();
            assert!(res <= 1e-6 * (1.0 + p.norm().powi(3)), "{z}: {res}");
        }
    }
}

#[test]
fn matches_direct_lattice_sum() {
    let tau = c(0.0, 1.0);
    let wp = Weierstrass::square();
    for z in sample_points(6, 9) {
        let direct = (wp_direct(tau, z, 200) * 4.0 - wp_direct(tau, z, 100)) / 3.0;
        let v = wp.value(z).unwrap();
        assert!((v - direct).norm() < 1e-6 * (1.0 + v.norm()), "{z}: {v} vs {direct}");
    }
}

#[test]
fn periodic_and_even() {
    let tau = c(0.0, 1.3);
    let wp = Weierstrass::new(tau, DEFAULT_ROWS).unwrap();
    for z in sample_points(50, 4) {
        let z = c(z.re, z.im * tau.im);
        if wp.nearest_lattice_point(z).1 < 0.05 {
            continue;
        }
        let v = wp.value(z).unwrap();
        let scale = 1.0 + v.norm();
        assert!((wp.value(z + 1.0).unwrap() - v).norm() <= 1e-8 * scale);
        assert!((wp.value(z + tau).unwrap() - v).norm() <= 1e-8 * scale);
        assert!((wp.value(-z).unwrap() - v).norm() <= 1e-10 * scale);
    }
}
