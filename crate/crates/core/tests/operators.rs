mod common;

use std::sync::Arc;

use common::{bumpy_lambda, c, combine, frame_oracle, random_field, sample, Sampled};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transparent_core::operators::{
    eta_minus, eta_plus, geodesic_x, horizontal_h, inner, mu_minus, mu_plus, norm, vertical,
};
use transparent_core::{multiply, Connection, Metric, ThetaField, TorusGrid};

const NT: usize = 10;

fn bumpy(n: usize, lx: f64, ly: f64) -> Arc<Metric> {
    Metric::with_lambda(TorusGrid::new(n, n, lx, ly).unwrap(), |x, y| {
        bumpy_lambda(x / lx, y / ly).0
    })
    .unwrap()
}

fn oracle(f: &ThetaField) -> (Sampled, Sampled) {
    let g = *f.grid();
    let (lx, ly) = (g.lx, g.ly);
    frame_oracle(&sample(f, NT), lx, ly, |x, y| {
        let (l, dx, dy) = bumpy_lambda(x / lx, y / ly);
        (l, dx / lx, dy / ly)
    })
}

#[test]
fn eta_operators_match_coordinate_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for metric in [bumpy(24, 1.0, 1.0), bumpy(24, 1.0, 1.3)] {
        let f = random_field(&metric, -2, 2, 3, &mut rng);
        let (xf, hf) = oracle(&f);
        let minus = combine(&xf, &hf, c(0.0, 1.0)).values.iter().map(|m| *m * 0.5).collect();
        let plus = combine(&xf, &hf, c(0.0, -1.0)).values.iter().map(|m| *m * 0.5).collect();
        let minus = Sampled { values: minus, ..xf.clone() };
        let plus = Sampled { values: plus, ..xf.clone() };
        assert!(sample(&eta_minus(&f), NT).relative_error(&minus) < 1e-8);
        assert!(sample(&eta_plus(&f), NT).relative_error(&plus) < 1e-8);
        assert!(sample(&geodesic_x(&f), NT).relative_error(&xf) < 1e-8);
        assert!(sample(&horizontal_h(&f), NT).relative_error(&hf) < 1e-8);
    }
}

#[test]
fn flat_eta_minus_is_dbar() {
    let metric = Metric::flat(TorusGrid::square(16).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_field(&metric, 0, 0, 2, &mut rng);
    let (xf, hf) = frame_oracle(&sample(&f, NT), 1.0, 1.0, |_, _| (0.0, 0.0, 0.0));
    let target = Sampled {
        values: combine(&xf, &hf, c(0.0, 1.0)).values.iter().map(|m| *m * 0.5).collect(),
        ..xf
    };
    let got = eta_minus(&f);
    assert_eq!((got.mode_min(), got.mode_max()), (-1, -1));
    assert!(sample(&got, NT).relative_error(&target) < 1e-10);
}

#[test]
fn vertical_is_theta_derivative() {
    let metric = bumpy(12, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_field(&metric, -3, 2, 1, &mut rng);
    let s = sample(&f, NT);
    let (nx, ny) = (s.nx, s.ny);
    let mut dt = s.clone();
    for p in 0..nx * ny {
        let line: Vec<_> = (0..NT).map(|l| s.values[l * nx * ny + p]).collect();
        for e in 0..4 {
            let d = common::dft_derivative(&line.iter().map(|m| m.0[e]).collect::<Vec<_>>(), 2.0 * std::f64::consts::PI);
            for (l, v) in d.into_iter().enumerate() {
                dt.values[l * nx * ny + p].0[e] = v;
            }
        }
    }
    assert!(sample(&vertical(&f), NT).relative_error(&dt) < 1e-12);
}

fn random_connection(metric: &Arc<Metric>, rng: &mut ChaCha8Rng) -> Connection {
    let p = random_field(metric, 1, 1, 2, rng);
    let p = p.mode(1).unwrap();
    let plus: Vec<_> = p
        .iter()
        .map(|m| {
            let t = (m.0[0] + m.0[3]) * 0.5;
            transparent_core::Mat2([m.0[0] - t, m.0[1], m.0[2], m.0[3] - t])
        })
        .collect();
    let minus = plus.iter().map(|m| -m.adjoint()).collect();
    Connection::new(metric.clone(), minus, plus).unwrap()
}

#[test]
fn eta_and_mu_are_skew_adjoint_pairs() {
    let metric = bumpy(32, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let a = random_connection(&metric, &mut rng);
    for _ in 0..20 {
        let u = random_field(&metric, -2, 2, 3, &mut rng);
        let w = random_field(&metric, -2, 2, 3, &mut rng);
        let scale = norm(&u) * norm(&w);
        let eta = inner(&eta_plus(&u), &w).unwrap() + inner(&u, &eta_minus(&w)).unwrap();
        assert!(eta.norm() <= 1e-8 * scale, "{eta}");
        let mu = inner(&mu_plus(&a, &u).unwrap(), &w).unwrap()
            + inner(&u, &mu_minus(&a, &w).unwrap()).unwrap();
        assert!(mu.norm() <= 1e-8 * scale, "{mu}");
    }
}

#[test]
fn mu_minus_adds_left_multiplication() {
    let metric = bumpy(16, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = random_connection(&metric, &mut rng);
    let f = random_field(&metric, -1, 1, 2, &mut rng);
    let am = ThetaField::single_mode(metric.clone(), -1, a.minus().to_vec()).unwrap();
    let expected = eta_minus(&f).add(&multiply(&am, &f).unwrap()).unwrap();
    let got = mu_minus(&a, &f).unwrap();
    assert!(got.max_distance(&expected).unwrap() < 1e-14);
}
