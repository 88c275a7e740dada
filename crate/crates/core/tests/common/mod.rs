//! Reference computations for the integration tests. None of these go through
//! the library's spectral or transport machinery.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use transparent_core::{Complex64, Mat2, Metric, ThetaField};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `λ = 0.3 sin(2πx) cos(2πy)` with its two partial derivatives.
pub fn bumpy_lambda(x: f64, y: f64) -> (f64, f64, f64) {
    let (sx, cx) = (2.0 * PI * x).sin_cos();
    let (sy, cy) = (2.0 * PI * y).sin_cos();
    (0.3 * sx * cy, 0.6 * PI * cx * cy, -0.6 * PI * sx * sy)
}

/// Derivative of one period of samples by a direct DFT; the Nyquist
/// coefficient is dropped.
pub fn dft_derivative(samples: &[Complex64], period: f64) -> Vec<Complex64> {
    let n = samples.len();
    let roots: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
        .collect();
    let coeffs: Vec<Complex64> = (0..n)
        .map(|k| {
            samples
                .iter()
                .enumerate()
                .map(|(j, s)| s * roots[(j * k) % n].conj())
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    let scaled: Vec<(usize, Complex64)> = (0..n)
        .filter(|&k| 2 * k != n)
        .map(|k| {
            let freq = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
            (k, coeffs[k] * c(0.0, 2.0 * PI * freq / period))
        })
        .collect();
    (0..n)
        .map(|j| scaled.iter().map(|(k, a)| a * roots[(j * k) % n]).sum())
        .collect()
}

fn dft_derivative_mat(line: &[Mat2], period: f64) -> Vec<Mat2> {
    let mut out = vec![Mat2::zero(); line.len()];
    for e in 0..4 {
        let d = dft_derivative(&line.iter().map(|m| m.0[e]).collect::<Vec<_>>(), period);
        for (o, v) in out.iter_mut().zip(d) {
            o.0[e] = v;
        }
    }
    out
}

/// Values on an `(x, y, θ)` grid, indexed `(l·ny + k)·nx + j`.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub values: Vec<Mat2>,
}

impl Sampled {
    pub fn theta(&self, l: usize) -> f64 {
        2.0 * PI * l as f64 / self.nt as f64
    }

    /// Largest Frobenius difference relative to the largest value of `other`.
    pub fn relative_error(&self, other: &Sampled) -> f64 {
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).frob())
            .fold(0.0, f64::max);
        let scale = other.values.iter().map(Mat2::frob).fold(0.0, f64::max);
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// `Σ h_m e^{imθ}` from the stored grid coefficients.
pub fn sample(f: &ThetaField, nt: usize) -> Sampled {
    let g = *f.grid();
    let mut values = vec![Mat2::zero(); g.nx * g.ny * nt];
    for l in 0..nt {
        let theta = 2.0 * PI * l as f64 / nt as f64;
        for (m, grid) in f.modes() {
            let ph = Complex64::from_polar(1.0, m as f64 * theta);
            for (p, h) in grid.iter().enumerate() {
                values[l * g.len() + p] += h.scale(ph);
            }
        }
    }
    Sampled {
        nx: g.nx,
        ny: g.ny,
        nt,
        values,
    }
}

/// `X F` and `H F` from the coordinate vector fields
///
/// ```text
/// X = e^{−λ}(cos θ ∂x + sin θ ∂y + (−λx sin θ + λy cos θ) ∂θ)
/// H = e^{−λ}(−sin θ ∂x + cos θ ∂y − (λx cos θ + λy sin θ) ∂θ)
/// ```
///
/// with direct DFT derivatives in all three variables.
pub fn frame_oracle(
    f: &Sampled,
    lx: f64,
    ly: f64,
    lambda: impl Fn(f64, f64) -> (f64, f64, f64),
) -> (Sampled, Sampled) {
    let (nx, ny, nt) = (f.nx, f.ny, f.nt);
    let idx = |j: usize, k: usize, l: usize| (l * ny + k) * nx + j;
    let mut dx = vec![Mat2::zero(); f.values.len()];
    let mut dy = dx.clone();
    let mut dt = dx.clone();
    for l in 0..nt {
        for k in 0..ny {
            let line: Vec<Mat2> = (0..nx).map(|j| f.values[idx(j, k, l)]).collect();
            for (j, v) in dft_derivative_mat(&line, lx).into_iter().enumerate() {
                dx[idx(j, k, l)] = v;
            }
        }
        for j in 0..nx {
            let line: Vec<Mat2> = (0..ny).map(|k| f.values[idx(j, k, l)]).collect();
            for (k, v) in dft_derivative_mat(&line, ly).into_iter().enumerate() {
                dy[idx(j, k, l)] = v;
            }
        }
    }
    for k in 0..ny {
        for j in 0..nx {
            let line: Vec<Mat2> = (0..nt).map(|l| f.values[idx(j, k, l)]).collect();
            for (l, v) in dft_derivative_mat(&line, 2.0 * PI).into_iter().enumerate() {
                dt[idx(j, k, l)] = v;
            }
        }
    }
    let mut xs = vec![Mat2::zero(); f.values.len()];
    let mut hs = xs.clone();
    for l in 0..nt {
        let (s, co) = f.theta(l).sin_cos();
        for k in 0..ny {
            for j in 0..nx {
                let (x, y) = (lx * j as f64 / nx as f64, ly * k as f64 / ny as f64);
                let (lam, lam_x, lam_y) = lambda(x, y);
                let e = (-lam).exp();
                let i = idx(j, k, l);
                xs[i] = (dx[i] * co + dy[i] * s + dt[i] * (-lam_x * s + lam_y * co)) * e;
                hs[i] = (dx[i] * (-s) + dy[i] * co - dt[i] * (lam_x * co + lam_y * s)) * e;
            }
        }
    }
    let wrap = |values| Sampled { nx, ny, nt, values };
    (wrap(xs), wrap(hs))
}

/// `(a + s·b)` pointwise on samples.
pub fn combine(a: &Sampled, b: &Sampled, s: Complex64) -> Sampled {
    Sampled {
        values: a.values.iter().zip(&b.values).map(|(x, y)| *x + y.scale(s)).collect(),
        ..a.clone()
    }
}

pub fn random_mat(rng: &mut ChaCha8Rng) -> Mat2 {
    Mat2(std::array::from_fn(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)))
}

/// Random field with modes `lo..=hi` whose coefficients are trigonometric
/// polynomials of wavenumber at most `kmax`.
pub fn random_field(metric: &Arc<Metric>, lo: i32, hi: i32, kmax: i32, rng: &mut ChaCha8Rng) -> ThetaField {
    let g = *metric.grid();
    let modes = (lo..=hi)
        .map(|_| {
            let terms: Vec<(i32, i32, Mat2)> = (-kmax..=kmax)
                .flat_map(|kx| (-kmax..=kmax).map(move |ky| (kx, ky)))
                .map(|(kx, ky)| (kx, ky, random_mat(rng)))
                .collect();
            g.points()
                .map(|(x, y)| {
                    terms.iter().fold(Mat2::zero(), |acc, (kx, ky, m)| {
                        let ph = 2.0 * PI * (*kx as f64 * x / g.lx + *ky as f64 * y / g.ly);
                        acc + m.scale(Complex64::from_polar(1.0, ph))
                    })
                })
                .collect()
        })
        .collect();
    ThetaField::from_modes(metric.clone(), lo, modes).unwrap()
}

/// `e^K` by scaling and squaring a Taylor series.
pub fn expm(k: Mat2) -> Mat2 {
    let mut s = 0;
    let mut m = k;
    while m.frob() > 0.25 {
        m = m * 0.5;
        s += 1;
    }
    let mut term = Mat2::identity();
    let mut sum = Mat2::identity();
    for j in 1..30 {
        term = term * m * (1.0 / j as f64);
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

/// `Σ′ ω^{−2k}` over `ω = a + bτ`, `|a|, |b| ≤ r`.
fn lattice_sum(tau: Complex64, r: i64, k: i32) -> Complex64 {
    let mut s = c(0.0, 0.0);
    for a in -r..=r {
        for b in -r..=r {
            if a != 0 || b != 0 {
                s += (c(a as f64, 0.0) + tau * b as f64).powi(-2 * k);
            }
        }
    }
    s
}

/// Box sums at `R = 50, 100, 200` with the tail removed by two Richardson
/// stages; the box tail decays like `R⁻²` with an `R⁻³` correction.
fn extrapolated(f: impl Fn(i64) -> Complex64) -> Complex64 {
    let (a, b, d) = (f(50), f(100), f(200));
    let (ab, bd) = ((b * 4.0 - a) / 3.0, (d * 4.0 - b) / 3.0);
    (bd * 8.0 - ab) / 7.0
}

/// `(g₂, g₃)` from extrapolated Eisenstein sums.
pub fn invariants(tau: Complex64) -> (Complex64, Complex64) {
    let e4 = extrapolated(|r| lattice_sum(tau, r, 2));
    let e6 = extrapolated(|r| lattice_sum(tau, r, 3));
    (60.0 * e4, 140.0 * e6)
}

/// Direct `℘(z) = z⁻² + Σ′[(z−ω)⁻² − ω⁻²]` over the box `|a|, |b| ≤ r`.
pub fn wp_direct(tau: Complex64, z: Complex64, r: i64) -> Complex64 {
    let mut s = z.powi(-2);
    for a in -r..=r {
        for b in -r..=r {
            if a != 0 || b != 0 {
                let w = c(a as f64, 0.0) + tau * b as f64;
                s += (z - w).powi(-2) - w.powi(-2);
            }
        }
    }
    s
}
