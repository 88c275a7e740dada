//! Weierstrass `℘` for the lattice `ℤ + τℤ`.
//!
//! The lattice sum `z⁻² + Σ′[(z−ω)⁻² − ω⁻²]` is accelerated by summing each
//! row `{d + nτ : d ∈ ℤ}` in closed form, `Σ_d (w + d)⁻² = π² csc²(πw)`, so
//!
//! ```text
//! ℘(z) = Σ_{|n| ≤ R} π² csc²(π(z + nτ)) − G₂(τ),
//! G₂(τ) = π²/3 + 2π² Σ_{c ≥ 1} csc²(πcτ)
//! ```
//!
//! with row contributions decaying like `e^{−2π|n| Im τ}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Distance to a lattice point below which evaluation reports a pole.
pub const POLE_RADIUS: f64 = 1e-6;

pub const DEFAULT_ROWS: usize = 40;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `e^φ − 1` without cancellation for small `φ`.
fn cexpm1(phi: Complex64) -> Complex64 {
    let (a, b) = (phi.re, phi.im);
    let half = (0.5 * b).sin();
    Complex64::new(
        a.exp_m1() * b.cos() - 2.0 * half * half,
        a.exp() * b.sin(),
    )
}

/// `(csc² w, cot w)` evaluated through the decaying exponential.
fn csc2_cot(w: Complex64) -> (Complex64, Complex64) {
    let (phi, sign) = if w.im >= 0.0 { (2.0 * I * w, 1.0) } else { (-2.0 * I * w, -1.0) };
    let q = phi.exp();
    let qm1 = cexpm1(phi);
    let csc2 = -4.0 * q / (qm1 * qm1);
    let cot = I * sign * (q + 1.0) / qm1;
    (csc2, cot)
}

#[derive(Debug, Clone, Copy)]
pub struct Weierstrass {
    tau: Complex64,
    rows: usize,
    g2_eisenstein: Complex64,
}

impl Weierstrass {
    pub fn new(tau: Complex64, rows: usize) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(Error::InvalidArgument("lattice needs Im τ > 0".into()));
        }
        if rows < 20 {
            return Err(Error::InvalidArgument("row truncation R must be at least 20".into()));
        }
        let tail: Complex64 = (1..=rows)
            .map(|c| csc2_cot(PI * tau * c as f64).0)
            .sum();
        let g2_eisenstein = Complex64::new(PI * PI / 3.0, 0.0) + 2.0 * PI * PI * tail;
        Ok(Weierstrass {
            tau,
            rows,
            g2_eisenstein,
        })
    }

    /// Square lattice `ℤ + iℤ`.
    pub fn square() -> Self {
        Weierstrass::new(I, DEFAULT_ROWS).expect("valid lattice")
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// Eisenstein-ordered `G₂(τ)`; equals `π` for the square lattice.
    pub fn g2_eisenstein(&self) -> Complex64 {
        self.g2_eisenstein
    }

    /// Nearest lattice point and the distance to it.
    pub fn nearest_lattice_point(&self, z: Complex64) -> (Complex64, f64) {
        let b = z.im / self.tau.im;
        let a = z.re - b * self.tau.re;
        let omega = Complex64::new(a.round(), 0.0) + self.tau * b.round();
        (omega, (z - omega).norm())
    }

    /// `(℘(z), ℘′(z))`.
    pub fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (_, distance) = self.nearest_lattice_point(z);
        if distance < POLE_RADIUS {
            return Err(Error::NearPole { z, distance });
        }
        let r = self.rows as i64;
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for n in -r..=r {
            let (csc2, cot) = csc2_cot(PI * (z + self.tau * n as f64));
            p += csc2;
            dp += csc2 * cot;
        }
        Ok((PI * PI * p - self.g2_eisenstein, -2.0 * PI * PI * PI * dp))
    }

    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        self.value_and_derivative(z).map(|(p, _)| p)
    }

    /// `1/℘(z)`, finite everywhere and zero at lattice points.
    pub fn reciprocal(&self, z: Complex64) -> Complex64 {
        let (omega, distance) = self.nearest_lattice_point(z);
        if distance < POLE_RADIUS {
            // ℘ = ζ⁻² + O(ζ²) has no constant term, so 1/℘ = ζ² to O(ζ⁶).
            let zeta = z - omega;
            return zeta * zeta;
        }
        1.0 / self.value(z).expect("checked distance")
    }

    /// `e₁ = ℘(1/2)`.
    pub fn half_period_value(&self) -> Complex64 {
        self.value(Complex64::new(0.5, 0.0)).expect("half period is regular")
    }
}
