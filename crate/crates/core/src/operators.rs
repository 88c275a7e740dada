//! First-order operators on `SM` and the correspondence between connections
//! and unitary solutions of `X(u) + Au = 0`.
//!
//! On a mode `h e^{inθ}` the raising and lowering operators act by
//!
//! ```text
//! η₋(h e^{inθ}) = e^{−(1+n)λ} ∂̄(h e^{nλ}) e^{i(n−1)θ}
//! η₊(h e^{inθ}) = e^{(n−1)λ} ∂(h e^{−nλ}) e^{i(n+1)θ}
//! ```
//!
//! so `X = η₊ + η₋`, `H = i(η₊ − η₋)` and `V` multiplies mode `m` by `im`.
//! The Hodge star acts by `−i` on mode `+1` and `+i` on mode `−1`, which makes
//! `−⋆A = V(A)` an identity.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::Mat2;
use crate::error::{Error, Result};
use crate::spectral::{map_entries, Derivative};
use crate::thetafield::{grid_rms, multiply, Connection, Metric, ThetaField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sasaki-measure quadrature: `e^{2λ}·cell area` per grid point and `2π` per
/// pairing of equal θ-modes.
#[derive(Debug, Clone)]
pub struct QuadratureWeight {
    weights: Vec<f64>,
    theta_factor: f64,
}

impl QuadratureWeight {
    pub fn new(metric: &Metric) -> Self {
        let cell = metric.grid().cell_area();
        QuadratureWeight {
            weights: metric.lambda().iter().map(|l| (2.0 * l).exp() * cell).collect(),
            theta_factor: 2.0 * PI,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta_factor(&self) -> f64 {
        self.theta_factor
    }
}

/// `⟨u, w⟩ = ∫_SM trace(u w*) dμ`.
pub fn inner(u: &ThetaField, w: &ThetaField) -> Result<Complex64> {
    u.check_grid(w)?;
    let q = QuadratureWeight::new(u.metric());
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, a) in u.modes() {
        let Some(b) = w.mode(m) else { continue };
        for ((x, y), wt) in a.iter().zip(b).zip(&q.weights) {
            let tr: Complex64 = x.0.iter().zip(&y.0).map(|(p, r)| p * r.conj()).sum();
            acc += tr * *wt;
        }
    }
    Ok(acc * q.theta_factor)
}

pub fn norm(u: &ThetaField) -> f64 {
    let q = QuadratureWeight::new(u.metric());
    let s: f64 = u
        .modes()
        .map(|(_, g)| g.iter().zip(&q.weights).map(|(m, w)| m.frob_sq() * w).sum::<f64>())
        .sum();
    (s * q.theta_factor).sqrt()
}

/// `V`: multiplies mode `m` by `im`.
pub fn vertical(f: &ThetaField) -> ThetaField {
    f.map_modes(|m, x| x.scale(Complex64::new(0.0, m as f64)))
}

fn weighted_derivative(
    metric: &Arc<Metric>,
    h: &[Mat2],
    inner_weight: f64,
    outer_weight: f64,
    op: Derivative,
) -> Vec<Mat2> {
    let sp = &metric.spectral;
    if metric.is_flat() {
        return map_entries(h, |e| sp.derivative(e, op));
    }
    let lam = metric.lambda();
    let weighted: Vec<Mat2> = h
        .iter()
        .zip(lam)
        .map(|(m, l)| m.scale_re((inner_weight * l).exp()))
        .collect();
    map_entries(&weighted, |e| sp.derivative(e, op))
        .into_iter()
        .zip(lam)
        .map(|(m, l)| m.scale_re((outer_weight * l).exp()))
        .collect()
}

/// `η₋ : Ω_n → Ω_{n−1}`.
pub fn eta_minus(f: &ThetaField) -> ThetaField {
    let metric = f.metric().clone();
    let modes = f
        .modes()
        .map(|(n, h)| {
            let n = n as f64;
            weighted_derivative(&metric, h, n, -(1.0 + n), Derivative::Dbar)
        })
        .collect();
    ThetaField::from_modes(metric, f.mode_min() - 1, modes).expect("shape preserved")
}

/// `η₊ : Ω_n → Ω_{n+1}`.
pub fn eta_plus(f: &ThetaField) -> ThetaField {
    let metric = f.metric().clone();
    let modes = f
        .modes()
        .map(|(n, h)| {
            let n = n as f64;
            weighted_derivative(&metric, h, -n, n - 1.0, Derivative::D)
        })
        .collect();
    ThetaField::from_modes(metric, f.mode_min() + 1, modes).expect("shape preserved")
}

/// Geodesic vector field `X = η₊ + η₋`.
pub fn geodesic_x(f: &ThetaField) -> ThetaField {
    eta_plus(f).add(&eta_minus(f)).expect("same metric")
}

/// Horizontal vector field `H = i(η₊ − η₋)`.
pub fn horizontal_h(f: &ThetaField) -> ThetaField {
    eta_plus(f).sub(&eta_minus(f)).expect("same metric").scale(I)
}

fn left_multiply(coeff: &[Mat2], mode: i32, f: &ThetaField) -> Result<ThetaField> {
    let a = ThetaField::single_mode(f.metric().clone(), mode, coeff.to_vec())?;
    multiply(&a, f)
}

/// `μ₊ = η₊ + A₁`.
pub fn mu_plus(a: &Connection, f: &ThetaField) -> Result<ThetaField> {
    f.check_grid(a.as_field())?;
    eta_plus(f).add(&left_multiply(a.plus(), 1, f)?)
}

/// `μ₋ = η₋ + A₋₁`.
pub fn mu_minus(a: &Connection, f: &ThetaField) -> Result<ThetaField> {
    f.check_grid(a.as_field())?;
    eta_minus(f).add(&left_multiply(a.minus(), -1, f)?)
}

/// Splits a connection sampled at equispaced fiber angles `θ_k = 2πk/n` into
/// `A₋₁ = ½(a + ib)` and `A₁ = ½(a − ib)`.
pub fn decompose_connection(
    metric: Arc<Metric>,
    samples: &[Vec<Mat2>],
    tol: f64,
) -> Result<Connection> {
    let nt = samples.len();
    if nt < 5 {
        return Err(Error::InvalidArgument(
            "need at least 5 fiber-angle samples".into(),
        ));
    }
    let npts = metric.grid().len();
    if samples.iter().any(|s| s.len() != npts) {
        return Err(Error::GridMismatch);
    }
    let half = (nt / 2) as i32;
    let coefficient = |m: i32| -> Vec<Mat2> {
        let mut out = vec![Mat2::zero(); npts];
        for (k, s) in samples.iter().enumerate() {
            let ph = Complex64::from_polar(1.0 / nt as f64, -(m as f64) * 2.0 * PI * k as f64 / nt as f64);
            for (o, v) in out.iter_mut().zip(s) {
                *o += v.scale(ph);
            }
        }
        out
    };
    let stray: f64 = (-half..=half)
        .filter(|m| m.abs() != 1)
        .map(|m| grid_rms(&coefficient(m)).powi(2))
        .sum::<f64>()
        .sqrt();
    if stray > tol {
        return Err(Error::NotAConnection { energy: stray });
    }
    Connection::new(metric, coefficient(-1), coefficient(1))
}

/// Hodge star on `±1`-mode fields: `−i` on mode `+1`, `+i` on mode `−1`.
pub fn hodge_star_field(f: &ThetaField) -> ThetaField {
    f.map_modes(|m, x| match m {
        1 => x.scale(-I),
        -1 => x.scale(I),
        _ => Mat2::zero(),
    })
}

pub fn hodge_star(a: &Connection) -> Connection {
    Connection::from_field(&hodge_star_field(a.as_field())).expect("star preserves connections")
}

fn mode0_only(g: &ThetaField) -> Result<&[Mat2]> {
    let energy: f64 = g
        .modes()
        .filter(|(m, _)| *m != 0)
        .map(|(_, x)| grid_rms(x))
        .fold(0.0, f64::max);
    if energy > 0.0 {
        return Err(Error::NotMode0 { energy });
    }
    g.mode(0).ok_or(Error::NotMode0 { energy: 0.0 })
}

/// `∂̄_A g = η₋(g) + [A₋₁, g]` for a mode-0 endomorphism field; output is mode `−1`.
pub fn dbar_a(a: &Connection, g: &ThetaField) -> Result<ThetaField> {
    g.check_grid(a.as_field())?;
    let g0 = mode0_only(g)?;
    let g0 = ThetaField::single_mode(g.metric().clone(), 0, g0.to_vec())?;
    let am = ThetaField::single_mode(g.metric().clone(), -1, a.minus().to_vec())?;
    let comm = multiply(&am, &g0)?.sub(&multiply(&g0, &am)?)?;
    Ok(eta_minus(&g0).add(&comm)?.with_range(-1, -1))
}

/// Forward map `f = u⁻¹V(u)`.
pub fn f_from_u(u: &ThetaField) -> Result<ThetaField> {
    u.require_unitary()?;
    multiply(&u.adjoint(), &vertical(u))
}

/// `−X(u)u⁻¹` with every mode kept, before any connection validation.
pub fn raw_connection_from_u(u: &ThetaField) -> Result<ThetaField> {
    u.require_unitary()?;
    Ok(multiply(&geodesic_x(u), &u.adjoint())?.scale(Complex64::new(-1.0, 0.0)))
}

/// Backward map `A = −X(u)u⁻¹`, keeping modes `±1`.
///
/// Only meaningful when `u⁻¹V(u)` solves the structure equation; check with
/// [`is_connection_residual`] on [`raw_connection_from_u`].
pub fn connection_from_u(u: &ThetaField) -> Result<Connection> {
    Connection::from_field(&raw_connection_from_u(u)?)
}

/// Energy of `V²(A) + A` relative to `‖A‖`: zero exactly for `±1`-mode fields.
pub fn is_connection_residual(raw: &ThetaField) -> f64 {
    let total = norm(raw);
    if total == 0.0 {
        return 0.0;
    }
    let defect = raw.map_modes(|m, x| x.scale_re(1.0 - (m * m) as f64));
    norm(&defect) / total
}

/// `‖H(f) + VX(f) − [X(f), f]‖ / (1 + ‖f‖²)`.
pub fn mypde_residual(f: &ThetaField) -> Result<f64> {
    let xf = geodesic_x(f);
    let comm = multiply(&xf, f)?.sub(&multiply(f, &xf)?)?;
    let r = horizontal_h(f).add(&vertical(&xf))?.sub(&comm)?;
    let nf = norm(f);
    Ok(norm(&r) / (1.0 + nf * nf))
}

#[derive(Debug, Clone)]
pub struct TransportResidual {
    /// `‖X(u) + Au‖ / ‖u‖`.
    pub total: f64,
    /// Per-mode contributions, same normalization.
    pub per_mode: Vec<(i32, f64)>,
}

/// Residual of `X(u) + Au = 0`. `a` may be a raw field carrying modes beyond `±1`.
pub fn transport_pde_residual(a: &ThetaField, u: &ThetaField) -> Result<TransportResidual> {
    a.check_grid(u)?;
    let r = geodesic_x(u).add(&multiply(a, u)?)?;
    let nu = norm(u).max(f64::MIN_POSITIVE);
    let per_mode = r
        .modes()
        .map(|(m, g)| {
            let single = ThetaField::single_mode(u.metric().clone(), m, g.to_vec()).unwrap();
            (m, norm(&single) / nu)
        })
        .collect();
    Ok(TransportResidual {
        total: norm(&r) / nu,
        per_mode,
    })
}

/// Gauge action by a base unitary `w`: `A ↦ wAw* − X(w)w*`, pairing with `u ↦ wu`.
pub fn gauge_transform(a: &Connection, w: &ThetaField) -> Result<Connection> {
    w.check_grid(a.as_field())?;
    let w0 = mode0_only(w)?;
    let w = ThetaField::single_mode(w.metric().clone(), 0, w0.to_vec())?;
    w.require_unitary()?;
    let ws = w.adjoint();
    let conj = multiply(&multiply(&w, a.as_field())?, &ws)?;
    let pure = multiply(&geodesic_x(&w), &ws)?;
    Connection::from_field(&conj.sub(&pure)?)
}
