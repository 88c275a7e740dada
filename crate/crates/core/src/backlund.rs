//! Line seeds, the degree-one factor `a` built from a holomorphic line, the
//! Bäcklund step `A ↦ −X(a)a⁻¹ + aAa⁻¹`, and degree lowering.
//!
//! A line `L ⊂ ℂ²` over each base point is carried by its orthogonal projector
//! `π`, with `g = i(2π − Id)` the involution whose `+i` eigenline is `L` and
//! `U = image(π⊥) = jL`. For sections `α` of `Ω^{1,0}` and `β` of
//! `Ω^{1,0}(Hom(L, U))` with `|α|² + |β|² = 1` the factor is
//!
//! ```text
//! a = e^{iθ}(απ − β) + e^{−iθ}(ᾱπ⊥ + β*)
//! ```
//!
//! which is SU(2)-valued, has `a⁻¹V(a) = g`, and satisfies `a₋₁π = 0`,
//! `a₁π⊥ = 0`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{complement, projector_defect, Mat2};
use crate::error::{Error, Result};
use crate::operators::{
    connection_from_u, dbar_a, f_from_u, geodesic_x, hodge_star_field, is_connection_residual,
    mypde_residual, norm, raw_connection_from_u, transport_pde_residual,
};
use crate::thetafield::{
    degree_of, multiply, parity_of, Connection, InvolutionField, Metric, Parity, ThetaField,
    DEGREE_TOL,
};
use crate::weierstrass::{Weierstrass, DEFAULT_ROWS};

/// Holomorphicity gate on seeds entering a Bäcklund step.
pub const SEED_GATE: f64 = 1e-6;

/// Gate on the PDE and connection residuals of pipeline outputs.
pub const PDE_GATE: f64 = 1e-7;

/// Relative tail energy allowed in the two top mode pairs after lowering.
pub const LOWERING_GATE: f64 = 1e-8;

/// Default rank and vanishing tolerance of [`extract_top_line`].
pub const EXTRACT_TOL: f64 = 1e-8;

const SEED_TOL: f64 = 1e-10;

/// Thresholds applied by [`backlund_transform_with`] and [`lower_degree_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gates {
    pub seed: f64,
    pub pde: f64,
    pub lowering: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Gates {
            seed: SEED_GATE,
            pde: PDE_GATE,
            lowering: LOWERING_GATE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Constant,
    Weierstrass,
    Extracted,
    Solver,
    Custom,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Constant => "constant",
            Provenance::Weierstrass => "weierstrass",
            Provenance::Extracted => "extracted",
            Provenance::Solver => "solver",
            Provenance::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "constant" => Provenance::Constant,
            "weierstrass" => Provenance::Weierstrass,
            "extracted" => Provenance::Extracted,
            "solver" => Provenance::Solver,
            "custom" => Provenance::Custom,
            _ => return None,
        })
    }
}

/// A line subbundle `L` given by its projector field.
#[derive(Debug, Clone)]
pub struct LineSeed {
    metric: Arc<Metric>,
    projectors: Vec<Mat2>,
    provenance: Provenance,
}

impl LineSeed {
    pub fn new(metric: Arc<Metric>, projectors: Vec<Mat2>, provenance: Provenance) -> Result<Self> {
        if projectors.len() != metric.grid().len() {
            return Err(Error::GridMismatch);
        }
        let defect = projectors.iter().map(projector_defect).fold(0.0, f64::max);
        if !(defect <= SEED_TOL) {
            return Err(Error::NotAProjector { defect });
        }
        Ok(LineSeed {
            metric,
            projectors,
            provenance,
        })
    }

    /// The constant line spanned by `v`.
    pub fn constant(metric: Arc<Metric>, v: [Complex64; 2]) -> Result<Self> {
        let n = metric.grid().len();
        LineSeed::new(metric, vec![Mat2::line_projector(v); n], Provenance::Constant)
    }

    /// Line spanned by `v(x, y)`, normalized in the chart of its larger component.
    pub fn from_sections(
        metric: Arc<Metric>,
        v: impl Fn(f64, f64) -> [Complex64; 2],
        provenance: Provenance,
    ) -> Result<Self> {
        let projectors = metric
            .grid()
            .points()
            .enumerate()
            .map(|(index, (x, y))| {
                let [f1, f2] = v(x, y);
                let (n1, n2) = (f1.norm(), f2.norm());
                if !(f1.is_finite() && f2.is_finite()) || n1.max(n2) == 0.0 {
                    return Err(Error::DegenerateChart { index });
                }
                let w = if n1 >= n2 {
                    [Complex64::new(1.0, 0.0), f2 / f1]
                } else {
                    [f1 / f2, Complex64::new(1.0, 0.0)]
                };
                Ok(Mat2::line_projector(w))
            })
            .collect::<Result<Vec<_>>>()?;
        LineSeed::new(metric, projectors, provenance)
    }

    pub fn metric(&self) -> &Arc<Metric> {
        &self.metric
    }

    pub fn projectors(&self) -> &[Mat2] {
        &self.projectors
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// The complementary line `U = image(π⊥)`.
    pub fn complement(&self) -> LineSeed {
        LineSeed {
            metric: self.metric.clone(),
            projectors: self.projectors.iter().map(complement).collect(),
            provenance: self.provenance,
        }
    }

    pub fn involution(&self) -> InvolutionField {
        InvolutionField::from_projectors(self.metric.clone(), &self.projectors)
            .expect("validated projectors")
    }

    /// `π` as a mode-0 field.
    pub fn to_field(&self) -> ThetaField {
        ThetaField::single_mode(self.metric.clone(), 0, self.projectors.clone())
            .expect("grid checked")
    }

    /// Largest pointwise Frobenius distance between the projector fields.
    pub fn distance(&self, other: &LineSeed) -> f64 {
        self.projectors
            .iter()
            .zip(&other.projectors)
            .map(|(a, b)| (*a - *b).frob())
            .fold(0.0, f64::max)
    }
}

/// Line `[f₁(z) : f₂(z)]` for a meromorphic map in `z = x + iy`, given in
/// homogeneous coordinates that stay finite (switch charts near poles).
pub fn line_from_meromorphic(
    metric: Arc<Metric>,
    f: impl Fn(Complex64) -> [Complex64; 2],
) -> Result<LineSeed> {
    LineSeed::from_sections(metric, |x, y| f(Complex64::new(x, y)), Provenance::Custom)
}

/// The line `[℘(z − shift) : scale]` for the lattice of the torus periods.
#[derive(Debug, Clone, Copy)]
pub struct WeierstrassLine {
    wp: Weierstrass,
    lx: f64,
    pub scale: f64,
    pub shift: Complex64,
}

impl WeierstrassLine {
    /// `scale` defaults to `|℘(ω₁/2)|`, which balances the two charts.
    pub fn new(lx: f64, ly: f64, shift: Complex64, scale: Option<f64>) -> Result<Self> {
        let wp = Weierstrass::new(Complex64::new(0.0, ly / lx), DEFAULT_ROWS)?;
        let scale = scale.unwrap_or_else(|| wp.half_period_value().norm());
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument("seed scale must be positive".into()));
        }
        Ok(WeierstrassLine {
            wp,
            lx,
            scale,
            shift,
        })
    }

    /// Finite homogeneous coordinates of the line at `z = x + iy`.
    pub fn homogeneous(&self, z: Complex64) -> [Complex64; 2] {
        let zeta = (z - self.shift) / self.lx;
        let one = Complex64::new(1.0, 0.0);
        match self.wp.value(zeta) {
            Ok(p) if p.norm() < self.scale => [p, Complex64::new(self.scale, 0.0)],
            _ => [one, self.wp.reciprocal(zeta) * self.scale],
        }
    }
}

pub fn weierstrass_seed(metric: Arc<Metric>, shift: Complex64, scale: Option<f64>) -> Result<LineSeed> {
    let g = *metric.grid();
    let line = WeierstrassLine::new(g.lx, g.ly, shift, scale)?;
    Ok(line_from_meromorphic(metric, |z| line.homogeneous(z))?.with_provenance(Provenance::Weierstrass))
}

/// Sections `α` and `β` of the degree-one factor, stored as `e^{iθ}` coefficients.
#[derive(Debug, Clone)]
pub struct BacklundParams {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Mat2>,
    /// Rescale to `|α|² + |β|² = 1` instead of rejecting unnormalized input.
    pub normalize: bool,
}

impl BacklundParams {
    /// `α = 1`, `β = 0`.
    pub fn standard(metric: &Metric) -> Self {
        let n = metric.grid().len();
        BacklundParams {
            alpha: vec![Complex64::new(1.0, 0.0); n],
            beta: vec![Mat2::zero(); n],
            normalize: false,
        }
    }
}

/// The factor `a` of degree one with `a⁻¹V(a) = i(2π − Id)`.
///
/// `β` is projected to its `π⊥βπ` block before normalization is checked.
pub fn construct_a(seed: &LineSeed, params: &BacklundParams) -> Result<ThetaField> {
    let n = seed.metric.grid().len();
    if params.alpha.len() != n || params.beta.len() != n {
        return Err(Error::GridMismatch);
    }
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    let mut defect: f64 = 0.0;
    for ((p, &alpha), beta) in seed.projectors.iter().zip(&params.alpha).zip(&params.beta) {
        let q = complement(p);
        let mut alpha = alpha;
        let mut b = q * *beta * *p;
        let size = alpha.norm_sqr() + b.frob_sq();
        if params.normalize {
            if size == 0.0 {
                return Err(Error::NotNormalized { defect: 1.0 });
            }
            let s = size.sqrt().recip();
            alpha *= s;
            b = b * s;
        } else {
            defect = defect.max((size - 1.0).abs());
        }
        plus.push(p.scale(alpha) - b);
        minus.push(q.scale(alpha.conj()) + b.adjoint());
    }
    if defect > SEED_TOL {
        return Err(Error::NotNormalized { defect });
    }
    let a = ThetaField::from_modes(seed.metric.clone(), -1, vec![minus, vec![Mat2::zero(); n], plus])?
        .into_unitary()?;
    Ok(a.with_parity_tag(DEGREE_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolomorphicResidual {
    /// Norm of `−⋆d_A g − (d_A g)g`.
    pub r1: f64,
    /// Norm of `π⊥ ∂̄_A π`.
    pub r3: f64,
}

/// Residuals of the two equivalent holomorphicity conditions for the line
/// `L` with respect to `A`, failing if they disagree by more than a factor 10.
pub fn holomorphic_line_residual(a: &Connection, seed: &LineSeed) -> Result<HolomorphicResidual> {
    let pi = seed.to_field();
    pi.check_grid(a.as_field())?;
    let metric = seed.metric.clone();
    let perp = ThetaField::single_mode(metric.clone(), 0, seed.projectors.iter().map(complement).collect())?;
    let r3 = norm(&multiply(&perp, &dbar_a(a, &pi)?)?);

    let g = seed.involution().to_field();
    let dg = geodesic_x(&g)
        .add(&multiply(a.as_field(), &g)?)?
        .sub(&multiply(&g, a.as_field())?)?;
    let r = hodge_star_field(&dg)
        .scale(Complex64::new(-1.0, 0.0))
        .sub(&multiply(&dg, &g)?)?;
    let r1 = norm(&r);
    if r1 > 10.0 * r3 + 1e-10 || r3 > 10.0 * r1 + 1e-10 {
        return Err(Error::EquivalenceViolated { r1, r3 });
    }
    Ok(HolomorphicResidual { r1, r3 })
}

/// Residuals recorded by a Bäcklund step.
#[derive(Debug, Clone)]
pub struct BacklundReport {
    pub seed: HolomorphicResidual,
    pub input_transport: f64,
    pub transport: f64,
    pub connection: f64,
    pub mypde: f64,
    pub j_symmetry: f64,
    pub degree_before: i32,
    pub degree_after: i32,
}

#[derive(Debug, Clone)]
pub struct BacklundOutput {
    pub connection: Connection,
    pub u: ThetaField,
    pub report: BacklundReport,
}

fn gate(name: &'static str, value: f64, threshold: f64) -> Result<()> {
    if value <= threshold {
        Ok(())
    } else {
        Err(Error::PipelineResidual {
            gate: name,
            value,
            threshold,
        })
    }
}

/// One Bäcklund step: `u_F = a·b` and `A_F = −X(u_F)u_F⁻¹`.
pub fn backlund_transform(
    a: &Connection,
    b: &ThetaField,
    seed: &LineSeed,
    params: &BacklundParams,
) -> Result<BacklundOutput> {
    backlund_transform_with(a, b, seed, params, &Gates::default())
}

pub fn backlund_transform_with(
    a: &Connection,
    b: &ThetaField,
    seed: &LineSeed,
    params: &BacklundParams,
    gates: &Gates,
) -> Result<BacklundOutput> {
    b.check_grid(a.as_field())?;
    let input_transport = transport_pde_residual(a.as_field(), b)?.total;
    gate("input_transport_pde", input_transport, gates.pde)?;
    let holo = holomorphic_line_residual(a, seed)?;
    if !(holo.r3 <= gates.seed) {
        return Err(Error::SeedNotHolomorphic {
            residual: holo.r3,
            gate: gates.seed,
        });
    }
    let factor = construct_a(seed, params)?;
    let degree_before = degree_of(b, DEGREE_TOL);
    let u = multiply(&factor, b)?.trimmed(DEGREE_TOL * 1e-3).into_unitary()?;
    let raw = raw_connection_from_u(&u)?;
    let connection = is_connection_residual(&raw);
    gate("connection", connection, gates.pde)?;
    let a_f = Connection::from_field(&raw)?;
    let transport = transport_pde_residual(a_f.as_field(), &u)?.total;
    gate("transport_pde", transport, gates.pde)?;
    let mypde = mypde_residual(&f_from_u(&u)?)?;
    gate("mypde", mypde, gates.pde)?;
    let degree_after = degree_of(&u, DEGREE_TOL);
    if degree_after > degree_before + 1 {
        return Err(Error::PipelineResidual {
            gate: "degree",
            value: degree_after as f64,
            threshold: (degree_before + 1) as f64,
        });
    }
    let j_symmetry = u.j_symmetry_defect();
    let u = u.with_parity_tag(DEGREE_TOL);
    Ok(BacklundOutput {
        connection: a_f,
        u,
        report: BacklundReport {
            seed: holo,
            input_transport,
            transport,
            connection,
            mypde,
            j_symmetry,
            degree_before,
            degree_after,
        },
    })
}

fn candidate_vectors() -> [[Complex64; 2]; 8] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let e = |phase: f64| Complex64::from_polar(h, phase);
    [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(h, 0.0), c(h, 0.0)],
        [c(h, 0.0), c(-h, 0.0)],
        [c(h, 0.0), c(0.0, h)],
        [c(h, 0.0), c(0.0, -h)],
        [c(h, 0.0), e(std::f64::consts::FRAC_PI_4)],
        [c(h, 0.0), e(3.0 * std::f64::consts::FRAC_PI_4)],
    ]
}

fn norm2(v: [Complex64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// The line spanned by `s = b₋N ξ`, where `N` is the degree of `b`, gated on
/// holomorphicity with respect to `b`'s own connection.
pub fn extract_top_line(b: &ThetaField, tol: f64) -> Result<LineSeed> {
    extract_top_line_gated(b, tol, SEED_GATE)
}

fn extract_top_line_gated(b: &ThetaField, tol: f64, seed_gate: f64) -> Result<LineSeed> {
    let n = degree_of(b, DEGREE_TOL);
    if n < 1 {
        return Err(Error::Precondition(format!("degree must be at least 1, found {n}")));
    }
    let parity = parity_of(b, DEGREE_TOL);
    if parity == Parity::Mixed {
        return Err(Error::Precondition("field has mixed parity".into()));
    }
    let bottom = b.mode(-n).expect("degree within stored range");
    let scale = bottom.iter().map(Mat2::frob).fold(0.0, f64::max);

    let (xi, min_norm) = candidate_vectors()
        .into_iter()
        .map(|xi| {
            let m = bottom.iter().map(|m| norm2(m.apply(xi))).fold(f64::INFINITY, f64::min);
            (xi, m)
        })
        .fold(None::<([Complex64; 2], f64)>, |best, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
        .expect("candidate set nonempty");
    if !(min_norm >= tol * scale) {
        return Err(Error::VanishingSection { min_norm });
    }
    let projectors: Vec<Mat2> = bottom.iter().map(|m| Mat2::line_projector(m.apply(xi))).collect();
    let off: f64 = bottom
        .iter()
        .zip(&projectors)
        .map(|(m, p)| (complement(p) * *m).frob_sq())
        .sum::<f64>()
        .sqrt();
    let total: f64 = bottom.iter().map(Mat2::frob_sq).sum::<f64>().sqrt();
    if !(off <= tol * total) {
        return Err(Error::RankDefect { defect: off / total });
    }
    let seed = LineSeed::new(b.metric().clone(), projectors, Provenance::Extracted)?;
    let a = connection_from_u(b)?;
    let holo = holomorphic_line_residual(&a, &seed)?;
    if !(holo.r3 <= seed_gate) {
        return Err(Error::SeedNotHolomorphic {
            residual: holo.r3,
            gate: seed_gate,
        });
    }
    Ok(seed)
}

#[derive(Debug, Clone)]
pub struct LowerReport {
    pub degree_before: i32,
    pub degree_after: i32,
    /// Norm of the removed top modes relative to `‖b‖`.
    pub tail: f64,
    pub connection: f64,
    pub transport: f64,
}

#[derive(Debug, Clone)]
pub struct LowerOutput {
    pub connection: Connection,
    pub u: ThetaField,
    pub seed: LineSeed,
    pub report: LowerReport,
}

/// Lowers the degree of `b` by one with the factor built from its top line.
pub fn lower_degree(a: &Connection, b: &ThetaField) -> Result<LowerOutput> {
    lower_degree_with(a, b, &Gates::default())
}

pub fn lower_degree_with(a: &Connection, b: &ThetaField, gates: &Gates) -> Result<LowerOutput> {
    b.check_grid(a.as_field())?;
    let n = degree_of(b, DEGREE_TOL);
    if n < 1 {
        return Err(Error::Precondition(format!("degree must be at least 1, found {n}")));
    }
    let input = transport_pde_residual(a.as_field(), b)?.total;
    gate("input_transport_pde", input, gates.pde)?;
    let seed = extract_top_line_gated(b, EXTRACT_TOL, gates.seed)?;
    let factor = construct_a(&seed, &BacklundParams::standard(b.metric()))?;
    let full = multiply(&factor, b)?;
    let tail_modes: Vec<i32> = vec![-n - 1, -n, n, n + 1];
    let tail_field = full.map_modes(|m, x| if tail_modes.contains(&m) { *x } else { Mat2::zero() });
    let tail = norm(&tail_field) / norm(b);
    if !(tail <= gates.lowering) {
        return Err(Error::DegreeNotLowered {
            tail,
            threshold: gates.lowering,
        });
    }
    let u = full.with_range(-(n - 1), n - 1).into_unitary()?.with_parity_tag(DEGREE_TOL);
    let raw = raw_connection_from_u(&u)?;
    let connection = is_connection_residual(&raw);
    gate("connection", connection, gates.pde)?;
    let lowered = Connection::from_field(&raw)?;
    let transport = transport_pde_residual(lowered.as_field(), &u)?.total;
    gate("transport_pde", transport, gates.pde)?;
    Ok(LowerOutput {
        connection: lowered,
        u: u.clone(),
        seed,
        report: LowerReport {
            degree_before: n,
            degree_after: degree_of(&u, DEGREE_TOL),
            tail,
            connection,
            transport,
        },
    })
}
