//! Matrix-valued functions on the unit tangent bundle of a flat square torus.
//!
//! A [`ThetaField`] is a finite Fourier series `Σ_m u_m(x, y) e^{imθ}` in the
//! fiber angle. Each coefficient `u_m` is a grid of `Mat2` samples on the base,
//! identified with its trigonometric interpolant. Coefficients store `h` in
//! `u_m = h e^{imθ}`; the conformal weights `e^{nλ}` only enter inside the
//! operators.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::{j_twist, Mat2};
use crate::error::{Error, Result};
use crate::spectral::{join_entries, split_entries, Spectral};

/// Default truncation tolerance for [`degree_of`] and [`parity_of`].
pub const DEGREE_TOL: f64 = 1e-9;

/// Tolerance on pointwise unitarity of unitary-tagged fields.
pub const UNITARY_TOL: f64 = 1e-8;

/// Tolerance on the anti-Hermitian invariant of a [`Connection`].
pub const CONNECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl TorusGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "resolution must be even and at least 8, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("periods must be positive, got {lx}x{ly}")));
        }
        Ok(TorusGrid { nx, ny, lx, ly })
    }

    /// `n × n` grid on the unit square torus.
    pub fn square(n: usize) -> Result<Self> {
        TorusGrid::new(n, n, 1.0, 1.0)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        (self.lx / self.nx as f64) * (self.ly / self.ny as f64)
    }

    /// Coordinates of grid point `index` (row-major over `(y, x)`).
    pub fn point(&self, index: usize) -> (f64, f64) {
        let (i, j) = (index % self.nx, index / self.nx);
        (
            i as f64 * self.lx / self.nx as f64,
            j as f64 * self.ly / self.ny as f64,
        )
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }
}

/// Conformal factor `λ` of `ds² = e^{2λ}(dx² + dy²)` on a torus grid.
pub struct Metric {
    grid: TorusGrid,
    lambda: Vec<f64>,
    flat: bool,
    pub(crate) spectral: Spectral,
}

impl std::fmt::Debug for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Metric")
            .field("grid", &self.grid)
            .field("flat", &self.flat)
            .finish()
    }
}

impl Metric {
    pub fn flat(grid: TorusGrid) -> Arc<Metric> {
        Arc::new(Metric {
            grid,
            lambda: vec![0.0; grid.len()],
            flat: true,
            spectral: Spectral::new(grid.nx, grid.ny, grid.lx, grid.ly),
        })
    }

    pub fn from_lambda(grid: TorusGrid, lambda: Vec<f64>) -> Result<Arc<Metric>> {
        if lambda.len() != grid.len() || lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument(
                "conformal factor must be finite and match the grid".into(),
            ));
        }
        let flat = lambda.iter().all(|&l| l == 0.0);
        Ok(Arc::new(Metric {
            grid,
            lambda,
            flat,
            spectral: Spectral::new(grid.nx, grid.ny, grid.lx, grid.ly),
        }))
    }

    pub fn with_lambda(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Result<Arc<Metric>> {
        let lambda = grid.points().map(|(x, y)| f(x, y)).collect();
        Metric::from_lambda(grid, lambda)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn same_as(&self, other: &Metric) -> bool {
        std::ptr::eq(self, other) || (self.grid == other.grid && self.lambda == other.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FieldTags {
    pub unitary: bool,
    pub parity: Option<Parity>,
}

/// Finite Fourier series in the fiber angle with `Mat2` coefficient grids.
#[derive(Debug, Clone)]
pub struct ThetaField {
    metric: Arc<Metric>,
    mode_min: i32,
    modes: Vec<Vec<Mat2>>,
    tags: FieldTags,
}

fn is_zero_grid(g: &[Mat2]) -> bool {
    g.iter().all(|m| m.0.iter().all(|z| z.re == 0.0 && z.im == 0.0))
}

pub(crate) fn grid_rms(g: &[Mat2]) -> f64 {
    (g.iter().map(Mat2::frob_sq).sum::<f64>() / g.len() as f64).sqrt()
}

impl ThetaField {
    pub fn from_modes(metric: Arc<Metric>, mode_min: i32, modes: Vec<Vec<Mat2>>) -> Result<Self> {
        let n = metric.grid().len();
        if modes.is_empty() || modes.iter().any(|g| g.len() != n) {
            return Err(Error::InvalidArgument(
                "mode grids must be nonempty and match the grid size".into(),
            ));
        }
        Ok(ThetaField {
            metric,
            mode_min,
            modes,
            tags: FieldTags::default(),
        })
    }

    pub fn zeros(metric: Arc<Metric>, mode_min: i32, mode_max: i32) -> Self {
        let n = metric.grid().len();
        let count = (mode_max - mode_min + 1).max(1) as usize;
        ThetaField {
            metric,
            mode_min,
            modes: vec![vec![Mat2::zero(); n]; count],
            tags: FieldTags::default(),
        }
    }

    pub fn single_mode(metric: Arc<Metric>, mode: i32, grid: Vec<Mat2>) -> Result<Self> {
        ThetaField::from_modes(metric, mode, vec![grid])
    }

    pub fn constant(metric: Arc<Metric>, m: Mat2) -> Self {
        let n = metric.grid().len();
        ThetaField {
            metric,
            mode_min: 0,
            modes: vec![vec![m; n]],
            tags: FieldTags::default(),
        }
    }

    /// The identity map, unitary and even.
    pub fn identity(metric: Arc<Metric>) -> Self {
        let mut f = ThetaField::constant(metric, Mat2::identity());
        f.tags = FieldTags {
            unitary: true,
            parity: Some(Parity::Even),
        };
        f
    }

    /// Mode-`m` field whose coefficient is `h(x, y)` on the grid.
    pub fn from_fn(metric: Arc<Metric>, mode: i32, h: impl Fn(f64, f64) -> Mat2) -> Self {
        let grid = metric.grid().points().map(|(x, y)| h(x, y)).collect();
        ThetaField {
            metric,
            mode_min: mode,
            modes: vec![grid],
            tags: FieldTags::default(),
        }
    }

    pub fn metric(&self) -> &Arc<Metric> {
        &self.metric
    }

    pub fn grid(&self) -> &TorusGrid {
        self.metric.grid()
    }

    pub fn mode_min(&self) -> i32 {
        self.mode_min
    }

    pub fn mode_max(&self) -> i32 {
        self.mode_min + self.modes.len() as i32 - 1
    }

    pub fn mode(&self, m: i32) -> Option<&[Mat2]> {
        let k = m - self.mode_min;
        if k < 0 {
            return None;
        }
        self.modes.get(k as usize).map(|g| g.as_slice())
    }

    pub(crate) fn mode_mut(&mut self, m: i32) -> Option<&mut Vec<Mat2>> {
        let k = m - self.mode_min;
        if k < 0 {
            return None;
        }
        self.modes.get_mut(k as usize)
    }

    /// Iterates `(m, u_m)` over the stored mode range.
    pub fn modes(&self) -> impl Iterator<Item = (i32, &[Mat2])> {
        self.modes
            .iter()
            .enumerate()
            .map(move |(k, g)| (self.mode_min + k as i32, g.as_slice()))
    }

    pub fn tags(&self) -> FieldTags {
        self.tags
    }

    pub fn check_grid(&self, other: &ThetaField) -> Result<()> {
        if self.metric.same_as(&other.metric) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Root-mean-square Frobenius norm of mode `m` over the grid.
    pub fn mode_rms(&self, m: i32) -> f64 {
        self.mode(m).map(grid_rms).unwrap_or(0.0)
    }

    /// Largest `|m|` of the stored range (not the numerical degree).
    pub fn mode_span(&self) -> i32 {
        self.mode_min.abs().max(self.mode_max().abs())
    }

    /// Re-expresses the field over `[lo, hi]`, padding with zeros or dropping modes.
    pub fn with_range(&self, lo: i32, hi: i32) -> ThetaField {
        let mut out = ThetaField::zeros(self.metric.clone(), lo, hi);
        for m in lo..=hi {
            if let Some(g) = self.mode(m) {
                out.mode_mut(m).unwrap().copy_from_slice(g);
            }
        }
        out.tags = self.tags;
        out
    }

    /// Drops outer modes whose rms is at most `tol`, never removing mode 0.
    pub fn trimmed(&self, tol: f64) -> ThetaField {
        let mut lo = self.mode_min;
        let mut hi = self.mode_max();
        while lo < 0.min(hi) && self.mode_rms(lo) <= tol {
            lo += 1;
        }
        while hi > 0.max(lo) && self.mode_rms(hi) <= tol {
            hi -= 1;
        }
        self.with_range(lo.min(0), hi.max(0))
    }

    fn combine(&self, other: &ThetaField, sign: f64) -> Result<ThetaField> {
        self.check_grid(other)?;
        let lo = self.mode_min.min(other.mode_min);
        let hi = self.mode_max().max(other.mode_max());
        let mut out = self.with_range(lo, hi);
        out.tags = FieldTags::default();
        for (m, g) in other.modes() {
            let dst = out.mode_mut(m).unwrap();
            for (d, s) in dst.iter_mut().zip(g) {
                *d += s.scale_re(sign);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &ThetaField) -> Result<ThetaField> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &ThetaField) -> Result<ThetaField> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: Complex64) -> ThetaField {
        self.map_modes(|_, m| m.scale(c))
    }

    /// Applies `f(mode, coefficient)` to every coefficient; tags are cleared.
    pub fn map_modes(&self, f: impl Fn(i32, &Mat2) -> Mat2 + Sync) -> ThetaField {
        let modes = self
            .modes()
            .map(|(m, g)| g.iter().map(|x| f(m, x)).collect())
            .collect();
        ThetaField {
            metric: self.metric.clone(),
            mode_min: self.mode_min,
            modes,
            tags: FieldTags::default(),
        }
    }

    /// Pointwise adjoint: mode `m` coefficient `u_m` becomes mode `−m` coefficient `u_m*`.
    pub fn adjoint(&self) -> ThetaField {
        let modes = self
            .modes
            .iter()
            .rev()
            .map(|g| g.iter().map(Mat2::adjoint).collect())
            .collect();
        ThetaField {
            metric: self.metric.clone(),
            mode_min: -self.mode_max(),
            modes,
            tags: FieldTags {
                unitary: self.tags.unitary,
                parity: self.tags.parity,
            },
        }
    }

    /// Grid of values `Σ_m u_m e^{imθ}` at a fixed fiber angle.
    pub fn sample_theta(&self, theta: f64) -> Vec<Mat2> {
        let mut out = vec![Mat2::zero(); self.grid().len()];
        for (m, g) in self.modes() {
            let ph = Complex64::from_polar(1.0, m as f64 * theta);
            for (o, v) in out.iter_mut().zip(g) {
                *o += v.scale(ph);
            }
        }
        out
    }

    /// Exact trigonometric-series evaluation at an arbitrary point of SM.
    pub fn evaluate(&self, x: f64, y: f64, theta: f64) -> Mat2 {
        let sp = &self.metric.spectral;
        let mut acc = Mat2::zero();
        for (m, g) in self.modes() {
            if is_zero_grid(g) {
                continue;
            }
            let ph = Complex64::from_polar(1.0, m as f64 * theta);
            let entries = split_entries(g);
            let mut v = Mat2::zero();
            for (e, data) in entries.iter().enumerate() {
                v.0[e] = sp.eval_coefficients(&sp.coefficients(data), x, y);
            }
            acc += v.scale(ph);
        }
        acc
    }

    /// Maximum of `‖u u* − Id‖_F` over the grid at `4N + 4` equispaced angles.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.mode_span() as usize;
        let samples = 4 * n + 4;
        (0..samples)
            .into_par_iter()
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / samples as f64;
                self.sample_theta(theta)
                    .iter()
                    .map(Mat2::unitarity_defect)
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Validates pointwise unitarity and sets the unitary tag.
    pub fn into_unitary(mut self) -> Result<ThetaField> {
        let defect = self.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(Error::NotUnitary { defect });
        }
        self.tags.unitary = true;
        Ok(self)
    }

    /// Succeeds if the field is unitary-tagged or passes the unitarity check.
    pub fn require_unitary(&self) -> Result<()> {
        if self.tags.unitary {
            return Ok(());
        }
        let defect = self.unitarity_defect();
        if defect <= UNITARY_TOL {
            Ok(())
        } else {
            Err(Error::NotUnitary { defect })
        }
    }

    /// Computes and records the parity tag.
    pub fn with_parity_tag(mut self, tol: f64) -> ThetaField {
        self.tags.parity = Some(parity_of(&self, tol));
        self
    }

    /// `max_m rms(j_twist(u_m) − u_{−m})`.
    pub fn j_symmetry_defect(&self) -> f64 {
        let zero = vec![Mat2::zero(); self.grid().len()];
        let lo = self.mode_min.min(-self.mode_max());
        let hi = self.mode_max().max(-self.mode_min);
        (lo..=hi)
            .map(|m| {
                let a = self.mode(m).unwrap_or(&zero);
                let b = self.mode(-m).unwrap_or(&zero);
                let diff: Vec<Mat2> = a.iter().zip(b).map(|(x, y)| j_twist(x) - *y).collect();
                grid_rms(&diff)
            })
            .fold(0.0, f64::max)
    }

    /// Maximum pointwise Frobenius distance to `other`, over all modes.
    pub fn max_distance(&self, other: &ThetaField) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d
            .modes
            .iter()
            .flat_map(|g| g.iter().map(Mat2::frob))
            .fold(0.0, f64::max))
    }
}

/// Pointwise product of two fields. Modes convolve; the base products are
/// formed on the doubled grid and spectrally truncated back.
pub fn multiply(f: &ThetaField, g: &ThetaField) -> Result<ThetaField> {
    f.check_grid(g)?;
    let sp = &f.metric.spectral;
    let upsample_modes = |h: &ThetaField| -> Vec<Option<[Vec<Complex64>; 4]>> {
        h.modes
            .par_iter()
            .map(|grid| {
                if is_zero_grid(grid) {
                    None
                } else {
                    Some(split_entries(grid).map(|e| sp.upsample(&e)))
                }
            })
            .collect()
    };
    let fu = upsample_modes(f);
    let gu = upsample_modes(g);
    let lo = f.mode_min + g.mode_min;
    let hi = f.mode_max() + g.mode_max();
    let fine_len = 4 * f.grid().len();
    let modes: Vec<Vec<Mat2>> = (lo..=hi)
        .into_par_iter()
        .map(|m| {
            let mut acc: [Vec<Complex64>; 4] =
                std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); fine_len]);
            let mut any = false;
            for (i, fa) in fu.iter().enumerate() {
                let k = f.mode_min + i as i32;
                let j = m - k - g.mode_min;
                if j < 0 || j as usize >= gu.len() {
                    continue;
                }
                let (Some(fa), Some(gb)) = (fa, &gu[j as usize]) else {
                    continue;
                };
                any = true;
                for p in 0..fine_len {
                    let prod = Mat2([fa[0][p], fa[1][p], fa[2][p], fa[3][p]])
                        * Mat2([gb[0][p], gb[1][p], gb[2][p], gb[3][p]]);
                    for e in 0..4 {
                        acc[e][p] += prod.0[e];
                    }
                }
            }
            if any {
                join_entries(acc.map(|e| sp.downsample(&e)))
            } else {
                vec![Mat2::zero(); f.grid().len()]
            }
        })
        .collect();
    let mut out = ThetaField::from_modes(f.metric.clone(), lo, modes)?;
    out.tags.unitary = f.tags.unitary && g.tags.unitary;
    Ok(out)
}

/// Numerical degree: largest `|m|` with mode rms above `tol`.
pub fn degree_of(f: &ThetaField, tol: f64) -> i32 {
    f.modes()
        .filter(|(_, g)| grid_rms(g) > tol)
        .map(|(m, _)| m.abs())
        .max()
        .unwrap_or(0)
}

pub fn parity_of(f: &ThetaField, tol: f64) -> Parity {
    let odd_quiet = f
        .modes()
        .filter(|(m, _)| m.rem_euclid(2) == 1)
        .all(|(_, g)| grid_rms(g) <= tol);
    let even_quiet = f
        .modes()
        .filter(|(m, _)| m.rem_euclid(2) == 0)
        .all(|(_, g)| grid_rms(g) <= tol);
    match (odd_quiet, even_quiet) {
        (true, _) => Parity::Even,
        (false, true) => Parity::Odd,
        (false, false) => Parity::Mixed,
    }
}

/// A unitary connection: only modes `±1`, with `A₋₁ = −A₁*` and traceless.
#[derive(Debug, Clone)]
pub struct Connection(ThetaField);

impl Connection {
    pub fn new(metric: Arc<Metric>, minus: Vec<Mat2>, plus: Vec<Mat2>) -> Result<Self> {
        let zero = vec![Mat2::zero(); metric.grid().len()];
        let f = ThetaField::from_modes(metric, -1, vec![minus, zero, plus])?;
        Connection::from_field(&f)
    }

    pub fn trivial(metric: Arc<Metric>) -> Self {
        Connection(ThetaField::zeros(metric, -1, 1))
    }

    /// Spatially constant connection with `A₁ = p`, `A₋₁ = −p*`.
    pub fn constant(metric: Arc<Metric>, p: Mat2) -> Result<Self> {
        let n = metric.grid().len();
        Connection::new(metric, vec![-p.adjoint(); n], vec![p; n])
    }

    /// Keeps modes `±1` of `raw` and validates the anti-Hermitian invariant.
    ///
    /// Energy in other modes is discarded; callers gate it separately with
    /// `is_connection_residual`.
    pub fn from_field(raw: &ThetaField) -> Result<Self> {
        let f = raw.with_range(-1, 1);
        let mut f = ThetaField { tags: FieldTags::default(), ..f };
        if let Some(m0) = f.mode_mut(0) {
            m0.iter_mut().for_each(|m| *m = Mat2::zero());
        }
        let minus = f.mode(-1).unwrap();
        let plus = f.mode(1).unwrap();
        let scale = 1.0 + grid_rms(plus).max(grid_rms(minus));
        let skew: Vec<Mat2> = minus.iter().zip(plus).map(|(m, p)| *m + p.adjoint()).collect();
        let trace = plus
            .iter()
            .map(|p| p.trace().norm())
            .fold(0.0, f64::max);
        let defect = grid_rms(&skew).max(trace);
        if !(defect <= CONNECTION_TOL * scale) {
            return Err(Error::NotAConnection { energy: defect });
        }
        Ok(Connection(f))
    }

    pub fn as_field(&self) -> &ThetaField {
        &self.0
    }

    pub fn metric(&self) -> &Arc<Metric> {
        self.0.metric()
    }

    /// Coefficient grid of `A₁` (mode `+1`).
    pub fn plus(&self) -> &[Mat2] {
        self.0.mode(1).unwrap()
    }

    /// Coefficient grid of `A₋₁` (mode `−1`), i.e. `A_z̄` on the flat torus.
    pub fn minus(&self) -> &[Mat2] {
        self.0.mode(-1).unwrap()
    }

    /// Pointwise value `A₁e^{iθ} + A₋₁e^{−iθ}` at grid point `index`.
    pub fn value_at(&self, index: usize, theta: f64) -> Mat2 {
        let e = Complex64::from_polar(1.0, theta);
        self.plus()[index].scale(e) + self.minus()[index].scale(e.conj())
    }
}

impl AsRef<ThetaField> for Connection {
    fn as_ref(&self) -> &ThetaField {
        &self.0
    }
}

/// Mode-0 field of su(2) involutions `g` with `g² = −Id`.
#[derive(Debug, Clone)]
pub struct InvolutionField {
    metric: Arc<Metric>,
    g: Vec<Mat2>,
}

impl InvolutionField {
    pub fn new(metric: Arc<Metric>, g: Vec<Mat2>) -> Result<Self> {
        if g.len() != metric.grid().len() {
            return Err(Error::InvalidArgument("involution grid size mismatch".into()));
        }
        let defect = g
            .iter()
            .map(|m| (*m * *m + Mat2::identity()).frob())
            .fold(0.0, f64::max);
        if !(defect <= 1e-10) {
            return Err(Error::NotAnInvolution { defect });
        }
        Ok(InvolutionField { metric, g })
    }

    pub fn from_projectors(metric: Arc<Metric>, projectors: &[Mat2]) -> Result<Self> {
        let g = projectors
            .iter()
            .map(|p| crate::algebra::involution_from_projector(p).map(|g| *g.matrix()))
            .collect::<Result<Vec<_>>>()?;
        InvolutionField::new(metric, g)
    }

    pub fn metric(&self) -> &Arc<Metric> {
        &self.metric
    }

    pub fn values(&self) -> &[Mat2] {
        &self.g
    }

    pub fn projectors(&self) -> Vec<Mat2> {
        self.g
            .iter()
            .map(|g| (Mat2::identity() - g.scale(Complex64::new(0.0, 1.0))).scale_re(0.5))
            .collect()
    }

    pub fn to_field(&self) -> ThetaField {
        ThetaField {
            metric: self.metric.clone(),
            mode_min: 0,
            modes: vec![self.g.clone()],
            tags: FieldTags::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Su2Algebra;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn metric(n: usize) -> Arc<Metric> {
        Metric::flat(TorusGrid::square(n).unwrap())
    }

    fn projector_field(m: &Arc<Metric>) -> Vec<Mat2> {
        m.grid()
            .points()
            .map(|(x, y)| {
                let w = Su2Algebra::from_pauli(
                    0.3 * (2.0 * PI * x).cos(),
                    0.2 * (2.0 * PI * y).sin(),
                    0.25 * (2.0 * PI * (x + y)).sin(),
                )
                .exp();
                *w.matrix() * Mat2::diag(c(1.0, 0.0), c(0.0, 0.0)) * w.matrix().adjoint()
            })
            .collect()
    }

    fn raising_factor(m: &Arc<Metric>, pi: &[Mat2]) -> ThetaField {
        let perp: Vec<Mat2> = pi.iter().map(|p| Mat2::identity() - *p).collect();
        ThetaField::from_modes(
            m.clone(),
            -1,
            vec![perp, vec![Mat2::zero(); pi.len()], pi.to_vec()],
        )
        .unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(6, 8, 1.0, 1.0).is_err());
        assert!(TorusGrid::new(9, 8, 1.0, 1.0).is_err());
        assert!(TorusGrid::new(8, 8, 0.0, 1.0).is_err());
        let g = TorusGrid::new(8, 10, 2.0, 1.0).unwrap();
        assert_eq!(g.point(13), (5.0 * 2.0 / 8.0, 0.1));
    }

    #[test]
    fn evaluate_examples() {
        let m = metric(8);
        let id = ThetaField::identity(m.clone());
        assert!((id.evaluate(0.123, 0.77, 2.1) - Mat2::identity()).frob() < 1e-14);

        let f = ThetaField::from_fn(m.clone(), 1, |x, _| {
            Mat2::identity().scale(Complex64::from_polar(1.0, 2.0 * PI * x))
        });
        let v = f.evaluate(0.25, 0.0, PI / 2.0);
        assert!((v + Mat2::identity()).frob() < 1e-13);
    }

    #[test]
    fn evaluate_reproduces_grid_and_inverse_dft_in_theta() {
        let m = metric(8);
        let f = ThetaField::from_modes(
            m.clone(),
            -2,
            (0..5)
                .map(|k| {
                    (0..64)
                        .map(|i| {
                            Mat2::new(
                                c((i as f64 * 0.3 + k as f64).sin(), 0.1 * k as f64),
                                c(0.2, (i as f64 * 0.7).cos()),
                                c(-(i as f64).sqrt() * 0.1, 0.0),
                                c(0.0, (k * i) as f64 * 0.01),
                            )
                        })
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let nt = 2 * 2 + 2;
        for t in 0..nt {
            let theta = 2.0 * PI * t as f64 / nt as f64;
            let samples = f.sample_theta(theta);
            for idx in [0usize, 9, 37, 63] {
                let (x, y) = m.grid().point(idx);
                assert!((f.evaluate(x, y, theta) - samples[idx]).frob() < 1e-12);
            }
        }
    }

    #[test]
    fn multiply_examples() {
        let m = metric(32);
        let pi = projector_field(&m);
        let a = raising_factor(&m, &pi);
        let id = ThetaField::identity(m.clone());
        assert!(multiply(&a, &id).unwrap().max_distance(&a).unwrap() < 1e-12);

        // (e^{iθ}π + e^{−iθ}π⊥)(e^{iθ}π⊥ + e^{−iθ}π) = Id
        let perp: Vec<Mat2> = pi.iter().map(|p| Mat2::identity() - *p).collect();
        let b = raising_factor(&m, &perp);
        let prod = multiply(&a, &b).unwrap();
        assert!(prod.max_distance(&id).unwrap() < 1e-8);
        assert_eq!(degree_of(&prod, 1e-6), 0);
    }

    #[test]
    fn degree_and_parity() {
        let m = metric(16);
        let id = ThetaField::identity(m.clone());
        assert_eq!(degree_of(&id, DEGREE_TOL), 0);
        assert_eq!(parity_of(&id, DEGREE_TOL), Parity::Even);
        let a = raising_factor(&m, &projector_field(&m));
        assert_eq!(degree_of(&a, DEGREE_TOL), 1);
        assert_eq!(parity_of(&a, DEGREE_TOL), Parity::Odd);
        assert_eq!(parity_of(&a.add(&id).unwrap(), DEGREE_TOL), Parity::Mixed);
        assert!(a.clone().into_unitary().is_ok());
        assert!(a.j_symmetry_defect() < 1e-14);
    }

    #[test]
    fn degree_of_product_is_subadditive() {
        let m = metric(32);
        let pi = projector_field(&m);
        let a = raising_factor(&m, &pi);
        let rot: Vec<Mat2> = m
            .grid()
            .points()
            .map(|(x, _)| {
                let w = Su2Algebra::from_pauli(0.4 * (2.0 * PI * x).sin(), 0.3, 0.0).exp();
                *w.matrix() * Mat2::diag(c(1.0, 0.0), c(0.0, 0.0)) * w.matrix().adjoint()
            })
            .collect();
        let b = raising_factor(&m, &rot);
        let ab = multiply(&a, &b).unwrap();
        assert_eq!(degree_of(&ab, DEGREE_TOL), 2);
        assert!(degree_of(&ab, DEGREE_TOL) <= degree_of(&a, DEGREE_TOL) + degree_of(&b, DEGREE_TOL));
        let ab = ab.into_unitary().unwrap();
        assert!(ab.unitarity_defect() < 1e-8);
    }

    #[test]
    fn connection_invariant_checked() {
        let m = metric(8);
        let p = *Su2Algebra::from_pauli(0.1, 0.2, 0.3).matrix();
        let a = Connection::constant(m.clone(), p).unwrap();
        for theta in [0.0, 1.0, 2.5] {
            let v = a.value_at(5, theta);
            assert!(v.skew_defect() < 1e-14);
        }
        let n = m.grid().len();
        let herm = Mat2::identity();
        let bad = Connection::new(m, vec![herm; n], vec![herm; n]);
        assert!(matches!(bad, Err(Error::NotAConnection { .. })));
    }

    #[test]
    fn trimmed_keeps_mode_zero() {
        let m = metric(8);
        let f = ThetaField::zeros(m, -3, 2);
        let t = f.trimmed(1e-12);
        assert_eq!((t.mode_min(), t.mode_max()), (0, 0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn band_limited(m: &Arc<Metric>, seed: [f64; 6], mode: i32) -> ThetaField {
            ThetaField::from_fn(m.clone(), mode, move |x, y| {
                let p1 = 2.0 * PI * (x + 2.0 * y);
                let p2 = 2.0 * PI * (2.0 * x - y);
                Mat2::new(
                    c(seed[0] * p1.cos(), seed[1]),
                    c(seed[2] * p2.sin(), seed[3] * p1.sin()),
                    c(seed[4], seed[5] * p2.cos()),
                    c(seed[0] * seed[3], (p1 + p2).cos()),
                )
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]
            #[test]
            fn multiply_is_associative(
                s1 in proptest::array::uniform6(-1.0..1.0f64),
                s2 in proptest::array::uniform6(-1.0..1.0f64),
                s3 in proptest::array::uniform6(-1.0..1.0f64),
            ) {
                let m = metric(16);
                let a = band_limited(&m, s1, 1);
                let b = band_limited(&m, s2, -1).add(&band_limited(&m, s3, 0)).unwrap();
                let cc = band_limited(&m, s3, 2);
                let left = multiply(&multiply(&a, &b).unwrap(), &cc).unwrap();
                let right = multiply(&a, &multiply(&b, &cc).unwrap()).unwrap();
                prop_assert!(left.max_distance(&right).unwrap() < 1e-10);
            }
        }
    }
}
