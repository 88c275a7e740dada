//! 2×2 complex matrices and the SU(2) / su(2) refinements.
//!
//! `Mat2` is a plain value type stored row-major. The refinements `Su2` and
//! `Su2Algebra` are checked newtypes: constructing one validates the group or
//! Lie-algebra invariant at the algebraic tolerance.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for exact algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Tolerance used when validating projector and involution inputs.
pub const PROJECTOR_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 complex matrix, entries `[m00, m01, m10, m11]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [Complex64; 4]);

impl Mat2 {
    pub const fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Mat2([m00, m01, m10, m11])
    }

    pub const fn zero() -> Self {
        Mat2([ZERO; 4])
    }

    pub const fn identity() -> Self {
        Mat2([ONE, ZERO, ZERO, ONE])
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Mat2([a, ZERO, ZERO, d])
    }

    pub fn scalar(c: Complex64) -> Self {
        Mat2::diag(c, c)
    }

    /// Outer product `u v*`.
    pub fn outer(u: [Complex64; 2], v: [Complex64; 2]) -> Self {
        Mat2([
            u[0] * v[0].conj(),
            u[0] * v[1].conj(),
            u[1] * v[0].conj(),
            u[1] * v[1].conj(),
        ])
    }

    /// Orthogonal projector onto the line spanned by `v`.
    pub fn line_projector(v: [Complex64; 2]) -> Self {
        let n2 = v[0].norm_sqr() + v[1].norm_sqr();
        Mat2::outer(v, v).scale_re(1.0 / n2)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()])
    }

    pub fn conj(&self) -> Self {
        let m = &self.0;
        Mat2([m[0].conj(), m[1].conj(), m[2].conj(), m[3].conj()])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0] + self.0[3]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    /// Inverse via the adjugate. Singular input yields non-finite entries.
    pub fn inverse(&self) -> Self {
        let d = self.det();
        let m = &self.0;
        Mat2([m[3] / d, -m[1] / d, -m[2] / d, m[0] / d])
    }

    pub fn frob_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frob(&self) -> f64 {
        self.frob_sq().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Mat2(self.0.map(|z| z * c))
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Mat2(self.0.map(|z| z * c))
    }

    pub fn commutator(&self, other: &Mat2) -> Self {
        *self * *other - *other * *self
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `‖m m* − Id‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.adjoint() - Mat2::identity()).frob()
    }

    /// `‖m + m*‖_F`.
    pub fn skew_defect(&self) -> f64 {
        (*self + self.adjoint()).frob()
    }

    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_re(0.5)
    }

    /// Nearest rank-one Hermitian projector (top eigenline of the Hermitian part).
    pub fn nearest_line_projector(&self) -> Mat2 {
        let h = self.hermitian_part();
        let a = h.0[0].re;
        let d = h.0[3].re;
        let b = h.0[1];
        let half = 0.5 * (a - d);
        let lam = 0.5 * (a + d) + (half * half + b.norm_sqr()).sqrt();
        // (H - lam) v = 0 has the two candidate solutions below; keep the larger.
        let v1 = [b, Complex64::new(lam - a, 0.0)];
        let v2 = [Complex64::new(lam - d, 0.0), b.conj()];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        if n1.max(n2) == 0.0 {
            return Mat2::diag(ONE, ZERO);
        }
        if n1 >= n2 {
            Mat2::line_projector(v1)
        } else {
            Mat2::line_projector(v2)
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (self.0, rhs.0);
        Mat2([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (self.0, rhs.0);
        Mat2([a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl SubAssign for Mat2 {
    fn sub_assign(&mut self, rhs: Mat2) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2(self.0.map(|z| -z))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (self.0, rhs.0);
        Mat2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

impl Mul<Complex64> for Mat2 {
    type Output = Mat2;
    fn mul(self, c: Complex64) -> Mat2 {
        self.scale(c)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, c: f64) -> Mat2 {
        self.scale_re(c)
    }
}

/// An element of SU(2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2(Mat2);

impl Su2 {
    pub fn new(m: Mat2) -> Result<Self> {
        let defect = m.unitarity_defect().max((m.det() - ONE).norm());
        if !m.is_finite() || defect > ALGEBRA_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Su2(m))
    }

    pub fn identity() -> Self {
        Su2(Mat2::identity())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn inverse(&self) -> Su2 {
        Su2(self.0.adjoint())
    }

    pub fn compose(&self, other: &Su2) -> Su2 {
        Su2(self.0 * other.0)
    }
}

/// An element of su(2): anti-Hermitian and traceless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Algebra(Mat2);

impl Su2Algebra {
    pub fn new(m: Mat2) -> Result<Self> {
        let defect = m.skew_defect().max(m.trace().norm());
        if !m.is_finite() || defect > ALGEBRA_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not in su(2) (defect {defect:.3e})"
            )));
        }
        Ok(Su2Algebra(m))
    }

    /// `i(x σ₁ + y σ₂ + z σ₃)`.
    pub fn from_pauli(x: f64, y: f64, z: f64) -> Self {
        Su2Algebra(Mat2::new(
            Complex64::new(0.0, z),
            Complex64::new(y, x),
            Complex64::new(-y, x),
            Complex64::new(0.0, -z),
        ))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// Closed-form exponential: `X² = −|X|² Id` for `X ∈ su(2)`.
    pub fn exp(&self) -> Su2 {
        let r = (0.5 * self.0.frob_sq()).sqrt();
        let sinc = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
        Su2(Mat2::identity().scale_re(r.cos()) + self.0.scale_re(sinc))
    }

    /// `‖g² + Id‖_F`.
    pub fn involution_defect(&self) -> f64 {
        (self.0 * self.0 + Mat2::identity()).frob()
    }
}

/// `j m j⁻¹` for the antilinear map `j(z₁, z₂) = (−z̄₂, z̄₁)`.
pub fn j_twist(m: &Mat2) -> Mat2 {
    // sigma = [[0,-1],[1,0]]: sigma conj(m) sigma^{-1}
    let c = m.conj().0;
    Mat2([c[3], -c[2], -c[1], c[0]])
}

/// Applies `j` to a vector.
pub fn j_vector(v: [Complex64; 2]) -> [Complex64; 2] {
    [-v[1].conj(), v[0].conj()]
}

pub fn projector_defect(p: &Mat2) -> f64 {
    let idem = (*p * *p - *p).frob();
    let herm = (*p - p.adjoint()).frob();
    let tr = (p.trace() - ONE).norm();
    idem.max(herm).max(tr)
}

/// `g = i(2p − Id)`, the su(2) involution whose `+i` eigenline is `image(p)`.
pub fn involution_from_projector(p: &Mat2) -> Result<Su2Algebra> {
    let defect = projector_defect(p);
    if !p.is_finite() || defect > PROJECTOR_TOL {
        return Err(Error::NotAProjector { defect });
    }
    let g = (p.scale_re(2.0) - Mat2::identity()).scale(I);
    Ok(Su2Algebra(g))
}

/// `π = (Id − ig)/2`, the Hermitian projector onto the `+i` eigenline of `g`.
pub fn projector_from_involution(g: &Mat2) -> Result<Mat2> {
    let defect = (*g * *g + Mat2::identity()).frob();
    if !g.is_finite() || defect > PROJECTOR_TOL {
        return Err(Error::NotAnInvolution { defect });
    }
    Ok((Mat2::identity() - g.scale(I)).scale_re(0.5))
}

/// Complementary projector `π⊥ = Id − π`.
pub fn complement(p: &Mat2) -> Mat2 {
    Mat2::identity() - *p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> [Complex64; 2] {
        let v = [
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ];
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / n, v[1] / n]
    }

    #[test]
    fn j_twist_examples() {
        assert_eq!(j_twist(&Mat2::identity()), Mat2::identity());
        let d = Mat2::diag(I, -I);
        assert!((j_twist(&d) - d).frob() < 1e-15);
        // e1 e1* -> e2 e2*, computed from j(m(j^{-1} x)) on basis vectors.
        let e1 = [ONE, ZERO];
        let m = Mat2::outer(e1, e1);
        let jinv = |v: [Complex64; 2]| [v[1].conj(), -v[0].conj()];
        let cols: Vec<[Complex64; 2]> = [[ONE, ZERO], [ZERO, ONE]]
            .into_iter()
            .map(|x| j_vector(m.apply(jinv(x))))
            .collect();
        let composed = Mat2::new(cols[0][0], cols[1][0], cols[0][1], cols[1][1]);
        assert_eq!(j_twist(&m), composed);
        assert_eq!(j_twist(&m), Mat2::outer([ZERO, ONE], [ZERO, ONE]));
    }

    #[test]
    fn j_twist_fixes_su2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = Su2Algebra::from_pauli(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let u = x.exp();
            assert!((j_twist(u.matrix()) - *u.matrix()).frob() < 1e-14);
            assert!(Su2::new(*u.matrix()).is_ok());
        }
    }

    #[test]
    fn projector_involution_examples() {
        let e1 = Mat2::outer([ONE, ZERO], [ONE, ZERO]);
        let g = involution_from_projector(&e1).unwrap();
        assert!((*g.matrix() - Mat2::diag(I, -I)).frob() < 1e-15);
        let half = Mat2::new(c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0));
        let g = involution_from_projector(&half).unwrap();
        let expect = Mat2::new(ZERO, I, I, ZERO);
        assert!((*g.matrix() - expect).frob() < 1e-15);
        assert!((projector_from_involution(&expect).unwrap() - half).frob() < 1e-15);
        assert!((projector_from_involution(&Mat2::diag(I, -I)).unwrap() - e1).frob() < 1e-15);
    }

    #[test]
    fn projector_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v = random_unit(&mut rng);
            let p = Mat2::outer(v, v);
            let g = involution_from_projector(&p).unwrap();
            assert!(g.involution_defect() < 1e-12);
            assert!((g.matrix().det() - ONE).norm() < 1e-12);
            let back = projector_from_involution(g.matrix()).unwrap();
            assert!((back - p).frob() < 1e-12);
            // g pi = i pi: image(pi) is the +i eigenline.
            assert!((*g.matrix() * back - back.scale(I)).frob() < 1e-12);
            let sum = back + projector_from_involution(&-*g.matrix()).unwrap();
            assert!((sum - Mat2::identity()).frob() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            involution_from_projector(&Mat2::identity()),
            Err(Error::NotAProjector { .. })
        ));
        assert!(matches!(
            projector_from_involution(&Mat2::identity()),
            Err(Error::NotAnInvolution { .. })
        ));
        assert!(Su2::new(Mat2::identity().scale_re(2.0)).is_err());
    }

    #[test]
    fn nearest_projector_recovers_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let v = random_unit(&mut rng);
            let p = Mat2::outer(v, v);
            let noisy = p + Mat2::identity().scale_re(0.3) + Mat2::outer(v, v).scale_re(0.2);
            assert!((noisy.nearest_line_projector() - p).frob() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn su2_strategy() -> impl Strategy<Value = Su2> {
            (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64)
                .prop_map(|(x, y, z)| Su2Algebra::from_pauli(x, y, z).exp())
        }

        proptest! {
            #[test]
            fn su2_closed_under_product(a in su2_strategy(), b in su2_strategy()) {
                let ab = a.compose(&b);
                prop_assert!(ab.matrix().unitarity_defect() < 1e-12);
                prop_assert!((ab.matrix().det() - ONE).norm() < 1e-12);
                prop_assert!((a.inverse().matrix().clone() - a.matrix().inverse()).frob() < 1e-12);
            }

            #[test]
            fn j_twist_is_involution(e in proptest::array::uniform8(-5.0..5.0f64)) {
                let m = Mat2::new(c(e[0], e[1]), c(e[2], e[3]), c(e[4], e[5]), c(e[6], e[7]));
                prop_assert!((j_twist(&j_twist(&m)) - m).frob() < 1e-14);
            }
        }
    }
}
