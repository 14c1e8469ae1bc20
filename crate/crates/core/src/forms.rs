//! Exterior algebra on a single oriented 4-dimensional inner-product space.
//!
//! Everything is expressed in a fixed orthonormal frame `e0..e3` with
//! `dvol = e0^e1^e2^e3`. A 2-form is stored in the ordered basis
//!
//! ```text
//! e0^e1, e0^e2, e0^e3, e2^e3, e3^e1, e1^e2
//! ```
//!
//! which is orthonormal for the induced inner product, and in which the Hodge
//! star simply swaps the first and second triple. The self-dual basis is
//! `s+_i = (e0^ei + *(e0^ei)) / sqrt(2)` and the anti-self-dual basis
//! `s-_i = (e0^ei - *(e0^ei)) / sqrt(2)`. Operators on 2-forms are kept in the
//! `(s+_1, s+_2, s+_3, s-_1, s-_2, s-_3)` block basis so that the upper-left
//! 3x3 block is the self-dual one.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};

use crate::error::{Error, Result};

/// Tangent vector in orthonormal frame components.
pub type Vec4 = Vector4<f64>;

/// Index pairs `(i, j)` of the 2-form basis, in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

/// Planes spanned with `|X^Y|` below this are rejected.
pub const SPAN_THRESHOLD: f64 = 1e-10;

/// Position of `e^i ^ e^j` in the storage basis together with the sign
/// relating it to the stored element, or `None` when `i == j`.
pub fn pair_index(i: usize, j: usize) -> Option<(usize, f64)> {
    PAIRS.iter().enumerate().find_map(|(k, &(a, b))| {
        if (a, b) == (i, j) {
            Some((k, 1.0))
        } else if (a, b) == (j, i) {
            Some((k, -1.0))
        } else {
            None
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoForm(pub Vector6<f64>);

impl TwoForm {
    pub fn zero() -> Self {
        Self(Vector6::zeros())
    }

    pub fn new(components: [f64; 6]) -> Self {
        Self(Vector6::from_column_slice(&components))
    }

    /// Basis element `e^i ^ e^j` (with sign when `i > j`).
    pub fn basis(i: usize, j: usize) -> Self {
        let mut out = Self::zero();
        if let Some((k, sign)) = pair_index(i, j) {
            out.0[k] = sign;
        }
        out
    }

    /// Build from the self-dual and anti-self-dual coordinates in the
    /// `s+` and `s-` bases.
    pub fn from_sd_asd(sd: Vector3<f64>, asd: Vector3<f64>) -> Self {
        let mut v = Vector6::zeros();
        for i in 0..3 {
            v[i] = (sd[i] + asd[i]) * FRAC_1_SQRT_2;
            v[i + 3] = (sd[i] - asd[i]) * FRAC_1_SQRT_2;
        }
        Self(v)
    }

    pub fn sd_basis(i: usize) -> Self {
        let mut sd = Vector3::zeros();
        sd[i] = 1.0;
        Self::from_sd_asd(sd, Vector3::zeros())
    }

    pub fn asd_basis(i: usize) -> Self {
        let mut asd = Vector3::zeros();
        asd[i] = 1.0;
        Self::from_sd_asd(Vector3::zeros(), asd)
    }

    /// Coordinates in the block basis `(s+, s-)`.
    pub fn block_coords(&self) -> Vector6<f64> {
        let mut out = Vector6::zeros();
        for i in 0..3 {
            out[i] = (self.0[i] + self.0[i + 3]) * FRAC_1_SQRT_2;
            out[i + 3] = (self.0[i] - self.0[i + 3]) * FRAC_1_SQRT_2;
        }
        out
    }

    pub fn from_block_coords(c: &Vector6<f64>) -> Self {
        Self::from_sd_asd(c.fixed_rows::<3>(0).into(), c.fixed_rows::<3>(3).into())
    }

    pub fn sd_coords(&self) -> Vector3<f64> {
        self.block_coords().fixed_rows::<3>(0).into()
    }

    pub fn asd_coords(&self) -> Vector3<f64> {
        self.block_coords().fixed_rows::<3>(3).into()
    }

    /// Value `phi(e_i, e_j)`.
    pub fn component(&self, i: usize, j: usize) -> f64 {
        pair_index(i, j).map_or(0.0, |(k, s)| s * self.0[k])
    }

    /// Antisymmetric matrix `A[i][j] = phi(e_i, e_j)`.
    pub fn to_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.component(i, j))
    }

    /// Read the upper triangle of an antisymmetric matrix. The lower triangle
    /// is ignored.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        let mut v = Vector6::zeros();
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            v[k] = 0.5 * (m[(i, j)] - m[(j, i)]);
        }
        Self(v)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0 * c)
    }

    pub fn hodge_star(&self) -> Self {
        let v = &self.0;
        Self(Vector6::new(v[3], v[4], v[5], v[0], v[1], v[2]))
    }

    /// Split into self-dual and anti-self-dual parts.
    pub fn split(&self) -> (Self, Self) {
        let star = self.hodge_star();
        ((*self + star).scale(0.5), (*self - star).scale(0.5))
    }

    /// Coefficient of `dvol` in `self ^ other`.
    pub fn wedge_top(&self, other: &Self) -> f64 {
        self.dot(&other.hodge_star())
    }
}

impl Add for TwoForm {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for TwoForm {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for TwoForm {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Mul<f64> for TwoForm {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

pub fn wedge(v: &Vec4, w: &Vec4) -> TwoForm {
    let mut out = Vector6::zeros();
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        out[k] = v[i] * w[j] - v[j] * w[i];
    }
    TwoForm(out)
}

pub fn hodge_star(phi: &TwoForm) -> TwoForm {
    phi.hodge_star()
}

pub fn sd_asd_split(phi: &TwoForm) -> (TwoForm, TwoForm) {
    phi.split()
}

/// Self-dual and anti-self-dual parts of the unit 2-form of the oriented
/// plane spanned by `x, y`. Both parts have norm `1/sqrt(2)`.
pub fn plane_to_forms(x: &Vec4, y: &Vec4) -> Result<(TwoForm, TwoForm)> {
    let w = wedge(x, y);
    let norm = w.norm();
    if norm < SPAN_THRESHOLD {
        return Err(Error::DegeneratePlane { norm });
    }
    Ok(w.scale(1.0 / norm).split())
}

/// Symmetric operator on 2-forms, stored in the `(s+, s-)` block basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorOnForms(pub Matrix6<f64>);

/// Change of basis between storage and block coordinates. It is symmetric and
/// its own inverse.
fn block_change() -> Matrix6<f64> {
    let mut p = Matrix6::zeros();
    for i in 0..3 {
        p[(i, i)] = FRAC_1_SQRT_2;
        p[(i, i + 3)] = FRAC_1_SQRT_2;
        p[(i + 3, i)] = FRAC_1_SQRT_2;
        p[(i + 3, i + 3)] = -FRAC_1_SQRT_2;
    }
    p
}

impl OperatorOnForms {
    pub fn zero() -> Self {
        Self(Matrix6::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix6::identity())
    }

    /// Convert from a matrix in the storage basis `(e0^e1, ..., e1^e2)`.
    pub fn from_storage_basis(m: &Matrix6<f64>) -> Self {
        let p = block_change();
        Self(p * m * p)
    }

    pub fn to_storage_basis(&self) -> Matrix6<f64> {
        let p = block_change();
        p * self.0 * p
    }

    pub fn from_blocks(pp: &Matrix3<f64>, pm: &Matrix3<f64>, mm: &Matrix3<f64>) -> Self {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(pp);
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(pm);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&pm.transpose());
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(mm);
        Self(m)
    }

    pub fn apply(&self, phi: &TwoForm) -> TwoForm {
        TwoForm::from_block_coords(&(self.0 * phi.block_coords()))
    }

    /// `<A phi, psi>`.
    pub fn pair(&self, phi: &TwoForm, psi: &TwoForm) -> f64 {
        psi.block_coords().dot(&(self.0 * phi.block_coords()))
    }

    pub fn plus_plus(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into()
    }

    /// Block mapping `L2-` into `L2+`.
    pub fn plus_minus(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 3).into()
    }

    pub fn minus_minus(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(3, 3).into()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).norm()
    }

    pub fn symmetrized(&self) -> Self {
        Self((self.0 + self.0.transpose()) * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn vec4() -> impl Strategy<Value = Vec4> {
        prop::array::uniform4(-3.0f64..3.0).prop_map(Vec4::from)
    }

    fn form() -> impl Strategy<Value = TwoForm> {
        prop::array::uniform6(-3.0f64..3.0).prop_map(TwoForm::new)
    }

    #[test]
    fn wedge_of_basis_vectors() {
        let e0 = Vec4::new(1.0, 0.0, 0.0, 0.0);
        let e1 = Vec4::new(0.0, 1.0, 0.0, 0.0);
        assert_eq!(wedge(&e0, &e1), TwoForm::new([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(wedge(&e0, &e0), TwoForm::zero());
    }

    #[test]
    fn star_on_basis() {
        assert_eq!(TwoForm::basis(0, 1).hodge_star(), TwoForm::basis(2, 3));
        assert_eq!(TwoForm::basis(0, 2).hodge_star(), TwoForm::basis(3, 1));
        assert_eq!(TwoForm::basis(0, 3).hodge_star(), TwoForm::basis(1, 2));
        for i in 0..3 {
            assert_abs_diff_eq!(
                TwoForm::sd_basis(i).hodge_star().0,
                TwoForm::sd_basis(i).0,
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                TwoForm::asd_basis(i).hodge_star().0,
                -TwoForm::asd_basis(i).0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn star_matches_volume_pairing() {
        // phi ^ *psi = <phi, psi> dvol, checked against the Levi-Civita sum.
        let eps = |idx: [usize; 4]| -> f64 {
            let mut sign = 1.0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if idx[i] == idx[j] {
                        return 0.0;
                    }
                    if idx[i] > idx[j] {
                        sign = -sign;
                    }
                }
            }
            sign
        };
        for a in 0..6 {
            for b in 0..6 {
                let (i, j) = PAIRS[a];
                let (k, l) = PAIRS[b];
                let top = TwoForm::basis(i, j).wedge_top(&TwoForm::basis(k, l));
                assert_eq!(top, eps([i, j, k, l]));
            }
        }
    }

    #[test]
    fn split_of_e01() {
        let (sd, asd) = sd_asd_split(&TwoForm::basis(0, 1));
        assert_abs_diff_eq!(sd.0, TwoForm::new([0.5, 0.0, 0.0, 0.5, 0.0, 0.0]).0);
        assert_abs_diff_eq!(asd.0, TwoForm::new([0.5, 0.0, 0.0, -0.5, 0.0, 0.0]).0);
        let (sd, asd) = TwoForm::asd_basis(1).split();
        assert_abs_diff_eq!(sd.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(asd.0, TwoForm::asd_basis(1).0, epsilon = 1e-15);
    }

    #[test]
    fn plane_of_first_two_axes() {
        let e0 = Vec4::new(1.0, 0.0, 0.0, 0.0);
        let e1 = Vec4::new(0.0, 1.0, 0.0, 0.0);
        let (alpha, beta) = plane_to_forms(&e0, &e1).unwrap();
        assert_abs_diff_eq!(alpha.norm(), FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(beta.norm(), FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha.0, TwoForm::sd_basis(0).scale(FRAC_1_SQRT_2).0, epsilon = 1e-15);
        // Same oriented plane from a sheared basis.
        let (a2, b2) = plane_to_forms(&e0, &(e0 + e1)).unwrap();
        assert_abs_diff_eq!(a2.0, alpha.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b2.0, beta.0, epsilon = 1e-14);
    }

    #[test]
    fn complex_line_gives_half_kahler_form() {
        // J e0 = e1, J e2 = e3, so omega = e0^e1 + e2^e3.
        let j = Matrix4::new(
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 0.0,
        );
        let omega = TwoForm::basis(0, 1) + TwoForm::basis(2, 3);
        let x = Vec4::new(0.3, -1.2, 0.7, 0.4).normalize();
        let (alpha, _) = plane_to_forms(&x, &(j * x)).unwrap();
        assert_abs_diff_eq!(alpha.0, omega.scale(0.5).0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_plane_rejected() {
        let x = Vec4::new(1.0, 2.0, 3.0, 4.0);
        assert!(matches!(
            plane_to_forms(&x, &(x * 2.0)),
            Err(Error::DegeneratePlane { .. })
        ));
    }

    #[test]
    fn block_change_roundtrip() {
        let m = Matrix6::from_fn(|i, j| (i * 7 + j * 3) as f64 % 5.0 - 2.0);
        let sym = (m + m.transpose()) * 0.5;
        let op = OperatorOnForms::from_storage_basis(&sym);
        assert_abs_diff_eq!(op.to_storage_basis(), sym, epsilon = 1e-14);
        let phi = TwoForm::new([0.1, 0.2, -0.3, 0.4, 0.5, -0.6]);
        let direct = TwoForm(sym * phi.0);
        assert_abs_diff_eq!(op.apply(&phi).0, direct.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn wedge_bilinear_antisymmetric(v in vec4(), w in vec4(), u in vec4(), c in -2.0f64..2.0) {
            let lhs = wedge(&(v * c + u), &w);
            let rhs = wedge(&v, &w).scale(c) + wedge(&u, &w);
            prop_assert!((lhs - rhs).norm() < 1e-13);
            prop_assert!((wedge(&v, &w) + wedge(&w, &v)).norm() < 1e-13);
        }

        #[test]
        fn wedge_norm_is_gram_determinant(v in vec4(), w in vec4()) {
            let gram = v.norm_squared() * w.norm_squared() - v.dot(&w).powi(2);
            prop_assert!((wedge(&v, &w).norm_squared() - gram).abs() < 1e-11 * (1.0 + gram));
        }

        #[test]
        fn star_is_involution(phi in form()) {
            prop_assert!((phi.hodge_star().hodge_star() - phi).norm() < 1e-14);
        }

        #[test]
        fn split_is_orthogonal_and_idempotent(phi in form()) {
            let (sd, asd) = phi.split();
            prop_assert!((sd + asd - phi).norm() < 1e-14);
            prop_assert!((sd.hodge_star() - sd).norm() < 1e-14);
            prop_assert!((asd.hodge_star() + asd).norm() < 1e-14);
            prop_assert!((phi.norm_squared() - sd.norm_squared() - asd.norm_squared()).abs() < 1e-13);
            let (sd2, asd2) = sd.split();
            prop_assert!((sd2 - sd).norm() < 1e-14 && asd2.norm() < 1e-14);
        }

        #[test]
        fn plane_forms_have_equal_norms(v in vec4(), w in vec4()) {
            prop_assume!(wedge(&v, &w).norm() > 1e-3);
            let (a, b) = plane_to_forms(&v, &w).unwrap();
            prop_assert!((a.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
            prop_assert!((b.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
        }

        #[test]
        fn plane_forms_basis_invariant(v in vec4(), w in vec4(), m in prop::array::uniform4(-2.0f64..2.0)) {
            let det = m[0] * m[3] - m[1] * m[2];
            prop_assume!(det > 0.1 && wedge(&v, &w).norm() > 1e-3);
            let v2 = v * m[0] + w * m[1];
            let w2 = v * m[2] + w * m[3];
            let (a, b) = plane_to_forms(&v, &w).unwrap();
            let (a2, b2) = plane_to_forms(&v2, &w2).unwrap();
            prop_assert!((a - a2).norm() < 1e-12 && (b - b2).norm() < 1e-12);
        }
    }
}
