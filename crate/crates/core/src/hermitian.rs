//! Hermitian structure recovered from `W+`, and the curvature functions of
//! complex lines and real planes built on it.
//!
//! A complex line through a unit vector `X` corresponds to the unit 2-form
//! `X ^ JX = omega/2 + phi`, with `phi` anti-self-dual of norm `1/sqrt(2)`.
//! Bisectional curvature is then the pairing `<R(omega/2 + phi), omega/2 + psi>`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::{Matrix4, Vector3};

use crate::coframe::{CoframeField, Point};
use crate::curvature::{curvature_at, sorted_eigen, PointCurvature};
use crate::error::{Error, Result};
use crate::forms::{plane_to_forms, wedge, TwoForm, Vec4};

/// Minimum gap between the top eigenvalue of `W+` and the next one.
pub const WPLUS_GAP: f64 = 1e-8;

const UNIT_TOL: f64 = 1e-10;

/// Kahler form and complex structure at a point, in frame components, with
/// `omega(X, Y) = g(JX, Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexStructureData {
    pub omega: TwoForm,
    pub j: Matrix4<f64>,
}

impl ComplexStructureData {
    /// Raise a self-dual form of norm `sqrt(2)` to its complex structure.
    pub fn from_omega(omega: TwoForm) -> Result<Self> {
        let (_, asd) = omega.split();
        if asd.norm() > 1e-8 {
            return Err(Error::NotHermitian(format!(
                "form has anti-self-dual part of norm {:e}",
                asd.norm()
            )));
        }
        if (omega.norm() - SQRT_2).abs() > 1e-8 {
            return Err(Error::NotHermitian(format!(
                "|omega| = {} instead of sqrt(2)",
                omega.norm()
            )));
        }
        Ok(Self {
            omega,
            j: omega.to_matrix().transpose(),
        })
    }

    /// The opposite complex structure `-J`.
    pub fn conjugate(&self) -> Self {
        Self {
            omega: -self.omega,
            j: -self.j,
        }
    }

    pub fn apply(&self, x: &Vec4) -> Vec4 {
        self.j * x
    }

    /// Largest violation of `J^2 = -Id`, `J^T J = Id` and
    /// `omega ^ omega = 2 dvol`.
    pub fn invariant_residual(&self) -> f64 {
        let id = Matrix4::identity();
        let square = (self.j * self.j + id).norm();
        let orthogonal = (self.j.transpose() * self.j - id).norm();
        let top = (self.omega.wedge_top(&self.omega) - 2.0).abs();
        square.max(orthogonal).max(top)
    }
}

/// An anti-self-dual form of norm `1/sqrt(2)`, labelling a complex line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexLineForm {
    phi: TwoForm,
}

impl ComplexLineForm {
    pub fn new(phi: TwoForm) -> Result<Self> {
        let (sd, _) = phi.split();
        if sd.norm() > UNIT_TOL {
            return Err(Error::NotHermitian(format!(
                "complex-line form has self-dual part of norm {:e}",
                sd.norm()
            )));
        }
        let norm = phi.norm() * SQRT_2;
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self { phi })
    }

    /// From coordinates in the `s-` basis; the direction is normalised.
    pub fn from_asd_direction(v: &Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if n < UNIT_TOL {
            return Err(Error::NonUnitVector { norm: n });
        }
        Ok(Self {
            phi: TwoForm::from_sd_asd(Vector3::zeros(), v * (FRAC_1_SQRT_2 / n)),
        })
    }

    /// The form of the complex line spanned by `x` and `Jx`.
    pub fn from_vector(cs: &ComplexStructureData, x: &Vec4) -> Result<Self> {
        let (_, asd) = plane_to_forms(x, &cs.apply(x))?;
        Ok(Self { phi: asd })
    }

    pub fn phi(&self) -> TwoForm {
        self.phi
    }

    /// Coordinates in the `s-` basis, of norm `1/sqrt(2)`.
    pub fn asd_coords(&self) -> Vector3<f64> {
        self.phi.asd_coords()
    }

    /// The line orthogonal to this one, `-phi`.
    pub fn orthogonal(&self) -> Self {
        Self { phi: -self.phi }
    }

    /// A unit vector spanning the complex line `omega/2 + phi`.
    pub fn unit_vector(&self, cs: &ComplexStructureData) -> Vec4 {
        let m = (cs.omega.scale(0.5) + self.phi).to_matrix();
        let col = (0..4)
            .map(|c| m.column(c).into_owned())
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("four columns");
        col / col.norm()
    }
}

/// Recover `(omega, J)` from the top eigenvector of `W+`.
///
/// The eigenvector fixes `omega` only up to sign. The sign is chosen to make
/// `<omega, reference>` positive; with no usable reference the first
/// non-negligible `s+` coordinate is made positive.
pub fn recover_j(pc: &PointCurvature, reference: Option<&TwoForm>) -> Result<ComplexStructureData> {
    let (vals, vecs) = sorted_eigen(&pc.wplus);
    let gap = vals[2] - vals[1];
    if gap <= WPLUS_GAP {
        return Err(Error::DegenerateWplus { gap });
    }
    let v: Vector3<f64> = vecs.column(2).into_owned();
    let mut omega = TwoForm::from_sd_asd(v * (SQRT_2 / v.norm()), Vector3::zeros());
    let aligned = reference.map(|r| omega.dot(r)).filter(|d| d.abs() > 1e-6);
    let flip = match aligned {
        Some(d) => d < 0.0,
        None => omega
            .sd_coords()
            .iter()
            .find(|c| c.abs() > 1e-6)
            .is_some_and(|c| *c < 0.0),
    };
    if flip {
        omega = -omega;
    }
    ComplexStructureData::from_omega(omega)
}

/// Curvature and complex structure at `x`. The metric's attached Kahler form,
/// if any, serves as sign reference and as fallback where `W+` is
/// degenerate; otherwise `e0^e1 + e2^e3` is the sign reference.
pub fn complex_structure_at(
    cf: &CoframeField,
    x: &Point,
    fd_step: f64,
) -> Result<(PointCurvature, ComplexStructureData)> {
    let pc = curvature_at(cf, x, fd_step)?;
    let reference = cf
        .kahler_form()
        .unwrap_or_else(|| TwoForm::basis(0, 1) + TwoForm::basis(2, 3));
    match recover_j(&pc, Some(&reference)) {
        Ok(cs) => Ok((pc, cs)),
        Err(Error::DegenerateWplus { gap }) => match cf.kahler_form() {
            Some(omega) => Ok((pc, ComplexStructureData::from_omega(omega)?)),
            None => Err(Error::NotHermitian(format!(
                "{}: W+ top eigenvalue is not simple (gap {gap:e}) and no Kahler form is attached",
                cf.name()
            ))),
        },
        Err(e) => Err(e),
    }
}

/// `<R(omega/2 + phi), omega/2 + psi>`.
pub fn bisectional(
    pc: &PointCurvature,
    cs: &ComplexStructureData,
    phi: &ComplexLineForm,
    psi: &ComplexLineForm,
) -> f64 {
    let half = cs.omega.scale(0.5);
    pc.r.pair(&(half + phi.phi), &(half + psi.phi))
}

/// Bisectional curvature of a line with its orthogonal complement.
pub fn orthogonal_bisectional(pc: &PointCurvature, cs: &ComplexStructureData, phi: &ComplexLineForm) -> f64 {
    bisectional(pc, cs, phi, &phi.orthogonal())
}

pub fn holomorphic_sectional(pc: &PointCurvature, cs: &ComplexStructureData, phi: &ComplexLineForm) -> f64 {
    bisectional(pc, cs, phi, phi)
}

fn check_unit(x: &Vec4) -> Result<()> {
    let norm = x.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NonUnitVector { norm });
    }
    Ok(())
}

/// `Rm(a, b, c, d) = <R(a^b), c^d>` for arbitrary frame vectors.
pub fn riemann_on(pc: &PointCurvature, a: &Vec4, b: &Vec4, c: &Vec4, d: &Vec4) -> f64 {
    pc.r.pair(&wedge(a, b), &wedge(c, d))
}

/// `Rm(X, JX, Y, JY)` contracted from the four-index tensor.
pub fn bisectional_direct(pc: &PointCurvature, cs: &ComplexStructureData, x: &Vec4, y: &Vec4) -> Result<f64> {
    check_unit(x)?;
    check_unit(y)?;
    let (jx, jy) = (cs.apply(x), cs.apply(y));
    let rm = pc.riemann();
    let mut total = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let ab = x[a] * jx[b];
            if ab == 0.0 {
                continue;
            }
            for c in 0..4 {
                for d in 0..4 {
                    total += ab * y[c] * jy[d] * rm[a][b][c][d];
                }
            }
        }
    }
    Ok(total)
}

/// `|H(X, Y) - Rm(X, Y, X, Y) - Rm(X, JY, X, JY)|`. The plane terms are left
/// unnormalised so that the identity holds on a Kahler metric for every
/// pair of unit vectors, not only for `X` orthogonal to `Y` and `JY`.
pub fn kahler_bisec_identity_residual(
    pc: &PointCurvature,
    cs: &ComplexStructureData,
    x: &Vec4,
    y: &Vec4,
) -> Result<f64> {
    let jy = cs.apply(y);
    plane_to_forms(x, y)?;
    plane_to_forms(x, &jy)?;
    let h = bisectional_direct(pc, cs, x, y)?;
    let k1 = riemann_on(pc, x, y, x, y);
    let k2 = riemann_on(pc, x, &jy, x, &jy);
    Ok((h - k1 - k2).abs())
}

/// Sectional curvature `<R(a + b), a + b>` of the plane through `x, y`.
pub fn sectional(pc: &PointCurvature, x: &Vec4, y: &Vec4) -> Result<f64> {
    let (a, b) = plane_to_forms(x, y)?;
    let unit = a + b;
    Ok(pc.r.pair(&unit, &unit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::curvature::DEFAULT_FD_STEP;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(rng: &mut ChaCha8Rng) -> Vec4 {
        let v = Vec4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        v / v.norm()
    }

    fn random_interior(cf: &CoframeField, rng: &mut ChaCha8Rng) -> Point {
        let (lo, hi) = (cf.chart().interior_lo(), cf.chart().interior_hi());
        std::array::from_fn(|mu| rng.gen_range(lo[mu]..hi[mu]))
    }

    fn fs_at(x: &Point) -> (PointCurvature, ComplexStructureData) {
        complex_structure_at(&catalog::fubini_study(), x, DEFAULT_FD_STEP).unwrap()
    }

    #[test]
    fn omega_e01_e23_gives_standard_j() {
        let cs = ComplexStructureData::from_omega(catalog::standard_kahler_form()).unwrap();
        let e = |i| Vec4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
        assert_eq!(cs.apply(&e(0)), e(1));
        assert_eq!(cs.apply(&e(2)), e(3));
        assert!(cs.invariant_residual() < 1e-14);
        // omega(X, Y) = g(JX, Y)
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = (unit(&mut rng), unit(&mut rng));
        let lhs = (cs.omega.to_matrix() * y).dot(&x);
        assert!((lhs - cs.apply(&x).dot(&y)).abs() < 1e-14);
    }

    #[test]
    fn from_omega_rejects_bad_forms() {
        assert!(ComplexStructureData::from_omega(TwoForm::basis(0, 1)).is_err());
        assert!(ComplexStructureData::from_omega(TwoForm::sd_basis(0)).is_err());
    }

    #[test]
    fn complex_line_of_a_vector_has_omega_half_as_sd_part() {
        let cs = ComplexStructureData::from_omega(TwoForm::sd_basis(1).scale(SQRT_2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = unit(&mut rng);
            let (sd, asd) = plane_to_forms(&x, &cs.apply(&x)).unwrap();
            assert!((sd - cs.omega.scale(0.5)).norm() < 1e-12);
            let line = ComplexLineForm::new(asd).unwrap();
            let back = line.unit_vector(&cs);
            let again = ComplexLineForm::from_vector(&cs, &back).unwrap();
            assert!((again.phi() - line.phi()).norm() < 1e-12);
        }
    }

    #[test]
    fn fubini_study_recovered_j_matches_canonical() {
        let fs = catalog::fubini_study();
        let canonical = fs.kahler_form().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x = random_interior(&fs, &mut rng);
            let pc = curvature_at(&fs, &x, DEFAULT_FD_STEP).unwrap();
            let cs = recover_j(&pc, None).unwrap();
            let diff = (cs.omega - canonical).norm().min((cs.omega + canonical).norm());
            assert!(diff < 1e-7, "{diff}");
            assert!(cs.invariant_residual() < 1e-8);
        }
    }

    #[test]
    fn fubini_study_curvatures() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fs = catalog::fubini_study();
        for _ in 0..10 {
            let p = random_interior(&fs, &mut rng);
            let (pc, cs) = fs_at(&p);
            for _ in 0..20 {
                let (x, y) = (unit(&mut rng), unit(&mut rng));
                let line = ComplexLineForm::from_vector(&cs, &x).unwrap();
                assert!((holomorphic_sectional(&pc, &cs, &line) - 4.0).abs() < 1e-6);
                let k = sectional(&pc, &x, &y).unwrap();
                assert!((1.0 - 1e-6..=4.0 + 1e-6).contains(&k), "{k}");
                assert!((sectional(&pc, &x, &cs.apply(&x)).unwrap() - 4.0).abs() < 1e-6);
                assert!((orthogonal_bisectional(&pc, &cs, &line) - 2.0).abs() < 1e-6);
                assert!(kahler_bisec_identity_residual(&pc, &cs, &x, &y).unwrap() < 1e-6);
            }
            // A totally real plane.
            let e = |i| Vec4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
            let x = e(0);
            let y = e(2);
            let jx = cs.apply(&x);
            let y_real = (y - x * x.dot(&y) - jx * jx.dot(&y)).normalize();
            assert!((sectional(&pc, &x, &y_real).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn two_paths_agree_on_page_and_fubini_study() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let metrics = [
            catalog::page_metric(catalog::PageParams::einstein()).unwrap(),
            catalog::fubini_study(),
            catalog::round_s2xs2(1.0, 1.5).unwrap(),
        ];
        for cf in &metrics {
            for _ in 0..10 {
                let p = random_interior(cf, &mut rng);
                let (pc, cs) = complex_structure_at(cf, &p, DEFAULT_FD_STEP).unwrap();
                for _ in 0..100 {
                    let (x, y) = (unit(&mut rng), unit(&mut rng));
                    let phi = ComplexLineForm::from_vector(&cs, &x).unwrap();
                    let psi = ComplexLineForm::from_vector(&cs, &y).unwrap();
                    let two_form = bisectional(&pc, &cs, &phi, &psi);
                    let direct = bisectional_direct(&pc, &cs, &x, &y).unwrap();
                    assert!((two_form - direct).abs() < 1e-7, "{}", cf.name());
                    assert!((two_form - bisectional(&pc, &cs, &psi, &phi)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn page_wplus_pattern_and_identity_failure() {
        let page = catalog::page_metric(catalog::PageParams::einstein()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let p = random_interior(&page, &mut rng);
            let (pc, cs) = complex_structure_at(&page, &p, DEFAULT_FD_STEP).unwrap();
            let w = pc.wplus_spectrum();
            assert!(w[2] > 0.0);
            assert!((w[0] + 0.5 * w[2]).abs() < 1e-6 * w[2]);
            assert!((w[1] + 0.5 * w[2]).abs() < 1e-6 * w[2]);
            assert!(cs.invariant_residual() < 1e-8);
            for _ in 0..50 {
                let (x, y) = (unit(&mut rng), unit(&mut rng));
                worst = worst.max(kahler_bisec_identity_residual(&pc, &cs, &x, &y).unwrap());
            }
        }
        assert!(worst > 1e-3, "{worst}");
    }

    #[test]
    fn round_s4_sectional_is_one_and_has_no_j() {
        let s4 = catalog::round_s4(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = random_interior(&s4, &mut rng);
        let pc = curvature_at(&s4, &p, DEFAULT_FD_STEP).unwrap();
        for _ in 0..50 {
            let k = sectional(&pc, &unit(&mut rng), &unit(&mut rng)).unwrap();
            assert!((k - 1.0).abs() < 1e-9);
        }
        assert!(matches!(
            complex_structure_at(&s4, &p, DEFAULT_FD_STEP),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn flat_torus_uses_attached_form() {
        let t4 = catalog::flat_t4();
        let (pc, cs) = complex_structure_at(&t4, &[1.0, 2.0, 3.0, 4.0], DEFAULT_FD_STEP).unwrap();
        assert_eq!(cs.omega, t4.kahler_form().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (x, y) = (unit(&mut rng), unit(&mut rng));
        assert_eq!(bisectional_direct(&pc, &cs, &x, &y).unwrap(), 0.0);
        assert_eq!(kahler_bisec_identity_residual(&pc, &cs, &x, &y).unwrap(), 0.0);
        assert_eq!(sectional(&pc, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let (pc, cs) = fs_at(&[0.7, 1.0, 0.2, 0.3]);
        let x = Vec4::new(2.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            bisectional_direct(&pc, &cs, &x, &x),
            Err(Error::NonUnitVector { .. })
        ));
        let e0 = Vec4::new(1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            kahler_bisec_identity_residual(&pc, &cs, &e0, &e0),
            Err(Error::DegeneratePlane { .. })
        ));
        assert!(ComplexLineForm::new(TwoForm::asd_basis(0)).is_err());
    }

    #[test]
    fn recovered_j_is_conformally_stable() {
        let page = catalog::page_metric(catalog::PageParams::einstein()).unwrap();
        let p = [1.1, 0.8, 0.3, 2.0];
        let (pc, cs) = complex_structure_at(&page, &p, DEFAULT_FD_STEP).unwrap();
        let (pc2, cs2) = complex_structure_at(&page.scaled(1.7), &p, DEFAULT_FD_STEP).unwrap();
        assert!((cs.omega - cs2.omega).norm() < 1e-9);
        let ratio = pc.wplus_spectrum()[2] / pc2.wplus_spectrum()[2];
        assert!((ratio - 1.7 * 1.7).abs() < 1e-6);
    }

    #[test]
    fn page_omega_never_flips_along_grid_lines() {
        let page = catalog::page_metric(catalog::PageParams::einstein()).unwrap();
        for mu in 0..4 {
            let mut prev: Option<TwoForm> = None;
            for t in page.chart().samples(mu, 25) {
                let mut p = [1.3, 1.2, 0.4, 1.9];
                p[mu] = t;
                let (_, cs) = complex_structure_at(&page, &p, DEFAULT_FD_STEP).unwrap();
                if let Some(q) = prev {
                    assert!(cs.omega.dot(&q) > 0.0);
                }
                prev = Some(cs.omega);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn bisectional_invariant_under_conjugate_j(
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let page = catalog::page_metric(catalog::PageParams::einstein()).unwrap();
            let p = random_interior(&page, &mut rng);
            let (pc, cs) = complex_structure_at(&page, &p, DEFAULT_FD_STEP).unwrap();
            let (x, y) = (unit(&mut rng), unit(&mut rng));
            let a = bisectional_direct(&pc, &cs, &x, &y).unwrap();
            let b = bisectional_direct(&pc, &cs.conjugate(), &x, &y).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
