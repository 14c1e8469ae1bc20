//! Two independent evaluations of the Hodge Laplacian of a 2-form field.
//!
//! * Hodge side: `(d d* + d* d) phi` in coordinates, with `d* = -div` taken
//!   through `(1/sqrt g) d_mu (sqrt g ...)`. Uses the field's analytic first
//!   and second partials and one finite difference for `d(d* phi)`.
//! * Curvature side: `nabla* nabla phi - 2 W phi + (s/3) phi` in the
//!   orthonormal frame, with the rough Laplacian assembled from the frame
//!   connection and a finite difference of the first covariant derivative.

use nalgebra::{Matrix4, Vector4};

use crate::coframe::{CoframeField, Point};
use crate::curvature::{connection_from_frame, curvature_at, FrameAt};
use crate::error::{Error, Result};
use crate::fd::central_richardson;
use crate::forms::{OperatorOnForms, TwoForm};

type M4 = Matrix4<f64>;
type Three = [[[f64; 4]; 4]; 4];

/// Value and partials of an antisymmetric coordinate tensor `phi_{mu nu}`.
#[derive(Debug, Clone, Copy)]
pub struct FieldJet {
    pub value: M4,
    pub d1: [M4; 4],
    /// `d2[a][b] = d_a d_b phi`, if the field supplies it.
    pub d2: Option<[[M4; 4]; 4]>,
}

/// A 2-form field given by its coordinate components.
pub trait TwoFormField: Send + Sync {
    fn name(&self) -> &str;
    fn jet(&self, x: &Point) -> FieldJet;
}

/// A function of one variable with its first two derivatives.
pub type Univariate = fn(f64) -> [f64; 3];

pub fn one(_: f64) -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

/// `c(x) dx^mu ^ dx^nu` with `c` a product of one function per coordinate.
#[derive(Debug, Clone, Copy)]
pub struct SeparableTerm {
    pub mu: usize,
    pub nu: usize,
    pub factors: [Univariate; 4],
}

/// A sum of separable terms; all partials are exact.
#[derive(Debug, Clone)]
pub struct SeparableField {
    pub name: String,
    pub terms: Vec<SeparableTerm>,
}

impl TwoFormField for SeparableField {
    fn name(&self) -> &str {
        &self.name
    }

    fn jet(&self, x: &Point) -> FieldJet {
        let mut value = M4::zeros();
        let mut d1 = [M4::zeros(); 4];
        let mut d2 = [[M4::zeros(); 4]; 4];
        for t in &self.terms {
            let f: [[f64; 3]; 4] = std::array::from_fn(|a| (t.factors[a])(x[a]));
            let prod = |order: [usize; 4]| (0..4).map(|a| f[a][order[a]]).product::<f64>();
            let add = |m: &mut M4, v: f64| {
                m[(t.mu, t.nu)] += v;
                m[(t.nu, t.mu)] -= v;
            };
            add(&mut value, prod([0; 4]));
            for a in 0..4 {
                let mut oa = [0; 4];
                oa[a] = 1;
                add(&mut d1[a], prod(oa));
                for b in 0..4 {
                    let mut ob = oa;
                    ob[b] += 1;
                    add(&mut d2[a][b], prod(ob));
                }
            }
        }
        FieldJet {
            value,
            d1,
            d2: Some(d2),
        }
    }
}

/// Metric, inverse, volume density and their first partials at a point.
struct MetricJet {
    g: M4,
    ginv: M4,
    dginv: [M4; 4],
    /// `d_mu log sqrt(g)`.
    dlog: [f64; 4],
}

impl MetricJet {
    fn new(frame: &FrameAt) -> Self {
        let e = frame.e;
        let g = e.transpose() * e;
        let ginv = frame.f * frame.f.transpose();
        let dg: [M4; 4] = std::array::from_fn(|mu| frame.de[mu].transpose() * e + e.transpose() * frame.de[mu]);
        let dginv = dg.map(|d| -ginv * d * ginv);
        let dlog = std::array::from_fn(|mu| 0.5 * (ginv * dg[mu]).trace());
        Self { g, ginv, dginv, dlog }
    }
}

/// Lowered `d* phi` for a 2-form with first partials.
fn codifferential_2(m: &MetricJet, phi: &M4, dphi: &[M4; 4]) -> Vector4<f64> {
    let up = m.ginv * phi * m.ginv;
    let mut div = Vector4::zeros();
    for nu in 0..4 {
        let mut acc = 0.0;
        for mu in 0..4 {
            acc += m.dlog[mu] * up[(mu, nu)];
            let mut inner = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    inner += (m.dginv[mu][(mu, a)] * m.ginv[(nu, b)]
                        + m.ginv[(mu, a)] * m.dginv[mu][(nu, b)])
                        * phi[(a, b)]
                        + m.ginv[(mu, a)] * m.ginv[(nu, b)] * dphi[mu][(a, b)];
                }
            }
            acc += inner;
        }
        div[nu] = -acc;
    }
    m.g * div
}

fn exterior_2(phi_d: &[M4; 4]) -> Three {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| std::array::from_fn(|c| phi_d[a][(b, c)] + phi_d[b][(c, a)] + phi_d[c][(a, b)]))
    })
}

/// Lowered `d* t` for a 3-form with first partials.
fn codifferential_3(m: &MetricJet, t: &Three, dt: &[Three; 4]) -> M4 {
    let gi = &m.ginv;
    let raise = |t: &Three, a: usize, b: usize, c: usize, ga: &M4, gb: &M4, gc: &M4| {
        let mut acc = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                for r in 0..4 {
                    acc += ga[(a, p)] * gb[(b, q)] * gc[(c, r)] * t[p][q][r];
                }
            }
        }
        acc
    };
    let mut up = M4::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            let mut acc = 0.0;
            for al in 0..4 {
                let dgi = &m.dginv[al];
                acc += m.dlog[al] * raise(t, al, mu, nu, gi, gi, gi);
                acc += raise(t, al, mu, nu, dgi, gi, gi);
                acc += raise(t, al, mu, nu, gi, dgi, gi);
                acc += raise(t, al, mu, nu, gi, gi, dgi);
                acc += raise(&dt[al], al, mu, nu, gi, gi, gi);
            }
            up[(mu, nu)] = -acc;
        }
    }
    m.g * up * m.g
}

/// Frame components `Phi = F^T phi F` as a 2-form.
fn to_frame(f: &M4, phi: &M4) -> TwoForm {
    TwoForm::from_matrix(&(f.transpose() * phi * f))
}

/// `d d* phi + d* d phi` in frame components.
pub fn hodge_laplacian(cf: &CoframeField, field: &dyn TwoFormField, x: &Point, fd_step: f64) -> Result<TwoForm> {
    let steps = cf.chart().steps(fd_step);
    cf.chart().check_stencil(x, &steps)?;
    let frame = FrameAt::new(cf, x)?;
    let metric = MetricJet::new(&frame);
    let jet = field.jet(x);
    let d2 = jet.d2.ok_or(Error::UnsupportedField("second"))?;

    // d* d phi
    let t = exterior_2(&jet.d1);
    let dt: [Three; 4] = std::array::from_fn(|b| {
        let row: [M4; 4] = std::array::from_fn(|a| d2[b][a]);
        exterior_2(&row)
    });
    let delta_d = codifferential_3(&metric, &t, &dt);

    // d d* phi, differentiating d* phi numerically.
    let mut failure = None;
    let mut beta_d = [[0.0; 4]; 4];
    for mu in 0..4 {
        let d = central_richardson(
            |h| {
                let mut y = *x;
                y[mu] += h;
                match FrameAt::new(cf, &y) {
                    Ok(fr) => {
                        let j = field.jet(&y);
                        codifferential_2(&MetricJet::new(&fr), &j.value, &j.d1).into()
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        [0.0; 4]
                    }
                }
            },
            steps[mu],
        );
        beta_d[mu] = d.value;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let d_delta = M4::from_fn(|mu, nu| beta_d[mu][nu] - beta_d[nu][mu]);
    Ok(to_frame(&frame.f, &(d_delta + delta_d)))
}

/// Frame components of `nabla phi`: `t[k][i][j] = (nabla_{e_k} phi)(e_i, e_j)`.
fn covariant_derivative(cf: &CoframeField, field: &dyn TwoFormField, y: &Point) -> Result<Three> {
    let frame = FrameAt::new(cf, y)?;
    let conn = connection_from_frame(&frame);
    let f = frame.f;
    let jet = field.jet(y);
    let big_phi = f.transpose() * jet.value * f;
    let mut dphi_frame = [M4::zeros(); 4];
    for (al, slot) in dphi_frame.iter_mut().enumerate() {
        let df = -f * frame.de[al] * f;
        *slot = df.transpose() * jet.value * f + f.transpose() * jet.d1[al] * f + f.transpose() * jet.value * df;
    }
    let mut t = [[[0.0; 4]; 4]; 4];
    for k in 0..4 {
        let ek = M4::from_fn(|i, j| (0..4).map(|al| f[(al, k)] * dphi_frame[al][(i, j)]).sum());
        for i in 0..4 {
            for j in 0..4 {
                let mut v = ek[(i, j)];
                for m in 0..4 {
                    v -= conn.get(m, i, k) * big_phi[(m, j)] + conn.get(m, j, k) * big_phi[(i, m)];
                }
                t[k][i][j] = v;
            }
        }
    }
    Ok(t)
}

/// `nabla* nabla phi` in frame components.
pub fn rough_laplacian(cf: &CoframeField, field: &dyn TwoFormField, x: &Point, fd_step: f64) -> Result<TwoForm> {
    let steps = cf.chart().steps(fd_step);
    cf.chart().check_stencil(x, &steps)?;
    let frame = FrameAt::new(cf, x)?;
    let conn = connection_from_frame(&frame);
    let t = covariant_derivative(cf, field, x)?;

    let mut failure = None;
    let mut dt = [[0.0; 64]; 4];
    for mu in 0..4 {
        let d = central_richardson(
            |h| {
                let mut y = *x;
                y[mu] += h;
                match covariant_derivative(cf, field, &y) {
                    Ok(v) => flatten(&v),
                    Err(e) => {
                        failure.get_or_insert(e);
                        [0.0; 64]
                    }
                }
            },
            steps[mu],
        );
        dt[mu] = d.value;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let f = frame.f;
    let mut out = M4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for k in 0..4 {
                acc += (0..4).map(|al| f[(al, k)] * dt[al][16 * k + 4 * i + j]).sum::<f64>();
                for m in 0..4 {
                    acc -= conn.get(m, k, k) * t[m][i][j] + conn.get(m, i, k) * t[k][m][j] + conn.get(m, j, k) * t[k][i][m];
                }
            }
            out[(i, j)] = -acc;
        }
    }
    Ok(TwoForm::from_matrix(&out))
}

fn flatten(t: &Three) -> [f64; 64] {
    let mut out = [0.0; 64];
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                out[16 * k + 4 * i + j] = t[k][i][j];
            }
        }
    }
    out
}

/// Both sides of the Weitzenbock identity at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeitzenbockCheck {
    pub hodge: TwoForm,
    pub rough: TwoForm,
    /// `-2 W phi + (s/3) phi`.
    pub curvature_term: TwoForm,
    pub residual: f64,
}

pub fn weitzenbock_check(cf: &CoframeField, field: &dyn TwoFormField, x: &Point, fd_step: f64) -> Result<WeitzenbockCheck> {
    let hodge = hodge_laplacian(cf, field, x, fd_step)?;
    let rough = rough_laplacian(cf, field, x, fd_step)?;
    let pc = curvature_at(cf, x, fd_step)?;
    let frame = FrameAt::new(cf, x)?;
    let phi = to_frame(&frame.f, &field.jet(x).value);
    let weyl = OperatorOnForms::from_blocks(&pc.wplus, &nalgebra::Matrix3::zeros(), &pc.wminus);
    let curvature_term = weyl.apply(&phi).scale(-2.0) + phi.scale(pc.s / 3.0);
    let residual = (hodge - rough - curvature_term).norm();
    Ok(WeitzenbockCheck {
        hodge,
        rough,
        curvature_term,
        residual,
    })
}

/// `|(d + d*)^2 phi - (nabla* nabla phi - 2 W phi + (s/3) phi)|` at `x`.
pub fn weitzenbock_residual(cf: &CoframeField, field: &dyn TwoFormField, x: &Point, fd_step: f64) -> Result<f64> {
    Ok(weitzenbock_check(cf, field, x, fd_step)?.residual)
}

fn sin_(x: f64) -> [f64; 3] {
    let (s, c) = x.sin_cos();
    [s, c, -s]
}

fn cos_(x: f64) -> [f64; 3] {
    let (s, c) = x.sin_cos();
    [c, -s, -c]
}

fn sin2_(x: f64) -> [f64; 3] {
    let (s, c) = (2.0 * x).sin_cos();
    [s, 2.0 * c, -4.0 * s]
}

fn quad_(x: f64) -> [f64; 3] {
    [x * x - x, 2.0 * x - 1.0, 2.0]
}

fn const_(_: f64) -> [f64; 3] {
    [0.7, 0.0, 0.0]
}

/// Test fields on the flat torus: `sin(x1) dx0^dx1`, a two-term
/// trigonometric field, and a field with a polynomial coefficient.
pub fn torus_test_fields() -> Vec<SeparableField> {
    vec![
        SeparableField {
            name: "sin(x1) e01".into(),
            terms: vec![SeparableTerm {
                mu: 0,
                nu: 1,
                factors: [one, sin_, one, one],
            }],
        },
        SeparableField {
            name: "cos(x0) sin(x3) e23 + sin(2 x2) e02".into(),
            terms: vec![
                SeparableTerm {
                    mu: 2,
                    nu: 3,
                    factors: [cos_, one, one, sin_],
                },
                SeparableTerm {
                    mu: 0,
                    nu: 2,
                    factors: [one, one, sin2_, one],
                },
            ],
        },
        SeparableField {
            name: "(x0^2 - x0) cos(x3) e13".into(),
            terms: vec![SeparableTerm {
                mu: 1,
                nu: 3,
                factors: [quad_, one, one, cos_],
            }],
        },
    ]
}

/// A parallel field on the flat torus.
pub fn torus_constant_field() -> SeparableField {
    SeparableField {
        name: "0.7 e03".into(),
        terms: vec![SeparableTerm {
            mu: 0,
            nu: 3,
            factors: [const_, one, one, one],
        }],
    }
}

fn r_half_sin(r: f64) -> [f64; 3] {
    let (s, c) = r.sin_cos();
    [0.5 * r * s, 0.5 * (s + r * c), 0.5 * (2.0 * c - r * s)]
}

fn quarter_sin_sq(r: f64) -> [f64; 3] {
    let (s, c) = (2.0 * r).sin_cos();
    let sr = r.sin();
    [0.25 * sr * sr, 0.25 * s, 0.5 * c]
}

fn theta_sq_sin(t: f64) -> [f64; 3] {
    let (s, c) = t.sin_cos();
    [
        t * t * s,
        2.0 * t * s + t * t * c,
        2.0 * s + 4.0 * t * c - t * t * s,
    ]
}

/// On the unit round `S^4` chart, `r e0^e1 + theta^2 e2^e3` for the polar
/// coframe `e0 = dr`, `e1 = (sin r/2)(dpsi + cos(theta) dphi)`,
/// `e2 = (sin r/2) sin(theta) dphi`, `e3 = (sin r/2) dtheta`.
pub fn s4_test_field() -> SeparableField {
    SeparableField {
        name: "r e01 + theta^2 e23".into(),
        terms: vec![
            // r e0^e1 = (r sin r/2) dr^dpsi + (r sin r/2) cos(theta) dr^dphi
            SeparableTerm {
                mu: 0,
                nu: 3,
                factors: [r_half_sin, one, one, one],
            },
            SeparableTerm {
                mu: 0,
                nu: 2,
                factors: [r_half_sin, cos_, one, one],
            },
            // theta^2 e2^e3 = theta^2 (sin^2 r/4) sin(theta) dphi^dtheta
            SeparableTerm {
                mu: 2,
                nu: 1,
                factors: [quarter_sin_sq, theta_sq_sin, one, one],
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::curvature::DEFAULT_FD_STEP;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct FirstOrderOnly;

    impl TwoFormField for FirstOrderOnly {
        fn name(&self) -> &str {
            "first-order only"
        }
        fn jet(&self, _x: &Point) -> FieldJet {
            FieldJet {
                value: M4::zeros(),
                d1: [M4::zeros(); 4],
                d2: None,
            }
        }
    }

    #[test]
    fn separable_partials_match_finite_differences() {
        let field = s4_test_field();
        let x = [0.8, 1.1, 0.3, 2.0];
        let j = field.jet(&x);
        let h = 1e-5;
        for a in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let (jp, jm) = (field.jet(&xp), field.jet(&xm));
            assert!(((jp.value - jm.value) / (2.0 * h) - j.d1[a]).abs().max() < 1e-8);
            for b in 0..4 {
                let fd = (jp.d1[b] - jm.d1[b]) / (2.0 * h);
                assert!((fd - j.d2.unwrap()[a][b]).abs().max() < 1e-8);
            }
        }
    }

    #[test]
    fn s4_field_has_the_intended_frame_components() {
        let s4 = catalog::round_s4(1.0).unwrap();
        let x = [0.9, 1.3, 0.4, 2.2];
        let frame = FrameAt::new(&s4, &x).unwrap();
        let phi = to_frame(&frame.f, &s4_test_field().jet(&x).value);
        let expected = TwoForm::basis(0, 1).scale(x[0]) + TwoForm::basis(2, 3).scale(x[1] * x[1]);
        assert!((phi - expected).norm() < 1e-12);
    }

    #[test]
    fn flat_torus_fields() {
        let t4 = catalog::flat_t4();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for field in torus_test_fields() {
            for _ in 0..5 {
                let x: Point = std::array::from_fn(|_| rng.gen_range(0.0..6.0));
                let check = weitzenbock_check(&t4, &field, &x, DEFAULT_FD_STEP).unwrap();
                assert!(check.residual < 1e-6, "{} {}", field.name(), check.residual);
                assert!(check.hodge.norm() > 1e-3 || field.jet(&x).value.norm() < 1e-3);
            }
        }
        let c = weitzenbock_check(&t4, &torus_constant_field(), &[1.0; 4], DEFAULT_FD_STEP).unwrap();
        assert!(c.hodge.norm() < 1e-12 && c.rough.norm() < 1e-12);
    }

    #[test]
    fn sin_e01_hodge_laplacian_is_sin_e01() {
        let t4 = catalog::flat_t4();
        let field = &torus_test_fields()[0];
        let x = [0.3, 1.2, 2.0, 4.0];
        let lap = hodge_laplacian(&t4, field, &x, DEFAULT_FD_STEP).unwrap();
        let expected = TwoForm::basis(0, 1).scale(x[1].sin());
        assert!((lap - expected).norm() < 1e-8);
    }

    #[test]
    fn round_s4_field() {
        let s4 = catalog::round_s4(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (lo, hi) = (s4.chart().interior_lo(), s4.chart().interior_hi());
        for _ in 0..10 {
            let x: Point = std::array::from_fn(|mu| rng.gen_range(lo[mu] + 0.1..hi[mu] - 0.1));
            let check = weitzenbock_check(&s4, &s4_test_field(), &x, DEFAULT_FD_STEP).unwrap();
            assert!(check.residual < 1e-5, "{}", check.residual);
            assert!(check.curvature_term.norm() > 1e-2);
        }
    }

    #[test]
    fn page_and_fubini_study_with_a_chart_field() {
        let field = s4_test_field();
        for cf in [
            catalog::page_metric(catalog::PageParams::einstein()).unwrap(),
            catalog::fubini_study(),
        ] {
            for x in [[0.7, 1.2, 0.3, 2.0], [1.3, 2.0, 4.0, 9.0]] {
                let check = weitzenbock_check(&cf, &field, &x, DEFAULT_FD_STEP).unwrap();
                assert!(check.residual < 1e-5, "{} {}", cf.name(), check.residual);
            }
        }
    }

    #[test]
    fn missing_second_partials_is_an_error() {
        let t4 = catalog::flat_t4();
        assert!(matches!(
            weitzenbock_residual(&t4, &FirstOrderOnly, &[1.0; 4], DEFAULT_FD_STEP),
            Err(Error::UnsupportedField("second"))
        ));
    }
}
