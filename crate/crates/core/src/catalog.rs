//! Closed-form coframes for the test metrics, the Euler-angle 1-forms on
//! `S^3` and the Page parameter.
//!
//! The cohomogeneity-one metrics share the chart `(r, theta, phi, psi)` and
//! the shape
//!
//! ```text
//! g = P(r)^2 dr^2 + Q(r)^2 (s1^2 + s2^2) + S(r)^2 s3^2
//! ```
//!
//! realised by the coframe `e0 = P dr`, `e1 = (S/2)(dpsi + cos(theta) dphi)`,
//! `e2 = (Q/2) sin(theta) dphi`, `e3 = (Q/2) dtheta`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::coframe::{Chart, CoframeField, CoframeJet, Point, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::forms::TwoForm;

/// `a^4 + 4a^3 - 6a^2 + 12a - 3`.
pub fn page_quartic(a: f64) -> f64 {
    (((a + 4.0) * a - 6.0) * a + 12.0) * a - 3.0
}

fn page_quartic_derivative(a: f64) -> f64 {
    ((4.0 * a + 12.0) * a - 12.0) * a + 12.0
}

/// The root of the Page quartic in `(0, 1)`: bisection to a tight bracket,
/// then Newton polish.
pub fn page_root() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if page_quartic(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..3 {
        let step = page_quartic(a) / page_quartic_derivative(a);
        if step == 0.0 {
            break;
        }
        a -= step;
    }
    a
}

/// Shape parameter of the Page family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageParams {
    pub a: f64,
}

impl PageParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "a",
                value: a,
                reason: "Page parameter must lie in (0, 1)",
            });
        }
        Ok(Self { a })
    }

    /// The Einstein member of the family.
    pub fn einstein() -> Self {
        Self { a: page_root() }
    }

    pub fn v(&self, r: f64) -> f64 {
        let a2 = self.a * self.a;
        let c2 = r.cos().powi(2);
        (1.0 - a2 * c2) / (3.0 - a2 - a2 * (1.0 + a2) * c2)
    }

    pub fn f(&self, r: f64) -> f64 {
        let a2 = self.a * self.a;
        4.0 / (3.0 + 6.0 * a2 - a2 * a2) * (1.0 - a2 * r.cos().powi(2))
    }

    pub fn c(&self) -> f64 {
        (2.0 / (3.0 + self.a * self.a)).powi(2)
    }

    /// `[P, P', Q, Q', S, S']` for the Page warping functions.
    fn profile(&self, r: f64) -> [f64; 6] {
        let a2 = self.a * self.a;
        let (sr, cr) = r.sin_cos();
        let n = 1.0 - a2 * cr * cr;
        let dn = 2.0 * a2 * cr * sr;
        let den = 3.0 - a2 - a2 * (1.0 + a2) * cr * cr;
        let dden = 2.0 * a2 * (1.0 + a2) * cr * sr;
        let v = n / den;
        let dv = (dn * den - n * dden) / (den * den);
        let k = 4.0 / (3.0 + 6.0 * a2 - a2 * a2);
        let p = v.sqrt();
        let dp = dv / (2.0 * p);
        let q = (k * n).sqrt();
        let dq = k * dn / (2.0 * q);
        // The fibre coefficient is C sin^2 r / (4V) in units of s3^2: with
        // psi of period 4 pi this is the normalisation that closes smoothly
        // at r = 0 and makes the root member Einstein.
        let half_root_c = 0.5 * self.c().sqrt();
        let s = half_root_c * sr / p;
        let ds = half_root_c * (cr / p - sr * dp / (p * p));
        [p, dp, q, dq, s, ds]
    }
}

fn cohomogeneity_one_chart(r_max: f64) -> Chart {
    Chart::new(
        ["r", "theta", "phi", "psi"],
        [0.0; 4],
        [r_max, PI, 2.0 * PI, 4.0 * PI],
        [true, true, false, false],
        [false, false, true, true],
        DEFAULT_MARGIN,
    )
    .expect("static chart is valid")
}

/// Coframe for `P^2 dr^2 + Q^2 (s1^2 + s2^2) + S^2 s3^2` on `r in [0, r_max]`;
/// `profile(r)` returns `[P, P', Q, Q', S, S']`.
pub fn cohomogeneity_one(
    name: String,
    r_max: f64,
    profile: impl Fn(f64) -> [f64; 6] + Send + Sync + 'static,
) -> CoframeField {
    CoframeField::new(name, cohomogeneity_one_chart(r_max), move |x: &Point| {
        let [p, dp, q, dq, s, ds] = profile(x[0]);
        let (st, ct) = x[1].sin_cos();
        let e = Matrix4::new(
            p, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.5 * s * ct, 0.5 * s, //
            0.0, 0.0, 0.5 * q * st, 0.0, //
            0.0, 0.5 * q, 0.0, 0.0,
        );
        let d_r = Matrix4::new(
            dp, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.5 * ds * ct, 0.5 * ds, //
            0.0, 0.0, 0.5 * dq * st, 0.0, //
            0.0, 0.5 * dq, 0.0, 0.0,
        );
        let d_theta = Matrix4::new(
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, -0.5 * s * st, 0.0, //
            0.0, 0.0, 0.5 * q * ct, 0.0, //
            0.0, 0.0, 0.0, 0.0,
        );
        CoframeJet {
            e,
            de: [d_r, d_theta, Matrix4::zeros(), Matrix4::zeros()],
        }
    })
}

/// The Kahler form `e0^e1 + e2^e3` shared by the catalog's Hermitian metrics.
pub fn standard_kahler_form() -> TwoForm {
    TwoForm::basis(0, 1) + TwoForm::basis(2, 3)
}

pub fn page_metric(params: PageParams) -> Result<CoframeField> {
    let params = PageParams::new(params.a)?;
    Ok(cohomogeneity_one(
        format!("page(a={})", params.a),
        PI,
        move |r| params.profile(r),
    ))
}

/// Fubini-Study metric on `CP^2`, normalised to holomorphic sectional
/// curvature 4, as a cone over the Berger sphere with `r` in `(0, pi/2)`.
pub fn fubini_study() -> CoframeField {
    cohomogeneity_one("fubini-study".into(), FRAC_PI_2, |r| {
        let (s, c) = r.sin_cos();
        [1.0, 0.0, s, c, s * c, c * c - s * s]
    })
    .with_kahler_form(standard_kahler_form())
}

pub fn round_s4(radius: f64) -> Result<CoframeField> {
    if !(radius > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "radius",
            value: radius,
            reason: "must be positive",
        });
    }
    Ok(cohomogeneity_one(format!("s4({radius})"), PI, move |r| {
        let (s, c) = r.sin_cos();
        [radius, 0.0, radius * s, radius * c, radius * s, radius * c]
    }))
}

/// Flat torus with the identity coframe and the constant complex structure
/// `J e0 = e1, J e2 = e3`.
pub fn flat_t4() -> CoframeField {
    let chart = Chart::new(
        ["x0", "x1", "x2", "x3"],
        [0.0; 4],
        [2.0 * PI; 4],
        [false; 4],
        [true; 4],
        DEFAULT_MARGIN,
    )
    .expect("static chart is valid");
    CoframeField::new("t4", chart, |_x: &Point| CoframeJet {
        e: Matrix4::identity(),
        de: [Matrix4::zeros(); 4],
    })
    .with_kahler_form(standard_kahler_form())
}

/// Product of round spheres of radii `r1`, `r2` in coordinates
/// `(theta1, phi1, theta2, phi2)`.
pub fn round_s2xs2(r1: f64, r2: f64) -> Result<CoframeField> {
    for (name, v) in [("r1", r1), ("r2", r2)] {
        if !(v > 0.0) {
            return Err(Error::ParameterOutOfRange {
                name,
                value: v,
                reason: "must be positive",
            });
        }
    }
    let chart = Chart::new(
        ["theta1", "phi1", "theta2", "phi2"],
        [0.0; 4],
        [PI, 2.0 * PI, PI, 2.0 * PI],
        [true, false, true, false],
        [false, true, false, true],
        DEFAULT_MARGIN,
    )?;
    Ok(
        CoframeField::new(format!("s2xs2({r1},{r2})"), chart, move |x: &Point| {
            let (s1, c1) = x[0].sin_cos();
            let (s2, c2) = x[2].sin_cos();
            let e = Matrix4::from_diagonal(&[r1, r1 * s1, r2, r2 * s2].into());
            let mut d0 = Matrix4::zeros();
            d0[(1, 1)] = r1 * c1;
            let mut d2 = Matrix4::zeros();
            d2[(3, 3)] = r2 * c2;
            CoframeJet {
                e,
                de: [d0, Matrix4::zeros(), d2, Matrix4::zeros()],
            }
        })
        .with_kahler_form(standard_kahler_form()),
    )
}

/// Catalog entry addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MetricSpec {
    Page { a: f64 },
    FubiniStudy,
    S4 { radius: f64 },
    T4,
    S2xS2 { r1: f64, r2: f64 },
}

impl MetricSpec {
    pub fn build(&self) -> Result<CoframeField> {
        match *self {
            MetricSpec::Page { a } => page_metric(PageParams::new(a)?),
            MetricSpec::FubiniStudy => Ok(fubini_study()),
            MetricSpec::S4 { radius } => round_s4(radius),
            MetricSpec::T4 => Ok(flat_t4()),
            MetricSpec::S2xS2 { r1, r2 } => round_s2xs2(r1, r2),
        }
    }

    pub fn is_page(&self) -> bool {
        matches!(self, MetricSpec::Page { .. })
    }

    /// Catalog metrics that carry a complex structure.
    pub fn is_hermitian(&self) -> bool {
        !matches!(self, MetricSpec::S4 { .. })
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Page { a } => write!(f, "page(a={a})"),
            MetricSpec::FubiniStudy => write!(f, "fubini-study"),
            MetricSpec::S4 { radius } => write!(f, "s4({radius})"),
            MetricSpec::T4 => write!(f, "t4"),
            MetricSpec::S2xS2 { r1, r2 } => write!(f, "s2xs2({r1},{r2})"),
        }
    }
}

impl From<MetricSpec> for String {
    fn from(m: MetricSpec) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for MetricSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn parse_args(name: &str, inner: &str) -> Result<Vec<f64>> {
    inner
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            let tok = tok.strip_prefix("a=").unwrap_or(tok);
            tok.parse::<f64>()
                .map_err(|_| Error::UnknownMetric(format!("{name}: bad argument {tok:?}")))
        })
        .collect()
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::UnknownMetric(s.to_string()))?;
                (&s[..open], Some(parse_args(s, inner)?))
            }
            None => (s, None),
        };
        let spec = match (head, args.as_deref()) {
            ("page", None) => MetricSpec::Page { a: page_root() },
            ("page", Some([a])) => MetricSpec::Page { a: *a },
            ("fubini-study" | "fs", None) => MetricSpec::FubiniStudy,
            ("s4", None) => MetricSpec::S4 { radius: 1.0 },
            ("s4", Some([r])) => MetricSpec::S4 { radius: *r },
            ("t4", None) => MetricSpec::T4,
            ("s2xs2", None) => MetricSpec::S2xS2 { r1: 1.0, r2: 1.0 },
            ("s2xs2", Some([r1, r2])) => MetricSpec::S2xS2 { r1: *r1, r2: *r2 },
            _ => return Err(Error::UnknownMetric(s.to_string())),
        };
        // Validate parameters eagerly.
        spec.build()?;
        Ok(spec)
    }
}

/// A 1-form on `S^3` in Euler-angle coordinates `(theta, phi, psi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneForm3 {
    /// Coefficients of `(dtheta, dphi, dpsi)`.
    pub coeffs: [f64; 3],
    /// `partials[k][m] = d_k coeffs[m]`.
    pub partials: [[f64; 3]; 3],
}

impl OneForm3 {
    /// Exterior derivative as coefficients of
    /// `(dtheta^dphi, dtheta^dpsi, dphi^dpsi)`.
    pub fn d(&self) -> [f64; 3] {
        let p = &self.partials;
        [p[0][1] - p[1][0], p[0][2] - p[2][0], p[1][2] - p[2][1]]
    }

    pub fn wedge(&self, other: &Self) -> [f64; 3] {
        let (a, b) = (&self.coeffs, &other.coeffs);
        [
            a[0] * b[1] - a[1] * b[0],
            a[0] * b[2] - a[2] * b[0],
            a[1] * b[2] - a[2] * b[1],
        ]
    }

    /// Symmetric square `self (x) self` as a 3x3 coordinate matrix.
    pub fn square(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.coeffs[i] * self.coeffs[j]))
    }
}

/// Left-invariant coframe of the unit `S^3` in Euler angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaForms {
    pub sigma: [OneForm3; 3],
}

/// Euler-angle forms `s1, s2, s3` at `(theta, phi, psi)`.
pub fn sigma_forms(theta: f64, phi: f64, psi: f64) -> SigmaForms {
    let _ = phi;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let s1 = OneForm3 {
        coeffs: [0.5 * sp, -0.5 * st * cp, 0.0],
        partials: [[0.0, -0.5 * ct * cp, 0.0], [0.0; 3], [0.5 * cp, 0.5 * st * sp, 0.0]],
    };
    let s2 = OneForm3 {
        coeffs: [-0.5 * cp, -0.5 * st * sp, 0.0],
        partials: [[0.0, -0.5 * ct * sp, 0.0], [0.0; 3], [0.5 * sp, -0.5 * st * cp, 0.0]],
    };
    let s3 = OneForm3 {
        coeffs: [0.0, 0.5 * ct, 0.5],
        partials: [[0.0, -0.5 * st, 0.0], [0.0; 3], [0.0; 3]],
    };
    SigmaForms {
        sigma: [s1, s2, s3],
    }
}

/// Hopf projection `(theta, psi, phi) -> (-phi, theta)`; independent of `psi`.
pub fn hopf_project(theta: f64, psi: f64, phi: f64) -> (f64, f64) {
    let _ = psi;
    (-phi, theta)
}

/// Euler-angle embedding of `S^3` of radius `r` in `R^4`, returned as
/// `(x0, x1, x2, x3)`.
pub fn euler_embed(r: f64, theta: f64, phi: f64, psi: f64) -> [f64; 4] {
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let (sum, diff) = (0.5 * (psi + phi), 0.5 * (psi - phi));
    [
        r * s * diff.sin(),
        r * c * sum.cos(),
        r * c * sum.sin(),
        r * s * diff.cos(),
    ]
}
