//! The Kahler metric `g~ = u g` conformal to a Hermitian metric whose `W+`
//! has a positive simple top eigenvalue `l`, with `u = (6 l)^(2/3)`.
//!
//! Under `g~ = u g` the curvature operator on unit 2-forms scales by `1/u`,
//! so the Kahler scalar curvature is `s~ = 6 l / u = (6 l)^(1/3)`.

use nalgebra::Vector3;

use crate::coframe::{CoframeField, CoframeJet, Point};
use crate::curvature::{curvature_at, PointCurvature};
use crate::error::{Error, Result};
use crate::fd::central_richardson;

/// Relative step for the partials of the conformal factor.
pub const FACTOR_STEP: f64 = 1e-2;

/// Top eigenvalues of `W+` below `WPLUS_FLOOR * (1 + |s|)` are treated as
/// zero: conformally flat metrics give finite-difference noise of this size.
pub const WPLUS_FLOOR: f64 = 1e-8;

/// `u = (6 l)^(2/3)` from the top eigenvalue of `W+`.
pub fn conformal_factor(pc: &PointCurvature, x: &Point) -> Result<f64> {
    let top = pc.wplus_spectrum()[2];
    if !(top > WPLUS_FLOOR * (1.0 + pc.s.abs())) {
        return Err(Error::NonpositiveTopEigenvalue { value: top, point: *x });
    }
    Ok((6.0 * top).powf(2.0 / 3.0))
}

/// Conformal Kahler data for a base metric: the factor `u`, the rescaled
/// coframe `sqrt(u) e` and the curvature quantities of `g~`.
#[derive(Debug, Clone)]
pub struct ConformalKahlerData {
    base: CoframeField,
    tilde: CoframeField,
    fd_step: f64,
}

/// Per-point values of the first and second estimate quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateValues {
    pub s_tilde: f64,
    /// Ascending eigenvalues of `W~-`.
    pub wminus_tilde: Vector3<f64>,
    /// `max lambda(W~-) - s~/6`.
    pub first: f64,
    /// `max over |phi| = 1/sqrt(2) of <W~- phi, phi> - s~/12`.
    pub second: f64,
}

impl ConformalKahlerData {
    pub fn base(&self) -> &CoframeField {
        &self.base
    }

    /// The coframe `sqrt(u) e^i` of `g~`.
    pub fn tilde(&self) -> &CoframeField {
        &self.tilde
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn u(&self, x: &Point) -> Result<f64> {
        let pc = curvature_at(&self.base, x, self.fd_step)?;
        conformal_factor(&pc, x)
    }

    /// `(6 l)^(1/3)` from the base curvature.
    pub fn s_tilde(&self, x: &Point) -> Result<f64> {
        Ok(self.u(x)?.sqrt())
    }

    /// Scalar curvature of `g~` computed from its own coframe.
    pub fn tilde_curvature(&self, x: &Point) -> Result<PointCurvature> {
        // Surface the real failure before the jet sees it as NaN.
        self.u(x)?;
        curvature_at(&self.tilde, x, self.fd_step)
    }

    /// `|s(g~) - s~| / s~`.
    pub fn consistency_residual(&self, x: &Point) -> Result<f64> {
        let expected = self.s_tilde(x)?;
        let got = self.tilde_curvature(x)?.s;
        Ok((got - expected).abs() / expected)
    }

    pub fn estimates(&self, x: &Point) -> Result<EstimateValues> {
        let pc = curvature_at(&self.base, x, self.fd_step)?;
        Ok(estimates_from(&pc, conformal_factor(&pc, x)?))
    }
}

/// Estimate quantities from base curvature and conformal factor.
pub fn estimates_from(pc: &PointCurvature, u: f64) -> EstimateValues {
    let s_tilde = u.sqrt();
    let wminus_tilde = pc.wminus_spectrum() / u;
    let top = wminus_tilde[2];
    EstimateValues {
        s_tilde,
        wminus_tilde,
        first: top - s_tilde / 6.0,
        second: 0.5 * top - s_tilde / 12.0,
    }
}

/// Build the conformal Kahler data of `cf`. Fails if the top eigenvalue of
/// `W+` is not positive at the chart centre; individual points report their
/// own failures.
pub fn conformal_kahler(cf: &CoframeField, fd_step: f64) -> Result<ConformalKahlerData> {
    let chart = cf.chart().clone();
    let (lo, hi) = (chart.interior_lo(), chart.interior_hi());
    let centre: Point = std::array::from_fn(|mu| 0.5 * (lo[mu] + hi[mu]));
    conformal_factor(&curvature_at(cf, &centre, fd_step)?, &centre)?;

    let base = cf.clone();
    let steps = chart.steps(FACTOR_STEP);
    let u_of = move |cf: &CoframeField, y: &Point| -> f64 {
        curvature_at(cf, y, fd_step)
            .and_then(|pc| conformal_factor(&pc, y))
            .unwrap_or(f64::NAN)
    };
    let inner = base.clone();
    let tilde = CoframeField::new(format!("conformal-kahler({})", cf.name()), chart, move |x: &Point| {
        let jet = inner.jet(x);
        let u = u_of(&inner, x);
        let root = u.sqrt();
        let de = std::array::from_fn(|nu| {
            let d = central_richardson(
                |t| {
                    let mut y = *x;
                    y[nu] += t;
                    [u_of(&inner, &y)]
                },
                steps[nu],
            );
            jet.de[nu] * root + jet.e * (d.value[0] / (2.0 * root))
        });
        CoframeJet { e: jet.e * root, de }
    });
    Ok(ConformalKahlerData {
        base,
        tilde,
        fd_step,
    })
}
