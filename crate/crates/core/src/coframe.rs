//! Coordinate charts and orthonormal coframe fields on them.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::forms::TwoForm;

/// A chart point, in the chart's coordinate order.
pub type Point = [f64; 4];

/// Coordinates closer than this to a singular chart boundary are excluded
/// from scans.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Rectangular coordinate domain. Coordinates flagged `singular` have the
/// chart degenerate at their endpoints and are shrunk by `margin`; periodic
/// coordinates may be stepped past their nominal range.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub names: [&'static str; 4],
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    pub singular: [bool; 4],
    pub periodic: [bool; 4],
    pub margin: f64,
}

impl Chart {
    pub fn new(
        names: [&'static str; 4],
        lo: [f64; 4],
        hi: [f64; 4],
        singular: [bool; 4],
        periodic: [bool; 4],
        margin: f64,
    ) -> Result<Self> {
        let chart = Self {
            names,
            lo,
            hi,
            singular,
            periodic,
            margin,
        };
        chart.validate()?;
        Ok(chart)
    }

    fn validate(&self) -> Result<()> {
        if !(self.margin >= 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "margin",
                value: self.margin,
                reason: "must be >= 0",
            });
        }
        for mu in 0..4 {
            if self.interior_lo()[mu] >= self.interior_hi()[mu] {
                return Err(Error::ParameterOutOfRange {
                    name: "margin",
                    value: self.margin,
                    reason: "chart interior is empty",
                });
            }
        }
        Ok(())
    }

    pub fn with_margin(&self, margin: f64) -> Result<Self> {
        let mut chart = self.clone();
        chart.margin = margin;
        chart.validate()?;
        Ok(chart)
    }

    pub fn margin_of(&self, mu: usize) -> f64 {
        if self.singular[mu] {
            self.margin
        } else {
            0.0
        }
    }

    pub fn width(&self, mu: usize) -> f64 {
        self.hi[mu] - self.lo[mu]
    }

    pub fn interior_lo(&self) -> Point {
        std::array::from_fn(|mu| self.lo[mu] + self.margin_of(mu))
    }

    pub fn interior_hi(&self) -> Point {
        std::array::from_fn(|mu| self.hi[mu] - self.margin_of(mu))
    }

    pub fn in_interior(&self, x: &Point) -> bool {
        let (lo, hi) = (self.interior_lo(), self.interior_hi());
        (0..4).all(|mu| self.periodic[mu] || (x[mu] >= lo[mu] && x[mu] <= hi[mu]))
    }

    /// Per-coordinate finite-difference steps for a relative step size.
    pub fn steps(&self, fd_step: f64) -> [f64; 4] {
        std::array::from_fn(|mu| fd_step * self.width(mu))
    }

    /// Check that `x +- step` stays inside the closed domain on every
    /// non-periodic coordinate.
    pub fn check_stencil(&self, x: &Point, steps: &[f64; 4]) -> Result<()> {
        for mu in 0..4 {
            if self.periodic[mu] {
                continue;
            }
            if x[mu] - steps[mu] < self.lo[mu] || x[mu] + steps[mu] > self.hi[mu] {
                return Err(Error::StepTooLarge {
                    coord: mu,
                    step: steps[mu],
                    point: *x,
                });
            }
        }
        Ok(())
    }

    /// `n` samples of coordinate `mu` across the interior. Periodic
    /// coordinates omit the duplicated endpoint.
    pub fn samples(&self, mu: usize, n: usize) -> Vec<f64> {
        let (lo, hi) = (self.interior_lo()[mu], self.interior_hi()[mu]);
        if n <= 1 {
            return vec![0.5 * (lo + hi)];
        }
        if self.periodic[mu] {
            let dx = (hi - lo) / n as f64;
            (0..n).map(|i| lo + dx * i as f64).collect()
        } else {
            let dx = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + dx * i as f64).collect()
        }
    }

    /// Full tensor grid with `n` samples per coordinate, last coordinate
    /// varying fastest.
    pub fn grid(&self, n: usize) -> Vec<Point> {
        let axes: Vec<Vec<f64>> = (0..4).map(|mu| self.samples(mu, n)).collect();
        let mut out = Vec::with_capacity(n.pow(4));
        for &a in &axes[0] {
            for &b in &axes[1] {
                for &c in &axes[2] {
                    for &d in &axes[3] {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        out
    }

    pub fn clamp_interior(&self, x: &Point) -> Point {
        let (lo, hi) = (self.interior_lo(), self.interior_hi());
        std::array::from_fn(|mu| {
            if self.periodic[mu] {
                x[mu]
            } else {
                x[mu].clamp(lo[mu], hi[mu])
            }
        })
    }
}

/// Coframe coefficients `E[i][mu] = e^i(d/dx^mu)` and their first partials
/// `dE[nu][i][mu] = d_nu E[i][mu]` at one point.
#[derive(Debug, Clone, Copy)]
pub struct CoframeJet {
    pub e: Matrix4<f64>,
    pub de: [Matrix4<f64>; 4],
}

type JetFn = dyn Fn(&Point) -> CoframeJet + Send + Sync;

/// An orthonormal coframe on a chart; the metric is `sum_i e^i (x) e^i`.
#[derive(Clone)]
pub struct CoframeField {
    name: String,
    chart: Chart,
    jet: Arc<JetFn>,
    kahler_form: Option<TwoForm>,
}

impl fmt::Debug for CoframeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoframeField")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("kahler_form", &self.kahler_form)
            .finish_non_exhaustive()
    }
}

impl CoframeField {
    pub fn new(
        name: impl Into<String>,
        chart: Chart,
        jet: impl Fn(&Point) -> CoframeJet + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            chart,
            jet: Arc::new(jet),
            kahler_form: None,
        }
    }

    /// Attach a known Kahler form, constant in frame components.
    pub fn with_kahler_form(mut self, omega: TwoForm) -> Self {
        self.kahler_form = Some(omega);
        self
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    pub fn with_margin(self, margin: f64) -> Result<Self> {
        let chart = self.chart.with_margin(margin)?;
        Ok(self.with_chart(chart))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn kahler_form(&self) -> Option<TwoForm> {
        self.kahler_form
    }

    pub fn jet(&self, x: &Point) -> CoframeJet {
        (self.jet)(x)
    }

    pub fn coeff(&self, x: &Point) -> Matrix4<f64> {
        self.jet(x).e
    }

    pub fn dcoeff(&self, x: &Point) -> [Matrix4<f64>; 4] {
        self.jet(x).de
    }

    /// Coordinate metric `g[mu][nu]`.
    pub fn metric(&self, x: &Point) -> Matrix4<f64> {
        let e = self.coeff(x);
        e.transpose() * e
    }

    /// The metric `c^2 g`, realised as the coframe `c e^i`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = Arc::clone(&self.jet);
        Self {
            name: format!("{}*{}", c * c, self.name),
            chart: self.chart.clone(),
            jet: Arc::new(move |x: &Point| {
                let j = inner(x);
                CoframeJet {
                    e: j.e * c,
                    de: j.de.map(|m| m * c),
                }
            }),
            kahler_form: self.kahler_form,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart::new(
            ["r", "theta", "phi", "psi"],
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 2.0, 4.0],
            [true, true, false, false],
            [false, false, true, true],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn interior_and_samples() {
        let c = chart();
        assert_eq!(c.interior_lo(), [0.1, 0.1, 0.0, 0.0]);
        assert_eq!(c.interior_hi(), [0.9, 0.9, 2.0, 4.0]);
        let s = c.samples(0, 3);
        assert!((s[0] - 0.1).abs() < 1e-15 && (s[2] - 0.9).abs() < 1e-15);
        let p = c.samples(3, 4);
        assert_eq!(p, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.grid(3).len(), 81);
    }

    #[test]
    fn empty_interior_rejected() {
        assert!(chart().with_margin(0.6).is_err());
        assert!(chart().with_margin(-1.0).is_err());
    }

    #[test]
    fn stencil_check() {
        let c = chart();
        assert!(c.check_stencil(&[0.5, 0.5, 0.0, 0.0], &[0.1; 4]).is_ok());
        assert!(matches!(
            c.check_stencil(&[0.05, 0.5, 0.0, 0.0], &[0.1; 4]),
            Err(Error::StepTooLarge { coord: 0, .. })
        ));
    }
}
