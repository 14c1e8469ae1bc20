//! Surfaces swept by two chart coordinates with the others frozen, their
//! normal connection `w_23`, normal curvature and holonomy.
//!
//! The surface must be adapted to the coframe: `e0, e1` span its tangent
//! planes and `e2, e3` its normal planes. A normal vector
//! `cos(a) e2 + sin(a) e3` is parallel along `gamma` iff `a' = w_23(gamma')`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coframe::{CoframeField, Point};
use crate::curvature::{connection_at, FrameAt};
use crate::error::{Error, Result};
use crate::fd::central_richardson;

/// Largest tolerated normal component of a surface tangent vector.
const ADAPTED_TOL: f64 = 1e-10;

/// Largest tolerated holonomy integration error.
pub const HOLONOMY_TOL: f64 = 1e-6;

/// A point of a surface in its own coordinates.
pub type SurfacePoint = [f64; 2];

#[derive(Debug, Clone)]
pub struct FiberSurface {
    metric: CoframeField,
    base: Point,
    varying: [usize; 2],
}

impl FiberSurface {
    /// The surface through `base` along chart coordinates `varying`.
    pub fn new(metric: CoframeField, base: Point, varying: [usize; 2]) -> Result<Self> {
        if varying[0] == varying[1] || varying.iter().any(|&v| v > 3) {
            return Err(Error::ChartDegeneracy(format!("invalid coordinate pair {varying:?}")));
        }
        let s = Self { metric, base, varying };
        s.check_adapted(&s.lift(&s.centre()))?;
        Ok(s)
    }

    /// The sphere `theta = theta0, phi = phi0` swept by `(r, psi)` in a
    /// cohomogeneity-one chart.
    pub fn fiber_sphere(metric: CoframeField, theta0: f64, phi0: f64) -> Result<Self> {
        Self::new(metric, [0.0, theta0, phi0, 0.0], [0, 3])
    }

    pub fn metric(&self) -> &CoframeField {
        &self.metric
    }

    pub fn varying(&self) -> [usize; 2] {
        self.varying
    }

    pub fn lift(&self, p: &SurfacePoint) -> Point {
        let mut x = self.base;
        x[self.varying[0]] = p[0];
        x[self.varying[1]] = p[1];
        x
    }

    /// Interior bounds `([lo0, lo1], [hi0, hi1])` of the surface coordinates.
    pub fn bounds(&self) -> (SurfacePoint, SurfacePoint) {
        let c = self.metric.chart();
        let (lo, hi) = (c.interior_lo(), c.interior_hi());
        let [a, b] = self.varying;
        ([lo[a], lo[b]], [hi[a], hi[b]])
    }

    pub fn periodic(&self) -> [bool; 2] {
        let c = self.metric.chart();
        [c.periodic[self.varying[0]], c.periodic[self.varying[1]]]
    }

    fn centre(&self) -> SurfacePoint {
        let (lo, hi) = self.bounds();
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]
    }

    fn check_adapted(&self, x: &Point) -> Result<()> {
        let e = self.metric.coeff(x);
        for &mu in &self.varying {
            for i in 2..4 {
                if e[(i, mu)].abs() > ADAPTED_TOL {
                    return Err(Error::ChartDegeneracy(format!(
                        "e{i}(d/d{}) = {:e} at {x:?}; e2, e3 must vanish on the surface",
                        self.metric.chart().names[mu],
                        e[(i, mu)]
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_inside(&self, p: &SurfacePoint) -> Result<()> {
        let x = self.lift(p);
        if !self.metric.chart().in_interior(&x) {
            return Err(Error::OutsideChart { point: x });
        }
        Ok(())
    }
}

/// Coefficients of `w_23` restricted to the surface, along its two
/// coordinates.
pub fn normal_connection(s: &FiberSurface, p: &SurfacePoint) -> Result<[f64; 2]> {
    let x = s.lift(p);
    s.check_adapted(&x)?;
    raw_normal_connection(s, &x)
}

fn raw_normal_connection(s: &FiberSurface, x: &Point) -> Result<[f64; 2]> {
    let frame = FrameAt::new(s.metric(), x)?;
    let w = connection_at(s.metric(), x)?.coordinate_components(&frame.e);
    Ok([w[2][3][s.varying[0]], w[2][3][s.varying[1]]])
}

/// `w_10(e2)` and `w_10(e3)`: the tangential connection form evaluated on
/// the normal directions.
pub fn tangential_on_normal(s: &FiberSurface, p: &SurfacePoint) -> Result<[f64; 2]> {
    let w = connection_at(s.metric(), &s.lift(p))?;
    Ok([w.get(1, 0, 2), w.get(1, 0, 3)])
}

/// Coefficient of `du^dv` in `d w_23` on the surface (the `w_2i ^ w_i3`
/// terms vanish in rank two).
pub fn normal_curvature(s: &FiberSurface, p: &SurfacePoint, fd_step: f64) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "fd_step",
            value: fd_step,
            reason: "must be positive",
        });
    }
    let x = s.lift(p);
    s.check_adapted(&x)?;
    let steps = s.metric.chart().steps(fd_step);
    s.metric.chart().check_stencil(&x, &steps)?;
    let mut failure = None;
    let mut partial = |axis: usize, comp: usize| {
        let mu = s.varying[axis];
        central_richardson(
            |h| {
                let mut y = x;
                y[mu] += h;
                match raw_normal_connection(s, &y) {
                    Ok(a) => [a[comp]],
                    Err(e) => {
                        failure.get_or_insert(e);
                        [0.0]
                    }
                }
            },
            steps[mu],
        )
        .value[0]
    };
    let du_av = partial(0, 1);
    let dv_au = partial(1, 0);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(du_av - dv_au)
}

/// Closed polygon in surface coordinates; the last vertex joins the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    pub vertices: Vec<SurfacePoint>,
}

impl Loop {
    /// Counter-clockwise rectangle `[u0, u1] x [v0, v1]`.
    pub fn rectangle(u: [f64; 2], v: [f64; 2]) -> Self {
        Self {
            vertices: vec![[u[0], v[0]], [u[1], v[0]], [u[1], v[1]], [u[0], v[1]]],
        }
    }

    pub fn point(p: SurfacePoint) -> Self {
        Self { vertices: vec![p] }
    }

    fn segments(&self) -> impl Iterator<Item = (SurfacePoint, SurfacePoint)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1])).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    /// Net rotation of a parallel normal frame, in `(-pi, pi]`.
    pub angle: f64,
    /// Unwrapped rotation.
    pub total: f64,
    pub steps: usize,
    /// `|total(steps) - total(2 steps)|`.
    pub error_estimate: f64,
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Integrate `a' = w_23(gamma')` along one straight segment with `n` RK4
/// steps. The right-hand side does not depend on `a`, so the stages reduce
/// to Simpson weights on the connection along the segment.
fn transport_segment(s: &FiberSurface, a: SurfacePoint, b: SurfacePoint, n: usize) -> Result<f64> {
    let d = [b[0] - a[0], b[1] - a[1]];
    if d == [0.0, 0.0] {
        return Ok(0.0);
    }
    let rate = |t: f64| -> Result<f64> {
        let p = [a[0] + t * d[0], a[1] + t * d[1]];
        let w = raw_normal_connection(s, &s.lift(&p))?;
        Ok(w[0] * d[0] + w[1] * d[1])
    };
    let h = 1.0 / n as f64;
    let mut angle = 0.0;
    for k in 0..n {
        let t = k as f64 * h;
        let k1 = rate(t)?;
        let k2 = rate(t + 0.5 * h)?;
        let k3 = k2;
        let k4 = rate(t + h)?;
        angle += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Ok(angle)
}

fn transport_loop(s: &FiberSurface, lp: &Loop, steps: usize) -> Result<f64> {
    let total_len = lp.length();
    let mut angle = 0.0;
    for (a, b) in lp.segments() {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = ((steps as f64 * len / total_len).ceil() as usize).max(1);
        angle += transport_segment(s, a, b, n)?;
    }
    Ok(angle)
}

/// Holonomy of the normal connection around `lp` with `steps` RK4 steps
/// shared among the edges in proportion to length.
pub fn holonomy_loop(s: &FiberSurface, lp: &Loop, steps: usize) -> Result<HolonomyResult> {
    for v in &lp.vertices {
        s.check_inside(v)?;
        s.check_adapted(&s.lift(v))?;
    }
    if lp.vertices.len() < 2 || lp.length() == 0.0 {
        return Ok(HolonomyResult {
            angle: 0.0,
            total: 0.0,
            steps,
            error_estimate: 0.0,
        });
    }
    let steps = steps.max(lp.vertices.len());
    let coarse = transport_loop(s, lp, steps)?;
    let fine = transport_loop(s, lp, 2 * steps)?;
    let error_estimate = (coarse - fine).abs();
    if error_estimate > HOLONOMY_TOL {
        return Err(Error::StepCountTooSmall {
            estimate: error_estimate,
        });
    }
    Ok(HolonomyResult {
        angle: wrap_angle(fine),
        total: fine,
        steps,
        error_estimate,
    })
}

/// Path-independence defect of parallel normal frames on an `n x n` grid.
///
/// Frames are transported from the first grid node along two spanning
/// trees: first along the second coordinate then the first, and the other
/// way round. The defect is the largest angle between the two results.
pub fn parallel_section_defect(s: &FiberSurface, n: usize, steps_per_edge: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::ParameterOutOfRange {
            name: "n",
            value: n as f64,
            reason: "need at least 2 nodes per side",
        });
    }
    let (lo, hi) = s.bounds();
    let periodic = s.periodic();
    let axis = |k: usize| -> Vec<f64> {
        let step = if periodic[k] {
            (hi[k] - lo[k]) / n as f64
        } else {
            (hi[k] - lo[k]) / (n - 1) as f64
        };
        (0..n).map(|i| lo[k] + step * i as f64).collect()
    };
    let (us, vs) = (axis(0), axis(1));
    let edge = |a: SurfacePoint, b: SurfacePoint| transport_segment(s, a, b, steps_per_edge);

    // Tree A: along v at u0, then along u.  Tree B: along u at v0, then v.
    let mut along_v0 = vec![0.0; n];
    let mut along_u0 = vec![0.0; n];
    for j in 1..n {
        along_v0[j] = along_v0[j - 1] + edge([us[0], vs[j - 1]], [us[0], vs[j]])?;
    }
    for i in 1..n {
        along_u0[i] = along_u0[i - 1] + edge([us[i - 1], vs[0]], [us[i], vs[0]])?;
    }
    let mut tree_a = vec![vec![0.0; n]; n];
    let mut tree_b = vec![vec![0.0; n]; n];
    for j in 0..n {
        tree_a[0][j] = along_v0[j];
        for i in 1..n {
            tree_a[i][j] = tree_a[i - 1][j] + edge([us[i - 1], vs[j]], [us[i], vs[j]])?;
        }
    }
    for i in 0..n {
        tree_b[i][0] = along_u0[i];
        for j in 1..n {
            tree_b[i][j] = tree_b[i][j - 1] + edge([us[i], vs[j - 1]], [us[i], vs[j]])?;
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max(wrap_angle(tree_a[i][j] - tree_b[i][j]).abs());
        }
    }
    Ok(worst)
}

/// `int int normal_curvature du dv` over a rectangle by Gauss-Legendre
/// quadrature of order `order` per side.
pub fn curvature_integral(s: &FiberSurface, u: [f64; 2], v: [f64; 2], order: usize, fd_step: f64) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(order);
    let (hu, hv) = (0.5 * (u[1] - u[0]), 0.5 * (v[1] - v[0]));
    let (cu, cv) = (0.5 * (u[0] + u[1]), 0.5 * (v[0] + v[1]));
    let mut acc = 0.0;
    for (xi, wi) in nodes.iter().zip(&weights) {
        for (xj, wj) in nodes.iter().zip(&weights) {
            acc += wi * wj * normal_curvature(s, &[cu + hu * xi, cv + hv * xj], fd_step)?;
        }
    }
    Ok(acc * hu * hv)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Settings for [`survey`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyConfig {
    pub surfaces: usize,
    pub points_per_surface: usize,
    /// Nodes per side of the path-independence grid.
    pub defect_grid: usize,
    pub steps_per_edge: usize,
    pub loop_steps: usize,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            surfaces: 5,
            points_per_surface: 100,
            defect_grid: 32,
            steps_per_edge: 8,
            loop_steps: 400,
            fd_step: crate::curvature::DEFAULT_FD_STEP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub surface: usize,
    pub point: Point,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    pub surface: usize,
    pub label: String,
    pub rectangle: [SurfacePoint; 2],
    pub holonomy: HolonomyResult,
    /// Enclosed normal curvature by quadrature.
    pub enclosed_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub base: Point,
    pub varying: [usize; 2],
    pub max_abs_curvature: f64,
    pub argmax: Point,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalBundleSurvey {
    pub metric: String,
    pub surfaces: Vec<SurfaceSummary>,
    pub max_abs_curvature: f64,
    pub argmax_curvature: Point,
    pub max_nested_holonomy: f64,
    pub max_defect: f64,
    pub loops: Vec<LoopSummary>,
    #[serde(skip)]
    pub samples: Vec<CurvatureSample>,
}

/// Surfaces a metric is surveyed on: `(r, psi)` spheres for
/// cohomogeneity-one charts, the first coordinate pair otherwise.
pub fn survey_surfaces(cf: &CoframeField, n: usize) -> Result<Vec<FiberSurface>> {
    let chart = cf.chart();
    let varying = if chart.names == ["r", "theta", "phi", "psi"] { [0, 3] } else { [0, 1] };
    let fixed: Vec<usize> = (0..4).filter(|mu| !varying.contains(mu)).collect();
    let (lo, hi) = (chart.interior_lo(), chart.interior_hi());
    // The first fixed coordinate visits both ends of its range.
    const FIRST: [f64; 5] = [0.01, 0.3, 0.5, 0.7, 0.99];
    const SECOND: [f64; 5] = [0.1, 0.2, 0.35, 0.6, 0.9];
    (0..n)
        .map(|k| {
            let mut base = [0.0; 4];
            for (&mu, fr) in fixed.iter().zip([FIRST[k % 5], SECOND[k % 5]]) {
                base[mu] = lo[mu] + fr * (hi[mu] - lo[mu]);
            }
            FiberSurface::new(cf.clone(), base, varying)
        })
        .collect()
}

/// Three nested rectangles about a point away from every symmetry of the
/// surface coordinates, and the reference rectangle spanning the middle
/// half of the first nominal range and the first half of the second.
pub fn survey_loops(s: &FiberSurface) -> Vec<(String, [SurfacePoint; 2])> {
    let (lo, hi) = s.bounds();
    let w = [hi[0] - lo[0], hi[1] - lo[1]];
    let c = [lo[0] + 0.4 * w[0], lo[1] + 0.4 * w[1]];
    let mut loops: Vec<(String, [SurfacePoint; 2])> = [0.3, 0.2, 0.1]
        .iter()
        .enumerate()
        .map(|(i, f)| {
            (
                format!("nested-{}", i + 1),
                [[c[0] - f * w[0], c[0] + f * w[0]], [c[1] - f * w[1], c[1] + f * w[1]]],
            )
        })
        .collect();
    let chart = s.metric().chart();
    let [a, b] = s.varying();
    let (u0, u1) = (chart.lo[a], chart.hi[a]);
    let (v0, v1) = (chart.lo[b], chart.hi[b]);
    loops.push((
        "reference".into(),
        [[u0 + 0.25 * (u1 - u0), u0 + 0.75 * (u1 - u0)], [v0, v0 + 0.5 * (v1 - v0)]],
    ));
    loops
}

/// Normal curvature at random points, nested-loop holonomy and the
/// path-independence defect on a family of surfaces.
pub fn survey(cf: &CoframeField, cfg: &SurveyConfig) -> Result<NormalBundleSurvey> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;

    if cfg.surfaces == 0 {
        return Err(Error::Config("survey needs at least one surface".into()));
    }
    let surfaces = survey_surfaces(cf, cfg.surfaces)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::new();
    for (k, s) in surfaces.iter().enumerate() {
        let (lo, hi) = s.bounds();
        for _ in 0..cfg.points_per_surface {
            points.push((k, [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])]));
        }
    }
    let samples = points
        .par_iter()
        .map(|(k, p)| {
            let s = &surfaces[*k];
            Ok(CurvatureSample {
                surface: *k,
                point: s.lift(p),
                value: normal_curvature(s, p, cfg.fd_step)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_surface = surfaces
        .par_iter()
        .enumerate()
        .map(|(k, s)| -> Result<(SurfaceSummary, Vec<LoopSummary>)> {
            let mine = samples.iter().filter(|c| c.surface == k);
            let worst = mine.fold(None::<&CurvatureSample>, |acc, c| match acc {
                Some(a) if a.value.abs() >= c.value.abs() => Some(a),
                _ => Some(c),
            });
            let mut loops = Vec::new();
            for (label, [u, v]) in survey_loops(s) {
                loops.push(LoopSummary {
                    surface: k,
                    holonomy: holonomy_loop(s, &Loop::rectangle(u, v), cfg.loop_steps)?,
                    enclosed_curvature: curvature_integral(s, u, v, 12, cfg.fd_step)?,
                    label,
                    rectangle: [u, v],
                });
            }
            let summary = SurfaceSummary {
                base: s.base,
                varying: s.varying,
                max_abs_curvature: worst.map_or(0.0, |c| c.value.abs()),
                argmax: worst.map_or(s.base, |c| c.point),
                defect: parallel_section_defect(s, cfg.defect_grid, cfg.steps_per_edge)?,
            };
            Ok((summary, loops))
        })
        .collect::<Result<Vec<_>>>()?;

    let (summaries, loops): (Vec<_>, Vec<_>) = per_surface.into_iter().unzip();
    let loops: Vec<LoopSummary> = loops.into_iter().flatten().collect();
    let worst = summaries
        .iter()
        .fold(&summaries[0], |a, s| if s.max_abs_curvature > a.max_abs_curvature { s } else { a });
    Ok(NormalBundleSurvey {
        metric: cf.name().into(),
        max_abs_curvature: worst.max_abs_curvature,
        argmax_curvature: worst.argmax,
        max_nested_holonomy: loops
            .iter()
            .filter(|l| l.label.starts_with("nested"))
            .map(|l| l.holonomy.angle.abs())
            .fold(0.0, f64::max),
        max_defect: summaries.iter().map(|s| s.defect).fold(0.0, f64::max),
        surfaces: summaries,
        loops,
        samples,
    })
}
