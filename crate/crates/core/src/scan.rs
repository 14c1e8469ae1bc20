//! Grid-plus-refinement scans over chart points and complex-line directions.
//!
//! Directions are anti-self-dual forms of norm `1/sqrt(2)`, written as unit
//! vectors in the `s-` basis. For a fixed point and `phi` the bisectional
//! pairing is affine in `psi`, so its minimum over the sphere is closed form:
//! `psi* = -(1/sqrt(2)) unit(P- R(omega/2 + phi))`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coframe::{CoframeField, Point, DEFAULT_MARGIN};
use crate::conformal::{conformal_factor, conformal_kahler, estimates_from};
use crate::curvature::{curvature_at, einstein_residual, sorted_eigen, PointCurvature, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::forms::TwoForm;
use crate::hermitian::{complex_structure_at, ComplexLineForm, ComplexStructureData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Samples per chart coordinate.
    pub grid: usize,
    /// Spherical-Fibonacci directions on the `phi` sphere.
    pub sphere_points: usize,
    /// Coordinate-descent sweeps after the grid pass.
    pub refine_iters: usize,
    /// Finite-difference step, relative to each coordinate range.
    pub fd_step: f64,
    /// Distance kept from singular chart boundaries.
    pub margin: f64,
    /// Fixes the rotation of the direction sample.
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            grid: 12,
            sphere_points: 100,
            refine_iters: 40,
            fd_step: DEFAULT_FD_STEP,
            margin: DEFAULT_MARGIN,
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::Config(format!("grid must be >= 2, got {}", self.grid)));
        }
        if self.sphere_points < 2 {
            return Err(Error::Config(format!(
                "sphere_points must be >= 2, got {}",
                self.sphere_points
            )));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.1) {
            return Err(Error::Config(format!("fd_step must lie in (0, 0.1), got {}", self.fd_step)));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::Config(format!("margin must be >= 0, got {}", self.margin)));
        }
        Ok(())
    }

    /// The same scan with every resolution doubled.
    pub fn doubled(&self) -> Self {
        Self {
            grid: 2 * self.grid,
            sphere_points: 2 * self.sphere_points,
            ..self.clone()
        }
    }
}

/// Where an extremum was found. Directions are `s-` coordinates of norm
/// `1/sqrt(2)`; `x` and `y` are unit frame vectors spanning the lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Location {
    pub point: Point,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 4]>,
}

impl Location {
    fn at(point: Point) -> Self {
        Self {
            point,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CellStats {
    pub count: usize,
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
    pub negative: usize,
}

impl CellStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Self {
            count: n,
            mean,
            stdev: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            negative: values.iter().filter(|v| **v < 0.0).count(),
        }
    }
}

/// Per-grid-point values, in grid order (last coordinate fastest).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldGrid {
    pub coordinates: [&'static str; 4],
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub functional: String,
    pub metric: String,
    pub min: f64,
    pub max: f64,
    pub argmin: Location,
    pub argmax: Location,
    /// Noise floor at the argmin: the larger of the Richardson error estimate
    /// and the change under doubling `fd_step`.
    pub numerical_error: f64,
    /// Grid minimum minus refined minimum.
    pub search_delta: f64,
    /// Statistics of the per-point values.
    pub cells: CellStats,
    /// Best value after each refinement sweep.
    pub refine_history: Vec<f64>,
    pub elapsed_ms: u64,
    pub config: ScanConfig,
    /// Functional-specific scalars.
    pub extra: serde_json::Map<String, serde_json::Value>,
    #[serde(skip)]
    pub field: FieldGrid,
}

/// `n` points of a spherical Fibonacci lattice on the unit sphere, rotated
/// by a seed-determined rotation.
pub fn fibonacci_sphere(n: usize, seed: u64) -> Vec<Vector3<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.gen_range(0.0..2.0 * PI));
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            rot * Vector3::new(rho * t.cos(), rho * t.sin(), z)
        })
        .collect()
}

fn line(v: &Vector3<f64>) -> ComplexLineForm {
    ComplexLineForm::from_asd_direction(v).expect("unit direction")
}

/// Minimum and maximum over `psi` of `<R(omega/2 + phi), omega/2 + psi>`,
/// with the optimal `psi` as `s-` coordinates of norm `1/sqrt(2)`.
pub fn bisectional_extremes_over_psi(
    pc: &PointCurvature,
    cs: &ComplexStructureData,
    phi: &ComplexLineForm,
) -> ((f64, Vector3<f64>), (f64, Vector3<f64>)) {
    let half = cs.omega.scale(0.5);
    let ra = pc.r.apply(&(half + phi.phi()));
    let base = ra.dot(&half);
    let m = ra.asd_coords();
    let n = m.norm();
    let dir = if n > 0.0 { m / n } else { Vector3::x() };
    let spread = n * FRAC_1_SQRT_2;
    (
        (base - spread, -dir * FRAC_1_SQRT_2),
        (base + spread, dir * FRAC_1_SQRT_2),
    )
}

/// Which complex-line functional a scan extremises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineFunctional {
    /// `H(X, Y)` over all pairs of lines.
    Bisectional,
    /// `H(X, Y)` with `Y` orthogonal to `X` and `JX` (`psi = -phi`).
    OrthogonalBisectional,
}

impl LineFunctional {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bisectional => "bisectional",
            Self::OrthogonalBisectional => "orthogonal_bisectional",
        }
    }

    /// `(min, psi at min), (max, psi at max)` for a fixed `phi`.
    fn extremes(
        &self,
        pc: &PointCurvature,
        cs: &ComplexStructureData,
        phi: &Vector3<f64>,
    ) -> ((f64, Vector3<f64>), (f64, Vector3<f64>)) {
        let l = line(phi);
        match self {
            Self::Bisectional => bisectional_extremes_over_psi(pc, cs, &l),
            Self::OrthogonalBisectional => {
                let psi = -l.asd_coords();
                let v = crate::hermitian::orthogonal_bisectional(pc, cs, &l);
                ((v, psi), (v, psi))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    point: Point,
    phi: Vector3<f64>,
    psi: Vector3<f64>,
}

struct PointScan {
    min: Candidate,
    max: Candidate,
}

fn scan_point(
    cf: &CoframeField,
    x: &Point,
    fd_step: f64,
    functional: LineFunctional,
    dirs: &[Vector3<f64>],
) -> Result<PointScan> {
    let (pc, cs) = complex_structure_at(cf, x, fd_step)?;
    let mut best_min: Option<Candidate> = None;
    let mut best_max: Option<Candidate> = None;
    for d in dirs {
        let ((lo, psi_lo), (hi, psi_hi)) = functional.extremes(&pc, &cs, d);
        if best_min.is_none_or(|b| lo < b.value) {
            best_min = Some(Candidate {
                value: lo,
                point: *x,
                phi: *d,
                psi: psi_lo,
            });
        }
        if best_max.is_none_or(|b| hi > b.value) {
            best_max = Some(Candidate {
                value: hi,
                point: *x,
                phi: *d,
                psi: psi_hi,
            });
        }
    }
    Ok(PointScan {
        min: best_min.expect("at least one direction"),
        max: best_max.expect("at least one direction"),
    })
}

/// Signed objective for descent: `sign * extremum over psi`.
fn objective(
    cf: &CoframeField,
    x: &Point,
    phi: &Vector3<f64>,
    fd_step: f64,
    functional: LineFunctional,
    sign: f64,
) -> Option<(f64, Vector3<f64>)> {
    let (pc, cs) = complex_structure_at(cf, x, fd_step).ok()?;
    let ((lo, psi_lo), (hi, psi_hi)) = functional.extremes(&pc, &cs, phi);
    Some(if sign > 0.0 { (lo, psi_lo) } else { (-hi, psi_hi) })
}

fn tangent_basis(v: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (seed - v * v.dot(&seed)).normalize();
    (t1, v.cross(&t1))
}

/// Coordinate descent from `start`, minimising `sign * value`. Each sweep
/// tries `+-step` on every chart coordinate and on two tangent directions of
/// `phi`; steps halve after a sweep without improvement. Returns the final
/// candidate and the best signed value after each sweep.
fn refine(
    cf: &CoframeField,
    start: Candidate,
    cfg: &ScanConfig,
    functional: LineFunctional,
    sign: f64,
) -> (Candidate, Vec<f64>) {
    let chart = cf.chart();
    let n = cfg.grid as f64;
    let mut steps: [f64; 4] = std::array::from_fn(|mu| {
        let span = chart.interior_hi()[mu] - chart.interior_lo()[mu];
        if chart.periodic[mu] {
            0.5 * span / n
        } else {
            0.5 * span / (n - 1.0)
        }
    });
    let mut angle = 0.5 * (4.0 * PI / cfg.sphere_points as f64).sqrt();
    let mut best = start;
    let mut best_signed = sign * start.value;
    let mut history = Vec::with_capacity(cfg.refine_iters);
    let phi_dim = match functional {
        LineFunctional::Bisectional | LineFunctional::OrthogonalBisectional => 2,
    };
    for _ in 0..cfg.refine_iters {
        let mut improved = false;
        for k in 0..4 + phi_dim {
            for dir in [1.0, -1.0] {
                let (mut x, mut phi) = (best.point, best.phi);
                if k < 4 {
                    x[k] += dir * steps[k];
                    x = chart.clamp_interior(&x);
                } else {
                    let (t1, t2) = tangent_basis(&phi);
                    let t = if k == 4 { t1 } else { t2 };
                    phi = (phi + t * (dir * angle.tan())).normalize();
                }
                if let Some((v, psi)) = objective(cf, &x, &phi, cfg.fd_step, functional, sign) {
                    if v < best_signed {
                        best_signed = v;
                        best = Candidate {
                            value: sign * v,
                            point: x,
                            phi,
                            psi,
                        };
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            angle *= 0.5;
        }
        history.push(best.value);
    }
    (best, history)
}

fn location(cf: &CoframeField, c: &Candidate, fd_step: f64) -> Location {
    let mut loc = Location::at(c.point);
    loc.phi = Some([c.phi.x, c.phi.y, c.phi.z].map(|v| v * FRAC_1_SQRT_2));
    loc.psi = Some([c.psi.x, c.psi.y, c.psi.z]);
    if let Ok((_, cs)) = complex_structure_at(cf, &c.point, fd_step) {
        let x = line(&c.phi).unit_vector(&cs);
        loc.x = Some([x[0], x[1], x[2], x[3]]);
        if let Ok(l) = ComplexLineForm::from_asd_direction(&c.psi) {
            let y = l.unit_vector(&cs);
            loc.y = Some([y[0], y[1], y[2], y[3]]);
        }
    }
    loc
}

/// Evaluate `f` on every grid point in parallel, keeping grid order and
/// returning the first error in that order.
fn par_grid<T: Send>(points: &[Point], f: impl Fn(&Point) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    points.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

/// Index of the smallest key, ties resolved to the lowest index.
fn argmin_by(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn prepare(cf: &CoframeField, cfg: &ScanConfig) -> Result<CoframeField> {
    cfg.validate()?;
    cf.clone().with_margin(cfg.margin)
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// Refine from the best few grid cells and keep the overall best.
fn refine_best(
    cf: &CoframeField,
    cells: &[Candidate],
    cfg: &ScanConfig,
    functional: LineFunctional,
    sign: f64,
) -> (Candidate, Vec<f64>) {
    const STARTS: usize = 4;
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| (sign * cells[a].value).total_cmp(&(sign * cells[b].value)).then(a.cmp(&b)));
    let runs: Vec<(Candidate, Vec<f64>)> = order
        .iter()
        .take(STARTS)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| refine(cf, cells[i], cfg, functional, sign))
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if sign * r.0.value < sign * runs[best].0.value {
            best = i;
        }
    }
    runs.into_iter().nth(best).expect("at least one start")
}

/// Extremise a complex-line functional over the chart grid and the direction
/// sphere, then refine.
pub fn scan_lines(cf: &CoframeField, cfg: &ScanConfig, functional: LineFunctional) -> Result<ScanReport> {
    let start = Instant::now();
    let cf = prepare(cf, cfg)?;
    let points = cf.chart().grid(cfg.grid);
    let dirs = fibonacci_sphere(cfg.sphere_points, cfg.seed);
    let scans = par_grid(&points, |x| scan_point(&cf, x, cfg.fd_step, functional, &dirs))?;

    let mins: Vec<Candidate> = scans.iter().map(|s| s.min).collect();
    let maxs: Vec<Candidate> = scans.iter().map(|s| s.max).collect();
    let min_values: Vec<f64> = mins.iter().map(|c| c.value).collect();
    let neg_max: Vec<f64> = maxs.iter().map(|c| -c.value).collect();
    let grid_min = min_values[argmin_by(&min_values)];

    let (best_min, history) = refine_best(&cf, &mins, cfg, functional, 1.0);
    let (best_max, _) = refine_best(&cf, &maxs, cfg, functional, -1.0);
    let best_max = if -best_max.value < neg_max[argmin_by(&neg_max)] {
        best_max
    } else {
        maxs[argmin_by(&neg_max)]
    };

    let numerical_error = noise_floor(&cf, &best_min, cfg, functional)?;
    let mut extra = serde_json::Map::new();
    extra.insert("grid_min".into(), grid_min.into());
    extra.insert("grid_points".into(), points.len().into());
    extra.insert("directions".into(), dirs.len().into());
    Ok(ScanReport {
        functional: functional.name().into(),
        metric: cf.name().into(),
        min: best_min.value,
        max: best_max.value,
        argmin: location(&cf, &best_min, cfg.fd_step),
        argmax: location(&cf, &best_max, cfg.fd_step),
        numerical_error,
        search_delta: grid_min - best_min.value,
        cells: CellStats::of(&min_values),
        refine_history: history,
        elapsed_ms: elapsed_ms(start),
        config: cfg.clone(),
        extra,
        field: FieldGrid {
            coordinates: cf.chart().names,
            points,
            values: min_values,
        },
    })
}

fn noise_floor(cf: &CoframeField, c: &Candidate, cfg: &ScanConfig, functional: LineFunctional) -> Result<f64> {
    let eval = |h: f64| -> Result<(f64, f64)> {
        let (pc, cs) = complex_structure_at(cf, &c.point, h)?;
        let l = line(&c.phi);
        let psi = ComplexLineForm::from_asd_direction(&c.psi)?;
        let v = match functional {
            LineFunctional::Bisectional => crate::hermitian::bisectional(&pc, &cs, &l, &psi),
            LineFunctional::OrthogonalBisectional => crate::hermitian::orthogonal_bisectional(&pc, &cs, &l),
        };
        Ok((v, pc.fd_error))
    };
    let (v1, e1) = eval(cfg.fd_step)?;
    let (v2, _) = eval(2.0 * cfg.fd_step)?;
    Ok((v1 - v2).abs().max(e1))
}

pub fn scan_bisectional(cf: &CoframeField, cfg: &ScanConfig) -> Result<ScanReport> {
    scan_lines(cf, cfg, LineFunctional::Bisectional)
}

pub fn scan_orthogonal_bisectional(cf: &CoframeField, cfg: &ScanConfig) -> Result<ScanReport> {
    scan_lines(cf, cfg, LineFunctional::OrthogonalBisectional)
}

/// Maximum Einstein residual over the grid, with scalar-curvature statistics
/// in `extra` (`s_mean`, `s_stdev`, `s_rel_stdev`).
pub fn scan_einstein(cf: &CoframeField, cfg: &ScanConfig) -> Result<ScanReport> {
    let start = Instant::now();
    let cf = prepare(cf, cfg)?;
    let points = cf.chart().grid(cfg.grid);
    let evals = par_grid(&points, |x| {
        let pc = curvature_at(&cf, x, cfg.fd_step)?;
        Ok((einstein_residual(&pc), pc.s, pc.fd_error))
    })?;
    let residuals: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let scalars: Vec<f64> = evals.iter().map(|e| e.1).collect();
    let neg: Vec<f64> = residuals.iter().map(|r| -r).collect();
    let (imin, imax) = (argmin_by(&residuals), argmin_by(&neg));
    let s = CellStats::of(&scalars);
    let rel = if s.mean != 0.0 { s.stdev / s.mean.abs() } else { 0.0 };
    let mut extra = serde_json::Map::new();
    extra.insert("s_mean".into(), s.mean.into());
    extra.insert("s_stdev".into(), s.stdev.into());
    extra.insert("s_rel_stdev".into(), rel.into());
    extra.insert("grid_points".into(), points.len().into());
    Ok(ScanReport {
        functional: "einstein_residual".into(),
        metric: cf.name().into(),
        min: residuals[imin],
        max: residuals[imax],
        argmin: Location::at(points[imin]),
        argmax: Location::at(points[imax]),
        numerical_error: evals.iter().map(|e| e.2).fold(0.0, f64::max),
        search_delta: 0.0,
        cells: CellStats::of(&residuals),
        refine_history: Vec::new(),
        elapsed_ms: elapsed_ms(start),
        config: cfg.clone(),
        extra,
        field: FieldGrid {
            coordinates: cf.chart().names,
            points,
            values: residuals,
        },
    })
}

/// Deviation of a spectrum from the pattern `(-l/2, -l/2, l)`, relative to
/// `l`. Infinite when `l <= 0`.
pub fn kahler_pattern_residual(ascending: &Vector3<f64>) -> f64 {
    let l = ascending[2];
    if !(l > 0.0) {
        return f64::INFINITY;
    }
    ((ascending[0] + 0.5 * l).abs().max((ascending[1] + 0.5 * l).abs())) / l
}

/// `W+` and `W-` spectra over the grid. The scanned value is the relative
/// deviation of the `W+` spectrum from `(-l/2, -l/2, l)`; `extra` holds the
/// smallest top eigenvalue of `W+` and the largest `max(W-) - max(W+)`.
pub fn scan_weyl_spectrum(cf: &CoframeField, cfg: &ScanConfig) -> Result<(ScanReport, Vec<WeylSample>)> {
    let start = Instant::now();
    let cf = prepare(cf, cfg)?;
    let points = cf.chart().grid(cfg.grid);
    let samples = par_grid(&points, |x| {
        let pc = curvature_at(&cf, x, cfg.fd_step)?;
        Ok(WeylSample {
            point: *x,
            wplus: sorted_eigen(&pc.wplus).0.into(),
            wminus: sorted_eigen(&pc.wminus).0.into(),
        })
    })?;
    let pattern: Vec<f64> = samples
        .iter()
        .map(|s| kahler_pattern_residual(&Vector3::from(s.wplus)))
        .collect();
    let neg: Vec<f64> = pattern.iter().map(|v| -v).collect();
    let (imin, imax) = (argmin_by(&pattern), argmin_by(&neg));
    let top_plus: Vec<f64> = samples.iter().map(|s| s.wplus[2]).collect();
    let gap: Vec<f64> = samples.iter().map(|s| s.wminus[2] - s.wplus[2]).collect();
    let mut extra = serde_json::Map::new();
    extra.insert("min_top_wplus".into(), CellStats::of(&top_plus).min.into());
    extra.insert("max_wminus_minus_wplus".into(), CellStats::of(&gap).max.into());
    extra.insert("min_wminus_minus_wplus".into(), CellStats::of(&gap).min.into());
    let report = ScanReport {
        functional: "wplus_pattern_residual".into(),
        metric: cf.name().into(),
        min: pattern[imin],
        max: pattern[imax],
        argmin: Location::at(points[imin]),
        argmax: Location::at(points[imax]),
        numerical_error: 0.0,
        search_delta: 0.0,
        cells: CellStats::of(&pattern),
        refine_history: Vec::new(),
        elapsed_ms: elapsed_ms(start),
        config: cfg.clone(),
        extra,
        field: FieldGrid {
            coordinates: cf.chart().names,
            points,
            values: pattern,
        },
    };
    Ok((report, samples))
}

/// Ascending `W+` and `W-` eigenvalues at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylSample {
    pub point: Point,
    pub wplus: [f64; 3],
    pub wminus: [f64; 3],
}

/// Both estimate quantities over the grid, plus the conformal consistency
/// residual on a coarse sub-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub metric: String,
    /// `max lambda(W~-) - s~/6` over the grid.
    pub first_max: f64,
    pub first_argmax: Point,
    /// `max <W~- phi, phi> - s~/12` over the grid and `|phi| = 1/sqrt(2)`.
    pub second_max: f64,
    pub second_argmax: Point,
    /// Where the second quantity is largest, the maximising `phi` in `s-`
    /// coordinates.
    pub second_argmax_phi: [f64; 3],
    pub s_tilde_min: f64,
    pub s_tilde_max: f64,
    pub consistency_max: f64,
    pub consistency_argmax: Point,
    pub consistency_grid: usize,
    pub consistency_margin: f64,
    pub elapsed_ms: u64,
    pub config: ScanConfig,
    #[serde(skip)]
    pub first_field: FieldGrid,
    #[serde(skip)]
    pub second_field: FieldGrid,
}

/// Samples per coordinate for the conformal consistency check, which needs
/// curvature of curvature and is far costlier per point.
pub const CONSISTENCY_GRID: usize = 4;

/// Smallest margin for the consistency sub-grid. The residual differentiates
/// a finite-difference quantity twice more, so near a polar chart origin
/// rounding noise grows like `1/r^2` (1e-2 on Fubini-Study at r = 0.05,
/// below 3e-5 from r = 0.15).
pub const CONSISTENCY_MARGIN: f64 = 0.15;

pub fn check_estimates(cf: &CoframeField, cfg: &ScanConfig) -> Result<EstimateReport> {
    let start = Instant::now();
    let cf = prepare(cf, cfg)?;
    let ck = conformal_kahler(&cf, cfg.fd_step)?;
    let points = cf.chart().grid(cfg.grid);
    let evals = par_grid(&points, |x| {
        let pc = curvature_at(&cf, x, cfg.fd_step)?;
        let u = conformal_factor(&pc, x)?;
        let (_, vecs) = sorted_eigen(&pc.wminus);
        Ok((estimates_from(&pc, u), vecs.column(2).into_owned()))
    })?;
    let first: Vec<f64> = evals.iter().map(|e| e.0.first).collect();
    let second: Vec<f64> = evals.iter().map(|e| e.0.second).collect();
    let s_tilde: Vec<f64> = evals.iter().map(|e| e.0.s_tilde).collect();
    let i1 = argmin_by(&first.iter().map(|v| -v).collect::<Vec<_>>());
    let i2 = argmin_by(&second.iter().map(|v| -v).collect::<Vec<_>>());
    let phi = evals[i2].1 * FRAC_1_SQRT_2;

    let n = CONSISTENCY_GRID.min(cfg.grid);
    let consistency_margin = cfg.margin.max(CONSISTENCY_MARGIN);
    let coarse = cf.chart().with_margin(consistency_margin)?.grid(n);
    let consistency = par_grid(&coarse, |x| ck.consistency_residual(x))?;
    let ic = argmin_by(&consistency.iter().map(|v| -v).collect::<Vec<_>>());
    let stats = CellStats::of(&s_tilde);
    Ok(EstimateReport {
        metric: cf.name().into(),
        first_max: first[i1],
        first_argmax: points[i1],
        second_max: second[i2],
        second_argmax: points[i2],
        second_argmax_phi: [phi.x, phi.y, phi.z],
        s_tilde_min: stats.min,
        s_tilde_max: stats.max,
        consistency_max: consistency[ic],
        consistency_argmax: coarse[ic],
        consistency_grid: n,
        consistency_margin,
        elapsed_ms: elapsed_ms(start),
        config: cfg.clone(),
        first_field: FieldGrid {
            coordinates: cf.chart().names,
            points: points.clone(),
            values: first,
        },
        second_field: FieldGrid {
            coordinates: cf.chart().names,
            points,
            values: second,
        },
    })
}

/// `<R(omega/2 + phi), omega/2 + psi>` for `s-` coordinates of any length;
/// both are normalised to `1/sqrt(2)` first.
pub fn bisectional_at(
    pc: &PointCurvature,
    cs: &ComplexStructureData,
    phi: &Vector3<f64>,
    psi: &Vector3<f64>,
) -> f64 {
    crate::hermitian::bisectional(pc, cs, &line(phi), &line(psi))
}

/// Bisectional curvature of the fixed pair of directions `phi`, `psi` at
/// every grid point. With `phi = psi` this is the holomorphic sectional
/// curvature of the line.
pub fn line_field(cf: &CoframeField, cfg: &ScanConfig, phi: &Vector3<f64>, psi: &Vector3<f64>) -> Result<FieldGrid> {
    let cf = prepare(cf, cfg)?;
    let points = cf.chart().grid(cfg.grid);
    let values = par_grid(&points, |x| {
        let (pc, cs) = complex_structure_at(&cf, x, cfg.fd_step)?;
        Ok(bisectional_at(&pc, &cs, phi, psi))
    })?;
    Ok(FieldGrid {
        coordinates: cf.chart().names,
        points,
        values,
    })
}

/// The `s-` form of a direction, for callers holding raw coordinates.
pub fn direction_form(v: &Vector3<f64>) -> TwoForm {
    line(v).phi()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn small() -> ScanConfig {
        ScanConfig {
            grid: 3,
            sphere_points: 40,
            refine_iters: 10,
            ..ScanConfig::default()
        }
    }

    #[test]
    fn fibonacci_points_are_unit_and_spread() {
        let pts = fibonacci_sphere(200, 3);
        assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        let centroid: Vector3<f64> = pts.iter().sum::<Vector3<f64>>() / 200.0;
        assert!(centroid.norm() < 1e-2);
        let mut worst: f64 = 0.0;
        for probe in fibonacci_sphere(50, 99) {
            let nearest = pts.iter().map(|p| (p - probe).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
        assert!(worst < 0.25, "{worst}");
        assert_eq!(fibonacci_sphere(10, 1), fibonacci_sphere(10, 1));
    }

    #[test]
    fn closed_form_psi_matches_brute_force() {
        let page = catalog::page_metric(catalog::PageParams::einstein()).unwrap();
        let (pc, cs) = complex_structure_at(&page, &[1.9, 1.1, 0.4, 2.0], DEFAULT_FD_STEP).unwrap();
        let dense = fibonacci_sphere(4000, 5);
        for phi in fibonacci_sphere(6, 8) {
            let ((lo, psi_lo), (hi, _)) = bisectional_extremes_over_psi(&pc, &cs, &line(&phi));
            assert!((bisectional_at(&pc, &cs, &phi, &psi_lo) - lo).abs() < 1e-12);
            let brute: Vec<f64> = dense.iter().map(|psi| bisectional_at(&pc, &cs, &phi, psi)).collect();
            let bmin = brute.iter().copied().fold(f64::INFINITY, f64::min);
            let bmax = brute.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo <= bmin + 1e-12 && bmin - lo < 1e-2);
            assert!(hi >= bmax - 1e-12 && hi - bmax < 1e-2);
        }
    }

    #[test]
    fn closed_form_scan_matches_full_pair_grid() {
        let page = catalog::page_metric(catalog::PageParams::einstein()).unwrap();
        let x = [2.2, 0.9, 1.0, 3.0];
        let (pc, cs) = complex_structure_at(&page, &x, DEFAULT_FD_STEP).unwrap();
        let dirs = fibonacci_sphere(300, 1);
        let fast = dirs
            .iter()
            .map(|phi| bisectional_extremes_over_psi(&pc, &cs, &line(phi)).0 .0)
            .fold(f64::INFINITY, f64::min);
        let mut full = f64::INFINITY;
        for phi in &dirs {
            for psi in &dirs {
                full = full.min(bisectional_at(&pc, &cs, phi, psi));
            }
        }
        assert!(fast <= full + 1e-12);
        assert!(full - fast < 2e-2, "{fast} {full}");
    }

    #[test]
    fn refinement_is_monotone_and_deterministic() {
        let page = catalog::page_metric(catalog::PageParams::einstein()).unwrap();
        let a = scan_bisectional(&page, &small()).unwrap();
        assert!(a.refine_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.min <= a.extra["grid_min"].as_f64().unwrap());
        let b = scan_bisectional(&page, &small()).unwrap();
        assert_eq!(a.min.to_bits(), b.min.to_bits());
        assert_eq!(a.argmin, b.argmin);
        assert_eq!(a.field, b.field);
    }

    #[test]
    fn flat_torus_orthogonal_bisectional_is_zero() {
        let r = scan_orthogonal_bisectional(&catalog::flat_t4(), &small()).unwrap();
        assert_eq!(r.min, 0.0);
        assert_eq!(r.max, 0.0);
        let e = scan_einstein(&catalog::flat_t4(), &small()).unwrap();
        assert!(e.max < 1e-10);
    }

    #[test]
    fn fubini_study_orthogonal_value_is_constant() {
        let r = scan_orthogonal_bisectional(&catalog::fubini_study(), &small()).unwrap();
        assert!((r.min - 2.0).abs() < 1e-6 && (r.max - 2.0).abs() < 1e-6);
        let b = scan_bisectional(&catalog::fubini_study(), &small()).unwrap();
        assert!(b.min > 0.0);
        assert!((b.min - 2.0).abs() < 1e-6 && (b.max - 4.0).abs() < 1e-6);
    }

    #[test]
    fn product_of_equal_spheres_has_zero_minimum() {
        let cfg = ScanConfig {
            refine_iters: 40,
            ..small()
        };
        let r = scan_bisectional(&catalog::round_s2xs2(1.0, 1.0).unwrap(), &cfg).unwrap();
        assert!(r.min.abs() < 1e-6, "{}", r.min);
        // Attained on a line mixing the two factors.
        let x = r.argmin.x.unwrap();
        let y = r.argmin.y.unwrap();
        let first = |v: [f64; 4]| v[0] * v[0] + v[1] * v[1];
        assert!((first(x) - first(y)).abs() > 0.5, "{x:?} {y:?}");
    }

    #[test]
    fn einstein_scan_detects_off_root_parameter() {
        let cfg = ScanConfig {
            grid: 4,
            ..ScanConfig::default()
        };
        let root = scan_einstein(&catalog::page_metric(catalog::PageParams::einstein()).unwrap(), &cfg).unwrap();
        assert!(root.max < 1e-5);
        assert!(root.extra["s_rel_stdev"].as_f64().unwrap() < 1e-6);
        let off = scan_einstein(&catalog::page_metric(catalog::PageParams::new(0.5).unwrap()).unwrap(), &cfg).unwrap();
        assert!(off.max > 1e-2);
    }

    #[test]
    fn estimates_on_fubini_study_and_page() {
        let cfg = ScanConfig {
            grid: 3,
            ..ScanConfig::default()
        };
        let fs = check_estimates(&catalog::fubini_study(), &cfg).unwrap();
        assert!(fs.first_max < 0.0 && fs.second_max < 0.0);
        let page = check_estimates(&catalog::page_metric(catalog::PageParams::einstein()).unwrap(), &cfg).unwrap();
        assert!(page.second_max >= 0.0);
        assert!(page.consistency_max < 1e-4, "{}", page.consistency_max);
        assert!(page.s_tilde_max - page.s_tilde_min > 1e-2);
    }

    #[test]
    fn config_validation() {
        let mut c = ScanConfig::default();
        assert!(c.validate().is_ok());
        c.grid = 1;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = ScanConfig {
            fd_step: 0.0,
            ..ScanConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn weyl_scan_on_page_fits_kahler_pattern() {
        let cfg = ScanConfig {
            grid: 3,
            ..ScanConfig::default()
        };
        let (r, samples) = scan_weyl_spectrum(&catalog::page_metric(catalog::PageParams::einstein()).unwrap(), &cfg).unwrap();
        assert!(r.max < 1e-6);
        assert_eq!(samples.len(), 81);
        assert!(r.extra["min_wminus_minus_wplus"].as_f64().unwrap() > -10.0);
    }
}
