//! Command-line front end. Every subcommand builds a [`RunReport`], prints
//! one line per check and writes the report files.
//!
//! Exit codes: 0 when every executed check passes, 1 when one fails, 2 on
//! configuration errors and on metrics the subcommand cannot handle.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::MetricSpec;
use crate::coframe::{CoframeField, Point};
use crate::error::{Error, Result};
use crate::hermitian::complex_structure_at;
use crate::report::{write_report, Check, Comparison, Format, RunConfig, RunReport, Table};
use crate::scan::{self, FieldGrid, CONSISTENCY_GRID};
use crate::submanifold::{survey, SurveyConfig};
use crate::weitzenbock::{s4_test_field, torus_test_fields, weitzenbock_residual, SeparableField};

/// Sample points per test field for the Weitzenbock check.
pub const WEITZENBOCK_POINTS: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "ehcurv", version, about = "Curvature checks for Hermitian 4-manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Einstein residual and scalar-curvature spread over the grid.
    CheckEinstein(Flags),
    /// Extremes of holomorphic bisectional curvature.
    ScanBisec(Flags),
    /// Extremes of orthogonal bisectional curvature.
    ScanOrthoBisec(Flags),
    /// W+ and W- spectra and the recovered complex structure.
    WeylSpectrum(Flags),
    /// Estimate quantities of the conformal Kahler metric.
    CheckEstimates(Flags),
    /// Normal-bundle curvature, holonomy and parallel sections of fibre spheres.
    NormalBundle(Flags),
    /// Weitzenbock identity on analytic test 2-forms.
    Weitzenbock(Flags),
    /// Every section above that applies to the metric.
    ReportAll(Flags),
}

#[derive(Debug, Args, Default)]
struct Flags {
    /// Catalog metric: page, fubini-study, s4, t4, s2xs2.
    #[arg(long)]
    metric: Option<String>,
    /// Page parameter (defaults to the Einstein root).
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    sphere_points: Option<usize>,
    #[arg(long)]
    refine_iters: Option<usize>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: json, csv.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// JSON file with any RunConfig keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.metric {
            cfg.metric = m;
        }
        cfg.a = self.a.or(cfg.a);
        cfg.grid = self.grid.unwrap_or(cfg.grid);
        cfg.sphere_points = self.sphere_points.unwrap_or(cfg.sphere_points);
        cfg.refine_iters = self.refine_iters.unwrap_or(cfg.refine_iters);
        cfg.fd_step = self.fd_step.unwrap_or(cfg.fd_step);
        cfg.margin = self.margin.unwrap_or(cfg.margin);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        if let Some(out) = self.out {
            cfg.out = out;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Einstein,
    Bisectional,
    OrthogonalBisectional,
    WeylSpectrum,
    Estimates,
    NormalBundle,
    Weitzenbock,
}

impl Section {
    pub const ALL: [Section; 7] = [
        Section::Einstein,
        Section::Bisectional,
        Section::OrthogonalBisectional,
        Section::WeylSpectrum,
        Section::Estimates,
        Section::NormalBundle,
        Section::Weitzenbock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Section::Einstein => "check-einstein",
            Section::Bisectional => "scan-bisec",
            Section::OrthogonalBisectional => "scan-ortho-bisec",
            Section::WeylSpectrum => "weyl-spectrum",
            Section::Estimates => "check-estimates",
            Section::NormalBundle => "normal-bundle",
            Section::Weitzenbock => "weitzenbock",
        }
    }
}

/// Errors meaning "this metric has no such structure" rather than a bad
/// configuration; `report-all` skips the section instead of stopping.
fn inapplicable(e: &Error) -> bool {
    matches!(
        e,
        Error::NotHermitian(_)
            | Error::NonpositiveTopEigenvalue { .. }
            | Error::DegenerateWplus { .. }
            | Error::ChartDegeneracy(_)
    )
}

fn worst(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.is_nan() || *v > values[best] {
            best = i;
            if v.is_nan() {
                break;
            }
        }
    }
    best
}

/// Run one section against the metric in `cfg`, appending to `report`.
pub fn run_section(section: Section, cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let spec = cfg.metric_spec()?;
    let cf = spec.build()?.with_margin(cfg.margin)?;
    let scan_cfg = cfg.scan();
    match section {
        Section::Einstein => einstein(&cf, cfg, report),
        Section::Bisectional | Section::OrthogonalBisectional => {
            bisectional(&cf, &spec, cfg, section == Section::OrthogonalBisectional, report)
        }
        Section::WeylSpectrum => weyl(&cf, cfg, report),
        Section::Estimates => estimates(&cf, &spec, cfg, report),
        Section::NormalBundle => normal_bundle(&cf, &spec, cfg, report),
        Section::Weitzenbock => weitzenbock(&cf, &spec, &scan_cfg, cfg, report),
    }
}

fn einstein(cf: &CoframeField, cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let r = scan::scan_einstein(cf, &cfg.scan())?;
    let rel = r.extra["s_rel_stdev"].as_f64().unwrap_or(f64::NAN);
    report.checks.push(Check::new(
        "einstein_residual_max",
        r.max,
        Comparison::Below,
        cfg.einstein_tol,
        r.argmax.point,
    ));
    report.checks.push(
        Check::new("scalar_rel_stdev", rel, Comparison::Below, cfg.scalar_rel_tol, r.argmax.point)
            .with_note("location is the point of largest Einstein residual"),
    );
    report.table("einstein_residual", Table::from(&r.field));
    report.section("einstein", &r)
}

fn bisectional(
    cf: &CoframeField,
    spec: &MetricSpec,
    cfg: &RunConfig,
    orthogonal: bool,
    report: &mut RunReport,
) -> Result<()> {
    let scan_cfg = cfg.scan();
    let (r, key) = if orthogonal {
        (scan::scan_orthogonal_bisectional(cf, &scan_cfg)?, "orthogonal_bisectional")
    } else {
        (scan::scan_bisectional(cf, &scan_cfg)?, "bisectional")
    };
    if spec.is_page() {
        report.checks.push(
            Check::new(format!("{key}_negative"), r.min, Comparison::Below, 0.0, r.argmin.point)
                .with_note("negativity is the expected finding"),
        );
        report.checks.push(Check::new(
            format!("{key}_negativity_significance"),
            -r.min / r.numerical_error,
            Comparison::Above,
            cfg.negativity_ratio,
            r.argmin.point,
        ));
    }
    report.table(format!("{key}_min"), Table::from(&r.field));
    if !orthogonal {
        // A fixed line paired with itself: holomorphic sectional curvature.
        let v = Vector3::x();
        report.table("holomorphic_sectional", Table::from(&scan::line_field(cf, &scan_cfg, &v, &v)?));
    }
    report.section(key, &r)
}

fn weyl(cf: &CoframeField, cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let scan_cfg = cfg.scan();
    let (r, samples) = scan::scan_weyl_spectrum(cf, &scan_cfg)?;
    let top = r.extra["min_top_wplus"].as_f64().unwrap_or(f64::NAN);
    let tops: Vec<f64> = samples.iter().map(|s| -s.wplus[2]).collect();
    let scale = samples.iter().map(|s| s.wplus[2].abs()).fold(0.0, f64::max);
    if scale > crate::conformal::WPLUS_FLOOR {
        report.checks.push(Check::new(
            "wplus_pattern_residual_max",
            r.max,
            Comparison::Below,
            cfg.pattern_tol,
            r.argmax.point,
        ));
        report.checks.push(Check::new(
            "wplus_top_eigenvalue_min",
            top,
            Comparison::Above,
            0.0,
            samples[worst(&tops)].point,
        ));
    } else {
        report.skipped.push("weyl-spectrum/pattern: W+ vanishes".into());
    }

    // Complex structure on a coarse sub-grid.
    let coarse = cf.chart().grid(CONSISTENCY_GRID.min(cfg.grid));
    let mut square = Vec::new();
    let mut compat = Vec::new();
    for x in &coarse {
        match complex_structure_at(cf, x, cfg.fd_step) {
            Ok((_, cs)) => {
                square.push((cs.j * cs.j + Matrix4::identity()).norm());
                compat.push((cs.j.transpose() * cs.j - Matrix4::identity()).norm());
            }
            Err(e) if inapplicable(&e) => {
                report.skipped.push(format!("weyl-spectrum/complex-structure: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if square.len() == coarse.len() {
        let (i, k) = (worst(&square), worst(&compat));
        let tol = cfg.complex_structure_tol;
        report.checks.push(Check::new("j_squared_residual_max", square[i], Comparison::Below, tol, coarse[i]));
        report.checks.push(Check::new("j_metric_compatibility_max", compat[k], Comparison::Below, tol, coarse[k]));
    }

    report.table("wplus_pattern", Table::from(&r.field));
    let mut spectrum = Table {
        columns: cf.chart().names.iter().map(|s| s.to_string()).collect(),
        rows: Vec::new(),
    };
    spectrum
        .columns
        .extend(["wplus_0", "wplus_1", "wplus_2", "wminus_0", "wminus_1", "wminus_2"].map(String::from));
    for s in &samples {
        spectrum
            .rows
            .push(s.point.iter().chain(&s.wplus).chain(&s.wminus).copied().collect());
    }
    report.table("weyl_spectrum", spectrum);
    report.section("weyl_spectrum", &r)
}

fn estimates(cf: &CoframeField, spec: &MetricSpec, cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let r = scan::check_estimates(cf, &cfg.scan())?;
    report.checks.push(Check::new(
        "conformal_consistency_max",
        r.consistency_max,
        Comparison::Below,
        cfg.consistency_tol,
        r.consistency_argmax,
    ));
    if spec.is_page() {
        report.checks.push(
            Check::new("second_estimate_max", r.second_max, Comparison::AtLeast, 0.0, r.second_argmax)
                .with_note("must reach zero somewhere since b2- = 1"),
        );
    } else {
        report.checks.push(Check::new("first_estimate_max", r.first_max, Comparison::Below, 0.0, r.first_argmax));
        report.checks.push(Check::new("second_estimate_max", r.second_max, Comparison::Below, 0.0, r.second_argmax));
    }
    report.table("estimate_first", Table::from(&r.first_field));
    report.table("estimate_second", Table::from(&r.second_field));
    report.section("estimates", &r)
}

fn normal_bundle(cf: &CoframeField, spec: &MetricSpec, cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let scfg = SurveyConfig {
        fd_step: cfg.fd_step,
        seed: cfg.seed,
        ..SurveyConfig::default()
    };
    let s = survey(cf, &scfg)?;
    let worst_surface = worst(&s.surfaces.iter().map(|x| x.defect).collect::<Vec<_>>());
    let defect_at = s.surfaces[worst_surface].base;
    if matches!(spec, MetricSpec::S4 { .. }) {
        report.checks.push(
            Check::new("contrast_defect_max", s.max_defect, Comparison::Above, cfg.contrast_defect, defect_at)
                .with_note("S4 contrast surface is expected to be path dependent"),
        );
    } else {
        report.checks.push(Check::new(
            "normal_curvature_max",
            s.max_abs_curvature,
            Comparison::Below,
            cfg.normal_curvature_tol,
            s.argmax_curvature,
        ));
        let nested: Vec<_> = s.loops.iter().filter(|l| l.label.starts_with("nested")).collect();
        let k = worst(&nested.iter().map(|l| l.holonomy.angle.abs()).collect::<Vec<_>>());
        let l = nested[k];
        let base = s.surfaces[l.surface].base;
        let varying = s.surfaces[l.surface].varying;
        let mut at = base;
        at[varying[0]] = l.rectangle[0][0];
        at[varying[1]] = l.rectangle[1][0];
        report.checks.push(
            Check::new("nested_holonomy_max", s.max_nested_holonomy, Comparison::Below, cfg.holonomy_tol, at)
                .with_note(format!("{} on surface {}; location is its first corner", l.label, l.surface)),
        );
        report.checks.push(Check::new(
            "parallel_section_defect_max",
            s.max_defect,
            Comparison::Below,
            cfg.defect_tol,
            defect_at,
        ));
    }

    let names = cf.chart().names;
    let mut curv = Table {
        columns: std::iter::once("surface")
            .chain(names)
            .chain(["value"])
            .map(String::from)
            .collect(),
        rows: Vec::new(),
    };
    for c in &s.samples {
        curv.rows.push(
            std::iter::once(c.surface as f64)
                .chain(c.point)
                .chain([c.value])
                .collect(),
        );
    }
    let mut hol = Table {
        columns: ["surface", "loop", "u0", "u1", "v0", "v1", "angle", "total", "enclosed_curvature", "error_estimate"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    for (i, l) in s.loops.iter().enumerate() {
        let [u, v] = l.rectangle;
        hol.rows.push(vec![
            l.surface as f64,
            (i % 4) as f64,
            u[0],
            u[1],
            v[0],
            v[1],
            l.holonomy.angle,
            l.holonomy.total,
            l.enclosed_curvature,
            l.holonomy.error_estimate,
        ]);
    }
    report.table("normal_curvature", curv);
    report.table("holonomy", hol);
    report.section("normal_bundle", &s)
}

fn weitzenbock(
    cf: &CoframeField,
    spec: &MetricSpec,
    scan_cfg: &scan::ScanConfig,
    cfg: &RunConfig,
    report: &mut RunReport,
) -> Result<()> {
    let (fields, tol): (Vec<SeparableField>, f64) = match spec {
        MetricSpec::T4 => (torus_test_fields(), cfg.weitzenbock_tol_flat),
        _ => (vec![s4_test_field()], cfg.weitzenbock_tol_curved),
    };
    let chart = cf.chart();
    let (lo, hi) = (chart.interior_lo(), chart.interior_hi());
    let mut rng = ChaCha8Rng::seed_from_u64(scan_cfg.seed);
    let points: Vec<Point> = (0..WEITZENBOCK_POINTS)
        .map(|_| std::array::from_fn(|mu| rng.gen_range(lo[mu]..hi[mu])))
        .collect();
    let mut table = FieldGrid {
        coordinates: chart.names,
        ..FieldGrid::default()
    };
    let mut names = Vec::new();
    for f in &fields {
        for x in &points {
            table.points.push(*x);
            table.values.push(weitzenbock_residual(cf, f, x, scan_cfg.fd_step)?);
            names.push(f.name.clone());
        }
    }
    let i = worst(&table.values);
    report.checks.push(
        Check::new("weitzenbock_residual_max", table.values[i], Comparison::Below, tol, table.points[i])
            .with_note(format!("field {}", names[i])),
    );
    let per_field: serde_json::Map<String, serde_json::Value> = fields
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let vals = &table.values[k * points.len()..(k + 1) * points.len()];
            (f.name.clone(), vals.iter().copied().fold(0.0, f64::max).into())
        })
        .collect();
    report.table("weitzenbock_residual", Table::from(&table));
    report.section("weitzenbock", &per_field)
}

fn print_checks(report: &RunReport) {
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let cmp = match c.comparison {
            Comparison::Below => "<",
            Comparison::Above => ">",
            Comparison::AtLeast => ">=",
        };
        println!("{verdict} {} = {:e} ({cmp} {:e})", c.name, c.measured, c.tolerance);
    }
    for s in &report.skipped {
        println!("SKIP {s}");
    }
}

/// Execute a subcommand with a resolved configuration and return the report
/// without writing it.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(command, cfg.clone());
    if command == "report-all" {
        for section in Section::ALL {
            match run_section(section, cfg, &mut report) {
                Ok(()) => {}
                Err(e) if inapplicable(&e) => report.skipped.push(format!("{}: {e}", section.name())),
                Err(e) => return Err(e),
            }
        }
    } else {
        let section = Section::ALL
            .into_iter()
            .find(|s| s.name() == command)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {command:?}")))?;
        run_section(section, cfg, &mut report)?;
    }
    report.wall_clock_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Parse `argv`, run, write the report and return the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, flags) = match cli.command {
        Command::CheckEinstein(f) => ("check-einstein", f),
        Command::ScanBisec(f) => ("scan-bisec", f),
        Command::ScanOrthoBisec(f) => ("scan-ortho-bisec", f),
        Command::WeylSpectrum(f) => ("weyl-spectrum", f),
        Command::CheckEstimates(f) => ("check-estimates", f),
        Command::NormalBundle(f) => ("normal-bundle", f),
        Command::Weitzenbock(f) => ("weitzenbock", f),
        Command::ReportAll(f) => ("report-all", f),
    };
    let outcome = flags.resolve().and_then(|cfg| {
        let report = execute(name, &cfg)?;
        write_report(&report, &cfg)?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            print_checks(&report);
            if report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"metric": "fs", "grid": 5, "seed": 9}"#).unwrap();
        let flags = Flags {
            grid: Some(3),
            config: Some(path),
            ..Flags::default()
        };
        let cfg = flags.resolve().unwrap();
        assert_eq!((cfg.metric.as_str(), cfg.grid, cfg.seed), ("fs", 3, 9));
    }

    #[test]
    fn every_subcommand_parses() {
        for s in Section::ALL.map(Section::name).into_iter().chain(["report-all"]) {
            Cli::try_parse_from(["ehcurv", s, "--metric", "t4", "--format", "json,csv"]).unwrap();
        }
        assert!(Cli::try_parse_from(["ehcurv", "scan-everything"]).is_err());
        let cli = Cli::try_parse_from(["ehcurv", "check-einstein", "--a", "-0.5"]).unwrap();
        assert!(matches!(cli.command, Command::CheckEinstein(Flags { a: Some(a), .. }) if a == -0.5));
    }

    #[test]
    fn worst_prefers_nan() {
        assert_eq!(worst(&[1.0, 3.0, 2.0]), 1);
        assert_eq!(worst(&[1.0, f64::NAN, 5.0]), 1);
    }
}
