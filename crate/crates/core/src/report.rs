//! Run configuration, check records and the on-disk report format.
//!
//! `report.json` holds the configuration echo, every executed check and
//! per-section details. Grid data goes to `field_<name>.csv` with the
//! coordinate columns first and rows in grid order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::catalog::MetricSpec;
use crate::coframe::{Point, DEFAULT_MARGIN};
use crate::curvature::DEFAULT_FD_STEP;
use crate::error::{Error, Result};
use crate::scan::{FieldGrid, ScanConfig};

/// Bumped whenever a field of [`RunReport`] changes meaning or is removed.
pub const SCHEMA_VERSION: u32 = 1;

/// Keys whose values depend on the clock; they are dropped by
/// [`canonical_json`].
pub const TIMING_KEYS: [&str; 3] = ["generated_at", "wall_clock_ms", "elapsed_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format {other:?}; expected json or csv"))),
        }
    }
}

/// Everything a run needs. All keys are flat; a JSON file with any subset
/// of them may be given with `--config`, and flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog name: `page`, `fubini-study`, `s4`, `t4`, `s2xs2`, optionally
    /// with arguments as in `s4(2)`.
    pub metric: String,
    /// Page parameter; only valid with `metric = "page"`.
    pub a: Option<f64>,
    pub grid: usize,
    pub sphere_points: usize,
    pub refine_iters: usize,
    pub fd_step: f64,
    pub margin: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Vec<Format>,

    pub einstein_tol: f64,
    pub scalar_rel_tol: f64,
    /// Required ratio `|min| / numerical_error` for a negative minimum.
    pub negativity_ratio: f64,
    pub pattern_tol: f64,
    pub complex_structure_tol: f64,
    pub consistency_tol: f64,
    pub normal_curvature_tol: f64,
    pub holonomy_tol: f64,
    pub defect_tol: f64,
    /// Defect the S4 contrast surface must exceed.
    pub contrast_defect: f64,
    pub weitzenbock_tol_flat: f64,
    pub weitzenbock_tol_curved: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scan = ScanConfig::default();
        Self {
            metric: "page".into(),
            a: None,
            grid: scan.grid,
            sphere_points: scan.sphere_points,
            refine_iters: scan.refine_iters,
            fd_step: DEFAULT_FD_STEP,
            margin: DEFAULT_MARGIN,
            seed: 0,
            out: PathBuf::from("out"),
            format: vec![Format::Json, Format::Csv],
            einstein_tol: 1e-5,
            scalar_rel_tol: 1e-6,
            negativity_ratio: 100.0,
            pattern_tol: 1e-6,
            complex_structure_tol: 1e-8,
            consistency_tol: 1e-4,
            normal_curvature_tol: 1e-8,
            holonomy_tol: 1e-6,
            defect_tol: 1e-5,
            contrast_defect: 1e-2,
            weitzenbock_tol_flat: 1e-6,
            weitzenbock_tol_curved: 1e-5,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn metric_spec(&self) -> Result<MetricSpec> {
        let spec: MetricSpec = self.metric.parse()?;
        match (spec, self.a) {
            (MetricSpec::Page { .. }, Some(a)) => {
                let with_a = MetricSpec::Page { a };
                with_a.build()?;
                Ok(with_a)
            }
            (_, Some(_)) => Err(Error::Config(format!("--a applies only to the page metric, not {}", self.metric))),
            (spec, None) => Ok(spec),
        }
    }

    pub fn scan(&self) -> ScanConfig {
        ScanConfig {
            grid: self.grid,
            sphere_points: self.sphere_points,
            refine_iters: self.refine_iters,
            fd_step: self.fd_step,
            margin: self.margin,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.metric_spec()?;
        self.scan().validate()?;
        let tolerances = [
            ("einstein_tol", self.einstein_tol),
            ("scalar_rel_tol", self.scalar_rel_tol),
            ("negativity_ratio", self.negativity_ratio),
            ("pattern_tol", self.pattern_tol),
            ("complex_structure_tol", self.complex_structure_tol),
            ("consistency_tol", self.consistency_tol),
            ("normal_curvature_tol", self.normal_curvature_tol),
            ("holonomy_tol", self.holonomy_tol),
            ("defect_tol", self.defect_tol),
            ("contrast_defect", self.contrast_defect),
            ("weitzenbock_tol_flat", self.weitzenbock_tol_flat),
            ("weitzenbock_tol_curved", self.weitzenbock_tol_curved),
        ];
        for (name, v) in tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.format.is_empty() {
            return Err(Error::Config("at least one output format is required".into()));
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.format.contains(&f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Comparison {
    pub fn holds(self, measured: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Below => measured < tolerance,
            Comparison::Above => measured > tolerance,
            Comparison::AtLeast => measured >= tolerance,
        }
    }
}

/// One pass/fail decision. A NaN measurement fails every comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    /// Witnessing chart point, always present on failure.
    pub location: Option<Point>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, comparison: Comparison, tolerance: f64, location: Point) -> Self {
        Self {
            name: name.into(),
            passed: comparison.holds(measured, tolerance),
            measured,
            tolerance,
            comparison,
            location: Some(location),
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Rows of numbers under named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                // `{:e}` on f64 round-trips exactly.
                let _ = write!(s, "{v:e}");
            }
            s.push('\n');
        }
        s
    }
}

impl From<&FieldGrid> for Table {
    fn from(f: &FieldGrid) -> Self {
        let mut columns: Vec<String> = f.coordinates.iter().map(|c| c.to_string()).collect();
        columns.push("value".into());
        let rows = f
            .points
            .iter()
            .zip(&f.values)
            .map(|(p, v)| p.iter().copied().chain([*v]).collect())
            .collect();
        Self { columns, rows }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    /// Section name to its detailed result.
    pub sections: Map<String, Value>,
    /// Sections skipped because the metric does not support them.
    pub skipped: Vec<String>,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
    pub wall_clock_ms: u64,
    #[serde(skip)]
    pub tables: Vec<(String, Table)>,
}

impl RunReport {
    pub fn new(command: impl Into<String>, config: RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            checks: Vec::new(),
            sections: Map::new(),
            skipped: Vec::new(),
            generated_at: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_clock_ms: 0,
            tables: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn section<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.sections.insert(name.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn table(&mut self, name: impl Into<String>, table: Table) {
        self.tables.push((name.into(), table));
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// The report as JSON with every clock-dependent key removed, for
/// comparing runs.
pub fn canonical_json(report_json: &str) -> Result<String> {
    fn strip(v: &mut Value) {
        match v {
            Value::Object(m) => {
                for k in TIMING_KEYS {
                    m.remove(k);
                }
                m.values_mut().for_each(strip);
            }
            Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v: Value = serde_json::from_str(report_json)?;
    strip(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `report.json` and the CSV tables requested by the config into its
/// output directory; returns the paths written.
pub fn write_report(report: &RunReport, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = &cfg.out;
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    if cfg.wants(Format::Json) {
        let path = dir.join("report.json");
        write_file(&path, &report.to_json()?)?;
        written.push(path);
    }
    if cfg.wants(Format::Csv) {
        for (name, table) in &report.tables {
            let path = dir.join(format!("field_{name}.csv"));
            write_file(&path, &table.to_csv())?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig {
            metric: "s4(2)".into(),
            grid: 7,
            format: vec![Format::Csv],
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = RunConfig::from_json(r#"{"metric": "fs", "grid": 4}"#).unwrap();
        assert_eq!(cfg.grid, 4);
        assert_eq!(cfg.sphere_points, RunConfig::default().sphere_points);
        assert!(RunConfig::from_json(r#"{"grdi": 4}"#).is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let bad = [
            RunConfig { metric: "klein-bottle".into(), ..RunConfig::default() },
            RunConfig { metric: "s4".into(), a: Some(0.3), ..RunConfig::default() },
            RunConfig { a: Some(-1.0), ..RunConfig::default() },
            RunConfig { einstein_tol: 0.0, ..RunConfig::default() },
            RunConfig { grid: 1, ..RunConfig::default() },
            RunConfig { format: vec![], ..RunConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn page_parameter_overrides_root() {
        let cfg = RunConfig { a: Some(0.5), ..RunConfig::default() };
        assert_eq!(cfg.metric_spec().unwrap(), MetricSpec::Page { a: 0.5 });
    }

    #[test]
    fn nan_fails_every_comparison() {
        for c in [Comparison::Below, Comparison::Above, Comparison::AtLeast] {
            assert!(!c.holds(f64::NAN, 1.0));
        }
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = RunReport::new("check-einstein", RunConfig::default());
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["checks"], Value::Array(vec![]));
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
    }

    #[test]
    fn canonical_form_drops_timing_at_any_depth() {
        let a = r#"{"x": 1, "generated_at": 5, "s": {"elapsed_ms": 3, "y": [ {"wall_clock_ms": 1, "z": 2} ]}}"#;
        let b = r#"{"x": 1, "generated_at": 9, "s": {"elapsed_ms": 7, "y": [ {"wall_clock_ms": 4, "z": 2} ]}}"#;
        assert_eq!(canonical_json(a).unwrap(), canonical_json(b).unwrap());
        assert!(!canonical_json(a).unwrap().contains("elapsed"));
    }

    #[test]
    fn csv_layout() {
        let grid = FieldGrid {
            coordinates: ["r", "theta", "phi", "psi"],
            points: vec![[0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 4.0]],
            values: vec![0.5, -0.25],
        };
        let csv = Table::from(&grid).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "r,theta,phi,psi,value");
        assert_eq!(lines.len(), 3);
        let last: Vec<f64> = lines[2].split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(last, vec![0.0, 1.0, 2.0, 4.0, -0.25]);
    }

    #[test]
    fn writes_requested_files_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: dir.path().join("nested"),
            format: vec![Format::Json],
            ..RunConfig::default()
        };
        let mut r = RunReport::new("x", cfg.clone());
        r.table("t", Table { columns: vec!["a".into()], rows: vec![vec![1.0]] });
        let paths = write_report(&r, &cfg).unwrap();
        assert_eq!(paths, vec![cfg.out.join("report.json")]);
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let cfg = RunConfig { out: blocker.join("sub"), ..RunConfig::default() };
        let err = write_report(&RunReport::new("x", cfg.clone()), &cfg).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
