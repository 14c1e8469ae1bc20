//! Produce the same report.json and field CSVs as the command-line tool,
//! from library code.

use ehcurv::cli::execute;
use ehcurv::report::{write_report, RunConfig};

fn main() -> ehcurv::error::Result<()> {
    let cfg = RunConfig {
        metric: "fubini-study".into(),
        grid: 4,
        sphere_points: 30,
        out: std::env::temp_dir().join("ehcurv-report"),
        ..RunConfig::default()
    };
    cfg.validate()?;
    let report = execute("report-all", &cfg)?;
    for c in &report.checks {
        println!("{} {} = {:.3e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured);
    }
    for s in &report.skipped {
        println!("skipped {s}");
    }
    for path in write_report(&report, &cfg)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
