//! Einstein residual and scalar curvature of the Page metric, at the root
//! of the quartic and at a nearby non-Einstein parameter.

use ehcurv::catalog::{page_metric, page_root, PageParams};
use ehcurv::scan::{scan_einstein, ScanConfig};

fn main() -> ehcurv::error::Result<()> {
    let cfg = ScanConfig { grid: 8, ..ScanConfig::default() };
    println!("page_root() = {:.12}", page_root());
    for a in [page_root(), 0.5] {
        let report = scan_einstein(&page_metric(PageParams::new(a)?)?, &cfg)?;
        println!(
            "a = {a:.6}: max Einstein residual {:.3e} at {:?}, s = {:.6} (stdev/mean {:.1e})",
            report.max,
            report.argmax.point,
            report.extra["s_mean"].as_f64().unwrap(),
            report.extra["s_rel_stdev"].as_f64().unwrap(),
        );
    }
    Ok(())
}
