//! W+ and W- eigenvalues of the Page metric along r. W+ keeps the shape
//! (-l/2, -l/2, l) of a conformally Kahler metric; W- does not.

use ehcurv::catalog::{page_metric, PageParams};
use ehcurv::curvature::{curvature_at, DEFAULT_FD_STEP};
use ehcurv::scan::kahler_pattern_residual;

fn main() -> ehcurv::error::Result<()> {
    let page = page_metric(PageParams::einstein())?;
    println!("{:>6} {:>30} {:>30} {:>9}", "r", "W+", "W-", "pattern");
    for i in 1..12 {
        let r = i as f64 * std::f64::consts::PI / 12.0;
        let pc = curvature_at(&page, &[r, 1.0, 0.5, 2.0], DEFAULT_FD_STEP)?;
        let (p, m) = (pc.wplus_spectrum(), pc.wminus_spectrum());
        println!(
            "{r:6.3} {:>30} {:>30} {:9.1e}",
            format!("({:.4}, {:.4}, {:.4})", p[0], p[1], p[2]),
            format!("({:.4}, {:.4}, {:.4})", m[0], m[1], m[2]),
            kahler_pattern_residual(&p)
        );
    }
    Ok(())
}
