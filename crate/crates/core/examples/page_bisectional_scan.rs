//! The holomorphic bisectional curvature of the Page metric takes negative
//! values. Scans grid points and complex-line pairs, refines the minimum,
//! and repeats at doubled resolution.

use ehcurv::catalog::{page_metric, PageParams};
use ehcurv::scan::{scan_bisectional, scan_orthogonal_bisectional, ScanConfig};

fn main() -> ehcurv::error::Result<()> {
    let page = page_metric(PageParams::einstein())?;
    let cfg = ScanConfig { grid: 8, sphere_points: 60, ..ScanConfig::default() };

    let coarse = scan_bisectional(&page, &cfg)?;
    let fine = scan_bisectional(&page, &cfg.doubled())?;
    for (label, r) in [("grid 8", &coarse), ("grid 16", &fine)] {
        println!(
            "{label}: min {:.6} (noise {:.1e}, refinement gained {:.1e}), max {:.6}",
            r.min, r.numerical_error, r.search_delta, r.max
        );
    }
    println!("minimising point {:?}", fine.argmin.point);
    println!("  X = {:?}", fine.argmin.x.unwrap());
    println!("  Y = {:?}", fine.argmin.y.unwrap());
    println!(
        "negative at {} of {} grid points",
        fine.cells.negative, fine.cells.count
    );

    let ortho = scan_orthogonal_bisectional(&page, &cfg)?;
    println!("orthogonal bisectional: min {:.6}, max {:.6}", ortho.min, ortho.max);
    Ok(())
}
