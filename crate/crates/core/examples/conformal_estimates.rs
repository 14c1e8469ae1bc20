//! Estimate quantities of the Kahler metric conformal to a Hermitian one,
//! on Fubini-Study (already Kahler) and on the Page metric.

use ehcurv::catalog::{fubini_study, page_metric, PageParams};
use ehcurv::scan::{check_estimates, ScanConfig};

fn main() -> ehcurv::error::Result<()> {
    let cfg = ScanConfig { grid: 6, ..ScanConfig::default() };
    for cf in [fubini_study(), page_metric(PageParams::einstein())?] {
        let r = check_estimates(&cf, &cfg)?;
        println!("{}", r.metric);
        println!("  s~ in [{:.6}, {:.6}]", r.s_tilde_min, r.s_tilde_max);
        println!("  max lambda(W~-) - s~/6      {:+.6} at {:?}", r.first_max, r.first_argmax);
        println!("  max <W~- phi,phi> - s~/12   {:+.6} at {:?}", r.second_max, r.second_argmax);
        println!("  conformal consistency       {:.2e}", r.consistency_max);
    }
    Ok(())
}
