//! Normal connection of the (r, psi) spheres: pointwise curvature, loop
//! holonomy against the enclosed curvature, and path dependence of
//! parallel transport.

use ehcurv::catalog::{fubini_study, page_metric, round_s4, PageParams};
use ehcurv::submanifold::{survey, SurveyConfig};

fn main() -> ehcurv::error::Result<()> {
    let cfg = SurveyConfig::default();
    for cf in [page_metric(PageParams::einstein())?, page_metric(PageParams::new(0.5)?)?, round_s4(1.0)?, fubini_study()] {
        let s = survey(&cf, &cfg)?;
        println!("{}", s.metric);
        println!("  max |normal curvature| {:.3e} at {:?}", s.max_abs_curvature, s.argmax_curvature);
        println!("  max nested holonomy    {:.3e}", s.max_nested_holonomy);
        println!("  max transport defect   {:.3e}", s.max_defect);
        for l in s.loops.iter().filter(|l| l.surface == 2) {
            println!(
                "  {:<10} angle {:+.6e}  enclosed curvature {:+.6e}",
                l.label, l.holonomy.total, l.enclosed_curvature
            );
        }
    }
    Ok(())
}
