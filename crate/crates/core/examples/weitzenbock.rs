//! Both sides of (d + d*)^2 = rough Laplacian - 2W + s/3 on analytic
//! 2-form fields.

use ehcurv::catalog::{flat_t4, page_metric, round_s4, PageParams};
use ehcurv::curvature::DEFAULT_FD_STEP;
use ehcurv::weitzenbock::{s4_test_field, torus_test_fields, weitzenbock_check};

fn main() -> ehcurv::error::Result<()> {
    let x = [1.1, 0.7, 2.3, 4.1];
    let t4 = flat_t4();
    for f in torus_test_fields() {
        let c = weitzenbock_check(&t4, &f, &x, DEFAULT_FD_STEP)?;
        println!("t4   {:<24} residual {:.2e}", f.name, c.residual);
    }
    for cf in [round_s4(1.0)?, page_metric(PageParams::einstein())?] {
        let f = s4_test_field();
        let c = weitzenbock_check(&cf, &f, &x, DEFAULT_FD_STEP)?;
        println!("{:<4} {:<24} residual {:.2e}", cf.name().split('(').next().unwrap(), f.name, c.residual);
        println!("     hodge     {:?}", c.hodge.0.as_slice());
        println!("     curvature {:?}", c.curvature_term.0.as_slice());
    }
    Ok(())
}
