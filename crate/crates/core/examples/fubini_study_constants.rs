//! Curvature constants of Fubini-Study on CP2: holomorphic sectional
//! curvature 4, sectional curvature in [1, 4], orthogonal bisectional 2.

use ehcurv::catalog::fubini_study;
use ehcurv::curvature::DEFAULT_FD_STEP;
use ehcurv::forms::Vec4;
use ehcurv::hermitian::{
    complex_structure_at, holomorphic_sectional, kahler_bisec_identity_residual, orthogonal_bisectional, sectional,
    ComplexLineForm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(rng: &mut ChaCha8Rng) -> Vec4 {
    Vec4::from_fn(|_, _| rng.gen_range(-1.0..1.0)).normalize()
}

fn main() -> ehcurv::error::Result<()> {
    let cf = fubini_study();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut h_err, mut k_lo, mut k_hi, mut ortho, mut identity) = (0f64, f64::MAX, f64::MIN, 0f64, 0f64);
    for _ in 0..200 {
        let x = [rng.gen_range(0.2..1.3), rng.gen_range(0.2..2.9), rng.gen_range(0.0..6.0), rng.gen_range(0.0..12.0)];
        let (pc, cs) = complex_structure_at(&cf, &x, DEFAULT_FD_STEP)?;
        let (u, v) = (unit(&mut rng), unit(&mut rng));
        let line = ComplexLineForm::from_vector(&cs, &u)?;
        h_err = h_err.max((holomorphic_sectional(&pc, &cs, &line) - 4.0).abs());
        ortho = ortho.max((orthogonal_bisectional(&pc, &cs, &line) - 2.0).abs());
        let k = sectional(&pc, &u, &v)?;
        k_lo = k_lo.min(k);
        k_hi = k_hi.max(k);
        identity = identity.max(kahler_bisec_identity_residual(&pc, &cs, &u, &v)?);
    }
    println!("max |H - 4|              {h_err:.2e}");
    println!("max |H_perp - 2|         {ortho:.2e}");
    println!("sectional range          [{k_lo:.6}, {k_hi:.6}]");
    println!("Kahler identity residual {identity:.2e}");
    Ok(())
}
