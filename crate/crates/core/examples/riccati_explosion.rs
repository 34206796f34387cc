// Explosion times of the CIR Riccati equation: integrator versus the
// closed-form root, and the shrinking horizon along a ray.

use affinekit::models::{AffineModel, CirParams};
use affinekit::riccati::{blow_up_time, real_u, RiccatiSystem, ScalarRiccatiSpec};

fn main() -> affinekit::Result<()> {
    run_example()
}

pub fn run_example() -> affinekit::Result<()> {
    let cir = CirParams::new(0.08, -0.9, 0.033f64.sqrt(), 0.08)?;
    let (params, _, _) = cir.as_affine();
    let sys = RiccatiSystem::plain(params)?;

    println!("{:>8} {:>12} {:>12}", "u", "integrator", "closed form");
    for u in [60.0, 80.0, 120.0, 200.0, 500.0] {
        let numeric = blow_up_time(&sys, &real_u(&[u]), 50.0)?.time();
        let exact = ScalarRiccatiSpec::real(0.033 / 2.0, -0.9, 0.0, u).explosion_time();
        let show = |t: Option<f64>| t.map_or("none".to_string(), |t| format!("{t:.6}"));
        println!("{u:>8} {:>12} {:>12}", show(numeric), show(exact));
    }
    Ok(())
}
