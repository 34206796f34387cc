// Monte Carlo against closed forms: a CIR bond and a Heston call.

use affinekit::fourier::{heston_call, CallVariant};
use affinekit::mc::{mc_price, Scheme, SimConfig};
use affinekit::models::{AffineModel, CirParams, HestonParams};

fn main() -> affinekit::Result<()> {
    run_example()
}

pub fn run_example() -> affinekit::Result<()> {
    let cir = CirParams::new(0.08, -0.9, 0.033f64.sqrt(), 0.08)?;
    let (p, srs, x0) = cir.as_affine();
    let cfg = SimConfig::per_year(20_000, 100, 7, Scheme::CirExact);
    let mc = mc_price(&p, &srs, &x0, |_| 1.0, 1.0, &cfg)?;
    println!(
        "CIR bond P(0,1): mc {:.6} +- {:.6}, closed form {:.6}",
        mc.value,
        mc.err,
        cir.bond_price(cir.r0, 1.0)
    );

    let heston = HestonParams::new(0.02, -2.0, 0.1, 0.5, 0.01, 0.02, 0.0)?;
    let (p, srs, x0) = heston.as_affine();
    let cfg = SimConfig::per_year(20_000, 200, 7, Scheme::EulerFullTruncation);
    let k = 1.0;
    let mc = mc_price(&p, &srs, &x0, |x| (x[1].exp() - k).max(0.0), 0.5, &cfg)?;
    let fourier = heston_call(&heston, 0.0, 0.5, k, 0.5, CallVariant::StockSubtracted)?;
    println!(
        "Heston call T=0.5 K=1: mc {:.6} +- {:.6}, quadrature {:.6}",
        mc.value, mc.err, fourier.value
    );
    Ok(())
}
