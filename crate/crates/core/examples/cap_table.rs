// At-the-money cap prices and Black implied volatilities in the CIR model.

use affinekit::models::{AffineModel, CirParams};
use affinekit::pricing::{implied_vol_cap, ShortRateModel, TenorStructure};

fn main() -> affinekit::Result<()> {
    run_example()
}

pub fn run_example() -> affinekit::Result<()> {
    let cir = CirParams::new(0.08, -0.9, 0.033f64.sqrt(), 0.08)?;
    let (params, srs, x0) = cir.as_affine();
    let model = ShortRateModel::from_affine(&params, &srs)?;

    println!("{:>8} {:>8} {:>8} {:>8}", "maturity", "strike", "cap", "vol");
    for maturity in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
        let tenor = TenorStructure::quarterly(maturity)?;
        let kappa = model.atm_strike(&x0, &tenor)?;
        let cap = model.cap_price(&x0, kappa, &tenor)?;
        let (fwd, disc) = model.cap_curve(&x0, &tenor)?;
        let vol = implied_vol_cap(cap.value, &fwd, kappa, &disc, &tenor)?;
        println!("{maturity:>8} {kappa:>8.4} {:>8.4} {vol:>8.4}", cap.value);
    }
    Ok(())
}
