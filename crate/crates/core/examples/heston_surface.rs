// Implied volatility surface of the Heston model by Fourier quadrature.

use affinekit::fourier::{bs_implied_vol, heston_call, CallVariant};
use affinekit::models::HestonParams;

fn main() -> affinekit::Result<()> {
    run_example()
}

pub fn run_example() -> affinekit::Result<()> {
    let hp = HestonParams::new(0.02, -2.0, 0.1, 0.5, 0.01, 0.02, 0.0)?;
    let strikes = [0.8, 0.9, 1.0, 1.1, 1.2];

    print!("{:>5}", "T\\K");
    for k in strikes {
        print!(" {k:>7.1}");
    }
    println!();
    for i in 1..=6 {
        let maturity = 0.5 * i as f64;
        print!("{maturity:>5.1}");
        for k in strikes {
            let price = heston_call(&hp, 0.0, maturity, k, 0.5, CallVariant::StockSubtracted)?;
            let vol = bs_implied_vol(price.value, hp.x2_0.exp(), k, hp.r, maturity)?;
            print!(" {vol:>7.4}");
        }
        println!();
    }
    Ok(())
}
