// Bond options under Vasicek (Gaussian law), CIR (noncentral chi-squared law)
// and a generic two-factor model (Fourier inversion).

use affinekit::models::{AffineModel, CirParams, VasicekParams};
use affinekit::pricing::{BondLaw, OptionKind, ShortRateModel};
use affinekit::{AffineParams, ShortRateSpec, StateVector};
use nalgebra::{DMatrix, DVector};

fn main() -> affinekit::Result<()> {
    run_example()
}

pub fn run_example() -> affinekit::Result<()> {
    let (expiry, maturity, strike) = (1.0, 2.0, 0.92);

    let vasicek = VasicekParams::new(0.08, -0.9, 0.1, 0.05)?;
    let (p, srs, x0) = vasicek.as_affine();
    report("vasicek", &ShortRateModel::from_affine(&p, &srs)?, &x0, expiry, maturity, strike, BondLaw::Gaussian)?;

    let cir = CirParams::new(0.08, -0.9, 0.033f64.sqrt(), 0.08)?;
    let (p, srs, x0) = cir.as_affine();
    report("cir", &ShortRateModel::from_affine(&p, &srs)?, &x0, expiry, maturity, strike, BondLaw::Chi2)?;

    let p = AffineParams {
        m: 1,
        n: 1,
        a: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0004]),
        alphas: vec![DMatrix::from_row_slice(2, 2, &[0.02, 0.0, 0.0, 0.01])],
        b: DVector::from_vec(vec![0.04, 0.0]),
        bmat: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -0.5]),
    };
    let srs = ShortRateSpec::new(0.01, vec![1.0, 1.0]);
    let x0 = StateVector::new(vec![0.03, 0.01]);
    report("two-factor", &ShortRateModel::from_affine(&p, &srs)?, &x0, expiry, maturity, strike, BondLaw::Generic)?;
    Ok(())
}

fn report(
    name: &str,
    model: &ShortRateModel,
    x0: &StateVector,
    expiry: f64,
    maturity: f64,
    strike: f64,
    law: BondLaw,
) -> affinekit::Result<()> {
    let call = model.bond_option(x0, 0.0, expiry, maturity, strike, OptionKind::Call, law)?;
    let put = model.bond_option(x0, 0.0, expiry, maturity, strike, OptionKind::Put, law)?;
    let parity = model.bond_price(x0, 0.0, maturity)? - strike * model.bond_price(x0, 0.0, expiry)?;
    println!(
        "{name:>10}: call {:.8} put {:.8} ({}), parity gap {:.1e}",
        call.value,
        put.value,
        call.method.tag(),
        call.value - put.value - parity
    );
    Ok(())
}
