// Admissibility check and canonical block-diagonal form of the Heston model.

use affinekit::canonical::canonical_transform;
use affinekit::models::{AffineModel, HestonParams};
use affinekit::params::default_psd_tol;
use affinekit::rho::rho_factor;

fn main() -> affinekit::Result<()> {
    run_example()
}

pub fn run_example() -> affinekit::Result<()> {
    let heston = HestonParams::new(0.02, -2.0, 0.1, 0.5, 0.01, 0.02, 0.0)?;
    let (params, _, x0) = heston.as_affine();
    let tol = default_psd_tol(&params);

    let report = params.validate(tol)?;
    println!("admissible: {}", report.passed());
    println!("block-diagonal: {}", params.is_block_diagonal(tol));

    let ct = canonical_transform(&params, tol)?;
    println!("q = {}", ct.q);
    println!("Lambda = {}", ct.lambda);
    println!("alpha_1 in canonical coordinates = {}", ct.transformed.alphas[0]);

    let y0 = ct.to_canonical(&x0);
    let rho = rho_factor(&ct.transformed, &y0, tol)?;
    println!("rho(y0) = {rho}");
    println!("rho rho^T = {}", &rho * rho.transpose());
    println!("a(y0) = {}", ct.transformed.diffusion_matrix(&y0)?);
    Ok(())
}
