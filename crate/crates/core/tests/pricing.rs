//! Bond, bond option and cap pricing against independent oracles.

mod common;

use affinekit::models::{AffineModel, CirParams};
use affinekit::pricing::{
    black_cap_price, implied_vol_cap, noncentral_chisq_cdf, BondLaw, OptionKind, ShortRateModel, TenorStructure,
};
use affinekit::special::norm_cdf;
use affinekit::{AffineParams, Complex64, ShortRateSpec, StateVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn models() -> Vec<(ShortRateModel, StateVector, BondLaw)> {
    let v = common::vasicek();
    let (pv, sv, xv) = v.as_affine();
    let cp = common::cir();
    let (pc, sc, xc) = cp.as_affine();
    vec![
        (ShortRateModel::from_affine(&pv, &sv).unwrap(), xv, BondLaw::Gaussian),
        (ShortRateModel::from_affine(&pc, &sc).unwrap(), xc, BondLaw::Chi2),
    ]
}

/// Two-factor model: a CIR factor plus an independent Gaussian factor.
fn two_factor() -> (AffineParams, ShortRateSpec, StateVector) {
    let mut p = AffineParams::zeros(1, 1);
    p.alphas[0][(0, 0)] = 0.02;
    p.a[(1, 1)] = 0.0001;
    p.b = DVector::from_vec(vec![0.04, 0.0]);
    p.bmat = DMatrix::from_row_slice(2, 2, &[-0.8, 0.0, 0.0, -0.3]);
    (p, ShortRateSpec::new(0.01, vec![1.0, 1.0]), StateVector::new(vec![0.03, 0.005]))
}

#[test]
fn chi2_cdf_matches_density_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let delta = rng.random_range(0.5..20.0);
        let zeta = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..40.0) };
        let mean = delta + zeta;
        let x = rng.random_range(0.01..2.5) * mean;
        let got = noncentral_chisq_cdf(delta, zeta, x);
        let want = common::chi2_cdf_by_quadrature(delta, zeta, x);
        worst = worst.max((got - want).abs());
        assert!((got - want).abs() <= 1e-9, "delta={delta} zeta={zeta} x={x}: {got} vs {want}");
    }
    eprintln!("worst chi2 cdf deviation {worst:.2e}");
}

#[test]
fn chi2_cdf_edges() {
    assert_eq!(noncentral_chisq_cdf(3.0, 2.0, 0.0), 0.0);
    assert_eq!(noncentral_chisq_cdf(3.0, 2.0, f64::INFINITY), 1.0);
    // delta = 2, zeta = 0 is exponential with mean 2.
    assert!((noncentral_chisq_cdf(2.0, 0.0, 3.0) - (1.0 - (-1.5f64).exp())).abs() < 1e-14);
}

#[test]
fn vasicek_bond_option_matches_lognormal_formula() {
    let v = common::vasicek();
    let (p, srs, x) = v.as_affine();
    let model = ShortRateModel::from_affine(&p, &srs).unwrap();
    let (big_t, s) = (1.0, 3.0);
    let (pt, ps) = (v.bond_price(v.r0, big_t), v.bond_price(v.r0, s));
    // Bond price at T is lognormal with log-volatility B(S-T) sd(r(T)).
    let b = ((v.beta * (s - big_t)).exp() - 1.0) / v.beta;
    let var_r = v.sigma * v.sigma * ((2.0 * v.beta * big_t).exp() - 1.0) / (2.0 * v.beta);
    let sp = b * var_r.sqrt();
    for k in [0.8, 0.88, 0.95] {
        let d1 = (ps / (k * pt)).ln() / sp + 0.5 * sp;
        let want = ps * norm_cdf(d1) - k * pt * norm_cdf(d1 - sp);
        let got = model.bond_option(&x, 0.0, big_t, s, k, OptionKind::Call, BondLaw::Gaussian).unwrap();
        assert!((got.value - want).abs() < 1e-12, "K={k}: {} vs {want}", got.value);
    }
}

#[test]
fn put_call_parity_and_zero_strike() {
    for (model, x, law) in models() {
        let (t, big_t, s) = (0.0, 1.0, 2.0);
        let (pt, ps) = (model.bond_price(&x, t, big_t).unwrap(), model.bond_price(&x, t, s).unwrap());
        for lw in [law, BondLaw::Generic] {
            for k in [0.85, 0.92, 0.97] {
                let call = model.bond_option(&x, t, big_t, s, k, OptionKind::Call, lw).unwrap().value;
                let put = model.bond_option(&x, t, big_t, s, k, OptionKind::Put, lw).unwrap().value;
                assert!((call - put - (ps - k * pt)).abs() < 1e-10, "{lw:?} K={k}");
                assert!(call >= -1e-9 && put >= -1e-9, "{lw:?} K={k}: call {call} put {put}");
            }
            let deep = model.bond_option(&x, t, big_t, s, 1e-8, OptionKind::Call, lw).unwrap().value;
            assert!((deep - ps).abs() < 1e-7, "{lw:?}: {deep} vs {ps}");
        }
    }
}

#[test]
fn closed_form_laws_match_fourier_inversion() {
    for (model, x, law) in models() {
        for (big_t, s) in [(0.5, 1.0), (1.0, 2.0), (3.0, 8.0)] {
            let pt = model.bond_price(&x, 0.0, big_t).unwrap();
            let ps = model.bond_price(&x, 0.0, s).unwrap();
            let atm = ps / pt;
            for k in [0.97 * atm, atm, 1.02 * atm] {
                let a = model.bond_option(&x, 0.0, big_t, s, k, OptionKind::Put, law).unwrap().value;
                let b = model.bond_option(&x, 0.0, big_t, s, k, OptionKind::Put, BondLaw::Generic).unwrap().value;
                assert!((a - b).abs() < 1e-8, "{law:?} T={big_t} S={s} K={k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn bond_prices_fall_with_maturity() {
    let (p, srs, x) = two_factor();
    for model in [ShortRateModel::from_affine(&p, &srs).unwrap()].into_iter().chain(models().into_iter().map(|m| m.0)) {
        let x = if model.dim() == 2 { x.clone() } else { StateVector::new(vec![0.05]) };
        let mut prev = 1.0;
        assert_eq!(model.bond_price(&x, 0.0, 0.0).unwrap(), 1.0);
        for k in 1..=30 {
            let pr = model.bond_price(&x, 0.0, k as f64).unwrap();
            assert!(pr > 0.0 && pr < prev, "maturity {k}");
            prev = pr;
        }
    }
}

#[test]
fn forward_char_consistency() {
    let (p, srs, x) = two_factor();
    let model = ShortRateModel::from_affine(&p, &srs).unwrap();
    let zero = [Complex64::new(0.0, 0.0); 2];
    assert!((model.forward_char(&x, 0.0, 1.0, 3.0, &zero).unwrap() - 1.0).norm() < 1e-12);
    // E^{Q^S}[P(T, S)^{-1}] = P(t, T) / P(t, S): the payoff 1/P(T,S) has
    // exponent -B(S-T)^T X(T) plus the constant A(S-T).
    let (a, b) = model.bond_factors(2.0).unwrap();
    let u: Vec<Complex64> = b.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let got = model.forward_char(&x, 0.0, 1.0, 3.0, &u).unwrap() * a.exp();
    let want = model.bond_price(&x, 0.0, 1.0).unwrap() / model.bond_price(&x, 0.0, 3.0).unwrap();
    assert!((got.re - want).abs() < 1e-9 && got.im.abs() < 1e-12);
    // Generic two-factor bond option parity via Fourier inversion.
    let (pt, ps) = (model.bond_price(&x, 0.0, 1.0).unwrap(), model.bond_price(&x, 0.0, 3.0).unwrap());
    let k = ps / pt;
    let call = model.bond_option(&x, 0.0, 1.0, 3.0, k, OptionKind::Call, BondLaw::Generic).unwrap().value;
    let put = model.bond_option(&x, 0.0, 1.0, 3.0, k, OptionKind::Put, BondLaw::Generic).unwrap().value;
    assert!((call - put).abs() < 1e-10);
    assert!(call > 0.0);
}

#[test]
fn cap_edge_cases() {
    let cp = common::cir();
    let (p, srs, x) = cp.as_affine();
    let model = ShortRateModel::from_affine(&p, &srs).unwrap();
    let none = TenorStructure::quarterly(0.25).unwrap();
    assert_eq!(none.caplets(), 0);
    assert_eq!(model.cap_price(&x, 0.05, &none).unwrap().value, 0.0);

    // A single caplet equals (1 + delta kappa) puts on the T_1 bond.
    let one = TenorStructure::quarterly(0.5).unwrap();
    let kappa = 0.08;
    let cap = model.cap_price(&x, kappa, &one).unwrap().value;
    let put = model.bond_option(&x, 0.0, 0.25, 0.5, 1.0 / (1.0 + 0.25 * kappa), OptionKind::Put, BondLaw::Chi2).unwrap().value;
    assert!((cap - (1.0 + 0.25 * kappa) * put).abs() < 1e-15);

    let ten = TenorStructure::quarterly(10.0).unwrap();
    let far = model.cap_price(&x, 5.0, &ten).unwrap().value;
    assert!(far.abs() < 1e-12, "{far}");
    // Zero strike: every caplet pays the full accrual, the cap is P(0,T_0) - P(0,T_n).
    let full = model.cap_price(&x, 0.0, &ten).unwrap().value;
    let want = cp.bond_price(cp.r0, 0.25) - cp.bond_price(cp.r0, 10.0);
    assert!((full - want).abs() < 1e-9, "{full} vs {want}");
}

#[test]
fn black_cap_limits_and_inversion() {
    let cp = CirParams::new(0.08, -0.9, 0.033f64.sqrt(), 0.08).unwrap();
    let (p, srs, x) = cp.as_affine();
    let model = ShortRateModel::from_affine(&p, &srs).unwrap();
    let tenor = TenorStructure::quarterly(5.0).unwrap();
    let (fwd, disc) = model.cap_curve(&x, &tenor).unwrap();
    let kappa = model.atm_strike(&x, &tenor).unwrap();
    let intrinsic: f64 = fwd.iter().zip(&disc).map(|(f, d)| 0.25 * d * (f - kappa).max(0.0)).sum();
    let low = black_cap_price(&fwd, kappa, 1e-9, &disc, &tenor).unwrap();
    assert!((low - intrinsic).abs() < 1e-12);
    for sigma in [0.05, 0.2, 0.6] {
        let price = black_cap_price(&fwd, kappa, sigma, &disc, &tenor).unwrap();
        let back = implied_vol_cap(price, &fwd, kappa, &disc, &tenor).unwrap();
        assert!((back - sigma).abs() < 1e-9);
    }
    assert!(implied_vol_cap(1.0, &fwd, kappa, &disc, &tenor).is_err());
    // The ATM rate equates the fixed and floating legs.
    let float: f64 = fwd.iter().zip(&disc).map(|(f, d)| 0.25 * d * f).sum();
    let fixed: f64 = disc.iter().map(|d| 0.25 * d * kappa).sum();
    assert!((float - fixed).abs() < 1e-14);
}

#[test]
fn cir_cap_matches_black_at_its_implied_vol() {
    let cp = common::cir();
    let (p, srs, x) = cp.as_affine();
    let model = ShortRateModel::from_affine(&p, &srs).unwrap();
    let tenor = TenorStructure::quarterly(3.0).unwrap();
    let (fwd, disc) = model.cap_curve(&x, &tenor).unwrap();
    let kappa = model.atm_strike(&x, &tenor).unwrap();
    let price = model.cap_price(&x, kappa, &tenor).unwrap().value;
    let vol = implied_vol_cap(price, &fwd, kappa, &disc, &tenor).unwrap();
    let back = black_cap_price(&fwd, kappa, vol, &disc, &tenor).unwrap();
    assert!((back - price).abs() < 1e-12);
    // A generic route through the Riccati integrator prices the same cap.
    let generic = ShortRateModel::generic(&p, &srs).unwrap();
    let g = generic.cap_price(&x, kappa, &tenor).unwrap().value;
    assert!((g - price).abs() < 1e-8, "{g} vs {price}");
}
