//! Closed-form model transforms against the generic Riccati integrator, and
//! the variance-form Heston mapping against simulated moments.

mod common;

use affinekit::mc::{simulate_canonical, Scheme, SimConfig};
use affinekit::models::{AffineModel, CirParams, HestonParams, VarianceForm, VasicekParams};
use affinekit::pricing::ShortRateModel;
use affinekit::riccati::{integrate, DEFAULT_ATOL, DEFAULT_RTOL};
use affinekit::{Complex64, PhiPsi, RiccatiSystem, StateVector};

const TIMES: [f64; 5] = [0.1, 0.5, 1.0, 5.0, 30.0];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn assert_close(a: &PhiPsi, b: &PhiPsi, tol: f64, what: &str) {
    assert!((a.phi - b.phi).norm() < tol, "{what}: phi {} vs {}", a.phi, b.phi);
    for (x, y) in a.psi.iter().zip(&b.psi) {
        assert!((x - y).norm() < tol, "{what}: psi {x} vs {y}");
    }
}

#[test]
fn vasicek_matches_integrator() {
    for v in [common::vasicek(), VasicekParams::new(0.02, 0.0, 0.15, 0.03).unwrap(), VasicekParams::new(-0.01, 0.3, 0.05, 0.0).unwrap()] {
        let (p, srs, _) = v.as_affine();
        let sys = RiccatiSystem::discounted(p, srs).unwrap();
        for &t in &TIMES {
            if v.beta > 0.0 && t > 5.0 {
                continue;
            }
            for u in [c(0.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0), c(0.0, 1.0), c(-0.3, -2.0)] {
                let got = v.phi_psi(t, u);
                let want = integrate(&sys, &[u], t, DEFAULT_RTOL, DEFAULT_ATOL).unwrap();
                let scale = 1.0 + want.phi.norm();
                assert_close(&got, &want, 1e-8 * scale, &format!("vasicek {v:?} t={t} u={u}"));
            }
        }
    }
}

#[test]
fn cir_matches_integrator() {
    let models = [common::cir(), CirParams::new(0.05, 0.0, 0.2, 0.03).unwrap(), CirParams::new(0.08, -0.9, 0.0, 0.05).unwrap()];
    for cp in models {
        let (p, srs, _) = cp.as_affine();
        let sys = RiccatiSystem::discounted(p, srs).unwrap();
        for &t in &TIMES {
            for u in [c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(-0.5, 3.0)] {
                let got = cp.phi_psi(t, u).unwrap();
                let want = integrate(&sys, &[u], t, DEFAULT_RTOL, DEFAULT_ATOL).unwrap();
                assert_close(&got, &want, 1e-8, &format!("cir {cp:?} t={t} u={u}"));
                if u.re <= 0.0 {
                    assert!(got.psi[0].re <= 1e-14);
                    assert!(got.transform_at(&[cp.r0]).norm() <= 1.0);
                }
            }
        }
    }
}

#[test]
fn heston_matches_integrator() {
    let models = [common::heston(), HestonParams::new(0.05, -1.0, 0.3, -0.7, 0.02, 0.04, 0.0).unwrap(), HestonParams::new(0.02, -2.0, 0.0, 0.5, 0.01, 0.02, 0.0).unwrap()];
    for hp in models {
        let (p, _, _) = hp.as_affine();
        let sys = RiccatiSystem::plain(p).unwrap();
        for &t in &TIMES {
            for (u1, u2) in [
                (c(0.0, 0.0), c(0.0, 0.0)),
                (c(0.0, 0.0), c(1.0, 0.0)),
                (c(-1.0, 0.0), c(0.0, 0.0)),
                (c(0.0, 0.0), c(0.0, 1.0)),
                (c(0.0, 1.0), c(0.0, 0.0)),
                (c(0.0, 0.0), c(1.5, -2.0)),
                (c(-0.2, 0.5), c(0.3, 4.0)),
            ] {
                let got = hp.phi_psi(t, u1, u2).unwrap();
                let want = integrate(&sys, &[u1, u2], t, DEFAULT_RTOL, DEFAULT_ATOL).unwrap();
                assert_close(&got, &want, 1e-8 * (1.0 + want.phi.norm()), &format!("heston {hp:?} t={t} u=({u1},{u2})"));
            }
        }
    }
}

#[test]
fn heston_discounted_is_shifted_plain() {
    let hp = common::heston();
    let (p, srs, _) = hp.as_affine();
    let sys = RiccatiSystem::discounted(p, srs).unwrap();
    for &t in &TIMES {
        let u = [c(0.0, 0.0), c(0.5, 1.0)];
        let got = hp.phi_psi(t, u[0], u[1]).unwrap();
        let want = integrate(&sys, &u, t, DEFAULT_RTOL, DEFAULT_ATOL).unwrap();
        assert!((got.phi - hp.r * t - want.phi).norm() < 1e-8 * (1.0 + want.phi.norm()));
    }
}

#[test]
fn heston_martingale_exponents() {
    let hp = common::heston();
    for &t in &TIMES {
        let pp = hp.phi_psi(t, c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((pp.phi - hp.r * t).norm() < 1e-10);
        assert!(pp.psi[0].norm() < 1e-10);
        assert!((pp.psi[1] - 1.0).norm() < 1e-10);
    }
}

#[test]
fn vasicek_bond_price_by_finite_difference() {
    // -d/dT log P(0, T) at T -> 0 is the short rate; P solves the pricing PDE.
    let v = common::vasicek();
    let h = 1e-5;
    let fwd = -(v.bond_price(v.r0, h).ln() - v.bond_price(v.r0, 0.0).ln()) / h;
    assert!((fwd - v.r0).abs() < 1e-5);
    // Bond PDE: P_tau = (b + beta r) P_r + sigma^2/2 P_rr - r P.
    let (tau, r, dr) = (3.0, 0.04, 1e-4);
    let pt = (v.bond_price(r, tau + 1e-5) - v.bond_price(r, tau - 1e-5)) / 2e-5;
    let pr = (v.bond_price(r + dr, tau) - v.bond_price(r - dr, tau)) / (2.0 * dr);
    let prr = (v.bond_price(r + dr, tau) - 2.0 * v.bond_price(r, tau) + v.bond_price(r - dr, tau)) / (dr * dr);
    let rhs = (v.b + v.beta * r) * pr + 0.5 * v.sigma * v.sigma * prr - r * v.bond_price(r, tau);
    assert!((pt - rhs).abs() < 1e-6, "{pt} vs {rhs}");
}

#[test]
fn vasicek_forward_law_matches_generic_forward_char() {
    let v = common::vasicek();
    let (p, srs, x0) = v.as_affine();
    let generic = ShortRateModel::generic(&p, &srs).unwrap();
    let (t, big_t, s) = (0.5, 2.0, 4.5);
    for meas in [big_t, s] {
        let (mean, var) = v.forward_gaussian(x0.0[0], t, big_t, meas).unwrap();
        for y in [0.3, 1.0, 5.0] {
            let want = (c(0.0, y * mean) - 0.5 * var * y * y).exp();
            let got = generic.forward_char(&x0, t, big_t, meas, &[c(0.0, y)]).unwrap();
            assert!((got - want).norm() < 1e-9, "S={meas} y={y}: {got} vs {want}");
        }
    }
}

#[test]
fn vasicek_forward_law_by_weighted_simulation() {
    // Q^S expectation of r(T) = E[D(T) P(T, S) r(T)] / P(0, S).
    let v = common::vasicek();
    let (p, _, x0) = v.as_affine();
    let (big_t, s) = (1.0, 3.0);
    let cfg = SimConfig::new(100_000, 200, 5, Scheme::EulerFullTruncation);
    let ens = simulate_canonical(&p, &x0, big_t, &cfg).unwrap();
    let dt = big_t / 200.0;
    let mut num = Vec::with_capacity(ens.n_paths());
    let mut den = Vec::with_capacity(ens.n_paths());
    for i in 0..ens.n_paths() {
        let mut integral = 0.0;
        for k in 0..200 {
            integral += 0.5 * dt * (ens.state(i, k)[0] + ens.state(i, k + 1)[0]);
        }
        let r_t = ens.terminal(i)[0];
        let w = (-integral).exp() * v.bond_price(r_t, s - big_t);
        num.push(w * r_t);
        den.push(w);
    }
    let n = num.len() as f64;
    let (sn, sd): (f64, f64) = (num.iter().sum(), den.iter().sum());
    let est = sn / sd;
    // Ratio-estimator standard error via the delta method.
    let resid: f64 = num.iter().zip(&den).map(|(a, b)| (a - est * b).powi(2)).sum::<f64>() / (n - 1.0);
    let se = resid.sqrt() / (sd / n) / n.sqrt();
    let (mean, _) = v.forward_gaussian(x0.0[0], 0.0, big_t, s).unwrap();
    assert!((est - mean).abs() < 4.0 * se + 2e-4, "{est} vs {mean} (se {se})");
}

#[test]
fn cir_forward_char_matches_generic() {
    let cp = common::cir();
    let (p, srs, x0) = cp.as_affine();
    let generic = ShortRateModel::generic(&p, &srs).unwrap();
    let (t, big_t, s) = (0.0, 1.0, 2.0);
    for meas in [big_t, s] {
        let f = cp.forward_chisq(x0.0[0], t, big_t, meas).unwrap();
        for y in [0.5, 2.0, 10.0, 40.0] {
            // r(T) = c1 chi2 / 2, so E[e^{i y r(T)}] is the chi2 cf at y c1 / 2.
            let want = f.char_fn(c(0.0, y));
            let got = generic.forward_char(&x0, t, big_t, meas, &[c(0.0, y)]).unwrap();
            assert!((got - want).norm() < 1e-9, "S={meas} y={y}: {got} vs {want}");
        }
    }
}

#[test]
fn as_affine_reproduces_model_covariances() {
    let hp = common::heston();
    let (p, _, _) = hp.as_affine();
    let x = StateVector::new(vec![0.3, -0.2]);
    let a = p.diffusion_matrix(&x).unwrap();
    let x1 = 0.3;
    assert!((a[(0, 0)] - hp.sigma * hp.sigma * 2.0 * x1).abs() < 1e-15);
    assert!((a[(0, 1)] - hp.rho * hp.sigma * 2.0 * x1).abs() < 1e-15);
    assert!((a[(1, 1)] - 2.0 * x1).abs() < 1e-15);
    let drift = p.drift(&x).unwrap();
    assert!((drift[0] - (hp.k + hp.kappa * x1)).abs() < 1e-15);
    assert!((drift[1] - (hp.r - x1)).abs() < 1e-15);

    let cp = common::cir();
    let (p, _, _) = cp.as_affine();
    let a = p.diffusion_matrix(&StateVector::new(vec![0.5])).unwrap();
    assert!((a[(0, 0)] - cp.sigma * cp.sigma * 0.5).abs() < 1e-15);
}

#[test]
fn variance_form_moments_by_simulation() {
    let vf = VarianceForm { kappa_bar: 2.0, eta: 0.04, sigma_v: 0.3, v0: 0.02, r: 0.03, rho: -0.5 };
    let hp = HestonParams::from_variance_form(&vf).unwrap();
    let (p, _, x0) = hp.as_affine();
    let big_t = 1.0;
    let cfg = SimConfig::new(100_000, 400, 9, Scheme::EulerFullTruncation);
    let ens = simulate_canonical(&p, &x0, big_t, &cfg).unwrap();
    let n = ens.n_paths() as f64;
    let v: Vec<f64> = (0..ens.n_paths()).map(|i| 2.0 * ens.terminal(i)[0]).collect();
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let e = (-vf.kappa_bar * big_t).exp();
    let want_mean = vf.eta + (vf.v0 - vf.eta) * e;
    let s2 = vf.sigma_v * vf.sigma_v;
    let want_var = vf.v0 * s2 / vf.kappa_bar * (e - e * e) + vf.eta * s2 / (2.0 * vf.kappa_bar) * (1.0 - e).powi(2);
    let se_mean = (var / n).sqrt();
    assert!((mean - want_mean).abs() < 4.0 * se_mean, "{mean} vs {want_mean}");
    // Variance of the sample variance is about 2 var^2 / n for light tails;
    // allow a wide band since v is skewed.
    assert!((var - want_var).abs() < 0.03 * want_var, "{var} vs {want_var}");
    let s: Vec<f64> = (0..ens.n_paths()).map(|i| ens.terminal(i)[1].exp()).collect();
    let ms = s.iter().sum::<f64>() / n;
    let ss = (s.iter().map(|x| (x - ms).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((ms - (vf.r * big_t).exp()).abs() < 4.0 * ss);
    let back = hp.to_variance_form();
    assert!((back.kappa_bar - vf.kappa_bar).abs() < 1e-15 && (back.sigma_v - vf.sigma_v).abs() < 1e-15);
}
