//! Admissible parameters, the canonical change of coordinates and the
//! diffusion square root.

mod common;

use affinekit::canonical::{canonical_transform, preserves_cone};
use affinekit::params::{random_admissible, random_state};
use affinekit::rho::rho_factor;
use affinekit::{AffineParams, Error, StateVector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_parameters_pass_validation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (m, n) = (rng.random_range(0..4usize), rng.random_range(0..4usize));
        if m + n == 0 {
            continue;
        }
        let p = random_admissible(&mut rng, m, n);
        p.ensure_admissible().unwrap();
    }
}

#[test]
fn diffusion_matrix_is_psd_on_state_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let (m, n) = (rng.random_range(1..4usize), rng.random_range(0..3usize));
        let p = random_admissible(&mut rng, m, n);
        let x = random_state(&mut rng, m, n);
        let a = p.diffusion_matrix(&x).unwrap();
        let mut direct = p.a.clone();
        for i in 0..m {
            direct += &p.alphas[i] * x.0[i];
        }
        assert!((&a - &direct).abs().max() < 1e-14);
        let min = common::jacobi_eigenvalues(&a).into_iter().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-12, "min eigenvalue {min}");
    }
}

#[test]
fn drift_is_affine() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_admissible(&mut rng, 2, 2);
    let x = random_state(&mut rng, 2, 2);
    let got = p.drift(&x).unwrap();
    for i in 0..4 {
        let want = p.b[i] + (0..4).map(|j| p.bmat[(i, j)] * x.0[j]).sum::<f64>();
        assert!((got[i] - want).abs() < 1e-14);
    }
}

#[test]
fn inward_drift_is_required_on_the_boundary() {
    let mut p = AffineParams::zeros(2, 1);
    p.alphas[0][(0, 0)] = 1.0;
    p.bmat[(0, 1)] = -0.1;
    let err = p.ensure_admissible().unwrap_err();
    assert!(matches!(err, Error::NotAdmissible(_)));
    let mut q = AffineParams::zeros(1, 1);
    q.bmat[(0, 1)] = 0.3;
    assert!(matches!(q.ensure_admissible(), Err(Error::NotAdmissible(_))));
}

#[test]
fn state_vector_checks_cone() {
    assert!(StateVector::new(vec![0.0, -1.0]).check(1).is_ok());
    assert!(StateVector::new(vec![-1e-3, 1.0]).check(1).is_err());
}

#[test]
fn canonical_transform_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let (m, n) = (rng.random_range(1..4usize), rng.random_range(0..3usize));
        let p = random_admissible(&mut rng, m, n);
        let ct = canonical_transform(&p, 1e-12).unwrap();
        assert!(preserves_cone(&ct.lambda, m));
        assert!(ct.transformed.is_block_diagonal(1e-10));
        ct.transformed.ensure_admissible().unwrap();
        let eye = DMatrix::<f64>::identity(m + n, m + n);
        assert!((&ct.lambda * ct.lambda_inv() - &eye).abs().max() < 1e-12);

        // Y = Lambda X has diffusion Lambda a(x) Lambda^T and drift Lambda b(x).
        let x = random_state(&mut rng, m, n);
        let y = ct.to_canonical(&x);
        y.check(m).unwrap();
        let a_x = &ct.lambda * p.diffusion_matrix(&x).unwrap() * ct.lambda.transpose();
        let a_y = ct.transformed.diffusion_matrix(&y).unwrap();
        assert!((&a_x - &a_y).abs().max() < 1e-10 * (1.0 + a_x.abs().max()));
        let b_x = &ct.lambda * p.drift(&x).unwrap();
        assert!((b_x - ct.transformed.drift(&y).unwrap()).abs().max() < 1e-10);
        assert!((ct.from_canonical(&y).0 - &x.0).abs().max() < 1e-12);

        // Idempotent on canonical input.
        let again = canonical_transform(&ct.transformed, 1e-12).unwrap();
        assert!((&again.lambda - &eye).abs().max() < 1e-12);
    }
}

#[test]
fn rho_squares_to_diffusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (m, n) = (rng.random_range(0..4usize), rng.random_range(0..3usize));
        if m + n == 0 {
            continue;
        }
        let p = random_admissible(&mut rng, m, n);
        let canon = if m > 0 { canonical_transform(&p, 1e-12).unwrap().transformed } else { p };
        let x = random_state(&mut rng, m, n);
        let r = rho_factor(&canon, &x, 1e-12).unwrap();
        let a = canon.diffusion_matrix(&x).unwrap();
        assert!((&r * r.transpose() - &a).abs().max() < 1e-10 * (1.0 + a.abs().max()));
        for i in 0..m {
            for j in 0..m + n {
                if i != j {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
        }
    }
}
