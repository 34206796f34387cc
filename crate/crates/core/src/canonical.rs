//! Canonical representation: a cone-preserving linear change of coordinates
//! `y = Lambda x` under which the diffusion matrix becomes block-diagonal,
//!
//! ```text
//! Lambda a(Lambda^{-1} y) Lambda^T = [ diag(y_1..y_q, 0..0)   0                      ]
//!                                    [ 0                      p + sum_i y_i pi_i     ]
//! ```
//!
//! `Lambda` is the product of a shear `[[I_m, 0], [D, I_n]]` with a positive
//! scaling and permutation of the first `m` axes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::params::{AffineParams, ShortRateSpec, StateVector};

/// Diagonal entries `alpha_{i,ii}` at or below this are treated as zero.
pub const DEGENERATE_DIAG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTransform {
    /// `y = Lambda x`.
    pub lambda: DMatrix<f64>,
    /// Number of nonnegative coordinates carrying their own diffusion.
    pub q: usize,
    /// Parameters of the transformed process `Y = Lambda X`.
    pub transformed: AffineParams,
    /// `perm[k]` is the original index of transformed coordinate `k < m`.
    pub perm: Vec<usize>,
    lambda_inv: DMatrix<f64>,
}

impl CanonicalTransform {
    pub fn lambda_inv(&self) -> &DMatrix<f64> {
        &self.lambda_inv
    }

    pub fn to_canonical(&self, x: &StateVector) -> StateVector {
        StateVector(&self.lambda * &x.0)
    }

    pub fn from_canonical(&self, y: &StateVector) -> StateVector {
        StateVector(&self.lambda_inv * &y.0)
    }

    /// Short rate in the new coordinates: `c + gamma^T x = c + (Lambda^{-T} gamma)^T y`.
    pub fn short_rate(&self, srs: &ShortRateSpec) -> ShortRateSpec {
        ShortRateSpec {
            c: srs.c,
            gamma: self.lambda_inv.transpose() * &srs.gamma,
        }
    }
}

/// Pushes admissible parameters through `y = lambda x`, where `lambda` maps
/// the cone onto itself and its `II` block is a scaled permutation.
fn push_forward(p: &AffineParams, lambda: &DMatrix<f64>, lambda_inv: &DMatrix<f64>) -> AffineParams {
    let m = p.m;
    let lt = lambda.transpose();
    let a = lambda * &p.a * &lt;
    let conj: Vec<DMatrix<f64>> = p.alphas.iter().map(|al| lambda * al * &lt).collect();
    let alphas = (0..m)
        .map(|k| {
            let mut acc = DMatrix::zeros(p.dim(), p.dim());
            for (i, ci) in conj.iter().enumerate() {
                let w = lambda_inv[(i, k)];
                if w != 0.0 {
                    acc += ci * w;
                }
            }
            acc
        })
        .collect();
    AffineParams {
        m,
        n: p.n,
        a,
        alphas,
        b: lambda * &p.b,
        bmat: lambda * &p.bmat * lambda_inv,
    }
}

/// Brings admissible parameters into canonical block-diagonal form.
///
/// Nonnegative axes with `alpha_{i,ii} > tol` are moved to the front (stable
/// order within both groups) and rescaled so that `alpha_{i,ii} = 1`; the shear
/// `D` with columns `-alpha_{i,iJ}` then removes the `IJ` blocks. Applying the
/// transform to its own output yields the identity.
pub fn canonical_transform(p: &AffineParams, tol: f64) -> Result<CanonicalTransform> {
    p.ensure_admissible()?;
    let (m, n, d) = (p.m, p.n, p.dim());
    let tol = tol.max(DEGENERATE_DIAG_TOL);

    let diag: Vec<f64> = (0..m).map(|i| p.alphas[i][(i, i)]).collect();
    let mut perm: Vec<usize> = (0..m).filter(|&i| diag[i] > tol).collect();
    let q = perm.len();
    perm.extend((0..m).filter(|&i| diag[i] <= tol));

    let mut sp = DMatrix::<f64>::identity(d, d);
    let mut sp_inv = DMatrix::<f64>::identity(d, d);
    for k in 0..m {
        sp[(k, k)] = 0.0;
        sp_inv[(k, k)] = 0.0;
    }
    for (k, &orig) in perm.iter().enumerate() {
        let s = if k < q { 1.0 / diag[orig] } else { 1.0 };
        sp[(k, orig)] = s;
        sp_inv[(orig, k)] = 1.0 / s;
    }
    let scaled = push_forward(p, &sp, &sp_inv);

    let mut shear = DMatrix::<f64>::identity(d, d);
    let mut shear_inv = DMatrix::<f64>::identity(d, d);
    for i in 0..q {
        for j in 0..n {
            let delta = -scaled.alphas[i][(m + j, i)];
            shear[(m + j, i)] = delta;
            shear_inv[(m + j, i)] = -delta;
        }
    }
    let mut transformed = push_forward(&scaled, &shear, &shear_inv);

    // The shear cancels the IJ blocks exactly in exact arithmetic; clear the
    // rounding residue so downstream block-diagonality checks are crisp.
    let clear = |mat: &mut DMatrix<f64>| {
        for i in 0..m {
            for j in 0..d {
                if i != j {
                    mat[(i, j)] = 0.0;
                    mat[(j, i)] = 0.0;
                }
            }
        }
    };
    for al in transformed.alphas.iter_mut() {
        clear(al);
    }
    clear(&mut transformed.a);
    for i in 0..q {
        transformed.alphas[i][(i, i)] = 1.0;
    }

    let lambda = &shear * &sp;
    let lambda_inv = &sp_inv * &shear_inv;
    if transformed.validate(crate::params::default_psd_tol(&transformed))?.passed() {
        Ok(CanonicalTransform {
            lambda,
            q,
            transformed,
            perm,
            lambda_inv,
        })
    } else {
        Err(Error::NotAdmissible(
            transformed
                .validate(crate::params::default_psd_tol(&transformed))?
                .violations,
        ))
    }
}

/// Checks that `lambda` maps the cone `R+^m x R^n` onto itself: its `IJ`
/// block vanishes and its `II` block is a positively scaled permutation.
pub fn preserves_cone(lambda: &DMatrix<f64>, m: usize) -> bool {
    let d = lambda.nrows();
    for i in 0..m {
        for j in m..d {
            if lambda[(i, j)] != 0.0 {
                return false;
            }
        }
        let row: Vec<f64> = (0..m).map(|j| lambda[(i, j)]).collect();
        if row.iter().any(|&v| v < 0.0) || row.iter().filter(|&&v| v > 0.0).count() != 1 {
            return false;
        }
    }
    true
}
