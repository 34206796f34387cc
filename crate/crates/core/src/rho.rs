//! Constructive square root `rho(x)` of the diffusion matrix for
//! block-diagonal parameters:
//! `rho_II = diag(sqrt(alpha_{i,ii} x_i))`, `rho_IJ = rho_JI = 0` and `rho_JJ`
//! the lower-triangular semidefinite Cholesky factor of
//! `a_JJ + sum_i x_i alpha_{i,JJ}`.
//!
//! Negative `x_i` are replaced by their positive part, which is the continuous
//! extension used by the simulation schemes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::semidefinite_cholesky_into;
use crate::params::{AffineParams, StateVector};

pub fn rho_factor(p: &AffineParams, x: &StateVector, tol: f64) -> Result<DMatrix<f64>> {
    if x.dim() != p.dim() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, parameters have {}",
            x.dim(),
            p.dim()
        )));
    }
    let ws = RhoWorkspace::new(p, tol)?;
    let mut buf = vec![0.0; p.n * p.n];
    let mut diag = vec![0.0; p.m];
    ws.factor(x.0.as_slice(), &mut diag, &mut buf)?;
    let (m, n, d) = (p.m, p.n, p.dim());
    let mut out = DMatrix::zeros(d, d);
    for i in 0..m {
        out[(i, i)] = diag[i];
    }
    for j in 0..n {
        for i in 0..n {
            out[(m + i, m + j)] = buf[i + j * n];
        }
    }
    Ok(out)
}

/// Precomputed `JJ` blocks for repeated factorisation along simulated paths.
#[derive(Debug, Clone)]
pub(crate) struct RhoWorkspace {
    m: usize,
    n: usize,
    tol: f64,
    alpha_diag: Vec<f64>,
    a_jj: Vec<f64>,
    alpha_jj: Vec<Vec<f64>>,
    /// Indices `i` whose `alpha_{i,JJ}` is nonzero.
    active: Vec<usize>,
    scratch: Vec<f64>,
}

impl RhoWorkspace {
    pub(crate) fn new(p: &AffineParams, tol: f64) -> Result<Self> {
        p.check_dims()?;
        if !p.is_block_diagonal(tol) {
            return Err(Error::NotBlockDiagonal(
                "run canonical_transform before factorising".into(),
            ));
        }
        let (m, n) = (p.m, p.n);
        let block = |mat: &DMatrix<f64>| -> Vec<f64> {
            let mut v = vec![0.0; n * n];
            for j in 0..n {
                for i in 0..n {
                    v[i + j * n] = mat[(m + i, m + j)];
                }
            }
            v
        };
        let alpha_jj: Vec<Vec<f64>> = p.alphas.iter().map(block).collect();
        let active = (0..m)
            .filter(|&i| alpha_jj[i].iter().any(|v| *v != 0.0))
            .collect();
        Ok(RhoWorkspace {
            m,
            n,
            tol,
            alpha_diag: (0..m).map(|i| p.alphas[i][(i, i)]).collect(),
            a_jj: block(&p.a),
            alpha_jj,
            active,
            scratch: vec![0.0; n * n],
        })
    }

    /// Writes `rho_II` diagonal into `diag` and column-major `rho_JJ` into `jj`.
    pub(crate) fn factor(&self, x: &[f64], diag: &mut [f64], jj: &mut [f64]) -> Result<()> {
        let mut scratch = self.scratch.clone();
        self.factor_with(x, diag, jj, &mut scratch)
    }

    pub(crate) fn factor_with(
        &self,
        x: &[f64],
        diag: &mut [f64],
        jj: &mut [f64],
        scratch: &mut [f64],
    ) -> Result<()> {
        for i in 0..self.m {
            diag[i] = (self.alpha_diag[i] * x[i].max(0.0)).sqrt();
        }
        if self.n == 0 {
            return Ok(());
        }
        scratch.copy_from_slice(&self.a_jj);
        for &i in &self.active {
            let xi = x[i].max(0.0);
            if xi != 0.0 {
                for (s, a) in scratch.iter_mut().zip(&self.alpha_jj[i]) {
                    *s += xi * a;
                }
            }
        }
        semidefinite_cholesky_into(scratch, self.n, jj, self.tol)
    }
}
