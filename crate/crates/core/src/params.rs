//! Admissible parameter sets, state vectors and short-rate specifications.
//!
//! Coordinates `0..m` form the nonnegative block `I`, coordinates `m..m+n` the
//! real block `J`. The diffusion matrix and drift are affine in the state,
//!
//! ```text
//! a(x) = a + sum_{i in I} x_i alpha_i,      b(x) = b + B x,
//! ```
//!
//! where the columns of `B` are the drift loadings `beta_i`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_abs, min_eigenvalue};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    pub m: usize,
    pub n: usize,
    /// Constant part of the diffusion matrix (`d x d`).
    pub a: DMatrix<f64>,
    /// State loadings `alpha_1..alpha_m` of the diffusion matrix.
    pub alphas: Vec<DMatrix<f64>>,
    /// Constant drift.
    pub b: DVector<f64>,
    /// Linear drift matrix; column `i` is `beta_i`.
    pub bmat: DMatrix<f64>,
}

/// A point of the state space `R+^m x R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub DVector<f64>);

/// Affine short rate `r = c + gamma^T x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortRateSpec {
    pub c: f64,
    pub gamma: DVector<f64>,
}

/// Outcome of [`AffineParams::validate`]: every violated condition with the
/// offending indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, msg: String) {
        self.violations.push(msg);
    }
}

impl StateVector {
    pub fn new(x: Vec<f64>) -> Self {
        StateVector(DVector::from_vec(x))
    }

    pub fn zeros(d: usize) -> Self {
        StateVector(DVector::zeros(d))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Checks `x_i >= 0` on the first `m` coordinates.
    pub fn check(&self, m: usize) -> Result<()> {
        for i in 0..m.min(self.dim()) {
            if !(self.0[i] >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "state coordinate x_{} = {} must be nonnegative",
                    i + 1,
                    self.0[i]
                )));
            }
        }
        Ok(())
    }
}

impl ShortRateSpec {
    pub fn new(c: f64, gamma: Vec<f64>) -> Self {
        ShortRateSpec {
            c,
            gamma: DVector::from_vec(gamma),
        }
    }

    /// `r = 0`, i.e. no discounting.
    pub fn zero(d: usize) -> Self {
        ShortRateSpec {
            c: 0.0,
            gamma: DVector::zeros(d),
        }
    }

    pub fn rate(&self, x: &[f64]) -> f64 {
        self.c + self.gamma.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>()
    }
}

/// Default scale-aware PSD tolerance `1e-10 * (1 + max |entry|)` over all
/// diffusion matrices of `p`.
pub fn default_psd_tol(p: &AffineParams) -> f64 {
    let scale = p
        .alphas
        .iter()
        .map(max_abs)
        .fold(max_abs(&p.a), f64::max);
    1e-10 * (1.0 + scale)
}

impl AffineParams {
    /// All-zero parameters on `R+^m x R^n`.
    pub fn zeros(m: usize, n: usize) -> Self {
        let d = m + n;
        AffineParams {
            m,
            n,
            a: DMatrix::zeros(d, d),
            alphas: vec![DMatrix::zeros(d, d); m],
            b: DVector::zeros(d),
            bmat: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Structural size checks, independent of admissibility.
    pub fn check_dims(&self) -> Result<()> {
        let d = self.dim();
        let sq = |name: &str, mat: &DMatrix<f64>| -> Result<()> {
            if mat.nrows() != d || mat.ncols() != d {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            Ok(())
        };
        sq("a", &self.a)?;
        sq("B", &self.bmat)?;
        if self.alphas.len() != self.m {
            return Err(Error::Dimension(format!(
                "{} alpha matrices given for m = {}",
                self.alphas.len(),
                self.m
            )));
        }
        for (i, al) in self.alphas.iter().enumerate() {
            sq(&format!("alpha_{}", i + 1), al)?;
        }
        if self.b.len() != d {
            return Err(Error::Dimension(format!("b has length {}, expected {d}", self.b.len())));
        }
        Ok(())
    }

    /// Checks every admissibility condition. Size errors are returned as
    /// `Err`, admissibility failures as a report with `passed() == false`.
    pub fn validate(&self, tol_psd: f64) -> Result<ValidationReport> {
        self.check_dims()?;
        let (m, d) = (self.m, self.dim());
        let mut rep = ValidationReport::default();

        let psd = |name: &str, mat: &DMatrix<f64>, rep: &mut ValidationReport| {
            let asym = asymmetry(mat);
            if asym > tol_psd {
                rep.push(format!("{name} is not symmetric (max asymmetry {asym:e})"));
            }
            let ev = min_eigenvalue(mat);
            if ev < -tol_psd {
                rep.push(format!("{name} is not positive semi-definite (min eigenvalue {ev:e})"));
            }
        };
        psd("a", &self.a, &mut rep);
        for (i, al) in self.alphas.iter().enumerate() {
            psd(&format!("alpha_{}", i + 1), al, &mut rep);
        }

        for k in 0..m {
            for l in 0..d {
                if self.a[(k, l)].abs() > tol_psd || self.a[(l, k)].abs() > tol_psd {
                    rep.push(format!(
                        "a_II = 0 (and a_IJ = 0) violated at ({}, {})",
                        k + 1,
                        l + 1
                    ));
                }
            }
        }

        for (i, al) in self.alphas.iter().enumerate() {
            for k in (0..m).filter(|&k| k != i) {
                for l in 0..d {
                    if al[(k, l)].abs() > tol_psd || al[(l, k)].abs() > tol_psd {
                        rep.push(format!(
                            "alpha_{},kl = 0 for k in I\\{{{}}} violated at k = {}, l = {}",
                            i + 1,
                            i + 1,
                            k + 1,
                            l + 1
                        ));
                    }
                }
            }
        }

        for i in 0..m {
            if self.b[i] < 0.0 {
                rep.push(format!("b_I >= 0 violated: b_{} = {}", i + 1, self.b[i]));
            }
        }

        for i in 0..m {
            for j in m..d {
                if self.bmat[(i, j)] != 0.0 {
                    rep.push(format!(
                        "B_IJ = 0 violated at ({}, {}) = {}",
                        i + 1,
                        j + 1,
                        self.bmat[(i, j)]
                    ));
                }
            }
            for k in (0..m).filter(|&k| k != i) {
                if self.bmat[(i, k)] < 0.0 {
                    rep.push(format!(
                        "B_II off-diagonal >= 0 violated at ({}, {}) = {}",
                        i + 1,
                        k + 1,
                        self.bmat[(i, k)]
                    ));
                }
            }
        }

        // Folds `a_II = 0` violations reported per (k, l) and (l, k) pair into one line.
        rep.violations.dedup();
        Ok(rep)
    }

    /// [`Self::validate`] with [`default_psd_tol`], turned into an error.
    pub fn ensure_admissible(&self) -> Result<()> {
        let rep = self.validate(default_psd_tol(self))?;
        if rep.passed() {
            Ok(())
        } else {
            Err(Error::NotAdmissible(rep.violations))
        }
    }

    fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "state has dimension {}, parameters have {}",
                x.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `a(x) = a + sum_{i in I} x_i alpha_i`.
    pub fn diffusion_matrix(&self, x: &StateVector) -> Result<DMatrix<f64>> {
        self.check_state(x)?;
        let mut out = self.a.clone();
        for (i, al) in self.alphas.iter().enumerate() {
            out += al * x.0[i];
        }
        Ok(out)
    }

    /// `b(x) = b + B x`.
    pub fn drift(&self, x: &StateVector) -> Result<DVector<f64>> {
        self.check_state(x)?;
        Ok(&self.b + &self.bmat * &x.0)
    }

    /// True when `a` and every `alpha_i` have vanishing `IJ` blocks and
    /// diagonal `II` blocks, i.e. the diffusion matrix is block-diagonal.
    pub fn is_block_diagonal(&self, tol: f64) -> bool {
        let (m, d) = (self.m, self.dim());
        let ok = |mat: &DMatrix<f64>| {
            for i in 0..m {
                for j in 0..d {
                    if i != j && (mat[(i, j)].abs() > tol || mat[(j, i)].abs() > tol) {
                        return false;
                    }
                }
            }
            true
        };
        ok(&self.a) && self.alphas.iter().all(ok)
    }
}

/// Draws a random admissible parameter set on `R+^m x R^n` with entries of
/// order one. Roughly a third of the `alpha_{i,ii}` are set to zero so that
/// degenerate (`q < m`) configurations are exercised as well.
pub fn random_admissible<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> AffineParams {
    let d = m + n;
    let mut p = AffineParams::zeros(m, n);

    let psd = |rng: &mut R, k: usize| -> DMatrix<f64> {
        let g = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        &g * g.transpose()
    };

    if n > 0 {
        let ajj = psd(rng, n);
        p.a.view_mut((m, m), (n, n)).copy_from(&ajj);
    }
    for i in 0..m {
        let degenerate = rng.random_bool(1.0 / 3.0);
        let k = n + 1;
        let mut blk = psd(rng, k);
        if degenerate {
            for j in 0..k {
                blk[(0, j)] = 0.0;
                blk[(j, 0)] = 0.0;
            }
        }
        // Embed into rows/columns {i} U J.
        let idx: Vec<usize> = std::iter::once(i).chain(m..d).collect();
        let al = &mut p.alphas[i];
        for (r, &gi) in idx.iter().enumerate() {
            for (c, &gj) in idx.iter().enumerate() {
                al[(gi, gj)] = blk[(r, c)];
            }
        }
    }
    for i in 0..d {
        p.b[i] = if i < m {
            rng.random_range(0.0..1.0)
        } else {
            rng.random_range(-1.0..1.0)
        };
    }
    for i in 0..d {
        for j in 0..d {
            p.bmat[(i, j)] = if i < m && j >= m {
                0.0
            } else if i < m && j < m && i != j {
                rng.random_range(0.0..0.5)
            } else {
                rng.random_range(-1.0..0.5)
            };
        }
    }
    p
}

/// Draws a point of `R+^m x R^n`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> StateVector {
    StateVector(DVector::from_fn(m + n, |i, _| {
        if i < m {
            rng.random_range(0.0..2.0)
        } else {
            rng.random_range(-2.0..2.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn heston_like(sigma: f64, rho: f64, k: f64, r: f64, kappa: f64) -> AffineParams {
        let mut p = AffineParams::zeros(1, 1);
        p.alphas[0] = DMatrix::from_row_slice(
            2,
            2,
            &[2.0 * sigma * sigma, 2.0 * rho * sigma, 2.0 * rho * sigma, 2.0],
        );
        p.b = DVector::from_vec(vec![k, r]);
        p.bmat = DMatrix::from_row_slice(2, 2, &[kappa, 0.0, -1.0, 0.0]);
        p
    }

    #[test]
    fn heston_mapping_is_admissible() {
        let p = heston_like(0.1, 0.5, 0.02, 0.01, -2.0);
        let rep = p.validate(1e-10).unwrap();
        assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn zero_parameters_are_admissible() {
        for (m, n) in [(0, 1), (1, 0), (2, 3)] {
            assert!(AffineParams::zeros(m, n).validate(1e-10).unwrap().passed());
        }
    }

    #[test]
    fn nonzero_a_ii_is_named() {
        let mut p = AffineParams::zeros(1, 1);
        p.a = DMatrix::identity(2, 2);
        let rep = p.validate(1e-10).unwrap();
        assert!(!rep.passed());
        assert!(rep.violations.iter().any(|v| v.contains("a_II = 0")), "{:?}", rep);
    }

    #[test]
    fn each_condition_reported() {
        let mut p = AffineParams::zeros(2, 1);
        p.b[0] = -0.1;
        p.bmat[(0, 2)] = 0.3;
        p.bmat[(1, 0)] = -0.2;
        p.alphas[0][(1, 1)] = 1.0;
        let rep = p.validate(1e-10).unwrap();
        let joined = rep.violations.join("\n");
        assert!(joined.contains("b_I >= 0 violated: b_1"));
        assert!(joined.contains("B_IJ = 0 violated at (1, 3)"));
        assert!(joined.contains("B_II off-diagonal >= 0 violated at (2, 1)"));
        assert!(joined.contains("alpha_1,kl = 0"));
    }

    #[test]
    fn non_psd_alpha_fails() {
        let mut p = AffineParams::zeros(1, 1);
        p.alphas[0] = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let rep = p.validate(1e-10).unwrap();
        assert!(rep.violations.iter().any(|v| v.contains("positive semi-definite")));
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let mut p = AffineParams::zeros(1, 1);
        p.b = DVector::zeros(3);
        assert!(matches!(p.validate(1e-10), Err(Error::Dimension(_))));
        let mut q = AffineParams::zeros(1, 1);
        q.alphas.push(DMatrix::zeros(2, 2));
        assert!(matches!(q.validate(1e-10), Err(Error::Dimension(_))));
    }

    #[test]
    fn diffusion_and_drift_basics() {
        let p = heston_like(0.1, 0.5, 0.02, 0.01, -2.0);
        assert_eq!(p.diffusion_matrix(&StateVector::zeros(2)).unwrap(), p.a);
        let x = StateVector::new(vec![0.02, 0.0]);
        assert_eq!(p.diffusion_matrix(&x).unwrap(), &p.alphas[0] * 0.02);
        assert_eq!(p.drift(&StateVector::zeros(2)).unwrap(), p.b);

        // Vasicek: m = 0, n = 1, drift b + beta r.
        let mut v = AffineParams::zeros(0, 1);
        v.b[0] = 0.08;
        v.bmat[(0, 0)] = -0.9;
        let dr = v.drift(&StateVector::new(vec![0.05])).unwrap();
        assert!((dr[0] - (0.08 - 0.9 * 0.05)).abs() < 1e-16);
    }

    #[test]
    fn random_admissible_passes_validation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = rng.random_range(0..4);
            let n = rng.random_range(0..4);
            if m + n == 0 {
                continue;
            }
            let p = random_admissible(&mut rng, m, n);
            let rep = p.validate(default_psd_tol(&p)).unwrap();
            assert!(rep.passed(), "{:?}", rep);
        }
    }
}
