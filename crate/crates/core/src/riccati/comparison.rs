//! Componentwise comparison of real Riccati systems of the form
//! `d/dt f_i = A_i f_i^2 + (B f)_i + C_i` with nonnegative off-diagonal `B`.
//! Ordered data (`A1 <= A2`, `C1 <= C2`, `f1(0) <= f2(0)`) must produce
//! ordered solutions `f1(t) <= f2(t)`.

use nalgebra::{DMatrix, DVector};

use super::ode::{self, OdeFailure, OdeOptions};
use crate::error::{Error, Result};
use crate::linalg::expm;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSpec {
    pub a: Vec<f64>,
    pub bmat: DMatrix<f64>,
    pub c: Vec<f64>,
    pub f0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `max_t max_i (f1_i(t) - f2_i(t))^+` over the grid.
    pub max_violation: f64,
    /// Time up to which both solutions exist; equals the horizon unless one
    /// of them exploded first.
    pub horizon_reached: f64,
    pub grid_points: usize,
}

impl ComparisonSpec {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    fn check(&self) -> Result<()> {
        let m = self.dim();
        if self.bmat.nrows() != m || self.bmat.ncols() != m || self.c.len() != m || self.f0.len() != m {
            return Err(Error::Dimension(format!("comparison spec of size {m} has inconsistent parts")));
        }
        for i in 0..m {
            for j in 0..m {
                if i != j && self.bmat[(i, j)] < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "B has a negative off-diagonal entry at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn rhs(&self, f: &[f64], df: &mut [f64]) {
        let m = self.dim();
        for i in 0..m {
            let mut acc = self.a[i] * f[i] * f[i] + self.c[i];
            for j in 0..m {
                acc += self.bmat[(i, j)] * f[j];
            }
            df[i] = acc;
        }
    }
}

const GRID: usize = 200;

/// Integrates both systems on a uniform grid over `[0, horizon]` and reports
/// the worst componentwise ordering violation.
pub fn compare_solutions(lower: &ComparisonSpec, upper: &ComparisonSpec, horizon: f64) -> Result<ComparisonReport> {
    lower.check()?;
    upper.check()?;
    if lower.dim() != upper.dim() {
        return Err(Error::Dimension("comparison specs differ in size".into()));
    }
    if lower.bmat != upper.bmat {
        return Err(Error::InvalidArgument("both systems must share the same linear part B".into()));
    }
    let leq = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(a, b)| a <= b);
    if !leq(&lower.a, &upper.a) || !leq(&lower.c, &upper.c) || !leq(&lower.f0, &upper.f0) {
        return Err(Error::InvalidArgument(
            "ordering preconditions A1 <= A2, C1 <= C2, f1(0) <= f2(0) violated".into(),
        ));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let times: Vec<f64> = (0..=GRID).map(|k| horizon * k as f64 / GRID as f64).collect();
    let a = trajectory(lower, &times);
    let b = trajectory(upper, &times);
    let common = a.len().min(b.len());
    let mut worst = 0.0f64;
    for k in 0..common {
        for (x, y) in a[k].iter().zip(&b[k]) {
            worst = worst.max(x - y);
        }
    }
    Ok(ComparisonReport {
        max_violation: worst,
        horizon_reached: if common == 0 { 0.0 } else { times[common - 1] },
        grid_points: common,
    })
}

/// Solution on `times`, truncated at the first grid point the solver cannot
/// reach (explosion).
pub(crate) fn trajectory(spec: &ComparisonSpec, times: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let res = ode::integrate(
        |_t, y: &[f64], dy: &mut [f64]| spec.rhs(y, dy),
        0.0,
        &spec.f0,
        times,
        &OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            ..OdeOptions::default()
        },
        |y| y.iter().any(|v| !(v.abs() <= 1e8)),
        |_, _, y| out.push(y.to_vec()),
    );
    match res {
        Ok(_) | Err(OdeFailure::Diverged { .. }) | Err(OdeFailure::MaxSteps { .. }) => out,
    }
}

/// Solution of the linear system `f' = B f + C` (the `A = 0` case), which
/// bounds every admissible solution with larger data from below:
/// `e^{Bt} (f(0) + int_0^t e^{-Bs} C ds)`.
pub fn linear_lower_bound(spec: &ComparisonSpec, t: f64) -> DVector<f64> {
    let m = spec.dim();
    // exp of the augmented generator [[B, C], [0, 0]] applied to (f0, 1).
    let mut gen = DMatrix::zeros(m + 1, m + 1);
    gen.view_mut((0, 0), (m, m)).copy_from(&spec.bmat);
    for i in 0..m {
        gen[(i, m)] = spec.c[i];
    }
    let e = expm(&(gen * t));
    let mut v = DVector::from_vec(spec.f0.clone());
    v = v.push(1.0);
    (e * v).rows(0, m).into_owned()
}
