//! Small dense linear-algebra kernels: matrix exponential, semidefinite
//! Cholesky and a few helpers around `nalgebra::DMatrix`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matrix exponential by scaling and squaring with a diagonal [6/6] Padé
/// approximant. After scaling `||A / 2^s||_1 <= 1/2`, where the truncation
/// error of the approximant is below 1e-15 relative.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = one_norm(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);

    // Padé coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!) with q = 6.
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let id = DMatrix::<f64>::identity(n, n);
    let mut num = id.clone() * C[0];
    let mut den = id.clone() * C[0];
    let mut power = id.clone();
    for (k, c) in C.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * *c;
        if k % 2 == 0 {
            den += &power * *c;
        } else {
            den -= &power * *c;
        }
    }
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is well conditioned after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Lower-triangular factor `L` with nonnegative diagonal and `L L^T = A` for a
/// symmetric positive semi-definite `A`.
///
/// Columns whose running diagonal pivot drops below `1e-12 * trace(A)` are set
/// to zero, which keeps the factor lower triangular for singular input. The
/// product is checked against `A`; a residual above `tol * (1 + max|A|)` or a
/// pivot below `-tol * (1 + max|A|)` is reported as [`Error::NotPsd`].
pub fn semidefinite_cholesky(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "cholesky of a {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    semidefinite_cholesky_into(a.as_slice(), n, l.as_mut_slice(), tol)?;
    Ok(l)
}

/// Slice-level kernel behind [`semidefinite_cholesky`]. Both `a` and `l` are
/// column-major `n x n`; `l` is overwritten.
pub(crate) fn semidefinite_cholesky_into(a: &[f64], n: usize, l: &mut [f64], tol: f64) -> Result<()> {
    let idx = |i: usize, j: usize| i + j * n;
    let mut trace = 0.0;
    let mut scale = 0.0f64;
    for i in 0..n {
        trace += a[idx(i, i)];
        for j in 0..n {
            scale = scale.max(a[idx(i, j)].abs());
        }
    }
    let threshold = 1e-12 * trace.abs();
    let bound = tol * (1.0 + scale);
    l.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        let mut pivot = a[idx(j, j)];
        for k in 0..j {
            pivot -= l[idx(j, k)] * l[idx(j, k)];
        }
        if pivot < -bound {
            return Err(Error::NotPsd(format!("pivot {pivot:e} at column {j}")));
        }
        if pivot <= threshold {
            continue;
        }
        let d = pivot.sqrt();
        l[idx(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[idx(i, j)];
            for k in 0..j {
                s -= l[idx(i, k)] * l[idx(j, k)];
            }
            l[idx(i, j)] = s / d;
        }
    }
    // Zeroed columns are only legitimate when the matching entries of A are
    // (numerically) explained by the retained columns.
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..=j {
                s += l[idx(i, k)] * l[idx(j, k)];
            }
            if (s - a[idx(i, j)]).abs() > bound.max(1e-10 * (1.0 + scale)) {
                return Err(Error::NotPsd(format!(
                    "factor residual {:e} at ({i},{j})",
                    (s - a[idx(i, j)]).abs()
                )));
            }
        }
    }
    Ok(())
}

/// Maximum absolute asymmetry `|A_ij - A_ji|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
