//! The generalized Riccati system of an affine process and its solvers.
//!
//! For admissible parameters the transform exponents `(phi, psi)` solve
//!
//! ```text
//! d/dt phi   = 1/2 psi_J^T a_JJ psi_J + b^T psi                  (- c)
//! d/dt psi_i = 1/2 psi^T alpha_i psi + beta_i^T psi  for i in I  (- gamma_i)
//! d/dt psi_J = B_JJ^T psi_J                                      (- gamma_J)
//! phi(0) = 0, psi(0) = u
//! ```
//!
//! where the bracketed constants are present only for the discounted system
//! (a short rate `r = c + gamma^T x` is attached).

mod comparison;
pub mod ode;
mod scalar;

pub use comparison::{compare_solutions, linear_lower_bound, ComparisonReport, ComparisonSpec};
pub use scalar::{scalar_riccati, tracked_log, ScalarRiccatiSpec};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::params::{AffineParams, ShortRateSpec};
use ode::{OdeFailure, OdeOptions};

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-12;
/// `||psi||_inf` above this is treated as a blow-up.
pub const BLOW_UP_NORM: f64 = 1e8;
/// Width to which [`blow_up_time`] localises the explosion time.
pub const BLOW_UP_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSystem {
    pub params: AffineParams,
    pub srs: Option<ShortRateSpec>,
    bmat_t: DMatrix<f64>,
}

/// Transform exponents at horizon `t` for initial value `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiPsi {
    pub t: f64,
    pub u: Vec<Complex64>,
    pub phi: Complex64,
    pub psi: Vec<Complex64>,
}

impl PhiPsi {
    pub fn initial(u: &[Complex64]) -> Self {
        PhiPsi {
            t: 0.0,
            u: u.to_vec(),
            phi: Complex64::new(0.0, 0.0),
            psi: u.to_vec(),
        }
    }

    /// `exp(phi + psi^T x)`.
    pub fn transform_at(&self, x: &[f64]) -> Complex64 {
        let e: Complex64 = self.phi + self.psi.iter().zip(x).map(|(p, xi)| p * xi).sum::<Complex64>();
        e.exp()
    }
}

/// Solver diagnostics returned by [`integrate_detailed`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub steps: usize,
    pub rejected: usize,
    /// Max relative deviation between the integrated `psi_J` and the matrix
    /// exponential `e^{B_JJ^T t} u_J` (plain systems only; zero otherwise).
    pub linear_block_deviation: f64,
}

/// Whether the explosion time lies inside the searched horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowUp {
    /// Explosion time localised to [`BLOW_UP_WIDTH`].
    At(f64),
    /// No explosion up to (and including) the given horizon.
    Beyond(f64),
}

impl BlowUp {
    pub fn time(&self) -> Option<f64> {
        match self {
            BlowUp::At(t) => Some(*t),
            BlowUp::Beyond(_) => None,
        }
    }
}

impl RiccatiSystem {
    /// Plain system (no discounting).
    pub fn plain(params: AffineParams) -> Result<Self> {
        Self::build(params, None)
    }

    /// Discounted system for the short rate `srs`.
    pub fn discounted(params: AffineParams, srs: ShortRateSpec) -> Result<Self> {
        Self::build(params, Some(srs))
    }

    fn build(params: AffineParams, srs: Option<ShortRateSpec>) -> Result<Self> {
        params.ensure_admissible()?;
        if let Some(s) = &srs {
            if s.gamma.len() != params.dim() {
                return Err(Error::Dimension(format!(
                    "gamma has length {}, parameters have dimension {}",
                    s.gamma.len(),
                    params.dim()
                )));
            }
        }
        let bmat_t = params.bmat.transpose();
        Ok(RiccatiSystem { params, srs, bmat_t })
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Right-hand side `(d phi/dt, d psi/dt)` at `psi`.
    pub fn rhs(&self, psi: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let mut dpsi = vec![Complex64::new(0.0, 0.0); self.dim()];
        let dphi = self.rhs_into(psi, &mut dpsi);
        (dphi, dpsi)
    }

    fn rhs_into(&self, psi: &[Complex64], dpsi: &mut [Complex64]) -> Complex64 {
        let p = &self.params;
        let d = p.dim();
        let m = p.m;
        let mut dphi = quad_form(&p.a, psi, m) * 0.5;
        for k in 0..d {
            dphi += psi[k] * p.b[k];
        }
        for i in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                let w = self.bmat_t[(i, k)];
                if w != 0.0 {
                    acc += psi[k] * w;
                }
            }
            if i < m {
                acc += quad_form(&p.alphas[i], psi, 0) * 0.5;
            }
            dpsi[i] = acc;
        }
        if let Some(s) = &self.srs {
            dphi -= s.c;
            for i in 0..d {
                dpsi[i] -= s.gamma[i];
            }
        }
        dphi
    }
}

/// `psi^T M psi` restricted to indices `>= from` (no conjugation).
fn quad_form(mat: &DMatrix<f64>, psi: &[Complex64], from: usize) -> Complex64 {
    let d = psi.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in from..d {
        let mut row = Complex64::new(0.0, 0.0);
        for j in from..d {
            let w = mat[(i, j)];
            if w != 0.0 {
                row += psi[j] * w;
            }
        }
        acc += psi[i] * row;
    }
    acc
}

fn opts(rtol: f64, atol: f64) -> OdeOptions {
    OdeOptions {
        rtol,
        atol,
        ..OdeOptions::default()
    }
}

fn psi_norm(state: &[Complex64]) -> f64 {
    state[1..].iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn map_failure(f: OdeFailure) -> Error {
    match f {
        OdeFailure::Diverged { reached } | OdeFailure::MaxSteps { reached } => Error::Explosion { reached },
    }
}

/// Solves the system at horizon `t` with an adaptive Dormand-Prince 5(4) pair.
pub fn integrate(sys: &RiccatiSystem, u: &[Complex64], t: f64, rtol: f64, atol: f64) -> Result<PhiPsi> {
    integrate_detailed(sys, u, t, rtol, atol).map(|(s, _)| s)
}

/// [`integrate`] plus solver statistics.
///
/// For the plain system the linear block `psi_J` is returned from the matrix
/// exponential `e^{B_JJ^T t} u_J`; the integrated value is kept only for the
/// reported cross-check.
pub fn integrate_detailed(
    sys: &RiccatiSystem,
    u: &[Complex64],
    t: f64,
    rtol: f64,
    atol: f64,
) -> Result<(PhiPsi, SolveStats)> {
    let mut out = integrate_grid_detailed(sys, u, &[t], rtol, atol)?;
    let (sol, stats) = out.pop().expect("one output time requested");
    Ok((sol, stats))
}

/// Solves the system at every time in `times` (ascending, nonnegative) in a
/// single sweep.
pub fn integrate_grid(sys: &RiccatiSystem, u: &[Complex64], times: &[f64], rtol: f64, atol: f64) -> Result<Vec<PhiPsi>> {
    Ok(integrate_grid_detailed(sys, u, times, rtol, atol)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

fn integrate_grid_detailed(
    sys: &RiccatiSystem,
    u: &[Complex64],
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<(PhiPsi, SolveStats)>> {
    let d = sys.dim();
    if u.len() != d {
        return Err(Error::Dimension(format!("u has length {}, system has dimension {d}", u.len())));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be nonnegative and ascending".into()));
    }
    let mut y0 = Vec::with_capacity(d + 1);
    y0.push(Complex64::new(0.0, 0.0));
    y0.extend_from_slice(u);

    let mut raw: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(times.len());
    let stats = ode::integrate(
        |_t, y: &[Complex64], dy: &mut [Complex64]| {
            let (head, tail) = dy.split_at_mut(1);
            head[0] = sys.rhs_into(&y[1..], tail);
        },
        0.0,
        &y0,
        times,
        &opts(rtol, atol),
        |y| {
            let nrm = psi_norm(y);
            !(nrm <= BLOW_UP_NORM)
        },
        |_, t, y| raw.push((t, y.to_vec())),
    )
    .map_err(map_failure)?;

    let (m, n) = (sys.params.m, sys.params.n);
    let linear_block = sys.srs.is_none() && n > 0;
    let bjj_t = if linear_block {
        Some(sys.bmat_t.view((m, m), (n, n)).clone_owned())
    } else {
        None
    };

    let mut out = Vec::with_capacity(raw.len());
    for (t, y) in raw {
        if t == 0.0 {
            out.push((PhiPsi::initial(u), SolveStats::default()));
            continue;
        }
        let mut psi = y[1..].to_vec();
        let mut deviation = 0.0f64;
        if let Some(bt) = &bjj_t {
            let e = expm(&(bt * t));
            for i in 0..n {
                let mut exact = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    exact += u[m + j] * e[(i, j)];
                }
                let scale = exact.norm().max(1.0);
                deviation = deviation.max((psi[m + i] - exact).norm() / scale);
                psi[m + i] = exact;
            }
        }
        out.push((
            PhiPsi {
                t,
                u: u.to_vec(),
                phi: y[0],
                psi,
            },
            SolveStats {
                steps: stats.accepted,
                rejected: stats.rejected,
                linear_block_deviation: deviation,
            },
        ));
    }
    Ok(out)
}

/// Localises the explosion time `t_+(u)` of the solution to within
/// [`BLOW_UP_WIDTH`] by bisection on the integrator's explosion verdict, or
/// reports that no explosion occurs up to `t_max`.
pub fn blow_up_time(sys: &RiccatiSystem, u: &[Complex64], t_max: f64) -> Result<BlowUp> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    let probe = |t: f64| -> Result<std::result::Result<(), f64>> {
        match integrate(sys, u, t, DEFAULT_RTOL, DEFAULT_ATOL) {
            Ok(_) => Ok(Ok(())),
            Err(Error::Explosion { reached }) => Ok(Err(reached)),
            Err(e) => Err(e),
        }
    };
    let (mut lo, mut hi) = match probe(t_max)? {
        Ok(()) => return Ok(BlowUp::Beyond(t_max)),
        Err(reached) => (reached, t_max),
    };
    while hi - lo > BLOW_UP_WIDTH {
        let mid = 0.5 * (lo + hi);
        match probe(mid)? {
            Ok(()) => lo = mid,
            Err(reached) => {
                hi = mid;
                lo = lo.max(reached);
            }
        }
    }
    Ok(BlowUp::At(0.5 * (lo + hi)))
}

/// Convenience: real initial value embedded into the complex plane.
pub fn real_u(u: &[f64]) -> Vec<Complex64> {
    u.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
