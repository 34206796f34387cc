//! Monte Carlo simulation of affine diffusions.
//!
//! Paths of block-diagonal parameters are simulated with a full-truncation
//! Euler scheme: drift and `rho` are evaluated at the positive part of the
//! nonnegative coordinates and those coordinates are clamped at zero after
//! every step. Other admissible parameters are simulated in their canonical
//! coordinates and mapped back. One-factor CIR can also be stepped with its
//! exact noncentral chi-squared transition.
//!
//! Every path owns a ChaCha8 stream selected by its index, so the first `k`
//! paths of an ensemble do not depend on the total path count, and results
//! are identical for any number of worker threads.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::canonical::canonical_transform;
use crate::error::{Error, Result};
use crate::models::CirParams;
use crate::params::{default_psd_tol, AffineParams, ShortRateSpec, StateVector};
use crate::pricing::{noncentral_chisq_cdf, PriceMethod, PriceResult};
use crate::rho::RhoWorkspace;
use crate::riccati::{blow_up_time, real_u, BlowUp, RiccatiSystem};
use crate::special::{exp_rem_scaled, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerFullTruncation,
    CirExact,
}

impl Scheme {
    pub fn tag(&self) -> u8 {
        match self {
            Scheme::EulerFullTruncation => 0,
            Scheme::CirExact => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Scheme::EulerFullTruncation),
            1 => Ok(Scheme::CirExact),
            _ => Err(Error::InvalidArgument(format!("unknown scheme tag {tag}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::EulerFullTruncation => "euler-full-truncation",
            Scheme::CirExact => "cir-exact",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "euler-full-truncation" => Ok(Scheme::EulerFullTruncation),
            "cir-exact" | "exact" => Ok(Scheme::CirExact),
            _ => Err(Error::InvalidArgument(format!(
                "unknown scheme '{s}' (expected euler-full-truncation or cir-exact)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Steps over the whole horizon, or per year if `steps_per_year` is set.
    pub n_steps: usize,
    pub steps_per_year: bool,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    /// `n_steps` steps over the whole horizon.
    pub fn new(n_paths: usize, n_steps: usize, seed: u64, scheme: Scheme) -> Self {
        SimConfig {
            n_paths,
            n_steps,
            steps_per_year: false,
            seed,
            scheme,
        }
    }

    /// `n_steps` steps per unit of time.
    pub fn per_year(n_paths: usize, n_steps: usize, seed: u64, scheme: Scheme) -> Self {
        SimConfig {
            steps_per_year: true,
            ..Self::new(n_paths, n_steps, seed, scheme)
        }
    }

    /// Number of steps used for `horizon`.
    pub fn steps_for(&self, horizon: f64) -> usize {
        if self.steps_per_year {
            ((self.n_steps as f64 * horizon - 1e-9).ceil() as usize).max(1)
        } else {
            self.n_steps
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_paths and n_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Simulated paths, stored path-major: `states[path][step][coord]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    pub m: usize,
    pub n: usize,
    pub config: SimConfig,
    states: Vec<f64>,
}

impl PathEnsemble {
    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn state(&self, path: usize, step: usize) -> &[f64] {
        let d = self.dim();
        let off = (path * self.times.len() + step) * d;
        &self.states[off..off + d]
    }

    pub fn terminal(&self, path: usize) -> &[f64] {
        self.state(path, self.n_steps())
    }

    /// Raw row-major data.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// Smallest value taken by any nonnegative coordinate (`+inf` if `m = 0`).
    pub fn min_nonnegative(&self) -> f64 {
        let d = self.dim();
        self.states
            .chunks_exact(d)
            .flat_map(|x| x[..self.m].iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Scale and chi-squared parameters of the CIR transition over `dt`:
/// `r(t + dt) = scale * Y` with `Y ~ chi^2(delta, zeta)` given `r(t) = r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirTransition {
    pub scale: f64,
    pub delta: f64,
    pub zeta: f64,
}

impl CirTransition {
    pub fn new(p: &CirParams, r: f64, dt: f64) -> Result<Self> {
        if !(p.sigma > 0.0 && dt > 0.0 && r >= 0.0) {
            return Err(Error::InvalidArgument("CIR transition needs sigma > 0, dt > 0, r >= 0".into()));
        }
        let s2 = p.sigma * p.sigma;
        let scale = s2 * dt * exp_rem_scaled(1, p.beta * dt) / 4.0;
        Ok(CirTransition {
            scale,
            delta: 4.0 * p.b / s2,
            zeta: r * (p.beta * dt).exp() / scale,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        noncentral_chisq_cdf(self.delta, self.zeta, x / self.scale)
    }

    pub fn mean(&self) -> f64 {
        self.scale * (self.delta + self.zeta)
    }
}

/// One exact CIR step from `r` over `dt`: a Poisson(`zeta/2`) mixture of
/// Gamma(`delta/2 + j`, 2) variables, scaled. With `sigma = 0` the
/// deterministic solution is returned.
pub fn cir_exact_step<R: Rng + ?Sized>(p: &CirParams, r: f64, dt: f64, rng: &mut R) -> f64 {
    if p.sigma == 0.0 {
        let x = p.beta * dt;
        return (r * x.exp() + p.b * dt * exp_rem_scaled(1, x)).max(0.0);
    }
    let tr = CirTransition::new(p, r.max(0.0), dt).expect("checked arguments");
    let lam = 0.5 * tr.zeta;
    let j = if lam > 0.0 {
        Poisson::new(lam).expect("positive mean").sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * tr.delta + j;
    if shape <= 0.0 {
        return 0.0;
    }
    let y: f64 = Gamma::new(shape, 2.0).expect("positive shape").sample(rng);
    tr.scale * y
}

/// Per-path stepping engine shared by all simulation entry points.
struct Engine {
    d: usize,
    m: usize,
    kernel: Kernel,
}

enum Kernel {
    Euler {
        b: Vec<f64>,
        /// Row-major linear drift.
        bmat: Vec<f64>,
        ws: RhoWorkspace,
        /// `(Lambda, Lambda^{-1})` row-major when simulating canonical coordinates.
        map: Option<(Vec<f64>, Vec<f64>)>,
    },
    Cir(CirParams),
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            v.push(a[(i, j)]);
        }
    }
    v
}

fn mat_vec(a: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for i in 0..d {
        out[i] = (0..d).map(|j| a[i * d + j] * x[j]).sum();
    }
}

impl Engine {
    fn new(p: &AffineParams, scheme: Scheme, allow_canonical: bool) -> Result<Self> {
        p.ensure_admissible()?;
        let (m, n, d) = (p.m, p.n, p.dim());
        let tol = default_psd_tol(p);
        let kernel = match scheme {
            Scheme::CirExact => {
                if m != 1 || n != 0 {
                    return Err(Error::InvalidArgument(
                        "cir-exact scheme needs a one-factor CIR model (m = 1, n = 0)".into(),
                    ));
                }
                Kernel::Cir(CirParams {
                    b: p.b[0],
                    beta: p.bmat[(0, 0)],
                    sigma: p.alphas[0][(0, 0)].sqrt(),
                    r0: 0.0,
                })
            }
            Scheme::EulerFullTruncation => {
                let (q, map) = if p.is_block_diagonal(tol) {
                    (p.clone(), None)
                } else if allow_canonical {
                    let ct = canonical_transform(p, tol)?;
                    (
                        ct.transformed.clone(),
                        Some((row_major(&ct.lambda), row_major(ct.lambda_inv()))),
                    )
                } else {
                    return Err(Error::NotBlockDiagonal(
                        "simulate needs block-diagonal parameters; use simulate_canonical".into(),
                    ));
                };
                Kernel::Euler {
                    b: q.b.iter().copied().collect(),
                    bmat: row_major(&q.bmat),
                    ws: RhoWorkspace::new(&q, tol)?,
                    map,
                }
            }
        };
        Ok(Engine { d, m, kernel })
    }

    /// Runs one path from `x0`, calling `visit(step, x)` at every grid point
    /// including the start.
    fn run_path<F: FnMut(usize, &[f64])>(&self, x0: &[f64], seed: u64, index: u64, dt: f64, steps: usize, mut visit: F) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let d = self.d;
        visit(0, x0);
        match &self.kernel {
            Kernel::Cir(cir) => {
                let mut r = x0[0];
                for k in 1..=steps {
                    r = cir_exact_step(cir, r, dt, &mut rng);
                    visit(k, &[r]);
                }
            }
            Kernel::Euler { b, bmat, ws, map } => {
                let (m, n) = (self.m, d - self.m);
                let mut y = vec![0.0; d];
                match map {
                    Some((lam, _)) => mat_vec(lam, x0, &mut y),
                    None => y.copy_from_slice(x0),
                }
                let mut yt = vec![0.0; d];
                let mut drift = vec![0.0; d];
                let mut diag = vec![0.0; m];
                let mut jj = vec![0.0; n * n];
                let mut scratch = vec![0.0; n * n];
                let mut z = vec![0.0; d];
                let mut x = vec![0.0; d];
                let sq = dt.sqrt();
                for k in 1..=steps {
                    for i in 0..d {
                        yt[i] = if i < m { y[i].max(0.0) } else { y[i] };
                    }
                    mat_vec(bmat, &yt, &mut drift);
                    ws.factor_with(&yt, &mut diag, &mut jj, &mut scratch)?;
                    for zi in z.iter_mut() {
                        *zi = rng.sample(StandardNormal);
                    }
                    for i in 0..m {
                        y[i] = (y[i] + (b[i] + drift[i]) * dt + diag[i] * sq * z[i]).max(0.0);
                    }
                    for i in 0..n {
                        let noise: f64 = (0..=i).map(|l| jj[i + l * n] * z[m + l]).sum();
                        y[m + i] += (b[m + i] + drift[m + i]) * dt + sq * noise;
                    }
                    match map {
                        Some((_, inv)) => {
                            mat_vec(inv, &y, &mut x);
                            // The inverse map sends R+^m to itself; remove rounding.
                            for xi in x.iter_mut().take(m) {
                                *xi = xi.max(0.0);
                            }
                            visit(k, &x);
                        }
                        None => visit(k, &y),
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_start(p: &AffineParams, x0: &StateVector, horizon: f64, cfg: &SimConfig) -> Result<()> {
    cfg.check()?;
    if x0.dim() != p.dim() {
        return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.dim(), p.dim())));
    }
    x0.check(p.m)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

fn ensemble(p: &AffineParams, x0: &StateVector, horizon: f64, cfg: &SimConfig, allow_canonical: bool) -> Result<PathEnsemble> {
    check_start(p, x0, horizon, cfg)?;
    let engine = Engine::new(p, cfg.scheme, allow_canonical)?;
    let steps = cfg.steps_for(horizon);
    let dt = horizon / steps as f64;
    let d = p.dim();
    let per_path = (steps + 1) * d;
    let paths: Vec<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![0.0; per_path];
            engine.run_path(x0.0.as_slice(), cfg.seed, i, dt, steps, |k, x| {
                buf[k * d..(k + 1) * d].copy_from_slice(x);
            })?;
            Ok(buf)
        })
        .collect::<Result<_>>()?;
    Ok(PathEnsemble {
        times: (0..=steps).map(|k| k as f64 * dt).collect(),
        m: p.m,
        n: p.n,
        config: *cfg,
        states: paths.concat(),
    })
}

/// Simulates block-diagonal parameters on `[0, horizon]`.
pub fn simulate(p: &AffineParams, x0: &StateVector, horizon: f64, cfg: &SimConfig) -> Result<PathEnsemble> {
    ensemble(p, x0, horizon, cfg, false)
}

/// Simulates any admissible parameters by stepping their canonical
/// representation and mapping every state back to the original coordinates.
pub fn simulate_canonical(p: &AffineParams, x0: &StateVector, horizon: f64, cfg: &SimConfig) -> Result<PathEnsemble> {
    ensemble(p, x0, horizon, cfg, true)
}

/// Terminal states only, `n_paths x d` row-major, without storing paths.
pub fn simulate_terminal(p: &AffineParams, x0: &StateVector, horizon: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
    check_start(p, x0, horizon, cfg)?;
    let engine = Engine::new(p, cfg.scheme, true)?;
    let steps = cfg.steps_for(horizon);
    let dt = horizon / steps as f64;
    let d = p.dim();
    let rows: Vec<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut last = vec![0.0; d];
            engine.run_path(x0.0.as_slice(), cfg.seed, i, dt, steps, |k, x| {
                if k == steps {
                    last.copy_from_slice(x);
                }
            })?;
            Ok(last)
        })
        .collect::<Result<_>>()?;
    Ok(rows.concat())
}

/// Mean and standard error of the sample.
fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// Monte Carlo price `E[exp(-int_0^T r ds) f(X(T))]` with the discount
/// integral taken by the trapezoidal rule on the simulation grid.
pub fn mc_price<F>(p: &AffineParams, srs: &ShortRateSpec, x0: &StateVector, payoff: F, horizon: f64, cfg: &SimConfig) -> Result<PriceResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_start(p, x0, horizon, cfg)?;
    if srs.gamma.len() != p.dim() {
        return Err(Error::Dimension("short-rate gamma does not match the state dimension".into()));
    }
    let engine = Engine::new(p, cfg.scheme, true)?;
    let steps = cfg.steps_for(horizon);
    let dt = horizon / steps as f64;
    let values: Vec<f64> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut integral = 0.0;
            let mut prev = 0.0;
            let mut value = 0.0;
            engine.run_path(x0.0.as_slice(), cfg.seed, i, dt, steps, |k, x| {
                let r = srs.rate(x);
                if k > 0 {
                    integral += 0.5 * (prev + r) * dt;
                }
                prev = r;
                if k == steps {
                    let f = payoff(x);
                    value = if f == 0.0 { 0.0 } else { (-integral).exp() * f };
                }
            })?;
            Ok(value)
        })
        .collect::<Result<_>>()?;
    let (value, err) = mean_stderr(&values);
    Ok(PriceResult {
        value,
        method: PriceMethod::MonteCarlo,
        err,
    })
}

/// Sample mean of `exp(u^T X(T))` over the ensemble's terminal states, with
/// the standard error of its modulus-wise spread.
pub fn empirical_char(ens: &PathEnsemble, u: &[Complex64]) -> Result<(Complex64, f64)> {
    let d = ens.dim();
    if u.len() != d {
        return Err(Error::Dimension(format!("u has length {}, expected {d}", u.len())));
    }
    let mut re = Vec::with_capacity(ens.n_paths());
    let mut im = Vec::with_capacity(ens.n_paths());
    for k in 0..ens.n_paths() {
        let x = ens.terminal(k);
        let e: Complex64 = u.iter().zip(x).map(|(u, x)| u * x).sum();
        if e.re > 700.0 {
            return Err(Error::InvalidArgument(format!(
                "exponent {} overflows; reduce Re u or use the Riccati transform instead",
                e.re
            )));
        }
        let v = e.exp();
        re.push(v.re);
        im.push(v.im);
    }
    let (mr, sr) = mean_stderr(&re);
    let (mi, si) = mean_stderr(&im);
    Ok((Complex64::new(mr, mi), (sr * sr + si * si).sqrt()))
}

/// Largest ratio of median block means (see [`moment_explosion_probe`])
/// still counted as a convergent estimator.
pub const BLOCK_GROWTH_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Finite,
    Infinite,
    /// `u` lies within 1% of the boundary of the moment domain.
    Inconclusive,
}

/// Outcome of [`moment_explosion_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExplosionProbe {
    /// Verdict from the Riccati blow-up time.
    pub verdict: Verdict,
    pub blow_up: Option<f64>,
    /// Smallest `theta` with `theta * u` on the boundary at the horizon, if
    /// found below `2^20`.
    pub boundary_scale: Option<f64>,
    /// Monte Carlo estimates of `E[e^{u^T X(T)}]` from the first `N/8`,
    /// `N/4`, `N/2` and `N` paths.
    pub estimates: [f64; 4],
    /// Largest single sample as a share of the total.
    pub max_share: f64,
    /// Median block mean over 8 blocks divided by the median over 64 blocks.
    /// Stays near one when the mean is finite and grows with the block size
    /// when it is not.
    pub block_growth: f64,
    /// Whether the Monte Carlo estimator looks convergent.
    pub mc_stable: bool,
    /// Whether the two diagnostics agree (always true when inconclusive).
    pub agreement: bool,
}

/// Compares the blow-up verdict of the plain Riccati system at `u` with the
/// behaviour of the Monte Carlo estimator of `E[e^{u^T X(T)}]`.
///
/// The estimator is flagged unstable when an 8-fold increase of the block
/// size multiplies the median block mean by more than [`BLOCK_GROWTH_LIMIT`].
/// Needs at least 64 paths.
pub fn moment_explosion_probe(p: &AffineParams, x0: &StateVector, u: &[f64], horizon: f64, cfg: &SimConfig) -> Result<ExplosionProbe> {
    if u.len() != p.dim() {
        return Err(Error::Dimension(format!("u has length {}, expected {}", u.len(), p.dim())));
    }
    if cfg.n_paths < 64 {
        return Err(Error::InvalidArgument("the explosion probe needs at least 64 paths".into()));
    }
    let sys = RiccatiSystem::plain(p.clone())?;
    let explodes = |theta: f64| -> Result<Option<f64>> {
        let v: Vec<f64> = u.iter().map(|x| x * theta).collect();
        Ok(blow_up_time(&sys, &real_u(&v), horizon)?.time())
    };
    let blow_up = match blow_up_time(&sys, &real_u(u), horizon)? {
        BlowUp::At(t) => Some(t),
        BlowUp::Beyond(_) => None,
    };
    let boundary_scale = if u.iter().all(|x| *x == 0.0) {
        None
    } else {
        let mut hi = 1.0;
        while explodes(hi)?.is_none() && hi < 1048576.0 {
            hi *= 2.0;
        }
        if explodes(hi)?.is_none() {
            None
        } else {
            let mut lo = 0.0;
            while hi - lo > 1e-4 * hi {
                let mid = 0.5 * (lo + hi);
                if explodes(mid)?.is_some() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
    };
    let near = boundary_scale.is_some_and(|s| (s - 1.0).abs() < 0.01);
    let verdict = if near {
        Verdict::Inconclusive
    } else if blow_up.is_some() {
        Verdict::Infinite
    } else {
        Verdict::Finite
    };

    let terminal = simulate_terminal(p, x0, horizon, cfg)?;
    let d = p.dim();
    let samples: Vec<f64> = terminal
        .chunks_exact(d)
        .map(|x| u.iter().zip(x).map(|(u, x)| u * x).sum::<f64>().min(700.0).exp())
        .collect();
    let n = samples.len();
    let mut estimates = [0.0; 4];
    for (k, frac) in [8, 4, 2, 1].iter().enumerate() {
        let len = (n / frac).max(1);
        estimates[k] = pairwise_sum(&samples[..len]) / len as f64;
    }
    let total = pairwise_sum(&samples);
    let max_share = samples.iter().copied().fold(0.0, f64::max) / total;
    let block_growth = median_block_mean(&samples, 8) / median_block_mean(&samples, 64);
    let mc_stable = block_growth <= BLOCK_GROWTH_LIMIT;
    let agreement = match verdict {
        Verdict::Finite => mc_stable,
        Verdict::Infinite => !mc_stable,
        Verdict::Inconclusive => true,
    };
    Ok(ExplosionProbe {
        verdict,
        blow_up,
        boundary_scale,
        estimates,
        max_share,
        block_growth,
        mc_stable,
        agreement,
    })
}

/// Median of the means of `blocks` equal consecutive blocks.
fn median_block_mean(samples: &[f64], blocks: usize) -> f64 {
    let size = samples.len() / blocks;
    let mut means: Vec<f64> = samples
        .chunks_exact(size)
        .take(blocks)
        .map(|c| pairwise_sum(c) / size as f64)
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite block means"));
    0.5 * (means[(blocks - 1) / 2] + means[blocks / 2])
}

/// Magic bytes opening a binary ensemble dump.
pub const ENSEMBLE_MAGIC: [u8; 8] = *b"AFFKENS\0";
pub const ENSEMBLE_VERSION: u32 = 1;

/// Writes the ensemble in the binary dump format (see `docs/ensemble_format.md`).
pub fn write_ensemble<W: Write>(ens: &PathEnsemble, mut w: W) -> Result<()> {
    w.write_all(&ENSEMBLE_MAGIC)?;
    w.write_all(&ENSEMBLE_VERSION.to_le_bytes())?;
    w.write_all(&(ens.dim() as u32).to_le_bytes())?;
    w.write_all(&(ens.m as u32).to_le_bytes())?;
    w.write_all(&(ens.n as u32).to_le_bytes())?;
    w.write_all(&(ens.n_paths() as u64).to_le_bytes())?;
    w.write_all(&(ens.n_steps() as u64).to_le_bytes())?;
    w.write_all(&ens.config.seed.to_le_bytes())?;
    w.write_all(&[ens.config.scheme.tag()])?;
    w.write_all(&ens.times[1].to_le_bytes())?;
    let mut buf = Vec::with_capacity(ens.states.len() * 8);
    for v in &ens.states {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads an ensemble written by [`write_ensemble`].
pub fn read_ensemble<R: Read>(mut r: R) -> Result<PathEnsemble> {
    fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        r.read_exact(&mut b)?;
        Ok(b)
    }
    if take::<8, _>(&mut r)? != ENSEMBLE_MAGIC {
        return Err(Error::Io("not an ensemble dump (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != ENSEMBLE_VERSION {
        return Err(Error::Io(format!("unsupported ensemble version {version}")));
    }
    let d = u32::from_le_bytes(take(&mut r)?) as usize;
    let m = u32::from_le_bytes(take(&mut r)?) as usize;
    let n = u32::from_le_bytes(take(&mut r)?) as usize;
    if m + n != d {
        return Err(Error::Io(format!("inconsistent header: d = {d}, m = {m}, n = {n}")));
    }
    let n_paths = u64::from_le_bytes(take(&mut r)?) as usize;
    let n_steps = u64::from_le_bytes(take(&mut r)?) as usize;
    let seed = u64::from_le_bytes(take(&mut r)?);
    let scheme = Scheme::from_tag(take::<1, _>(&mut r)?[0])?;
    let dt = f64::from_le_bytes(take(&mut r)?);
    let len = n_paths * (n_steps + 1) * d;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != len * 8 {
        return Err(Error::Io(format!("expected {} data bytes, found {}", len * 8, raw.len())));
    }
    let states = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(PathEnsemble {
        times: (0..=n_steps).map(|k| k as f64 * dt).collect(),
        m,
        n,
        config: SimConfig::new(n_paths, n_steps, seed, scheme),
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_drift_only() {
        let mut p = AffineParams::zeros(1, 1);
        p.b[0] = 0.3;
        p.b[1] = -0.2;
        let x0 = StateVector::new(vec![1.0, 2.0]);
        let ens = simulate(&p, &x0, 2.0, &SimConfig::new(3, 8, 1, Scheme::EulerFullTruncation)).unwrap();
        for k in 0..3 {
            let x = ens.terminal(k);
            assert!((x[0] - 1.6).abs() < 1e-14 && (x[1] - 1.6).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_block_diagonal() {
        let (p, _, x0) = crate::models::AffineModel::as_affine(
            &crate::models::HestonParams::new(0.02, -2.0, 0.1, 0.5, 0.0, 0.02, 0.0).unwrap(),
        );
        let cfg = SimConfig::new(2, 4, 0, Scheme::EulerFullTruncation);
        assert!(matches!(simulate(&p, &x0, 1.0, &cfg), Err(Error::NotBlockDiagonal(_))));
        assert!(simulate_canonical(&p, &x0, 1.0, &cfg).is_ok());
    }

    #[test]
    fn cir_absorbed_at_zero_without_drift() {
        let p = CirParams::new(0.0, -0.5, 0.3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(cir_exact_step(&p, 0.0, 0.1, &mut rng), 0.0);
        }
    }

    #[test]
    fn binary_round_trip() {
        let p = crate::models::AffineModel::as_affine(&CirParams::new(0.08, -0.9, 0.2, 0.05).unwrap());
        let ens = simulate(&p.0, &p.2, 1.0, &SimConfig::new(5, 4, 9, Scheme::CirExact)).unwrap();
        let mut buf = Vec::new();
        write_ensemble(&ens, &mut buf).unwrap();
        assert_eq!(read_ensemble(buf.as_slice()).unwrap(), ens);
        buf[0] = b'X';
        assert!(read_ensemble(buf.as_slice()).is_err());
    }
}
