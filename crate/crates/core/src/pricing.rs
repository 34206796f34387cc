//! Discounted transforms, zero-coupon bonds, forward-measure laws, bond
//! options, caps and Black quotes.
//!
//! With short rate `r = c + gamma^T x`, the `T`-bond price is
//! `P(t, T) = exp(-A(T-t) - B(T-t)^T X(t))` with `A(t) = -Phi(t, 0)` and
//! `B(t) = -Psi(t, 0)`. Under the `S`-forward measure
//!
//! ```text
//! E^S[e^{u^T X(T)} | X(t)] = exp(-A(S-T) + Phi(T-t, u - B(S-T)) + Psi(T-t, u - B(S-T))^T X(t)) / P(t, S)
//! ```
//!
//! and a call on the `S`-bond with expiry `T` and strike `K` is
//! `P(t,S) Q^S[E] - K P(t,T) Q^T[E]` with `E = {B(S-T)^T X(T) <= -A(S-T) - log K}`.

use num_complex::Complex64;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::fourier::integrate_half_line;
use crate::models::{CirParams, VasicekParams};
use crate::params::{AffineParams, ShortRateSpec, StateVector};
use crate::riccati::{integrate, PhiPsi, RiccatiSystem, DEFAULT_ATOL, DEFAULT_RTOL};
use crate::special::{norm_cdf, norm_pdf, pairwise_sum};

/// `(Phi, Psi)` of the discounted transform.
pub type DiscountedTransform = PhiPsi;

/// How a price was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMethod {
    ClosedForm,
    Quadrature,
    Chi2,
    MonteCarlo,
}

impl PriceMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            PriceMethod::ClosedForm => "closed-form",
            PriceMethod::Quadrature => "quadrature",
            PriceMethod::Chi2 => "chi2",
            PriceMethod::MonteCarlo => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceResult {
    pub value: f64,
    pub method: PriceMethod,
    /// Estimated numerical error (standard error for Monte Carlo).
    pub err: f64,
}

impl PriceResult {
    pub fn closed_form(value: f64) -> Self {
        PriceResult {
            value,
            method: PriceMethod::ClosedForm,
            err: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

/// Distribution used to evaluate the exercise probabilities of a bond option.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondLaw {
    /// Gaussian forward law (Vasicek).
    Gaussian,
    /// Noncentral chi-squared forward law (CIR).
    Chi2,
    /// Fourier inversion of the forward characteristic function.
    Generic,
}

/// A short-rate model with the fastest available evaluation route for its
/// transforms: closed forms for one-factor Vasicek and CIR, the Riccati
/// integrator otherwise.
#[derive(Debug, Clone)]
pub enum ShortRateModel {
    Vasicek(VasicekParams),
    Cir(CirParams),
    Generic(Box<RiccatiSystem>),
}

impl ShortRateModel {
    /// Recognises one-factor Vasicek (`m = 0, n = 1`) and CIR (`m = 1, n = 0`)
    /// with `r = x`; everything else is solved numerically.
    pub fn from_affine(p: &AffineParams, srs: &ShortRateSpec) -> Result<Self> {
        p.ensure_admissible()?;
        let unit_rate = p.dim() == 1 && srs.c == 0.0 && srs.gamma.len() == 1 && srs.gamma[0] == 1.0;
        if unit_rate && p.m == 0 {
            return Ok(ShortRateModel::Vasicek(VasicekParams {
                b: p.b[0],
                beta: p.bmat[(0, 0)],
                sigma: p.a[(0, 0)].sqrt(),
                r0: 0.0,
            }));
        }
        if unit_rate && p.m == 1 {
            return Ok(ShortRateModel::Cir(CirParams {
                b: p.b[0],
                beta: p.bmat[(0, 0)],
                sigma: p.alphas[0][(0, 0)].sqrt(),
                r0: 0.0,
            }));
        }
        Self::generic(p, srs)
    }

    /// Forces the numerical route.
    pub fn generic(p: &AffineParams, srs: &ShortRateSpec) -> Result<Self> {
        Ok(ShortRateModel::Generic(Box::new(RiccatiSystem::discounted(p.clone(), srs.clone())?)))
    }

    pub fn dim(&self) -> usize {
        match self {
            ShortRateModel::Generic(sys) => sys.dim(),
            _ => 1,
        }
    }

    /// Discounted transform exponents at horizon `t`.
    pub fn transform(&self, t: f64, u: &[Complex64]) -> Result<DiscountedTransform> {
        if u.len() != self.dim() {
            return Err(Error::Dimension(format!("u has length {}, expected {}", u.len(), self.dim())));
        }
        match self {
            ShortRateModel::Vasicek(v) => Ok(v.phi_psi(t, u[0])),
            ShortRateModel::Cir(c) => c.phi_psi(t, u[0]),
            ShortRateModel::Generic(sys) => integrate(sys, u, t, DEFAULT_RTOL, DEFAULT_ATOL),
        }
    }

    /// `(A(tau), B(tau))`.
    pub fn bond_factors(&self, tau: f64) -> Result<(f64, Vec<f64>)> {
        match self {
            ShortRateModel::Vasicek(v) => Ok((v.bond_a(tau), vec![v.bond_b(tau)])),
            ShortRateModel::Cir(c) => Ok((c.bond_a(tau), vec![c.bond_b(tau)])),
            ShortRateModel::Generic(_) => {
                let s = self.transform(tau, &vec![Complex64::new(0.0, 0.0); self.dim()])?;
                Ok((-s.phi.re, s.psi.iter().map(|z| -z.re).collect()))
            }
        }
    }

    fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension(format!("state has length {}, expected {}", x.dim(), self.dim())));
        }
        Ok(())
    }

    /// `P(t, T)`.
    pub fn bond_price(&self, x: &StateVector, t: f64, big_t: f64) -> Result<f64> {
        self.check_state(x)?;
        if !(big_t >= t) {
            return Err(Error::InvalidArgument(format!("need t <= T, got t={t}, T={big_t}")));
        }
        let (a, b) = self.bond_factors(big_t - t)?;
        let bx: f64 = b.iter().zip(x.0.iter()).map(|(b, x)| b * x).sum();
        Ok((-a - bx).exp())
    }

    /// `E^{Q^S}[e^{u^T X(T)} | X(t) = x]`.
    pub fn forward_char(&self, x: &StateVector, t: f64, big_t: f64, s: f64, u: &[Complex64]) -> Result<Complex64> {
        self.check_state(x)?;
        if !(t <= big_t && big_t <= s) {
            return Err(Error::InvalidArgument(format!("need t <= T <= S, got {t}, {big_t}, {s}")));
        }
        let (a_st, b_st) = self.bond_factors(s - big_t)?;
        let v: Vec<Complex64> = u.iter().zip(&b_st).map(|(u, b)| u - b).collect();
        let inner = self.transform(big_t - t, &v)?;
        let p_ts = self.bond_price(x, t, s)?;
        Ok((-a_st + inner.phi + inner.psi.iter().zip(x.0.iter()).map(|(p, x)| p * x).sum::<Complex64>()).exp() / p_ts)
    }

    /// Price at `t` of a European option with expiry `T` on the `S`-bond.
    pub fn bond_option(
        &self,
        x: &StateVector,
        t: f64,
        big_t: f64,
        s: f64,
        k: f64,
        kind: OptionKind,
        law: BondLaw,
    ) -> Result<PriceResult> {
        self.check_state(x)?;
        if !(t <= big_t && big_t <= s) {
            return Err(Error::InvalidArgument(format!("need t <= T <= S, got {t}, {big_t}, {s}")));
        }
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("strike must be positive, got {k}")));
        }
        let p_ts = self.bond_price(x, t, s)?;
        let p_tt = self.bond_price(x, t, big_t)?;
        let (a_st, b_st) = self.bond_factors(s - big_t)?;
        // E = {B(S-T)^T X(T) <= level}
        let level = -a_st - k.ln();

        let (q_s, q_t, method, err) = match (law, self) {
            (BondLaw::Gaussian, ShortRateModel::Vasicek(v)) => {
                let prob = |meas: f64| -> Result<f64> {
                    let (mean, var) = v.forward_gaussian(x.0[0], t, big_t, meas)?;
                    Ok(gaussian_below(b_st[0], level, mean, var))
                };
                (prob(s)?, prob(big_t)?, PriceMethod::ClosedForm, 0.0)
            }
            (BondLaw::Chi2, ShortRateModel::Cir(c)) => {
                let r_t = x.0[0];
                if big_t == t || c.sigma == 0.0 {
                    // Deterministic r(T): same as Vasicek without noise.
                    let v = VasicekParams { b: c.b, beta: c.beta, sigma: 0.0, r0: r_t };
                    let (mean, _) = v.forward_gaussian(r_t, t, big_t, s)?;
                    let pr = gaussian_below(b_st[0], level, mean, 0.0);
                    (pr, pr, PriceMethod::ClosedForm, 0.0)
                } else {
                    // B(S-T) > 0, so E = {r(T) <= level / B}
                    let r_star = level / b_st[0];
                    let prob = |meas: f64| -> Result<f64> {
                        let f = c.forward_chisq(r_t, t, big_t, meas)?;
                        Ok(if r_star <= 0.0 {
                            0.0
                        } else {
                            noncentral_chisq_cdf(f.delta, f.zeta, 2.0 * r_star / f.c1)
                        })
                    };
                    (prob(s)?, prob(big_t)?, PriceMethod::Chi2, 1e-12)
                }
            }
            (BondLaw::Generic, _) => {
                let (qs, es) = self.prob_generic(x, t, big_t, s, &b_st, level)?;
                let (qt, et) = self.prob_generic(x, t, big_t, big_t, &b_st, level)?;
                (qs, qt, PriceMethod::Quadrature, p_ts * es + k * p_tt * et)
            }
            (law, _) => {
                return Err(Error::InvalidArgument(format!(
                    "{law:?} law does not match the model ({})",
                    self.name()
                )))
            }
        };
        let value = match kind {
            OptionKind::Call => p_ts * q_s - k * p_tt * q_t,
            OptionKind::Put => k * p_tt * (1.0 - q_t) - p_ts * (1.0 - q_s),
        };
        Ok(PriceResult { value, method, err })
    }

    fn name(&self) -> &'static str {
        match self {
            ShortRateModel::Vasicek(_) => "vasicek",
            ShortRateModel::Cir(_) => "cir",
            ShortRateModel::Generic(_) => "generic",
        }
    }

    /// `Q^S[w^T X(T) <= level]` by Gil-Pelaez inversion of the forward
    /// characteristic function.
    fn prob_generic(&self, x: &StateVector, t: f64, big_t: f64, s: f64, w: &[f64], level: f64) -> Result<(f64, f64)> {
        if big_t == t {
            let y: f64 = w.iter().zip(x.0.iter()).map(|(w, x)| w * x).sum();
            return Ok((if y <= level { 1.0 } else { 0.0 }, 0.0));
        }
        let tol = 1e-9;
        let cf = |y: f64| -> Result<Complex64> {
            let u: Vec<Complex64> = w.iter().map(|w| Complex64::new(0.0, y * w)).collect();
            self.forward_char(x, t, big_t, s, &u)
        };
        let integrand = |y: f64| -> f64 {
            match cf(y) {
                Ok(z) => (Complex64::new(0.0, -y * level).exp() * z).im / y,
                Err(_) => f64::NAN,
            }
        };
        // Extend the range until the characteristic function has decayed.
        let mut y_max = 16.0;
        while y_max < 1e7 && cf(y_max)?.norm() / y_max > tol * 1e-3 {
            y_max *= 2.0;
        }
        let (v, e) = integrate_half_line(integrand, y_max, tol);
        if !v.is_finite() {
            return Err(Error::NoSolution("forward characteristic function not integrable".into()));
        }
        Ok(((0.5 - v / std::f64::consts::PI).clamp(0.0, 1.0), e / std::f64::consts::PI))
    }

    /// Forwards `F(T_{i-1}, T_i)` and discounts `P(0, T_i)`, `i = 1..n`,
    /// from the time-0 curve.
    pub fn cap_curve(&self, x: &StateVector, tenor: &TenorStructure) -> Result<(Vec<f64>, Vec<f64>)> {
        let p: Vec<f64> = tenor
            .dates
            .iter()
            .map(|&d| self.bond_price(x, 0.0, d))
            .collect::<Result<_>>()?;
        let fwd = p.windows(2).map(|w| (w[0] / w[1] - 1.0) / tenor.spacing).collect();
        Ok((fwd, p[1..].to_vec()))
    }

    /// At-the-money cap rate `(P(0,T_0) - P(0,T_n)) / (delta sum_i P(0,T_i))`.
    pub fn atm_strike(&self, x: &StateVector, tenor: &TenorStructure) -> Result<f64> {
        let p: Vec<f64> = tenor
            .dates
            .iter()
            .map(|&d| self.bond_price(x, 0.0, d))
            .collect::<Result<_>>()?;
        if p.len() < 2 {
            return Ok(0.0);
        }
        let annuity = tenor.spacing * pairwise_sum(&p[1..]);
        Ok((p[0] - p[p.len() - 1]) / annuity)
    }

    /// Cap with strike rate `kappa`: `(1 + delta kappa)` times the sum of
    /// bond puts with expiry `T_{i-1}`, maturity `T_i` and strike
    /// `1 / (1 + delta kappa)`.
    pub fn cap_price(&self, x: &StateVector, kappa: f64, tenor: &TenorStructure) -> Result<PriceResult> {
        let scale = 1.0 + tenor.spacing * kappa;
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(format!("strike rate {kappa} too negative")));
        }
        if tenor.caplets() == 0 {
            return Ok(PriceResult::closed_form(0.0));
        }
        let law = match self {
            ShortRateModel::Vasicek(_) => BondLaw::Gaussian,
            ShortRateModel::Cir(_) => BondLaw::Chi2,
            ShortRateModel::Generic(_) => BondLaw::Generic,
        };
        let mut vals = Vec::with_capacity(tenor.caplets());
        let mut errs = Vec::with_capacity(tenor.caplets());
        let mut method = PriceMethod::ClosedForm;
        for w in tenor.dates.windows(2) {
            let r = self.bond_option(x, 0.0, w[0], w[1], 1.0 / scale, OptionKind::Put, law)?;
            vals.push(r.value);
            errs.push(r.err);
            method = r.method;
        }
        Ok(PriceResult {
            value: scale * pairwise_sum(&vals),
            method,
            err: scale * pairwise_sum(&errs),
        })
    }
}

fn gaussian_below(w: f64, level: f64, mean: f64, var: f64) -> f64 {
    // P(w Y <= level) for Y ~ N(mean, var), w > 0
    let thr = level / w;
    if var <= 0.0 {
        return if mean <= thr { 1.0 } else { 0.0 };
    }
    norm_cdf((thr - mean) / var.sqrt())
}

/// Equally spaced payment dates `T_0 < T_1 < ... < T_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TenorStructure {
    pub dates: Vec<f64>,
    pub spacing: f64,
}

impl TenorStructure {
    /// Dates `first, first + spacing, ..., maturity`.
    pub fn new(first: f64, maturity: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && first >= 0.0 && maturity >= first) {
            return Err(Error::InvalidArgument(format!(
                "bad tenor: first {first}, maturity {maturity}, spacing {spacing}"
            )));
        }
        let steps = (maturity - first) / spacing;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "maturity {maturity} is not on the {spacing} grid starting at {first}"
            )));
        }
        let dates = (0..=n as usize).map(|i| first + i as f64 * spacing).collect();
        Ok(TenorStructure { dates, spacing })
    }

    /// Quarterly dates `0.25, 0.5, ..., maturity`.
    pub fn quarterly(maturity: f64) -> Result<Self> {
        Self::new(0.25, maturity, 0.25)
    }

    pub fn caplets(&self) -> usize {
        self.dates.len().saturating_sub(1)
    }
}

/// Discounted transform of a generic affine model at horizon `t`.
pub fn discounted_transform(p: &AffineParams, srs: &ShortRateSpec, u: &[Complex64], t: f64) -> Result<DiscountedTransform> {
    let sys = RiccatiSystem::discounted(p.clone(), srs.clone())?;
    integrate(&sys, u, t, DEFAULT_RTOL, DEFAULT_ATOL)
}

/// `P(t, T)` at state `x`.
pub fn bond_price(p: &AffineParams, srs: &ShortRateSpec, x: &StateVector, t: f64, big_t: f64) -> Result<PriceResult> {
    let m = ShortRateModel::from_affine(p, srs)?;
    Ok(PriceResult::closed_form(m.bond_price(x, t, big_t)?))
}

/// `E^{Q^S}[e^{u^T X(T)} | X(t) = x]`.
pub fn forward_char(
    p: &AffineParams,
    srs: &ShortRateSpec,
    x: &StateVector,
    t: f64,
    big_t: f64,
    s: f64,
    u: &[Complex64],
) -> Result<Complex64> {
    ShortRateModel::from_affine(p, srs)?.forward_char(x, t, big_t, s, u)
}

/// European option on the `S`-bond; see [`ShortRateModel::bond_option`].
#[allow(clippy::too_many_arguments)]
pub fn bond_option(
    p: &AffineParams,
    srs: &ShortRateSpec,
    x: &StateVector,
    t: f64,
    big_t: f64,
    s: f64,
    k: f64,
    kind: OptionKind,
    law: BondLaw,
) -> Result<PriceResult> {
    ShortRateModel::from_affine(p, srs)?.bond_option(x, t, big_t, s, k, kind, law)
}

pub fn atm_strike(p: &AffineParams, srs: &ShortRateSpec, x: &StateVector, tenor: &TenorStructure) -> Result<f64> {
    ShortRateModel::from_affine(p, srs)?.atm_strike(x, tenor)
}

pub fn cap_price(
    p: &AffineParams,
    srs: &ShortRateSpec,
    x: &StateVector,
    kappa: f64,
    tenor: &TenorStructure,
) -> Result<PriceResult> {
    ShortRateModel::from_affine(p, srs)?.cap_price(x, kappa, tenor)
}

/// CDF of the noncentral chi-squared law with `delta` degrees of freedom and
/// noncentrality `zeta`, as a Poisson(`zeta/2`) mixture of central laws.
pub fn noncentral_chisq_cdf(delta: f64, zeta: f64, x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let central = |j: usize| -> f64 {
        let a = 0.5 * delta + j as f64;
        if a <= 0.0 {
            1.0
        } else {
            gamma_lr(a, 0.5 * x)
        }
    };
    let lam = 0.5 * zeta;
    if lam == 0.0 {
        return central(0);
    }
    const MAX_TERMS: usize = 100_000;
    let mode = lam.floor() as usize;
    let w_mode = (-lam + mode as f64 * lam.ln() - ln_gamma(mode as f64 + 1.0)).exp();
    let mut terms = vec![w_mode * central(mode)];
    let mut sum = terms[0];
    // Upwards: weights and central CDFs both decrease past the mode.
    let mut w = w_mode;
    let mut j = mode;
    while terms.len() < MAX_TERMS {
        j += 1;
        w *= lam / j as f64;
        let term = w * central(j);
        terms.push(term);
        sum += term;
        if term <= 1e-16 * sum || w == 0.0 {
            break;
        }
    }
    // Downwards: central CDFs increase but are bounded by 1.
    let mut w = w_mode;
    let mut j = mode;
    while j > 0 && terms.len() < MAX_TERMS {
        w *= j as f64 / lam;
        j -= 1;
        let term = w * central(j);
        terms.push(term);
        sum += term;
        if w <= 1e-16 * sum {
            break;
        }
    }
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pairwise_sum(&terms).min(1.0)
}

/// Black price of a cap: `sum_i delta P(0,T_i) (F_i N(d1) - kappa N(d2))`,
/// with `d1,2 = (log(F_i/kappa) +- sigma^2 T_{i-1}/2) / (sigma sqrt(T_{i-1}))`.
pub fn black_cap_price(forwards: &[f64], kappa: f64, sigma_b: f64, discounts: &[f64], tenor: &TenorStructure) -> Result<f64> {
    check_black_inputs(forwards, discounts, tenor)?;
    let caplets: Vec<f64> = (0..forwards.len())
        .map(|i| tenor.spacing * discounts[i] * black_caplet(forwards[i], kappa, sigma_b, tenor.dates[i]))
        .collect();
    Ok(pairwise_sum(&caplets))
}

fn check_black_inputs(forwards: &[f64], discounts: &[f64], tenor: &TenorStructure) -> Result<()> {
    if forwards.len() != tenor.caplets() || discounts.len() != tenor.caplets() {
        return Err(Error::Dimension(format!(
            "{} forwards and {} discounts for {} caplets",
            forwards.len(),
            discounts.len(),
            tenor.caplets()
        )));
    }
    Ok(())
}

/// Undiscounted Black caplet value per unit accrual.
fn black_caplet(f: f64, kappa: f64, sigma: f64, expiry: f64) -> f64 {
    let sd = sigma * expiry.sqrt();
    if sd <= 0.0 || f <= 0.0 || kappa <= 0.0 {
        return (f - kappa).max(0.0);
    }
    let d1 = (f / kappa).ln() / sd + 0.5 * sd;
    f * norm_cdf(d1) - kappa * norm_cdf(d1 - sd)
}

fn black_cap_vega(forwards: &[f64], kappa: f64, sigma: f64, discounts: &[f64], tenor: &TenorStructure) -> f64 {
    let terms: Vec<f64> = (0..forwards.len())
        .map(|i| {
            let (f, t) = (forwards[i], tenor.dates[i]);
            let sd = sigma * t.sqrt();
            if sd <= 0.0 || f <= 0.0 || kappa <= 0.0 {
                return 0.0;
            }
            let d1 = (f / kappa).ln() / sd + 0.5 * sd;
            tenor.spacing * discounts[i] * f * norm_pdf(d1) * t.sqrt()
        })
        .collect();
    pairwise_sum(&terms)
}

/// Lower and upper end of the volatility bracket.
pub const VOL_BRACKET: (f64, f64) = (1e-6, 10.0);

/// Black implied volatility of a cap price.
pub fn implied_vol_cap(target: f64, forwards: &[f64], kappa: f64, discounts: &[f64], tenor: &TenorStructure) -> Result<f64> {
    check_black_inputs(forwards, discounts, tenor)?;
    let price = |s: f64| black_cap_price(forwards, kappa, s, discounts, tenor).expect("inputs checked");
    let (lo, hi) = (price(VOL_BRACKET.0), price(VOL_BRACKET.1));
    if !(target >= lo && target <= hi) {
        return Err(Error::NoSolution(format!(
            "cap price {target} outside the Black range [{lo}, {hi}] for sigma in [{}, {}]",
            VOL_BRACKET.0, VOL_BRACKET.1
        )));
    }
    solve_vol(price, |s| black_cap_vega(forwards, kappa, s, discounts, tenor), target)
}

/// Bisection on [`VOL_BRACKET`] down to width `1e-4`, then safeguarded Newton.
pub(crate) fn solve_vol<P: Fn(f64) -> f64, V: Fn(f64) -> f64>(price: P, vega: V, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = VOL_BRACKET;
    if (price(lo) - target) * (price(hi) - target) > 0.0 {
        return Err(Error::NoSolution(format!("price {target} not bracketed by volatilities in [{lo}, {hi}]")));
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if price(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..100 {
        let diff = price(s) - target;
        if diff.abs() <= 1e-12 * target.abs().max(1e-300) && diff.abs() <= 1e-12 {
            break;
        }
        if diff < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let v = vega(s);
        let mut next = if v > 0.0 { s - diff / v } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() < 1e-15 * s {
            s = next;
            break;
        }
        s = next;
    }
    Ok(s)
}
