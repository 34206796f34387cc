//! Command implementations behind the `affinekit` binary.
//!
//! Every command reads a model file (`--config`), applies `--set` overrides
//! and returns its output as text; [`run`] prints it or writes it to `--out`.
//! Errors are reported on stderr as a single line starting with `error:` and
//! yield exit code 1.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::config::{Config, NamedModel, Resolved};
use crate::error::{Error, Result};
use crate::fourier::{bs_implied_vol, call_transform, heston_call_tol, transform_price, CallVariant};
use crate::mc::{mc_price, Scheme, SimConfig};
use crate::models::HestonParams;
use crate::pricing::{implied_vol_cap, BondLaw, OptionKind, ShortRateModel, TenorStructure};
use crate::riccati::{blow_up_time, integrate, real_u, RiccatiSystem, ScalarRiccatiSpec, DEFAULT_ATOL, DEFAULT_RTOL};

/// Maturities of the default cap table.
pub const CAP_MATURITIES: [f64; 14] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 15.0, 20.0, 25.0, 30.0];
/// Default grid of the implied volatility surface.
pub const SURFACE_MATURITIES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
pub const SURFACE_STRIKES: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];

#[derive(Debug, Parser)]
#[command(name = "affinekit", version, about = "Affine processes: transforms, pricing and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Model file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override a config value, e.g. `--set model.sigma=0.2` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Monte Carlo seed.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Monte Carlo paths.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub paths: usize,
    /// Monte Carlo steps per year.
    #[arg(long, global = true, default_value_t = 500)]
    pub steps: usize,
    /// Quadrature tolerance.
    #[arg(long, global = true, default_value_t = crate::fourier::DEFAULT_ABS_TOL)]
    pub tol: f64,
    /// Fourier dampening exponent.
    #[arg(long, global = true, default_value_t = crate::fourier::DEFAULT_P)]
    pub p: f64,
    /// Call representation: 1 (p > 1) or 2 (0 < p < 1). Defaults to the one matching --p.
    #[arg(long, global = true)]
    pub variant: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Auto,
    Gaussian,
    Chi2,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Instrument {
    /// Zero-coupon bond (payoff 1).
    Bond,
    /// Put on a zero-coupon bond maturing at --bond-maturity.
    BondPut,
    /// Call on `S = e^{X_d}`.
    Call,
    /// Zero payoff.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Euler,
    CirExact,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check admissibility and report the canonical form.
    Validate,
    /// Transform exponents at horizon t.
    Phipsi {
        /// Comma-separated complex components, e.g. `0,0.5+2i`.
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long)]
        t: f64,
        /// Attach the short rate (discounted transform).
        #[arg(long)]
        discounted: bool,
    },
    /// Zero-coupon bond prices P(0, T).
    Bond {
        #[arg(long, value_delimiter = ',', required = true)]
        maturities: Vec<f64>,
    },
    /// European option on a zero-coupon bond.
    BondOption {
        /// Option expiry T.
        #[arg(long)]
        expiry: f64,
        /// Bond maturity S.
        #[arg(long)]
        maturity: f64,
        #[arg(long)]
        strike: f64,
        #[arg(long, value_enum, default_value_t = KindArg::Call)]
        kind: KindArg,
        #[arg(long, value_enum, default_value_t = LawArg::Auto)]
        law: LawArg,
    },
    /// ATM cap prices and Black implied volatilities (CSV).
    CapTable {
        /// Comma-separated maturities; an empty string gives a header-only table.
        #[arg(long, value_parser = parse_float_list)]
        maturities: Option<FloatList>,
    },
    /// European call on S = e^{X_d} by Fourier quadrature.
    HestonCall {
        #[arg(long)]
        maturity: f64,
        #[arg(long)]
        strike: f64,
    },
    /// Implied volatility surface (CSV).
    VolSurface {
        #[arg(long, value_parser = parse_float_list)]
        maturities: Option<FloatList>,
        #[arg(long, value_parser = parse_float_list)]
        strikes: Option<FloatList>,
    },
    /// Monte Carlo price with the analytic value when available.
    McPrice {
        #[arg(long, value_enum)]
        instrument: Instrument,
        /// Payoff date.
        #[arg(long)]
        maturity: f64,
        #[arg(long)]
        strike: Option<f64>,
        /// Maturity of the underlying bond for bond-put.
        #[arg(long)]
        bond_maturity: Option<f64>,
        #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
        scheme: SchemeArg,
    },
    /// Explosion time of the plain Riccati system at a real u.
    Explosion {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        u: Vec<f64>,
        #[arg(long, default_value_t = 30.0)]
        t_max: f64,
        /// Also tabulate the explosion time along the ray theta * u.
        #[arg(long)]
        scan: bool,
    },
}

/// A comma-separated list of numbers that may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn parse_float_list(s: &str) -> std::result::Result<FloatList, String> {
    if s.trim().is_empty() {
        return Ok(FloatList(Vec::new()));
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(FloatList)
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim().replace(' ', "");
    let bad = || Error::InvalidArgument(format!("cannot parse complex number '{s}'"));
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not an exponent sign or the leading one
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => v.parse().map_err(|_| bad())?,
        };
        Ok(Complex64::new(re.parse().map_err(|_| bad())?, im))
    } else {
        Ok(Complex64::new(s.parse().map_err(|_| bad())?, 0.0))
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    Config::load(path, &cli.overrides)
}

fn variant(cli: &Cli) -> Result<CallVariant> {
    match cli.variant {
        Some(v) => {
            let var = CallVariant::from_index(v)?;
            if CallVariant::for_p(cli.p)? != var {
                return Err(Error::InvalidArgument(format!(
                    "--variant {v} needs {} but --p is {}",
                    if v == 1 { "p > 1" } else { "0 < p < 1" },
                    cli.p
                )));
            }
            Ok(var)
        }
        None => CallVariant::for_p(cli.p),
    }
}

/// Admissibility report and canonical form.
pub fn cmd_validate(cfg: &Config) -> Result<String> {
    let mut out = String::new();
    let res = match cfg.resolve() {
        Ok(r) => r,
        Err(Error::NotAdmissible(v)) => {
            writeln!(out, "admissible: no").unwrap();
            for msg in &v {
                writeln!(out, "violation: {msg}").unwrap();
            }
            return Err(Error::NotAdmissible(v));
        }
        Err(e) => return Err(e),
    };
    let p = &res.params;
    writeln!(out, "admissible: yes").unwrap();
    writeln!(out, "state space: R+^{} x R^{}", p.m, p.n).unwrap();
    let tol = crate::params::default_psd_tol(p);
    writeln!(out, "block-diagonal: {}", if p.is_block_diagonal(tol) { "yes" } else { "no" }).unwrap();
    let ct = crate::canonical::canonical_transform(p, tol)?;
    writeln!(out, "canonical q: {}", ct.q).unwrap();
    writeln!(out, "canonical map Lambda:").unwrap();
    for i in 0..ct.lambda.nrows() {
        let row: Vec<String> = (0..ct.lambda.ncols()).map(|j| format!("{}", ct.lambda[(i, j)])).collect();
        writeln!(out, "  [{}]", row.join(", ")).unwrap();
    }
    Ok(out)
}

fn fmt_c(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}{}i", z.re, z.im)
    }
}

/// Transform exponents from the integrator, plus the closed form for named
/// models.
pub fn cmd_phipsi(cfg: &Config, u: &[Complex64], t: f64, discounted: bool) -> Result<String> {
    let res = cfg.resolve()?;
    let sys = if discounted {
        RiccatiSystem::discounted(res.params.clone(), res.srs.clone())?
    } else {
        RiccatiSystem::plain(res.params.clone())?
    };
    let sol = integrate(&sys, u, t, DEFAULT_RTOL, DEFAULT_ATOL)?;
    let mut out = String::new();
    writeln!(out, "t = {t}").unwrap();
    writeln!(out, "integrator: phi = {}", fmt_c(sol.phi)).unwrap();
    for (i, p) in sol.psi.iter().enumerate() {
        writeln!(out, "integrator: psi_{} = {}", i + 1, fmt_c(*p)).unwrap();
    }
    // Closed forms exist for the model's own short rate only.
    let default_rate = cfg.short_rate.is_none();
    let closed = match (&res.named, discounted) {
        (NamedModel::Vasicek(v), true) if default_rate => Some(v.phi_psi(t, u[0])),
        (NamedModel::Cir(c), true) if default_rate => Some(c.phi_psi(t, u[0])?),
        (NamedModel::Heston(h), _) if default_rate || !discounted => {
            let mut s = h.phi_psi(t, u[0], u[1])?;
            if discounted {
                s.phi -= h.r * t;
            }
            Some(s)
        }
        _ => None,
    };
    if let Some(s) = closed {
        writeln!(out, "closed form: phi = {}", fmt_c(s.phi)).unwrap();
        for (i, p) in s.psi.iter().enumerate() {
            writeln!(out, "closed form: psi_{} = {}", i + 1, fmt_c(*p)).unwrap();
        }
    }
    Ok(out)
}

fn short_rate_model(res: &Resolved) -> Result<ShortRateModel> {
    ShortRateModel::from_affine(&res.params, &res.srs)
}

/// CSV of bond prices.
pub fn cmd_bond(cfg: &Config, maturities: &[f64]) -> Result<String> {
    let res = cfg.resolve()?;
    let model = short_rate_model(&res)?;
    let mut out = String::from("maturity,price\n");
    for &t in maturities {
        writeln!(out, "{t},{}", model.bond_price(&res.x0, 0.0, t)?).unwrap();
    }
    Ok(out)
}

pub fn cmd_bond_option(cfg: &Config, expiry: f64, maturity: f64, strike: f64, kind: KindArg, law: LawArg) -> Result<String> {
    let res = cfg.resolve()?;
    let model = short_rate_model(&res)?;
    let law = match law {
        LawArg::Gaussian => BondLaw::Gaussian,
        LawArg::Chi2 => BondLaw::Chi2,
        LawArg::Generic => BondLaw::Generic,
        LawArg::Auto => match model {
            ShortRateModel::Vasicek(_) => BondLaw::Gaussian,
            ShortRateModel::Cir(_) => BondLaw::Chi2,
            ShortRateModel::Generic(_) => BondLaw::Generic,
        },
    };
    let kind = match kind {
        KindArg::Call => OptionKind::Call,
        KindArg::Put => OptionKind::Put,
    };
    let r = model.bond_option(&res.x0, 0.0, expiry, maturity, strike, kind, law)?;
    Ok(format!("price = {}\nmethod = {}\nerr = {:e}\n", r.value, r.method.tag(), r.err))
}

/// Four decimals; negative zero and values that round to zero print as `0.0000`.
fn fmt4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// Cap table CSV: four-decimal display columns followed by full precision.
pub fn cmd_cap_table(cfg: &Config, maturities: &[f64]) -> Result<String> {
    let res = cfg.resolve()?;
    if !matches!(res.named, NamedModel::Cir(_)) {
        return Err(Error::InvalidArgument("cap-table needs a CIR model (kind = \"cir\")".into()));
    }
    let model = short_rate_model(&res)?;
    let mut out = String::from(
        "maturity_years,strike_rate,cap_price,implied_vol,strike_rate_full,cap_price_full,implied_vol_full\n",
    );
    for &mat in maturities {
        let tenor = TenorStructure::quarterly(mat)?;
        let kappa = model.atm_strike(&res.x0, &tenor)?;
        let cap = model.cap_price(&res.x0, kappa, &tenor)?;
        let vol = if tenor.caplets() == 0 {
            None
        } else {
            let (fwd, disc) = model.cap_curve(&res.x0, &tenor)?;
            Some(implied_vol_cap(cap.value, &fwd, kappa, &disc, &tenor)?)
        };
        let (v4, vf) = match vol {
            Some(v) => (fmt4(v), format!("{v}")),
            None => (String::new(), String::new()),
        };
        writeln!(out, "{mat},{},{},{v4},{kappa},{},{vf}", fmt4(kappa), fmt4(cap.value), cap.value).unwrap();
    }
    Ok(out)
}

fn heston_of(res: &Resolved) -> Result<HestonParams> {
    match &res.named {
        NamedModel::Heston(h) => Ok(*h),
        _ => Err(Error::InvalidArgument("this command needs a Heston model (kind = \"heston\")".into())),
    }
}

/// Call price; Heston uses the closed-form exponents, generic models the
/// integrator with the last coordinate as log-price.
pub fn cmd_heston_call(cfg: &Config, maturity: f64, strike: f64, p: f64, var: CallVariant, tol: f64) -> Result<String> {
    let res = cfg.resolve()?;
    let (price, s0, r) = match &res.named {
        NamedModel::Heston(h) => (heston_call_tol(h, 0.0, maturity, strike, p, var, tol)?, h.x2_0.exp(), h.r),
        NamedModel::Generic => {
            let pt = call_transform(strike, p)?;
            let d = res.params.dim();
            (
                transform_price(&res.params, &res.srs, &res.x0, 0.0, maturity, &pt, tol)?,
                res.x0.0[d - 1].exp(),
                f64::NAN,
            )
        }
        _ => return Err(Error::InvalidArgument("heston-call needs a Heston or generic model".into())),
    };
    let mut out = format!("price = {}\nmethod = {}\nerr = {:e}\n", price.value, price.method.tag(), price.err);
    if r.is_finite() {
        if let Ok(v) = bs_implied_vol(price.value, s0, strike, r, maturity) {
            writeln!(out, "implied_vol = {v}").unwrap();
        }
    }
    Ok(out)
}

/// Implied volatility surface CSV.
pub fn cmd_vol_surface(cfg: &Config, maturities: &[f64], strikes: &[f64], p: f64, var: CallVariant, tol: f64) -> Result<String> {
    let res = cfg.resolve()?;
    let h = heston_of(&res)?;
    let s0 = h.x2_0.exp();
    let mut out = String::from("T,K,price,implied_vol,price_full,implied_vol_full\n");
    for &t in maturities {
        for &k in strikes {
            let price = heston_call_tol(&h, 0.0, t, k, p, var, tol)?;
            let vol = bs_implied_vol(price.value, s0, k, h.r, t)?;
            writeln!(out, "{t},{k},{},{},{},{vol}", fmt4(price.value), fmt4(vol), price.value).unwrap();
        }
    }
    Ok(out)
}

/// Monte Carlo price and the analytic reference when one exists.
#[allow(clippy::too_many_arguments)]
pub fn cmd_mc_price(
    cfg: &Config,
    instrument: Instrument,
    maturity: f64,
    strike: Option<f64>,
    bond_maturity: Option<f64>,
    sim: &SimConfig,
    p: f64,
    tol: f64,
) -> Result<String> {
    let res = cfg.resolve()?;
    let d = res.params.dim();
    let need_strike = || strike.ok_or_else(|| Error::InvalidArgument("--strike is required for this instrument".into()));
    let (mc, reference) = match instrument {
        Instrument::Zero => (mc_price(&res.params, &res.srs, &res.x0, |_| 0.0, maturity, sim)?, Some(0.0)),
        Instrument::Bond => {
            let mc = mc_price(&res.params, &res.srs, &res.x0, |_| 1.0, maturity, sim)?;
            let analytic = short_rate_model(&res)?.bond_price(&res.x0, 0.0, maturity).ok();
            (mc, analytic)
        }
        Instrument::BondPut => {
            let k = need_strike()?;
            let s = bond_maturity.ok_or_else(|| Error::InvalidArgument("--bond-maturity is required for bond-put".into()))?;
            let model = short_rate_model(&res)?;
            let (a, b) = model.bond_factors(s - maturity)?;
            let payoff = |x: &[f64]| {
                let bx: f64 = b.iter().zip(x).map(|(b, x)| b * x).sum();
                (k - (-a - bx).exp()).max(0.0)
            };
            let mc = mc_price(&res.params, &res.srs, &res.x0, payoff, maturity, sim)?;
            let law = match model {
                ShortRateModel::Vasicek(_) => BondLaw::Gaussian,
                ShortRateModel::Cir(_) => BondLaw::Chi2,
                ShortRateModel::Generic(_) => BondLaw::Generic,
            };
            let analytic = model
                .bond_option(&res.x0, 0.0, maturity, s, k, OptionKind::Put, law)
                .ok()
                .map(|r| r.value);
            (mc, analytic)
        }
        Instrument::Call => {
            let k = need_strike()?;
            let mc = mc_price(&res.params, &res.srs, &res.x0, |x| (x[d - 1].exp() - k).max(0.0), maturity, sim)?;
            let var = CallVariant::for_p(p)?;
            let analytic = match &res.named {
                NamedModel::Heston(h) => heston_call_tol(h, 0.0, maturity, k, p, var, tol).ok().map(|r| r.value),
                _ => call_transform(k, p)
                    .and_then(|pt| transform_price(&res.params, &res.srs, &res.x0, 0.0, maturity, &pt, tol))
                    .ok()
                    .map(|r| r.value),
            };
            (mc, analytic)
        }
    };
    let mut out = format!(
        "mc = {}\nstderr = {}\npaths = {}\nsteps = {}\nscheme = {}\nseed = {}\n",
        mc.value,
        mc.err,
        sim.n_paths,
        sim.steps_for(maturity),
        sim.scheme.name(),
        sim.seed
    );
    if let Some(a) = reference {
        let z = if mc.err > 0.0 { (mc.value - a) / mc.err } else { 0.0 };
        writeln!(out, "analytic = {a}\nz = {z:.3}").unwrap();
    }
    Ok(out)
}

/// Explosion time of the plain system, with the closed-form root for CIR.
pub fn cmd_explosion(cfg: &Config, u: &[f64], t_max: f64, scan: bool) -> Result<String> {
    let res = cfg.resolve()?;
    let sys = RiccatiSystem::plain(res.params.clone())?;
    let mut out = String::new();
    match blow_up_time(&sys, &real_u(u), t_max)?.time() {
        Some(t) => writeln!(out, "t_plus = {t}").unwrap(),
        None => writeln!(out, "no explosion <= {t_max}").unwrap(),
    }
    if let NamedModel::Cir(c) = &res.named {
        let spec = ScalarRiccatiSpec::real(0.5 * c.sigma * c.sigma, c.beta, 0.0, u[0]);
        match spec.explosion_time() {
            Some(t) => writeln!(out, "closed-form root = {t}").unwrap(),
            None => writeln!(out, "closed-form root: none").unwrap(),
        }
    }
    if scan {
        writeln!(out, "theta,t_plus").unwrap();
        let mut prev = f64::INFINITY;
        let mut monotone = true;
        for k in 1..=8 {
            let theta = 0.25 * k as f64;
            let v: Vec<f64> = u.iter().map(|x| theta * x).collect();
            let t = blow_up_time(&sys, &real_u(&v), t_max)?.time();
            let tv = t.unwrap_or(f64::INFINITY);
            if tv > prev + 1e-6 {
                monotone = false;
            }
            prev = tv;
            match t {
                Some(t) => writeln!(out, "{theta},{t}").unwrap(),
                None => writeln!(out, "{theta},inf").unwrap(),
            }
        }
        writeln!(out, "monotone along ray: {}", if monotone { "yes" } else { "no" }).unwrap();
    }
    Ok(out)
}

fn dispatch(cli: &Cli) -> Result<String> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Validate => cmd_validate(&cfg),
        Command::Phipsi { u, t, discounted } => {
            let u: Vec<Complex64> = u.split(',').map(parse_complex).collect::<Result<_>>()?;
            cmd_phipsi(&cfg, &u, *t, *discounted)
        }
        Command::Bond { maturities } => cmd_bond(&cfg, maturities),
        Command::BondOption { expiry, maturity, strike, kind, law } => {
            cmd_bond_option(&cfg, *expiry, *maturity, *strike, *kind, *law)
        }
        Command::CapTable { maturities } => {
            let mats = maturities
                .as_ref()
                .map(|l| l.0.clone())
                .or_else(|| cfg.cap_table.as_ref().map(|c| c.maturities.clone()))
                .unwrap_or_else(|| CAP_MATURITIES.to_vec());
            cmd_cap_table(&cfg, &mats)
        }
        Command::HestonCall { maturity, strike } => {
            cmd_heston_call(&cfg, *maturity, *strike, cli.p, variant(cli)?, cli.tol)
        }
        Command::VolSurface { maturities, strikes } => {
            let grid = cfg.vol_surface.clone();
            let mats = maturities
                .as_ref()
                .map(|l| l.0.clone())
                .or_else(|| grid.as_ref().map(|g| g.maturities.clone()))
                .unwrap_or_else(|| SURFACE_MATURITIES.to_vec());
            let ks = strikes
                .as_ref()
                .map(|l| l.0.clone())
                .or_else(|| grid.as_ref().map(|g| g.strikes.clone()))
                .unwrap_or_else(|| SURFACE_STRIKES.to_vec());
            cmd_vol_surface(&cfg, &mats, &ks, cli.p, variant(cli)?, cli.tol)
        }
        Command::McPrice { instrument, maturity, strike, bond_maturity, scheme } => {
            let scheme = match scheme {
                SchemeArg::Euler => Scheme::EulerFullTruncation,
                SchemeArg::CirExact => Scheme::CirExact,
            };
            let sim = SimConfig::per_year(cli.paths, cli.steps, cli.seed, scheme);
            cmd_mc_price(&cfg, *instrument, *maturity, *strike, *bond_maturity, &sim, cli.p, cli.tol)
        }
        Command::Explosion { u, t_max, scan } => cmd_explosion(&cfg, u, *t_max, *scan),
    }
}

/// Caps the worker pool at `AFFINEKIT_THREADS` if set.
fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("AFFINEKIT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("AFFINEKIT_THREADS = '{v}' is not a count")))?;
        // A pool built earlier in the same process is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = init_threads().and_then(|_| dispatch(&cli)).and_then(|text| match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
