//! TOML model files.
//!
//! ```toml
//! [model]
//! kind = "cir"          # vasicek | cir | heston | generic
//! b = 0.08
//! beta = -0.9
//! sigma2 = 0.033        # CIR accepts either sigma or sigma2
//! r0 = 0.08
//!
//! [short_rate]          # optional, defaults depend on the model kind
//! c = 0.0
//! gamma = [1.0]
//! ```
//!
//! Generic models list `m`, `n`, `a`, `alphas`, `b`, `bmat` and `x0`, with
//! matrices as arrays of rows. Optional `[cap_table]` and `[vol_surface]`
//! sections hold the grids used by the corresponding commands. Overrides of
//! the form `model.sigma=0.2` are applied to the parsed document before it is
//! interpreted, so they take precedence over the file.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{AffineModel, CirParams, HestonParams, VasicekParams};
use crate::params::{AffineParams, ShortRateSpec, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub short_rate: Option<ShortRateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_table: Option<CapTableConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vol_surface: Option<VolSurfaceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Vasicek {
        b: f64,
        beta: f64,
        sigma: f64,
        r0: f64,
    },
    Cir {
        b: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma2: Option<f64>,
        r0: f64,
    },
    Heston {
        k: f64,
        kappa: f64,
        sigma: f64,
        rho: f64,
        r: f64,
        x1_0: f64,
        #[serde(default)]
        x2_0: f64,
    },
    Generic {
        m: usize,
        n: usize,
        a: Vec<Vec<f64>>,
        alphas: Vec<Vec<Vec<f64>>>,
        b: Vec<f64>,
        bmat: Vec<Vec<f64>>,
        x0: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortRateConfig {
    #[serde(default)]
    pub c: f64,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapTableConfig {
    pub maturities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolSurfaceConfig {
    pub maturities: Vec<f64>,
    pub strikes: Vec<f64>,
}

/// A named model, when the config describes one.
#[derive(Debug, Clone, PartialEq)]
pub enum NamedModel {
    Vasicek(VasicekParams),
    Cir(CirParams),
    Heston(HestonParams),
    Generic,
}

/// A config interpreted as affine parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: AffineParams,
    pub srs: ShortRateSpec,
    pub x0: StateVector,
    pub named: NamedModel,
}

fn matrix(rows: &[Vec<f64>], d: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("{name} must be a {d}x{d} array of rows")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Parses `text` after applying `key=value` overrides with dotted keys.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_with(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Config for generic parameters.
    pub fn generic(p: &AffineParams, srs: &ShortRateSpec, x0: &StateVector) -> Self {
        Config {
            model: ModelConfig::Generic {
                m: p.m,
                n: p.n,
                a: rows(&p.a),
                alphas: p.alphas.iter().map(rows).collect(),
                b: p.b.iter().copied().collect(),
                bmat: rows(&p.bmat),
                x0: x0.0.iter().copied().collect(),
            },
            short_rate: Some(ShortRateConfig {
                c: srs.c,
                gamma: srs.gamma.iter().copied().collect(),
            }),
            cap_table: None,
            vol_surface: None,
        }
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let (params, default_srs, x0, named) = match &self.model {
            ModelConfig::Vasicek { b, beta, sigma, r0 } => {
                let v = VasicekParams::new(*b, *beta, *sigma, *r0)?;
                let (p, s, x) = v.as_affine();
                (p, s, x, NamedModel::Vasicek(v))
            }
            ModelConfig::Cir { b, beta, sigma, sigma2, r0 } => {
                let sigma = match (sigma, sigma2) {
                    (Some(s), None) => *s,
                    (None, Some(s2)) if *s2 >= 0.0 => s2.sqrt(),
                    (None, Some(s2)) => return Err(Error::Config(format!("sigma2 = {s2} is negative"))),
                    _ => return Err(Error::Config("CIR model needs exactly one of sigma, sigma2".into())),
                };
                let c = CirParams::new(*b, *beta, sigma, *r0)?;
                let (p, s, x) = c.as_affine();
                (p, s, x, NamedModel::Cir(c))
            }
            ModelConfig::Heston { k, kappa, sigma, rho, r, x1_0, x2_0 } => {
                let h = HestonParams::new(*k, *kappa, *sigma, *rho, *r, *x1_0, *x2_0)?;
                let (p, s, x) = h.as_affine();
                (p, s, x, NamedModel::Heston(h))
            }
            ModelConfig::Generic { m, n, a, alphas, b, bmat, x0 } => {
                let d = m + n;
                if alphas.len() != *m || b.len() != d || x0.len() != d {
                    return Err(Error::Config(format!(
                        "generic model with m = {m}, n = {n} needs {m} alphas and b, x0 of length {d}"
                    )));
                }
                let p = AffineParams {
                    m: *m,
                    n: *n,
                    a: matrix(a, d, "a")?,
                    alphas: alphas
                        .iter()
                        .enumerate()
                        .map(|(i, al)| matrix(al, d, &format!("alphas[{i}]")))
                        .collect::<Result<_>>()?,
                    b: DVector::from_vec(b.clone()),
                    bmat: matrix(bmat, d, "bmat")?,
                };
                let x = StateVector::new(x0.clone());
                (p, ShortRateSpec::zero(d), x, NamedModel::Generic)
            }
        };
        let srs = match &self.short_rate {
            Some(s) => {
                if s.gamma.len() != params.dim() {
                    return Err(Error::Config(format!(
                        "short_rate.gamma has length {}, the model has dimension {}",
                        s.gamma.len(),
                        params.dim()
                    )));
                }
                ShortRateSpec::new(s.c, s.gamma.clone())
            }
            None => default_srs,
        };
        let rep = params.validate(crate::params::default_psd_tol(&params))?;
        if !rep.passed() {
            return Err(Error::NotAdmissible(rep.violations));
        }
        x0.check(params.m)?;
        Ok(Resolved { params, srs, x0, named })
    }
}

/// Applies `a.b.c=value` to `doc`. The value is parsed as a TOML value and
/// falls back to a plain string.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not of the form key=value")))?;
    let key = key.trim();
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut table = doc;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key '{key}': '{p}' is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIR: &str = "[model]\nkind = \"cir\"\nb = 0.08\nbeta = -0.9\nsigma2 = 0.033\nr0 = 0.08\n";

    #[test]
    fn cir_round_trip() {
        let c = Config::from_toml(CIR).unwrap();
        let again = Config::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        let r = c.resolve().unwrap();
        assert_eq!(r.params.alphas[0][(0, 0)], 0.033f64.sqrt().powi(2));
        assert!(matches!(r.named, NamedModel::Cir(_)));
    }

    #[test]
    fn overrides_take_precedence() {
        let c = Config::from_toml_with(CIR, &["model.b=0.1".into(), "cap_table.maturities=[1, 2.5]".into()]).unwrap();
        match c.model {
            ModelConfig::Cir { b, .. } => assert_eq!(b, 0.1),
            _ => panic!("kind changed"),
        }
        assert_eq!(c.cap_table.unwrap().maturities, vec![1.0, 2.5]);
    }

    #[test]
    fn rejects_unknown_and_ambiguous() {
        assert!(Config::from_toml(&format!("{CIR}extra = 1\n")).is_err());
        let both = Config::from_toml_with(CIR, &["model.sigma=0.2".into()]).unwrap();
        assert!(both.resolve().is_err());
        assert!(Config::from_toml_with(CIR, &["model.kind=\"cubic\"".into()]).is_err());
    }

    #[test]
    fn generic_round_trip_is_exact() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let p = crate::params::random_admissible(&mut rng, 2, 1);
        let x = crate::params::random_state(&mut rng, 2, 1);
        let srs = ShortRateSpec::new(0.01, vec![1.0, 0.5, 0.0]);
        let c = Config::generic(&p, &srs, &x);
        let r = Config::from_toml(&c.to_toml().unwrap()).unwrap().resolve().unwrap();
        assert_eq!(r.params, p);
        assert_eq!(r.srs, srs);
        assert_eq!(r.x0, x);
    }
}
