//! Coefficient families and their asymptotic classification.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mp::Real;

/// Asymptotic metadata `a_n ~ n^σ(1 + α/n)`, `b_n ~ 2γ n^σ(1 + β/n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMeta {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Exact value of τ when it is known structurally (e.g. 0 for
    /// dediagonalized models); otherwise τ = 2β − 2α + σ.
    #[serde(default)]
    pub tau: Option<f64>,
}

/// Explicit coefficient list; `a[n]`, `b[n]` for `n = 0..len`.
#[derive(Clone, Debug)]
pub struct Table {
    pub a: Vec<Real>,
    pub b: Vec<Real>,
    pub meta: Option<AsymptoticMeta>,
    pub label: String,
}

impl Table {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (a, b) in self.a.iter().zip(&self.b) {
            h.update(a.to_string_radix(16, None).as_bytes());
            h.update(b",");
            h.update(b.to_string_radix(16, None).as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    PowerLaw { sigma: f64, alpha: f64, beta: f64, gamma: f64 },
    Laguerre { p: f64 },
    Hermite,
    StieltjesCarlitz { k: f64 },
    DualHahn { x: f64, y: f64 },
    ZeroDiagPowerLaw { sigma: f64, alpha_hat: f64 },
    Table(Arc<Table>),
}

/// JSON configuration of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub family: FamilyConfig,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
}

fn default_precision() -> u32 {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FamilyConfig {
    #[serde(alias = "power_law")]
    Powerlaw { sigma: f64, alpha: f64, beta: f64, gamma: f64 },
    Laguerre { p: f64 },
    Hermite,
    #[serde(alias = "stieltjescarlitz")]
    StieltjesCarlitz { k: f64 },
    #[serde(alias = "dualhahn")]
    DualHahn { x: f64, y: f64 },
    #[serde(alias = "zerodiagpowerlaw", alias = "zero_diag_power_law")]
    ZerodiagPowerlaw { sigma: f64, alpha_hat: f64 },
    Table {
        path: String,
        #[serde(default)]
        meta: Option<AsymptoticMeta>,
    },
}

#[derive(Clone, Debug)]
pub struct CoefficientModel {
    family: Family,
    precision: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    NonCriticalRegular,
    NonCriticalSingular,
    CriticalRegular,
    CriticalSingularSub,
    CriticalSingularSuper,
    DoublyCriticalRegular,
    DoublyCriticalSingular,
}

impl Cell {
    pub fn is_critical_singular(self) -> bool {
        matches!(self, Cell::CriticalSingularSub | Cell::CriticalSingularSuper)
    }

    pub fn description(self) -> &'static str {
        match self {
            Cell::NonCriticalRegular => "non-critical regular",
            Cell::NonCriticalSingular => "non-critical singular",
            Cell::CriticalRegular => "critical regular",
            Cell::CriticalSingularSub => "critical singular subcritical",
            Cell::CriticalSingularSuper => "critical singular supercritical",
            Cell::DoublyCriticalRegular => "doubly-critical regular",
            Cell::DoublyCriticalSingular => "doubly-critical singular",
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.description())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub gamma: f64,
    pub nu: i32,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub s: f64,
    pub delta: f64,
    pub varrho: f64,
    pub cell: Cell,
}

impl Classification {
    /// Classification from asymptotic parameters.
    pub fn from_meta(m: &AsymptoticMeta) -> Self {
        let tau = match m.tau {
            Some(t) => t,
            None => {
                let t = 2.0 * m.beta - 2.0 * m.alpha + m.sigma;
                let scale = m.beta.abs() + m.alpha.abs() + m.sigma.abs();
                if t.abs() <= 1e-13 * scale {
                    0.0
                } else {
                    t
                }
            }
        };
        let sigma = m.sigma;
        let critical = m.gamma.abs() == 1.0;
        let cell = if !critical {
            if sigma <= 1.0 {
                Cell::NonCriticalRegular
            } else {
                Cell::NonCriticalSingular
            }
        } else if tau != 0.0 {
            if sigma <= 1.5 {
                Cell::CriticalRegular
            } else if tau < 0.0 {
                Cell::CriticalSingularSub
            } else {
                Cell::CriticalSingularSuper
            }
        } else if sigma <= 2.0 {
            Cell::DoublyCriticalRegular
        } else {
            Cell::DoublyCriticalSingular
        };
        Classification {
            gamma: m.gamma,
            nu: if m.gamma < 0.0 { 1 } else { -1 },
            sigma,
            alpha: m.alpha,
            beta: m.beta,
            tau,
            s: -sigma / 2.0 + 0.25,
            delta: sigma.min(2.0),
            varrho: (sigma - 1.5).min(0.5),
            cell,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{}, γ={} σ={} τ={} s={} δ={} ϱ={}",
            self.cell, self.gamma, self.sigma, self.tau, self.s, self.delta, self.varrho
        )
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.to_string()))
    }
}

fn finite(xs: &[f64]) -> Result<()> {
    check(xs.iter().all(|x| x.is_finite()), "parameters must be finite")
}

impl CoefficientModel {
    pub fn new(family: Family, precision: u32) -> Result<Self> {
        check((32..=1 << 20).contains(&precision), "precision_bits must lie in [32, 2^20]")?;
        match &family {
            Family::PowerLaw { sigma, alpha, beta, gamma } => {
                finite(&[*sigma, *alpha, *beta, *gamma])?;
                check(*sigma > 0.0, "sigma must be positive")?;
                check(*alpha > -1.0, "alpha must exceed -1 so that a_n > 0")?;
            }
            Family::Laguerre { p } => {
                finite(&[*p])?;
                check(*p > -1.0, "Laguerre parameter p must exceed -1")?;
            }
            Family::Hermite => {}
            Family::StieltjesCarlitz { k } => {
                finite(&[*k])?;
                check(*k > 0.0, "Stieltjes-Carlitz parameter k must be positive")?;
            }
            Family::DualHahn { x, y } => {
                finite(&[*x, *y])?;
                check(*x > 0.0 && *y > 0.0, "dual Hahn parameters must be positive")?;
            }
            Family::ZeroDiagPowerLaw { sigma, alpha_hat } => {
                finite(&[*sigma, *alpha_hat])?;
                check(*sigma > 0.0, "sigma must be positive")?;
                check(*alpha_hat > -1.0, "alpha_hat must exceed -1 so that a_n > 0")?;
            }
            Family::Table(t) => {
                check(!t.is_empty(), "table is empty")?;
                check(t.a.len() == t.b.len(), "table columns differ in length")?;
                check(t.a.iter().all(|a| a.is_finite() && *a > 0), "table entries a_n must be positive")?;
                check(t.b.iter().all(|b| b.is_finite()), "table entries b_n must be finite")?;
            }
        }
        Ok(CoefficientModel { family, precision })
    }

    pub fn power_law(sigma: f64, alpha: f64, beta: f64, gamma: f64, precision: u32) -> Result<Self> {
        Self::new(Family::PowerLaw { sigma, alpha, beta, gamma }, precision)
    }

    pub fn laguerre(p: f64, precision: u32) -> Result<Self> {
        Self::new(Family::Laguerre { p }, precision)
    }

    pub fn hermite(precision: u32) -> Result<Self> {
        Self::new(Family::Hermite, precision)
    }

    pub fn stieltjes_carlitz(k: f64, precision: u32) -> Result<Self> {
        Self::new(Family::StieltjesCarlitz { k }, precision)
    }

    pub fn dual_hahn(x: f64, y: f64, precision: u32) -> Result<Self> {
        Self::new(Family::DualHahn { x, y }, precision)
    }

    pub fn zero_diag_power_law(sigma: f64, alpha_hat: f64, precision: u32) -> Result<Self> {
        Self::new(Family::ZeroDiagPowerLaw { sigma, alpha_hat }, precision)
    }

    pub fn table(table: Table, precision: u32) -> Result<Self> {
        Self::new(Family::Table(Arc::new(table)), precision)
    }

    pub fn from_config(cfg: &ModelConfig, base: Option<&Path>) -> Result<Self> {
        let p = cfg.precision_bits;
        match &cfg.family {
            FamilyConfig::Powerlaw { sigma, alpha, beta, gamma } => Self::power_law(*sigma, *alpha, *beta, *gamma, p),
            FamilyConfig::Laguerre { p: lp } => Self::laguerre(*lp, p),
            FamilyConfig::Hermite => Self::hermite(p),
            FamilyConfig::StieltjesCarlitz { k } => Self::stieltjes_carlitz(*k, p),
            FamilyConfig::DualHahn { x, y } => Self::dual_hahn(*x, *y, p),
            FamilyConfig::ZerodiagPowerlaw { sigma, alpha_hat } => Self::zero_diag_power_law(*sigma, *alpha_hat, p),
            FamilyConfig::Table { path, meta } => {
                let full = match base {
                    Some(b) => b.join(path),
                    None => Path::new(path).to_path_buf(),
                };
                let mut t = load_table_csv(&full, p)?;
                t.meta = meta.clone();
                Self::table(t, p)
            }
        }
    }

    /// Parse a JSON configuration string.
    pub fn from_json(s: &str, base: Option<&Path>) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        Self::from_config(&cfg, base)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Same family at another working precision.
    pub fn with_precision(&self, precision: u32) -> Self {
        let family = match &self.family {
            Family::Table(t) => {
                let conv = |v: &Vec<Real>| v.iter().map(|x| Float::with_val(precision, x)).collect();
                Family::Table(Arc::new(Table { a: conv(&t.a), b: conv(&t.b), meta: t.meta.clone(), label: t.label.clone() }))
            }
            f => f.clone(),
        };
        CoefficientModel { family, precision }
    }

    pub fn variant_name(&self) -> &'static str {
        match self.family {
            Family::PowerLaw { .. } => "powerlaw",
            Family::Laguerre { .. } => "laguerre",
            Family::Hermite => "hermite",
            Family::StieltjesCarlitz { .. } => "stieltjes_carlitz",
            Family::DualHahn { .. } => "dual_hahn",
            Family::ZeroDiagPowerLaw { .. } => "zerodiag_powerlaw",
            Family::Table(_) => "table",
        }
    }

    /// Largest admissible index, if bounded.
    pub fn max_index(&self) -> Option<i64> {
        match &self.family {
            Family::Table(t) => Some(t.len() as i64 - 1),
            _ => None,
        }
    }

    /// True when b_n = 0 identically (known from the family).
    pub fn is_zero_diagonal(&self) -> bool {
        match &self.family {
            Family::Hermite | Family::StieltjesCarlitz { .. } | Family::ZeroDiagPowerLaw { .. } => true,
            Family::Table(t) => t.b.iter().all(|b| b.is_zero()),
            _ => false,
        }
    }

    /// Machine-readable description for reports.
    pub fn descriptor(&self) -> serde_json::Value {
        use serde_json::json;
        let mut v = match &self.family {
            Family::PowerLaw { sigma, alpha, beta, gamma } => {
                json!({"variant": "powerlaw", "sigma": sigma, "alpha": alpha, "beta": beta, "gamma": gamma})
            }
            Family::Laguerre { p } => json!({"variant": "laguerre", "p": p}),
            Family::Hermite => json!({"variant": "hermite"}),
            Family::StieltjesCarlitz { k } => json!({"variant": "stieltjes_carlitz", "k": k}),
            Family::DualHahn { x, y } => json!({"variant": "dual_hahn", "x": x, "y": y}),
            Family::ZeroDiagPowerLaw { sigma, alpha_hat } => {
                json!({"variant": "zerodiag_powerlaw", "sigma": sigma, "alpha_hat": alpha_hat})
            }
            Family::Table(t) => json!({
                "variant": "table",
                "label": t.label,
                "rows": t.len(),
                "sha256": t.digest(),
                "meta": t.meta,
            }),
        };
        v["precision_bits"] = json!(self.precision);
        v
    }

    /// (a_n, b_n) at working precision.
    pub fn eval_coeffs(&self, n: i64) -> Result<(Real, Real)> {
        if n < 0 {
            return Err(Error::OutOfRange { index: n, max: self.max_index().unwrap_or(i64::MAX) });
        }
        let p = self.precision;
        let nf = Float::with_val(p, n);
        let one = |x: f64| Float::with_val(p, x);
        Ok(match &self.family {
            Family::PowerLaw { sigma, alpha, beta, gamma } => {
                if n == 0 {
                    (one(1.0), one(2.0 * gamma))
                } else {
                    let ns = Float::with_val(p, (&nf).pow(&one(*sigma)));
                    let a = Float::with_val(p, &ns * Float::with_val(p, 1 + Float::with_val(p, *alpha / &nf)));
                    let fb = Float::with_val(p, 1 + Float::with_val(p, *beta / &nf));
                    let b = Float::with_val(p, Float::with_val(p, &ns * &fb) * (2.0 * gamma));
                    (a, b)
                }
            }
            Family::Laguerre { p: lp } => {
                let n1 = Float::with_val(p, &nf + 1);
                let n1p = Float::with_val(p, &n1 + *lp);
                let a = Float::with_val(p, &n1 * &n1p).sqrt();
                let b = Float::with_val(p, Float::with_val(p, &nf * 2) + Float::with_val(p, one(*lp) + 1u32));
                (a, b)
            }
            Family::Hermite => {
                let a = Float::with_val(p, Float::with_val(p, &nf + 1) / 2).sqrt();
                (a, Float::new(p))
            }
            Family::StieltjesCarlitz { k } => {
                let n1 = Float::with_val(p, &nf + 1);
                let a = if n % 2 == 0 { Float::with_val(p, &n1 * *k) } else { n1 };
                (a, Float::new(p))
            }
            Family::DualHahn { x, y } => {
                let (x, y) = (one(*x), one(*y));
                let s = Float::with_val(p, &x + &y);
                let n1 = Float::with_val(p, &nf + 1);
                let nx = Float::with_val(p, &nf + &x);
                let ny = Float::with_val(p, &nf + &y);
                let nxy = Float::with_val(p, &nf + &s);
                let prod = Float::with_val(p, Float::with_val(p, &n1 * &nx) * Float::with_val(p, &ny * &nxy));
                let a = prod.sqrt();
                let n2 = Float::with_val(p, nf.square_ref()) * 2u32;
                let lin = Float::with_val(p, &nf * Float::with_val(p, Float::with_val(p, &s * 2u32) - 1u32));
                let b = Float::with_val(p, Float::with_val(p, n2 + lin) + Float::with_val(p, &x * &y));
                (a, b)
            }
            Family::ZeroDiagPowerLaw { sigma, alpha_hat } => {
                if n == 0 {
                    (one(1.0), Float::new(p))
                } else {
                    let half = Float::with_val(p, &nf / 2u32);
                    let e = one(sigma / 2.0);
                    let base = Float::with_val(p, (&half).pow(&e));
                    let f = Float::with_val(p, 1 + Float::with_val(p, *alpha_hat / &nf));
                    (Float::with_val(p, base * f), Float::new(p))
                }
            }
            Family::Table(t) => {
                let i = n as usize;
                if i >= t.len() {
                    return Err(Error::OutOfRange { index: n, max: t.len() as i64 - 1 });
                }
                (Float::with_val(p, &t.a[i]), Float::with_val(p, &t.b[i]))
            }
        })
    }

    /// Coefficients for `n = 0..=n_max`, with `a_{-1} = 1/2`.
    pub fn coeff_table(&self, n_max: usize) -> Result<CoeffTable> {
        let count = n_max + 1;
        if let Some(m) = self.max_index() {
            if n_max as i64 > m {
                return Err(Error::OutOfRange { index: n_max as i64, max: m });
            }
        }
        let vals: Vec<(Real, Real)> = if count > 4096 {
            use rayon::prelude::*;
            (0..count as i64).into_par_iter().map(|n| self.eval_coeffs(n)).collect::<Result<_>>()?
        } else {
            (0..count as i64).map(|n| self.eval_coeffs(n)).collect::<Result<_>>()?
        };
        let mut a = Vec::with_capacity(count + 1);
        a.push(Float::with_val(self.precision, 0.5));
        let mut b = Vec::with_capacity(count);
        for (x, y) in vals {
            a.push(x);
            b.push(y);
        }
        Ok(CoeffTable { a, b })
    }

    /// γ_n = b_n / (2√(a_{n−1}a_n)), n ≥ 1.
    pub fn gamma_seq(&self, n: i64) -> Result<Real> {
        if n < 1 {
            return Err(Error::Domain("gamma_seq needs n >= 1".into()));
        }
        let (a0, _) = self.eval_coeffs(n - 1)?;
        let (a1, b) = self.eval_coeffs(n)?;
        let p = self.precision;
        let d = Float::with_val(p, &a0 * &a1).sqrt() * 2u32;
        Ok(Float::with_val(p, &b / &d))
    }

    /// |b_n| − a_{n−1} − a_n, n ≥ 1.
    pub fn discreteness_margin(&self, n: i64) -> Result<Real> {
        if n < 1 {
            return Err(Error::Domain("discreteness_margin needs n >= 1".into()));
        }
        let (a0, _) = self.eval_coeffs(n - 1)?;
        let (a1, b) = self.eval_coeffs(n)?;
        let p = self.precision;
        Ok(Float::with_val(p, Float::with_val(p, b.abs_ref()) - Float::with_val(p, &a0 + &a1)))
    }

    /// Asymptotic parameters, when the family carries them.
    pub fn meta(&self) -> Result<AsymptoticMeta> {
        Ok(match &self.family {
            Family::PowerLaw { sigma, alpha, beta, gamma } => {
                AsymptoticMeta { sigma: *sigma, alpha: *alpha, beta: *beta, gamma: *gamma, tau: None }
            }
            Family::Laguerre { p } => {
                AsymptoticMeta { sigma: 1.0, alpha: 1.0 + p / 2.0, beta: (1.0 + p) / 2.0, gamma: 1.0, tau: Some(0.0) }
            }
            Family::DualHahn { x, y } => AsymptoticMeta {
                sigma: 2.0,
                alpha: x + y + 0.5,
                beta: x + y - 0.5,
                gamma: 1.0,
                tau: Some(0.0),
            },
            // zero diagonal: γ = 0 and the growth exponent of a_n is σ/2
            Family::ZeroDiagPowerLaw { sigma, alpha_hat } => {
                AsymptoticMeta { sigma: sigma / 2.0, alpha: *alpha_hat, beta: 0.0, gamma: 0.0, tau: None }
            }
            Family::Hermite => AsymptoticMeta { sigma: 0.5, alpha: 0.5, beta: 0.0, gamma: 0.0, tau: None },
            Family::Table(t) => match &t.meta {
                Some(m) => m.clone(),
                None => return Err(Error::Unsupported("classification requires family metadata".into())),
            },
            Family::StieltjesCarlitz { .. } => {
                return Err(Error::Unsupported("classification requires family metadata".into()))
            }
        })
    }

    pub fn classify(&self) -> Result<Classification> {
        Ok(Classification::from_meta(&self.meta()?))
    }
}

/// Cached coefficients `a_{-1..=N}`, `b_{0..=N}`.
#[derive(Clone, Debug)]
pub struct CoeffTable {
    a: Vec<Real>,
    b: Vec<Real>,
}

impl CoeffTable {
    /// a_n for n ≥ −1.
    #[inline]
    pub fn a(&self, n: i64) -> &Real {
        &self.a[(n + 1) as usize]
    }

    #[inline]
    pub fn b(&self, n: i64) -> &Real {
        &self.b[n as usize]
    }

    /// Largest n with both coefficients available.
    pub fn n_max(&self) -> i64 {
        self.b.len() as i64 - 1
    }
}

/// Read rows "n,a,b" (an optional header line is skipped).
pub fn load_table_csv(path: &Path, precision: u32) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let mut t = parse_table_csv(&text, precision)?;
    t.label = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(t)
}

pub fn parse_table_csv(text: &str, precision: u32) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("table row {}: {e}", line + 1)))?;
        if rec.len() != 3 {
            return Err(Error::Parse(format!("table row {}: expected 3 columns", line + 1)));
        }
        let n: i64 = match rec[0].parse() {
            Ok(n) => n,
            Err(_) if line == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("table row {}: bad index", line + 1))),
        };
        if n != a.len() as i64 {
            return Err(Error::Parse(format!("table row {}: indices must run 0,1,2,...", line + 1)));
        }
        let num = |s: &str| -> Result<Real> {
            Float::parse(s)
                .map(|v| Float::with_val(precision, v))
                .map_err(|_| Error::Parse(format!("table row {}: bad number {s:?}", line + 1)))
        };
        a.push(num(&rec[1])?);
        b.push(num(&rec[2])?);
    }
    Ok(Table { a, b, meta: None, label: String::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: u32 = 256;

    fn f(x: &Real) -> f64 {
        x.to_f64()
    }

    #[test]
    fn family_examples() {
        let m = CoefficientModel::laguerre(0.0, P).unwrap();
        let (a, b) = m.eval_coeffs(0).unwrap();
        assert_eq!((f(&a), f(&b)), (1.0, 1.0));
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let (a, b) = m.eval_coeffs(1).unwrap();
        assert_eq!((f(&a), f(&b)), (1.0, 4.0));
        let (a, b) = m.eval_coeffs(0).unwrap();
        assert_eq!((f(&a), f(&b)), (1.0, 2.0));
        let m = CoefficientModel::stieltjes_carlitz(2.0, P).unwrap();
        let (a, b) = m.eval_coeffs(0).unwrap();
        assert_eq!((f(&a), f(&b)), (2.0, 0.0));
        let (a, b) = m.eval_coeffs(1).unwrap();
        assert_eq!((f(&a), f(&b)), (2.0, 0.0));
        let m = CoefficientModel::dual_hahn(1.0, 1.0, P).unwrap();
        let (a, b) = m.eval_coeffs(2).unwrap();
        // sqrt(3·3·3·4) and 8 + 6 + 1
        assert!((f(&a) - 108f64.sqrt()).abs() < 1e-14);
        assert_eq!(f(&b), 15.0);
        let m = CoefficientModel::zero_diag_power_law(3.0, 0.5, P).unwrap();
        let (a, b) = m.eval_coeffs(4).unwrap();
        assert!((f(&a) - 2f64.powf(1.5) * 1.125).abs() < 1e-14);
        assert!(b.is_zero());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let m = CoefficientModel::power_law(1.75, 0.3, -0.2, 1.0, P).unwrap();
        for n in [0, 1, 7, 1000] {
            assert_eq!(m.eval_coeffs(n).unwrap(), m.eval_coeffs(n).unwrap());
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CoefficientModel::laguerre(-1.0, P).is_err());
        assert!(CoefficientModel::stieltjes_carlitz(0.0, P).is_err());
        assert!(CoefficientModel::power_law(0.0, 0.0, 0.0, 1.0, P).is_err());
        assert!(CoefficientModel::power_law(f64::NAN, 0.0, 0.0, 1.0, P).is_err());
        assert!(CoefficientModel::dual_hahn(0.0, 1.0, P).is_err());
        assert!(CoefficientModel::zero_diag_power_law(-1.0, 0.0, P).is_err());
    }

    #[test]
    fn table_range_checked() {
        let t = parse_table_csv("n,a,b\n0,1,0\n1,2,0.5\n", P).unwrap();
        let m = CoefficientModel::table(t, P).unwrap();
        assert_eq!(f(&m.eval_coeffs(1).unwrap().1), 0.5);
        assert!(matches!(m.eval_coeffs(2), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.classify(), Err(Error::Unsupported(_))));
        assert!(parse_table_csv("0,1,0\n2,1,0\n", P).is_err());
        assert!(parse_table_csv("0,1\n", P).is_err());
        assert!(CoefficientModel::table(parse_table_csv("0,-1,0\n", P).unwrap(), P).is_err());
    }

    #[test]
    fn gamma_seq_examples() {
        let m = CoefficientModel::laguerre(0.0, P).unwrap();
        let g = m.gamma_seq(1).unwrap();
        assert!((f(&g) - 3.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        let m = CoefficientModel::stieltjes_carlitz(3.0, P).unwrap();
        assert!(m.gamma_seq(5).unwrap().is_zero());
    }

    #[test]
    fn gamma_seq_second_order_power_law() {
        // τ = 2 for σ=2, α=β=0, γ=1
        let m = CoefficientModel::power_law(2.0, 0.0, 0.0, 1.0, P).unwrap();
        let n = 10_000i64;
        let g = f(&m.gamma_seq(n).unwrap());
        let dev = (g - 1.0 - 1.0 / n as f64) * (n as f64).powi(2);
        assert!(dev.abs() < 5.0, "{dev}");
    }

    #[test]
    fn gamma_seq_remainder_is_second_order() {
        for &(s, a, b, gm) in &[(2.0, 0.0, 1.0, 1.0), (1.75, 0.5, -0.25, -1.0), (3.0, 1.0, 2.0, 1.0)] {
            let m = CoefficientModel::power_law(s, a, b, gm, P).unwrap();
            let c = m.classify().unwrap();
            let sgn = gm.signum();
            let mut worst: f64 = 0.0;
            for n in [100i64, 1000, 10_000, 100_000] {
                let g = m.gamma_seq(n).unwrap();
                let nf = n as f64;
                let e: Float = Float::with_val(P, &g * sgn) - (1.0 + c.tau / 2.0 / nf);
                worst = worst.max(e.to_f64().abs() * nf * nf);
            }
            assert!(worst < 20.0, "{worst}");
        }
    }

    #[test]
    fn classification_examples() {
        let c = CoefficientModel::laguerre(0.5, P).unwrap().classify().unwrap();
        assert_eq!((c.gamma, c.sigma, c.tau, c.cell), (1.0, 1.0, 0.0, Cell::DoublyCriticalRegular));
        let c = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap().classify().unwrap();
        assert_eq!((c.tau, c.s, c.varrho, c.cell, c.nu), (4.0, -0.75, 0.5, Cell::CriticalSingularSuper, -1));
        let c = CoefficientModel::dual_hahn(1.0, 1.0, P).unwrap().classify().unwrap();
        assert_eq!(
            (c.gamma, c.sigma, c.alpha, c.beta, c.tau, c.cell),
            (1.0, 2.0, 2.5, 1.5, 0.0, Cell::DoublyCriticalRegular)
        );
        let c = CoefficientModel::power_law(2.0, 0.0, -3.0, 1.0, P).unwrap().classify().unwrap();
        assert_eq!((c.tau, c.cell), (-4.0, Cell::CriticalSingularSub));
        let c = CoefficientModel::power_law(2.0, 0.0, 0.0, -1.0, P).unwrap().classify().unwrap();
        assert_eq!(c.nu, 1);
        assert!(CoefficientModel::stieltjes_carlitz(2.0, P).unwrap().classify().is_err());
    }

    #[test]
    fn cell_boundaries_are_regular() {
        let cell = |s, a, b, g| Classification::from_meta(&AsymptoticMeta { sigma: s, alpha: a, beta: b, gamma: g, tau: None }).cell;
        assert_eq!(cell(1.5, 0.0, 1.0, 1.0), Cell::CriticalRegular);
        assert_eq!(cell(1.5001, 0.0, 1.0, 1.0), Cell::CriticalSingularSuper);
        assert_eq!(cell(2.0, 1.0, 0.0, 1.0), Cell::DoublyCriticalRegular);
        assert_eq!(cell(2.5, 1.25, 0.0, 1.0), Cell::DoublyCriticalSingular);
        assert_eq!(cell(1.0, 0.0, 0.0, 0.5), Cell::NonCriticalRegular);
        assert_eq!(cell(1.01, 0.0, 0.0, 0.5), Cell::NonCriticalSingular);
    }

    #[test]
    fn discreteness_examples() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        assert_eq!(f(&m.discreteness_margin(10).unwrap()), 39.0);
        let m = CoefficientModel::laguerre(0.0, P).unwrap();
        // p = 0 gives a_n = n + 1, b_n = 2n + 1, so the margin vanishes
        assert_eq!(f(&m.discreteness_margin(10).unwrap()), 0.0);
        let m = CoefficientModel::laguerre(0.5, P).unwrap();
        let want = 21.5 - (10.0f64 * 10.5).sqrt() - (11.0f64 * 11.5).sqrt();
        assert!((f(&m.discreteness_margin(10).unwrap()) - want).abs() < 1e-13);
        let m = CoefficientModel::zero_diag_power_law(3.0, 0.0, P).unwrap();
        for n in 1..50 {
            assert!(m.discreteness_margin(n).unwrap() < 0);
        }
    }

    #[test]
    fn json_config_roundtrip() {
        let s = r#"{"variant":"powerlaw","sigma":2.0,"alpha":0.0,"beta":1.0,"gamma":1.0,"precision_bits":256}"#;
        let m = CoefficientModel::from_json(s, None).unwrap();
        assert_eq!(m.classify().unwrap().tau, 4.0);
        assert_eq!(m.precision(), 256);
        let s = r#"{"variant":"laguerre","p":0.5}"#;
        let m = CoefficientModel::from_json(s, None).unwrap();
        assert_eq!(m.precision(), 256);
        assert!(CoefficientModel::from_json(r#"{"variant":"nope"}"#, None).is_err());
        assert!(CoefficientModel::from_json(r#"{"variant":"laguerre"}"#, None).is_err());
    }

    #[test]
    fn coeff_table_matches_pointwise() {
        let m = CoefficientModel::dual_hahn(0.5, 1.5, P).unwrap();
        let t = m.coeff_table(5000).unwrap();
        assert_eq!(f(t.a(-1)), 0.5);
        for n in [0i64, 1, 4096, 5000] {
            let (a, b) = m.eval_coeffs(n).unwrap();
            assert_eq!(t.a(n), &a);
            assert_eq!(t.b(n), &b);
        }
    }

    proptest! {
        #[test]
        fn classify_is_pure_and_consistent(s in 0.1f64..4.0, a in -0.9f64..3.0, b in -3.0f64..3.0, g in prop::sample::select(vec![-1.0, 1.0, 0.5, 2.0])) {
            let m = CoefficientModel::power_law(s, a, b, g, 128).unwrap();
            let c1 = m.classify().unwrap();
            let c2 = m.classify().unwrap();
            prop_assert_eq!(&c1, &c2);
            prop_assert_eq!(c1.s, -s / 2.0 + 0.25);
            prop_assert_eq!(c1.delta, s.min(2.0));
            prop_assert_eq!(c1.nu, if g < 0.0 { 1 } else { -1 });
        }

        #[test]
        fn coefficients_positive(n in 0i64..100_000, p in -0.99f64..5.0) {
            let m = CoefficientModel::laguerre(p, 128).unwrap();
            let (a, _) = m.eval_coeffs(n).unwrap();
            prop_assert!(a > 0);
            let m = CoefficientModel::power_law(1.8, p.max(-0.9), 0.0, 1.0, 128).unwrap();
            let (a, _) = m.eval_coeffs(n).unwrap();
            prop_assert!(a > 0);
        }
    }
}
