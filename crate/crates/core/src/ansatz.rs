//! Ansatz sequences Q_n and the Volterra kernel built from them.
//!
//! For the critical singular case the Ansatz is
//! `Q_n = ν^n n^s e^{−2√τ √n}` (s = −σ/2 + 1/4, ν = −sgn γ). Its relative
//! remainder decays only like `n^{−δ}`, which makes a pure `u ≡ 1` tail
//! truncation of the Volterra equation far too coarse for tight tolerances.
//! An optional refinement multiplies `Q_n` by a formal asymptotic series
//! `w_n = Σ c_{k,j} z^j n^{−(k/2 + j(σ−3/2))}` solving the recurrence order by
//! order; the remainder of the refined sequence then decays like a high
//! power of `1/n`. Order 0 is exactly the unrefined sequence.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::coeffs::{Cell, Classification, CoeffTable, CoefficientModel};
use crate::error::{Error, Result};
use crate::mp::{Cplx, Real};
use crate::scaled::ScaledComplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzVariant {
    CriticalSingular,
    ZeroDiagCarleman,
    ZeroDiagNonCarleman,
}

// ---------------------------------------------------------------------------
// truncated power series in t = n^{-1/2}

#[derive(Clone, Debug)]
struct Ser(Vec<Cplx>);

impl Ser {
    fn zero(len: usize, p: u32) -> Self {
        Ser(vec![Cplx::zero(p); len])
    }

    fn one(len: usize, p: u32) -> Self {
        let mut s = Ser::zero(len, p);
        s.0[0] = Cplx::one(p);
        s
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn mul(&self, o: &Ser) -> Ser {
        let n = self.len();
        let p = self.0[0].prec();
        let mut out = Ser::zero(n, p);
        for i in 0..n {
            if self.0[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                if o.0[j].is_zero() {
                    continue;
                }
                out.0[i + j] = &out.0[i + j] + &(&self.0[i] * &o.0[j]);
            }
        }
        out
    }

    fn add(&self, o: &Ser) -> Ser {
        Ser(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn scale(&self, c: &Cplx) -> Ser {
        Ser(self.0.iter().map(|a| a * c).collect())
    }

    /// exp of a series with zero constant term.
    fn exp(&self) -> Ser {
        let n = self.len();
        let p = self.0[0].prec();
        let mut e = Ser::one(n, p);
        for k in 1..n {
            let mut acc = Cplx::zero(p);
            for j in 1..=k {
                if self.0[j].is_zero() {
                    continue;
                }
                let term = &self.0[j] * &e.0[k - j];
                acc = &acc + &term.scale(&Float::with_val(p, j));
            }
            e.0[k] = acc.scale(&Float::with_val(p, Float::with_val(p, 1) / k as u32));
        }
        e
    }

    /// (1 + c·t²)^e.
    fn binom_x(e: &Real, c: &Real, len: usize, p: u32) -> Ser {
        let mut s = Ser::zero(len, p);
        let mut coef = Float::with_val(p, 1);
        let mut cpow = Float::with_val(p, 1);
        let mut i = 0u32;
        while (2 * i as usize) < len {
            s.0[2 * i as usize] = Cplx::from_real(Float::with_val(p, &coef * &cpow));
            // binom(e, i+1) = binom(e, i)·(e − i)/(i + 1)
            coef = Float::with_val(p, &coef * Float::with_val(p, e - i)) / (i + 1);
            cpow = Float::with_val(p, &cpow * c);
            i += 1;
        }
        s
    }
}

// ---------------------------------------------------------------------------
// refinement series

/// z-independent coefficients of log w; layer `j` carries `z^j`.
#[derive(Clone, Debug)]
pub struct CriticalSeries {
    prec: u32,
    order: f64,
    rho: Real,
    /// layers[j] = (k0, coefficients for k = k0, k0+1, …)
    layers: Vec<(usize, Vec<Cplx>)>,
}

impl CriticalSeries {
    /// Solve the formal recurrence for the correction factor up to total
    /// decay exponent `order`.
    pub fn new(cls: &Classification, prec: u32, order: f64) -> Result<Self> {
        check_critical(cls)?;
        let wp = prec + 64;
        let f = |x: f64| Float::with_val(wp, x);
        let sigma = f(cls.sigma);
        let alpha = f(cls.alpha);
        let beta = f(cls.beta);
        let nu = f(cls.nu as f64);
        let rho = Float::with_val(wp, &sigma - 1.5);
        let s_exp = Float::with_val(wp, Float::with_val(wp, -&sigma) / 2u32) + 0.25;
        let order = order.max(0.0);
        if order == 0.0 {
            return Ok(CriticalSeries { prec, order, rho, layers: vec![(0, vec![Cplx::zero(wp)])] });
        }
        let k0max = (2.0 * order).floor() as usize;
        let len = k0max + 4;
        let sqrt_tau = sqrt_tau(cls.tau, wp);

        // θ_n = 2√τ Σ_{i≥1} binom(1/2, i) t^{2i−1}; θ_{n−1} has alternating signs
        let mut th = Ser::zero(len, wp);
        let mut thm = Ser::zero(len, wp);
        let half = f(0.5);
        let mut coef = Float::with_val(wp, 1);
        let two_st = sqrt_tau.scale(&f(2.0));
        for i in 1.. {
            let idx = 2 * i - 1;
            if idx >= len {
                break;
            }
            coef = Float::with_val(wp, &coef * Float::with_val(wp, &half - (i - 1) as u32)) / i as u32;
            th.0[idx] = two_st.scale(&coef);
            let sgn = if i % 2 == 0 { -1.0 } else { 1.0 };
            thm.0[idx] = two_st.scale(&Float::with_val(wp, &coef * sgn));
        }
        let one_r = f(1.0);
        let m_one = f(-1.0);
        let one_m_alpha = Float::with_val(wp, &one_r - &alpha);
        let neg_one_m_alpha = Float::with_val(wp, -&one_m_alpha);
        let sm1_half = Float::with_val(wp, Float::with_val(wp, &sigma - 1) / 2u32);
        let neg_sm1_half = Float::with_val(wp, -&sm1_half);
        let half_r = f(0.5);
        let neg_half = f(-0.5);
        // κ_{n−1} = (1−x)^{−(σ−1)/2}(1+αx)^{1/2}(1−(1−α)x)^{−1/2}
        let kappa = Ser::binom_x(&neg_sm1_half, &m_one, len, wp)
            .mul(&Ser::binom_x(&half_r, &alpha, len, wp))
            .mul(&Ser::binom_x(&neg_half, &neg_one_m_alpha, len, wp));
        let kappa_inv = Ser::binom_x(&sm1_half, &m_one, len, wp)
            .mul(&Ser::binom_x(&neg_half, &alpha, len, wp))
            .mul(&Ser::binom_x(&half_r, &neg_one_m_alpha, len, wp));
        // D = n^σ / √(a_{n−1}a_n)
        let d = Ser::binom_x(&neg_sm1_half, &m_one, len, wp)
            .mul(&Ser::binom_x(&neg_half, &neg_one_m_alpha, len, wp))
            .mul(&Ser::binom_x(&neg_half, &alpha, len, wp));
        let nu_c = Cplx::from_real(nu.clone());
        let a_ser = kappa_inv
            .mul(&Ser::binom_x(&s_exp, &m_one, len, wp))
            .mul(&thm.exp())
            .scale(&nu_c);
        let neg_th = th.scale(&Cplx::from_f64(wp, -1.0, 0.0));
        let c_ser = kappa.mul(&Ser::binom_x(&s_exp, &one_r, len, wp)).mul(&neg_th.exp()).scale(&nu_c);
        let b0 = Ser::binom_x(&one_r, &beta, len, wp).mul(&d).scale(&Cplx::from_f64(wp, 2.0 * cls.gamma, 0.0));

        let mut cache: HashMap<i64, Ser> = HashMap::new();
        let mut op = |e: &Real| -> Ser {
            let key = (e.to_f64() * 1e9).round() as i64;
            cache
                .entry(key)
                .or_insert_with(|| {
                    let ne = Float::with_val(wp, -e);
                    let lo = a_ser.mul(&Ser::binom_x(&ne, &m_one, len, wp));
                    let hi = c_ser.mul(&Ser::binom_x(&ne, &one_r, len, wp));
                    lo.add(&b0).add(&hi)
                })
                .clone()
        };

        // the unrefined remainder must vanish through order t^3
        let e0 = op(&f(0.0));
        let small = Float::with_val(wp, 1) >> (wp / 2);
        for m in 0..4.min(len) {
            if e0.0[m].abs() > small {
                return Err(Error::Verification(format!(
                    "leading cancellation fails at order t^{m}; check the alternation sign ν"
                )));
            }
        }

        let rho_f = cls.sigma - 1.5;
        let jmax = if rho_f > 0.0 { ((order / rho_f).floor() as usize).min(96) } else { 0 };
        let mut layers: Vec<(usize, Vec<Cplx>)> = Vec::new();
        for j in 0..=jmax {
            let kmax = (2.0 * (order - j as f64 * rho_f) + 1e-9).floor();
            if kmax < 0.0 {
                break;
            }
            let kmax = kmax as usize;
            // right-hand side: z-free part of t³·D·W_{j−1}
            let mut rhs = Ser::zero(len, wp);
            if j > 0 {
                let (pk0, prev) = &layers[j - 1];
                for (i, c) in prev.iter().enumerate() {
                    let k = pk0 + i;
                    for m in (k + 3)..len {
                        let term = c * &d.0[m - 3 - k];
                        rhs.0[m] = &rhs.0[m] + &term;
                    }
                }
            }
            let k0 = if j == 0 { 1 } else { 0 };
            let mut coeffs: Vec<Cplx> = Vec::new();
            let mut ops: Vec<Ser> = Vec::new();
            if j == 0 {
                coeffs.push(Cplx::one(wp));
                ops.push(e0.clone());
            }
            let jr = Float::with_val(wp, &rho * j as u32);
            for k in k0..=kmax {
                let e = Float::with_val(wp, &jr + Float::with_val(wp, k as f64 / 2.0));
                let ek = op(&e);
                let m = k + 3;
                let mut res = Cplx::zero(wp);
                let base = if j == 0 { 0 } else { k0 };
                for (i, (c, o)) in coeffs.iter().zip(&ops).enumerate() {
                    let ki = base + i;
                    if m >= ki && m - ki < len {
                        res = &res + &(c * &o.0[m - ki]);
                    }
                }
                if m < len {
                    res = &res - &rhs.0[m];
                }
                let diag = &ek.0[3];
                if diag.is_zero() {
                    return Err(Error::Degenerate { index: k as i64, reason: "vanishing diagonal in refinement".into() });
                }
                let c = -&(&res / diag);
                coeffs.push(c);
                ops.push(ek);
            }
            let start = if j == 0 { 0 } else { k0 };
            layers.push((start, coeffs));
        }
        let layers = log_layers(&layers, order, rho_f, len, wp);
        Ok(CriticalSeries { prec, order, rho, layers })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn term_count(&self) -> usize {
        self.layers.iter().map(|(_, c)| c.len()).sum()
    }

    /// Coefficient of `z^j n^{−(k/2 + jϱ')}` (z-free part).
    pub fn coefficient(&self, k: usize, j: usize) -> Option<&Cplx> {
        let (k0, c) = self.layers.get(j)?;
        if k < *k0 {
            return None;
        }
        c.get(k - k0)
    }
}

/// Convert w = Σ y^j W_j(t) into log w = Σ y^j L_j(t).
///
/// The z-layers of w sum to an exponential whose argument is not small
/// when σ is close to 3/2; the logarithm stays a short series.
fn log_layers(w: &[(usize, Vec<Cplx>)], order: f64, rho: f64, len: usize, p: u32) -> Vec<(usize, Vec<Cplx>)> {
    let full: Vec<Ser> = w
        .iter()
        .map(|(k0, c)| {
            let mut s = Ser::zero(len, p);
            for (i, x) in c.iter().enumerate() {
                if k0 + i < len {
                    s.0[k0 + i] = x.clone();
                }
            }
            s
        })
        .collect();
    let w0 = &full[0];
    let mut inv = Ser::zero(len, p);
    inv.0[0] = Cplx::one(p);
    for m in 1..len {
        let mut acc = Cplx::zero(p);
        for i in 1..=m {
            acc = &acc + &(&w0.0[i] * &inv.0[m - i]);
        }
        inv.0[m] = -&acc;
    }
    // L_0 = log W_0 via m L_0[m] = m W_0[m] − Σ i L_0[i] W_0[m−i]
    let mut l0 = Ser::zero(len, p);
    for m in 1..len {
        let mut acc = w0.0[m].scale(&Float::with_val(p, m));
        for i in 1..m {
            let t = (&l0.0[i] * &w0.0[m - i]).scale(&Float::with_val(p, i));
            acc = &acc - &t;
        }
        l0.0[m] = acc.scale(&Float::with_val(p, Float::with_val(p, m).recip()));
    }
    let mut ls = vec![l0];
    for j in 1..full.len() {
        let mut num = full[j].scale(&Cplx::from_f64(p, j as f64, 0.0));
        for i in 1..j {
            let t = ls[i].mul(&full[j - i]).scale(&Cplx::from_f64(p, i as f64, 0.0));
            num = num.add(&t.scale(&Cplx::from_f64(p, -1.0, 0.0)));
        }
        let lj = num.mul(&inv);
        let jr = Float::with_val(p, j);
        ls.push(Ser(lj.0.iter().map(|c| Cplx { re: Float::with_val(p, &c.re / &jr), im: Float::with_val(p, &c.im / &jr) }).collect()));
    }
    ls.into_iter()
        .enumerate()
        .map(|(j, l)| {
            let kmax = ((2.0 * (order - j as f64 * rho) + 1e-9).floor().max(-1.0) + 1.0) as usize;
            (0, l.0.into_iter().take(kmax.min(len)).collect())
        })
        .collect()
}

fn sqrt_tau(tau: f64, p: u32) -> Cplx {
    let r = Float::with_val(p, tau.abs()).sqrt();
    if tau >= 0.0 {
        Cplx::from_real(r)
    } else {
        Cplx { re: Float::new(p), im: r }
    }
}

fn check_critical(cls: &Classification) -> Result<()> {
    if cls.gamma.abs() != 1.0 {
        return Err(Error::Domain("critical Ansatz needs |γ| = 1".into()));
    }
    if cls.tau == 0.0 {
        return Err(Error::Unsupported(
            "τ = 0 (doubly critical): use the dediagonalization module instead".into(),
        ));
    }
    if cls.sigma <= 1.5 {
        return Err(Error::Domain("critical singular Ansatz needs σ > 3/2".into()));
    }
    Ok(())
}

/// Refinement bound to a spectral parameter.
#[derive(Clone, Debug)]
struct Bound {
    rho: Real,
    /// layers with z^j folded in
    layers: Vec<(usize, Vec<Cplx>)>,
    order: f64,
    n_sw: i64,
    w_sw: Cplx,
}

impl Bound {
    fn eval(&self, n: i64, p: u32) -> Cplx {
        let nf = Float::with_val(p, n);
        let t = Float::with_val(p, nf.sqrt_ref()).recip();
        let y = Float::with_val(p, Float::with_val(p, -&self.rho) * Float::with_val(p, nf.ln_ref())).exp();
        let mut acc = Cplx::zero(p);
        for (k0, c) in self.layers.iter().rev() {
            // Horner in t for this layer
            let mut poly = Cplx::zero(p);
            for ck in c.iter().rev() {
                poly = &poly.scale(&t) + ck;
            }
            for _ in 0..*k0 {
                poly = poly.scale(&t);
            }
            acc = &acc.scale(&y) + &poly;
        }
        acc.exp()
    }
}

// ---------------------------------------------------------------------------
// Ansatz

#[derive(Clone, Debug)]
pub struct Ansatz {
    pub variant: AnsatzVariant,
    pub nu: i32,
    pub s: f64,
    prec: u32,
    z: Option<Cplx>,
    sqrt_tau: Option<Cplx>,
    s_real: Real,
    refinement: Option<Bound>,
    // zero-diagonal data: a_n^{-1/2} and φ_n for n = 0..len
    zd_ainv_sqrt: Vec<Real>,
    zd_phi: Vec<Real>,
    zd_sign: i32,
}

#[derive(Clone, Debug, Default)]
pub struct AnsatzOptions {
    /// Total decay exponent of the refinement series (0 = unrefined).
    pub order: f64,
    /// Largest index needed (zero-diagonal variants cache prefix sums).
    pub n_max: usize,
}

/// Build the Ansatz of the requested variant.
pub fn build_ansatz(
    model: &CoefficientModel,
    variant: AnsatzVariant,
    z: Option<&Cplx>,
    opts: &AnsatzOptions,
) -> Result<Ansatz> {
    let prec = model.precision();
    match variant {
        AnsatzVariant::CriticalSingular => {
            let cls = model.classify()?;
            if !cls.cell.is_critical_singular() {
                check_critical(&cls)?;
                return Err(Error::Domain(format!("model is {}, not critical singular", cls.cell)));
            }
            let series = if opts.order > 0.0 { Some(Arc::new(CriticalSeries::new(&cls, prec, opts.order)?)) } else { None };
            Ansatz::critical(&cls, prec, z, series.as_deref())
        }
        AnsatzVariant::ZeroDiagCarleman | AnsatzVariant::ZeroDiagNonCarleman => {
            if !model.is_zero_diagonal() {
                return Err(Error::Domain("zero-diagonal Ansatz needs b_n = 0".into()));
            }
            let z = match (variant, z) {
                (AnsatzVariant::ZeroDiagCarleman, None) => {
                    return Err(Error::Domain("Carleman Ansatz needs z".into()))
                }
                (_, z) => z.cloned(),
            };
            let len = opts.n_max + 3;
            let t = model.coeff_table(len)?;
            let wp = prec;
            let ainv: Vec<Real> = (0..=len as i64).map(|n| Float::with_val(wp, t.a(n).sqrt_ref()).recip()).collect();
            let mut phi = Vec::with_capacity(len + 1);
            let mut acc = Float::new(wp);
            for n in 0..=len as i64 {
                phi.push(acc.clone());
                let th = Float::with_val(wp, Float::with_val(wp, t.a(n) * t.a(n - 1)).sqrt().recip() / 2u32);
                acc += th;
            }
            let sign = match &z {
                Some(z) if z.im.is_sign_negative() && !z.im.is_zero() => -1,
                _ => 1,
            };
            Ok(Ansatz {
                variant,
                nu: 1,
                s: 0.0,
                prec,
                z,
                sqrt_tau: None,
                s_real: Float::new(prec),
                refinement: None,
                zd_ainv_sqrt: ainv,
                zd_phi: phi,
                zd_sign: sign,
            })
        }
    }
}

impl Ansatz {
    /// Critical singular Ansatz, optionally refined by a precomputed series.
    pub fn critical(cls: &Classification, prec: u32, z: Option<&Cplx>, series: Option<&CriticalSeries>) -> Result<Self> {
        check_critical(cls)?;
        let mut a = Ansatz {
            variant: AnsatzVariant::CriticalSingular,
            nu: cls.nu,
            s: cls.s,
            prec,
            z: z.map(|z| z.with_prec(prec)),
            sqrt_tau: Some(sqrt_tau(cls.tau, prec)),
            s_real: Float::with_val(prec, Float::with_val(prec, -cls.sigma) / 2u32) + 0.25f64,
            refinement: None,
            zd_ainv_sqrt: Vec::new(),
            zd_phi: Vec::new(),
            zd_sign: 1,
        };
        if let Some(ser) = series {
            if ser.order > 0.0 {
                let z = z.ok_or_else(|| Error::Domain("refined Ansatz needs z".into()))?;
                a.refinement = Some(bind_series(ser, z, prec)?);
            }
        }
        Ok(a)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn z(&self) -> Option<&Cplx> {
        self.z.as_ref()
    }

    pub fn is_refined(&self) -> bool {
        self.refinement.is_some()
    }

    /// Effective refinement order after binding z (0 when unrefined).
    pub fn order(&self) -> f64 {
        self.refinement.as_ref().map_or(0.0, |b| b.order)
    }

    /// Index from which the refinement series is used verbatim.
    pub fn switch_index(&self) -> Option<i64> {
        self.refinement.as_ref().map(|b| b.n_sw)
    }

    pub fn sqrt_tau(&self) -> Option<&Cplx> {
        self.sqrt_tau.as_ref()
    }

    /// θ_n.
    pub fn theta(&self, n: i64) -> Cplx {
        let p = self.prec;
        match self.variant {
            AnsatzVariant::CriticalSingular => {
                let st = self.sqrt_tau.as_ref().expect("critical");
                let a = Float::with_val(p, Float::with_val(p, n + 1).sqrt());
                let b = Float::with_val(p, Float::with_val(p, n.max(0)).sqrt());
                let d = Float::with_val(p, Float::with_val(p, 2) / Float::with_val(p, &a + &b));
                st.scale(&d)
            }
            _ => {
                let i = n as usize;
                Cplx::from_real(Float::with_val(p, &self.zd_phi[i + 1] - &self.zd_phi[i]))
            }
        }
    }

    /// φ_n.
    pub fn phi(&self, n: i64) -> Cplx {
        let p = self.prec;
        match self.variant {
            AnsatzVariant::CriticalSingular => {
                let st = self.sqrt_tau.as_ref().expect("critical");
                st.scale(&Float::with_val(p, Float::with_val(p, n.max(0)).sqrt() * 2u32))
            }
            _ => Cplx::from_real(self.zd_phi[n as usize].clone()),
        }
    }

    /// Unrefined Q_n for n ≥ −1.
    pub fn q_base(&self, n: i64) -> ScaledComplex {
        let p = self.prec;
        if n <= 0 {
            return ScaledComplex::one(p);
        }
        match self.variant {
            AnsatzVariant::CriticalSingular => {
                let nf = Float::with_val(p, n);
                let ln = Float::with_val(p, nf.ln_ref());
                let phi = self.phi(n);
                let l = Cplx {
                    re: Float::with_val(p, Float::with_val(p, &self.s_real * &ln) - &phi.re),
                    im: Float::with_val(p, -&phi.im),
                };
                let q = ScaledComplex::from_exp(&l).expect("exponent in range");
                if self.nu < 0 && n % 2 == 1 {
                    -&q
                } else {
                    q
                }
            }
            AnsatzVariant::ZeroDiagCarleman => {
                let z = self.z.as_ref().expect("Carleman needs z");
                let i = n as usize;
                // (∓i)^n e^{±izφ_n}
                let sgn = self.zd_sign as f64;
                let izphi = z.scale(&self.zd_phi[i]).mul_i().scale(&Float::with_val(p, sgn));
                let e = ScaledComplex::from_exp(&izphi).expect("exponent in range");
                let unit = match n.rem_euclid(4) {
                    0 => Cplx::one(p),
                    1 => Cplx::from_f64(p, 0.0, -sgn),
                    2 => Cplx::from_f64(p, -1.0, 0.0),
                    _ => Cplx::from_f64(p, 0.0, sgn),
                };
                e.mul_cplx(&unit).mul_real(&self.zd_ainv_sqrt[i])
            }
            AnsatzVariant::ZeroDiagNonCarleman => {
                let i = n as usize;
                let unit = match n.rem_euclid(4) {
                    0 => Cplx::one(p),
                    1 => Cplx::from_f64(p, 0.0, -1.0),
                    2 => Cplx::from_f64(p, -1.0, 0.0),
                    _ => Cplx::from_f64(p, 0.0, 1.0),
                };
                ScaledComplex::from_real(&self.zd_ainv_sqrt[i]).mul_cplx(&unit)
            }
        }
    }

    /// Correction factor w_n (1 when unrefined).
    pub fn correction(&self, n: i64) -> Cplx {
        match &self.refinement {
            None => Cplx::one(self.prec),
            Some(b) if n < b.n_sw => b.w_sw.clone(),
            Some(b) => b.eval(n, self.prec),
        }
    }

    /// Q_n used by the kernel (refined when a series is bound).
    pub fn q(&self, n: i64) -> ScaledComplex {
        let q = self.q_base(n);
        match &self.refinement {
            None => q,
            Some(_) => q.mul_cplx(&self.correction(n)),
        }
    }

    /// Remainder in the closed form with κ_{n−1} and θ factors (unrefined
    /// critical Ansatz, n ≥ 2).
    pub fn remainder_expanded(&self, model: &CoefficientModel, z: &Cplx, n: i64) -> Result<Cplx> {
        if self.variant != AnsatzVariant::CriticalSingular || n < 2 {
            return Err(Error::Domain("expanded remainder needs the critical Ansatz and n >= 2".into()));
        }
        let p = self.prec;
        let (am, _) = model.eval_coeffs(n - 1)?;
        let (an, bn) = model.eval_coeffs(n)?;
        let kappa = Float::with_val(p, &an / &am).sqrt();
        let nf = Float::with_val(p, n);
        let lo = Float::with_val(p, Float::with_val(p, &nf - 1) / &nf);
        let hi = Float::with_val(p, Float::with_val(p, &nf + 1) / &nf);
        let pw = |x: &Real| Float::with_val(p, Float::with_val(p, x.ln_ref()) * &self.s_real).exp();
        let nu = Float::with_val(p, self.nu);
        let t1 = self.theta(n - 1).exp().scale(&Float::with_val(p, Float::with_val(p, &nu * pw(&lo)) / &kappa));
        let t2 = (-&self.theta(n)).exp().scale(&Float::with_val(p, Float::with_val(p, &nu * pw(&hi)) * &kappa));
        let root = Float::with_val(p, &am * &an).sqrt();
        let g2 = Float::with_val(p, &bn / &root);
        let zt = z.scale(&Float::with_val(p, root.recip_ref()));
        Ok(&(&(&t1 + &t2) + &Cplx::from_real(g2)) - &zt)
    }
}

fn bind_series(ser: &CriticalSeries, z: &Cplx, prec: u32) -> Result<Bound> {
    let wp = prec;
    let z = z.with_prec(wp);
    let mut zj = Cplx::one(wp);
    let mut layers = Vec::with_capacity(ser.layers.len());
    for (k0, c) in &ser.layers {
        layers.push((*k0, c.iter().map(|x| &x.with_prec(wp) * &zj).collect::<Vec<_>>()));
        zj = &zj * &z;
    }
    let rho = Float::with_val(wp, &ser.rho);
    let rho_f = rho.to_f64();
    // magnitudes of the individual terms decide where the series is usable
    let terms: Vec<(f64, f64, bool)> = layers
        .iter()
        .enumerate()
        .flat_map(|(j, (k0, c))| {
            c.iter().enumerate().map(move |(i, x)| {
                let k = k0 + i;
                let e = k as f64 / 2.0 + j as f64 * rho_f;
                (e, x.abs().to_f64().max(1e-300).ln(), k == 0 && j <= 1)
            })
        })
        .collect();
    let find = |ord: f64| -> Option<i64> {
        let top = ord - 1.0;
        let mut cand = 8i64;
        while cand <= 1 << 18 {
            let ln_n = (cand as f64).ln();
            let mut total = 0.0;
            let mut tail = 0.0;
            for &(e, lc, lead) in &terms {
                if lead || e > ord + 1e-9 {
                    continue;
                }
                let v = (lc - e * ln_n).exp();
                total += v;
                if e > top {
                    tail += v;
                }
            }
            if total <= 0.5 && tail <= 1e-3 {
                return Some(cand);
            }
            cand += (cand / 4).max(1);
        }
        None
    };
    // lower the effective order when the high z-layers have not settled yet
    let mut options = Vec::new();
    let mut ord = ser.order;
    while ord >= 1.0 {
        if let Some(n) = find(ord) {
            options.push((ord, n));
        }
        ord -= 1.0;
    }
    let best = options.iter().map(|o| o.1).min().ok_or_else(|| {
        Error::Domain("refinement series never becomes small; lower the order".into())
    })?;
    let (ord, n_sw) = *options.iter().find(|o| o.1 <= (4 * best).max(64)).expect("best is present");
    let layers: Vec<(usize, Vec<Cplx>)> = layers
        .into_iter()
        .enumerate()
        .map(|(j, (k0, c))| {
            let keep: Vec<Cplx> = c
                .into_iter()
                .enumerate()
                .take_while(|(i, _)| (k0 + i) as f64 / 2.0 + j as f64 * rho_f <= ord + 1e-9)
                .map(|(_, x)| x)
                .collect();
            (k0, keep)
        })
        .collect();
    let mut b = Bound { rho, layers, order: ord, n_sw, w_sw: Cplx::one(wp) };
    b.w_sw = b.eval(n_sw, wp);
    Ok(b)
}

// ---------------------------------------------------------------------------
// remainder and kernel

/// r_n(z) in the definition form, from Ansatz values (n ≥ 1).
pub fn remainder(model: &CoefficientModel, ansatz: &Ansatz, z: &Cplx, n: i64) -> Result<Cplx> {
    if n < 1 {
        return Err(Error::Domain("remainder needs n >= 1".into()));
    }
    let (am, _) = model.eval_coeffs(n - 1)?;
    let (an, bn) = model.eval_coeffs(n)?;
    Ok(remainder_from(&am, &an, &bn, z, &ansatz.q(n - 1), &ansatz.q(n), &ansatz.q(n + 1)))
}

fn remainder_from(
    am: &Real,
    an: &Real,
    bn: &Real,
    z: &Cplx,
    qm: &ScaledComplex,
    q0: &ScaledComplex,
    qp: &ScaledComplex,
) -> Cplx {
    let p = q0.prec();
    let lo = (qm / q0).to_cplx().expect("ratio in range").scale(am);
    let hi = (qp / q0).to_cplx().expect("ratio in range").scale(an);
    let mid = Cplx { re: Float::with_val(p, bn - &z.re), im: Float::with_val(p, -&z.im) };
    let root = Float::with_val(p, am * an).sqrt();
    let sum = &(&lo + &mid) + &hi;
    Cplx { re: Float::with_val(p, &sum.re / &root), im: Float::with_val(p, &sum.im / &root) }
}

/// Kernel quantities for indices up to N+1.
#[derive(Clone, Debug)]
pub struct KernelData {
    pub z: Cplx,
    horizon: usize,
    table: Arc<CoeffTable>,
    q: Vec<ScaledComplex>,
    x: Vec<ScaledComplex>,
    xinv: Vec<ScaledComplex>,
    r: Vec<Cplx>,
    big_r: Vec<Cplx>,
    prefix: Vec<ScaledComplex>,
}

/// Build the kernel on indices ≤ N+1.
pub fn kernel(model: &CoefficientModel, ansatz: &Ansatz, z: &Cplx, n: usize) -> Result<KernelData> {
    let t = Arc::new(model.coeff_table(n + 2)?);
    kernel_with(t, ansatz, z, n)
}

pub fn kernel_with(table: Arc<CoeffTable>, ansatz: &Ansatz, z: &Cplx, n: usize) -> Result<KernelData> {
    if n < 2 {
        return Err(Error::Domain("kernel horizon must be at least 2".into()));
    }
    if table.n_max() < n as i64 + 2 {
        return Err(Error::OutOfRange { index: n as i64 + 2, max: table.n_max() });
    }
    let p = ansatz.precision();
    let z = z.with_prec(p);
    // Q_{−1..=N+2}
    let q: Vec<ScaledComplex> = (-1..=n as i64 + 2).into_par_iter().map(|k| ansatz.q(k)).collect();
    let qa = |k: i64| &q[(k + 1) as usize];
    let scale = {
        let d = qa(0).scaled_mul(qa(1))?.mul_real(table.a(0));
        d.recip()?
    };
    let x: Vec<ScaledComplex> = (0..=n as i64 + 1)
        .into_par_iter()
        .map(|k| qa(k).scaled_mul(qa(k + 1)).map(|v| v.mul_real(table.a(k))).and_then(|v| v.scaled_mul(&scale)))
        .collect::<Result<_>>()?;
    for (k, v) in x.iter().enumerate() {
        if v.is_zero() {
            return Err(Error::Degenerate { index: k as i64, reason: "X_n vanishes".into() });
        }
    }
    let xinv: Vec<ScaledComplex> = x.par_iter().map(|v| v.recip()).collect::<Result<_>>()?;
    let rs: Vec<(Cplx, Cplx)> = (1..=n as i64 + 1)
        .into_par_iter()
        .map(|k| {
            let r = remainder_from(table.a(k - 1), table.a(k), table.b(k), &z, qa(k - 1), qa(k), qa(k + 1));
            let kap = Float::with_val(p, table.a(k) / table.a(k - 1)).sqrt();
            let ratio = (qa(k) / qa(k - 1)).to_cplx().expect("ratio in range");
            let big = -&(&ratio.scale(&kap) * &r);
            (r, big)
        })
        .collect();
    let mut r = vec![Cplx::zero(p)];
    let mut big_r = vec![Cplx::zero(p)];
    for (a, b) in rs {
        r.push(a);
        big_r.push(b);
    }
    let mut prefix = Vec::with_capacity(xinv.len() + 1);
    let mut acc = ScaledComplex::zero(p);
    prefix.push(acc.clone());
    for v in &xinv {
        acc = acc.scaled_add(v)?;
        prefix.push(acc.clone());
    }
    Ok(KernelData { z, horizon: n, table, q, x, xinv, r, big_r, prefix })
}

impl KernelData {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn precision(&self) -> u32 {
        self.z.prec()
    }

    pub fn table(&self) -> &Arc<CoeffTable> {
        &self.table
    }

    pub fn q(&self, n: i64) -> &ScaledComplex {
        &self.q[(n + 1) as usize]
    }

    pub fn x(&self, n: i64) -> &ScaledComplex {
        &self.x[n as usize]
    }

    pub fn x_inv(&self, n: i64) -> &ScaledComplex {
        &self.xinv[n as usize]
    }

    /// r_n, n ≥ 1.
    pub fn remainder(&self, n: i64) -> &Cplx {
        &self.r[n as usize]
    }

    /// R_n, n ≥ 1.
    pub fn big_r(&self, n: i64) -> &Cplx {
        &self.big_r[n as usize]
    }

    /// Λ_n = (a_n/a_{n−1}) Q_{n+1}/Q_{n−1}.
    pub fn lambda(&self, n: i64) -> ScaledComplex {
        let ratio = Float::with_val(self.precision(), self.table.a(n) / self.table.a(n - 1));
        (self.q(n + 1) / self.q(n - 1)).mul_real(&ratio)
    }

    /// G_{n,m} from prefix sums of X^{−1}.
    pub fn g(&self, n: i64, m: i64) -> ScaledComplex {
        let d = &self.prefix[m as usize] - &self.prefix[n as usize];
        self.x(m - 1) * &d
    }

    /// G_{n,m} by direct summation (oracle form).
    pub fn g_direct(&self, n: i64, m: i64) -> ScaledComplex {
        let mut s = ScaledComplex::zero(self.precision());
        for p in n..m {
            s = &s + self.x_inv(p);
        }
        self.x(m - 1) * &s
    }

    /// h_m with the sup over all n < m (m ≤ 512) or a sampled set.
    pub fn h(&self, m: i64) -> f64 {
        let rm = ScaledComplex::from_cplx(self.big_r(m));
        let rabs = rm.abs();
        let sample: Vec<i64> = lower_sample(m);
        let mut best: f64 = 0.0;
        for n in sample {
            let v = (&self.g(n, m).abs() * &rabs).to_c64().0;
            if v > best {
                best = v;
            }
        }
        best
    }

    /// Diagnostic CSV: n, Re θ_n, Im θ_n, log10|Q_n|, log10|r_n|, log10|R_n|, log10|X_n|, h_n.
    pub fn diagnostic_csv(&self, ansatz: &Ansatz, maj: Option<&Majorant>) -> String {
        let mut s = String::from("n,re_theta,im_theta,log10_q,log10_r,log10_big_r,log10_x,h\n");
        for n in 1..=self.horizon as i64 {
            let th = ansatz.theta(n);
            let lr = ScaledComplex::from_cplx(self.remainder(n)).log10_abs();
            let lbr = ScaledComplex::from_cplx(self.big_r(n)).log10_abs();
            let h = maj.map(|m| m.h(n as usize)).unwrap_or_else(|| self.h(n));
            let _ = writeln!(
                s,
                "{n},{:.12e},{:.12e},{:.9},{:.9},{:.9},{:.9},{:.9e}",
                th.re.to_f64(),
                th.im.to_f64(),
                self.q(n).log10_abs(),
                lr,
                lbr,
                self.x(n).log10_abs(),
                h
            );
        }
        s
    }
}

fn lower_sample(m: i64) -> Vec<i64> {
    if m <= 512 {
        return (0..m).collect();
    }
    let mut v = Vec::with_capacity(64);
    // 32 points geometric from the bottom, 32 from the top
    let mut k = 0i64;
    let mut step = 1.0f64;
    let ratio = (m as f64).powf(1.0 / 30.0);
    while v.len() < 32 && k < m {
        v.push(k);
        step *= ratio;
        k = (step as i64 - 1).max(k + 1);
    }
    let mut d = 1.0f64;
    while v.len() < 64 {
        let n = m - d.round() as i64;
        if n < 0 {
            break;
        }
        v.push(n);
        d *= ratio;
    }
    v.sort_unstable();
    v.dedup();
    v
}

/// Error majorant h_m and tail sums H_n = Σ_{p>n} h_p.
#[derive(Clone, Debug, Serialize)]
pub struct Majorant {
    /// h[m] for m = 0..=upto (h[0] = 0)
    pub h: Vec<f64>,
    pub upto: usize,
    /// power-law fit ĥ p^η of the tail
    pub tail_coef: f64,
    pub tail_exp: f64,
    /// Σ_{p > upto} of the fit
    pub tail: f64,
    /// fitted exponent ≥ −1: the tail is not summable
    pub diverging: bool,
    suffix: Vec<f64>,
}

impl Majorant {
    pub fn h(&self, m: usize) -> f64 {
        if m <= self.upto {
            self.h[m]
        } else {
            self.tail_coef * (m as f64).powf(self.tail_exp)
        }
    }

    /// H_n including the extrapolated tail.
    pub fn big_h(&self, n: usize) -> f64 {
        if self.diverging {
            return f64::INFINITY;
        }
        if n < self.upto {
            self.suffix[n + 1] + self.tail
        } else {
            fit_tail(self.tail_coef, self.tail_exp, n)
        }
    }

    /// H_n with the kernel truncated at M (no extrapolated tail).
    pub fn big_h_truncated(&self, n: usize, m: usize) -> f64 {
        let m = m.min(self.upto);
        if n >= m {
            0.0
        } else {
            self.suffix[n + 1] - self.suffix[m + 1]
        }
    }
}

fn fit_tail(c: f64, eta: f64, n: usize) -> f64 {
    // Σ_{p>n} c p^η ≈ c n^{η+1} / (−η − 1)
    c * (n as f64).powf(eta + 1.0) / (-eta - 1.0)
}

/// h_m for m ≤ min(N, cap) and a fitted tail beyond.
pub fn majorant(k: &KernelData, cap: usize) -> Majorant {
    let upto = k.horizon.min(cap).max(2);
    let h: Vec<f64> = std::iter::once(0.0).chain((1..=upto as i64).into_par_iter().map(|m| k.h(m)).collect::<Vec<_>>()).collect();
    let mut suffix = vec![0.0; upto + 2];
    for m in (0..=upto).rev() {
        suffix[m] = suffix[m + 1] + h[m];
    }
    // least squares on log h over the upper half of the computed range
    let lo = (upto / 2).max(1);
    let pts: Vec<(f64, f64)> = (lo..=upto).filter(|&m| h[m] > 0.0).map(|m| ((m as f64).ln(), h[m].ln())).collect();
    let (c, eta) = if pts.len() >= 2 {
        let nf = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let eta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        // scale so that the fit bounds the last computed values from above
        let c = pts.iter().map(|&(x, y)| (y - eta * x).exp()).fold(0.0, f64::max);
        (c, eta)
    } else {
        (0.0, -2.0)
    };
    let diverging = eta >= -1.0 && c > 0.0;
    let tail = if diverging { f64::INFINITY } else { fit_tail(c, eta, upto) };
    Majorant { h, upto, tail_coef: c, tail_exp: eta, tail, diverging, suffix }
}

/// (h_n, H_n) with H truncated at the horizon M plus the fitted tail.
pub fn error_majorant(k: &KernelData, n: usize, m: usize) -> Result<(f64, f64, bool)> {
    if n >= m {
        return Err(Error::Domain("error_majorant needs n < M".into()));
    }
    let maj = majorant(k, m);
    Ok((maj.h(n), maj.big_h(n), maj.diverging))
}

/// Choose the refinement order for a target tolerance.
pub fn default_order(cls: &Classification, tol: f64) -> f64 {
    if cls.cell != Cell::CriticalSingularSub && cls.cell != Cell::CriticalSingularSuper {
        return 0.0;
    }
    let digits = (-tol.log10()).max(1.0);
    (digits / 2.5 + 2.0).clamp(4.0, 12.0).floor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: u32 = 256;

    fn model(sigma: f64, tau: f64) -> CoefficientModel {
        // α = 0, β = (τ − σ)/2
        CoefficientModel::power_law(sigma, 0.0, (tau - sigma) / 2.0, 1.0, P).unwrap()
    }

    fn zc(re: f64, im: f64) -> Cplx {
        Cplx::from_f64(P, re, im)
    }

    fn base(m: &CoefficientModel, z: Option<&Cplx>) -> Ansatz {
        build_ansatz(m, AnsatzVariant::CriticalSingular, z, &AnsatzOptions::default()).unwrap()
    }

    #[test]
    fn base_ansatz_examples() {
        let m = model(2.0, 4.0);
        let a = base(&m, None);
        for n in [1i64, 2, 7, 100] {
            let q = a.q(n);
            let nf = n as f64;
            let want = -0.75 * nf.ln() - 4.0 * nf.sqrt();
            assert!((q.ln_abs() - want).abs() < 1e-12);
            assert_eq!(q.re_sign(), if n % 2 == 0 { 1 } else { -1 });
        }
        let m = model(2.0, -4.0);
        let a = base(&m, None);
        let q = a.q(9).to_cplx().unwrap();
        let want = (-0.75 * 9f64.ln()).exp();
        // (−1)^9 e^{−4i·3}
        let (re, im) = q.to_c64();
        assert!((re - (-want * 12f64.cos())).abs() < 1e-14);
        assert!((im - (want * 12f64.sin())).abs() < 1e-14);
        assert_eq!(a.q(0), ScaledComplex::one(P));
        assert_eq!(a.q(-1), ScaledComplex::one(P));
    }

    #[test]
    fn unsupported_variants() {
        let m = CoefficientModel::laguerre(0.5, P).unwrap();
        let e = build_ansatz(&m, AnsatzVariant::CriticalSingular, None, &AnsatzOptions::default());
        assert!(matches!(e, Err(Error::Unsupported(_))));
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 0.5, P).unwrap();
        let e = build_ansatz(&m, AnsatzVariant::CriticalSingular, None, &AnsatzOptions::default());
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn theta_phi_relations() {
        for tau in [4.0, -4.0] {
            let m = model(2.0, tau);
            let a = base(&m, None);
            for n in [0i64, 1, 5, 1000, 123_456] {
                let d = &(&a.phi(n + 1) - &a.phi(n)) - &a.theta(n);
                assert!(d.abs().to_f64() < 1e-70);
                assert!(!a.theta(n).re.is_sign_negative());
            }
        }
    }

    #[test]
    fn remainder_forms_agree() {
        for (s, tau, z) in [(2.0, 4.0, zc(0.0, 0.0)), (2.0, -4.0, zc(1.0, 0.5)), (1.75, 1.0, zc(-2.0, 0.0)), (1.75, -1.0, zc(0.0, 1.0))] {
            let m = model(s, tau);
            let a = base(&m, None);
            for n in [10i64, 57, 1000, 10_000] {
                let r1 = remainder(&m, &a, &z, n).unwrap();
                let r2 = a.remainder_expanded(&m, &z, n).unwrap();
                let rel = ((&r1 - &r2).abs() / r1.abs()).to_f64();
                assert!(rel < 1e-10, "σ={s} τ={tau} n={n} rel={rel:e}");
            }
        }
    }

    #[test]
    fn remainder_z_enters_linearly() {
        let m = model(2.0, 4.0);
        let a = base(&m, None);
        let z = zc(3.0, -1.0);
        for n in [5i64, 500] {
            let d = &remainder(&m, &a, &z, n).unwrap() - &remainder(&m, &a, &zc(0.0, 0.0), n).unwrap();
            let (am, _) = m.eval_coeffs(n - 1).unwrap();
            let (an, _) = m.eval_coeffs(n).unwrap();
            let want = -&z.scale(&Float::with_val(P, am * an).sqrt().recip());
            assert!((&d - &want).abs().to_f64() < 1e-60);
        }
    }

    #[test]
    fn cancellation_check_rejects_wrong_sign() {
        let mut cls = model(2.0, 4.0).classify().unwrap();
        assert!(CriticalSeries::new(&cls, P, 3.0).is_ok());
        cls.nu = -cls.nu;
        assert!(matches!(CriticalSeries::new(&cls, P, 3.0), Err(Error::Verification(_))));
    }

    #[test]
    fn refinement_reduces_remainder() {
        for (s, tau) in [(2.0, 4.0), (2.0, -4.0), (1.75, 1.0), (3.0, 2.0)] {
            let m = model(s, tau);
            let cls = m.classify().unwrap();
            let z = zc(1.0, 0.0);
            let ser = CriticalSeries::new(&cls, P, 8.0).unwrap();
            let a = Ansatz::critical(&cls, P, Some(&z), Some(&ser)).unwrap();
            let b = Ansatz::critical(&cls, P, Some(&z), None).unwrap();
            let n = a.switch_index().unwrap().max(200) * 4;
            let rr = remainder(&m, &a, &z, n).unwrap().abs().to_f64();
            let rb = remainder(&m, &b, &z, n).unwrap().abs().to_f64();
            let nf = n as f64;
            assert!(rr < rb * nf.powf(-5.0), "σ={s} τ={tau} n={n} refined {rr:e} base {rb:e}");
            // full decay order also for z ≠ 0 (guards against f64 leaks in the series)
            let r16 = remainder(&m, &a, &z, 16 * n).unwrap().abs().to_f64();
            let slope = (r16 / rr).ln() / 16f64.ln();
            assert!(slope < -8.0, "σ={s} τ={tau} slope {slope}");
        }
    }

    #[test]
    fn kernel_identities() {
        let m = model(2.0, 4.0);
        let z = zc(0.5, 0.0);
        let a = base(&m, Some(&z));
        let k = kernel(&m, &a, &z, 300).unwrap();
        let tol = 2f64.powi(-(P as i32) + 10);
        for n in 1..=300i64 {
            let lhs = &k.lambda(n) * k.x(n - 1);
            let rel = (&(&lhs - k.x(n)).abs() / &k.x(n).abs()).to_c64().0;
            assert!(rel <= tol, "n={n} {rel:e}");
        }
        assert_eq!(k.x(0).to_c64(), (1.0, 0.0));
        for n in [0i64, 3, 100, 299] {
            let g = k.g(n, n + 1);
            assert!(((&g - &ScaledComplex::one(P)).abs().to_c64().0) < 1e-60);
            let d = &(&k.g(n + 1, 250.max(n + 2)) - &k.g(n, 250.max(n + 2))) + &(k.x_inv(n) * k.x(250.max(n + 2) - 1));
            assert!(d.abs().to_c64().0 < 1e-50 * k.g(n, 250.max(n + 2)).abs().to_c64().0.max(1.0));
            let gd = k.g_direct(n, 250.max(n + 2));
            let gp = k.g(n, 250.max(n + 2));
            assert!((&(&gd - &gp).abs() / &gd.abs()).to_c64().0 < 1e-50);
        }
    }

    #[test]
    fn g_growth_bounded_by_sqrt() {
        let m = model(2.0, 4.0);
        let z = zc(0.0, 0.0);
        let a = base(&m, Some(&z));
        let k = kernel(&m, &a, &z, 4000).unwrap();
        let mut c: f64 = 0.0;
        for mm in (2..=4000i64).step_by(37) {
            c = c.max(k.g(0, mm).abs().to_c64().0 / (mm as f64).sqrt());
        }
        assert!(c.is_finite() && c < 10.0, "{c}");
    }

    #[test]
    fn majorant_monotone_and_decaying() {
        let m = model(2.0, 4.0);
        let z = zc(0.0, 0.0);
        let a = base(&m, Some(&z));
        let k = kernel(&m, &a, &z, 3000).unwrap();
        let maj = majorant(&k, 3000);
        assert!(!maj.diverging);
        let mut prev = f64::INFINITY;
        for n in (0..3000).step_by(13) {
            let h = maj.big_h(n);
            assert!(h <= prev && h >= 0.0);
            prev = h;
        }
        let mut worst: f64 = 0.0;
        for mm in 100..=3000usize {
            worst = worst.max(maj.h(mm) * (mm as f64).powf(1.5));
        }
        assert!(worst < 100.0, "{worst}");
        assert!((maj.big_h(0).exp() - 1.0).is_finite());
    }

    #[test]
    fn zero_diagonal_ansatz() {
        let m = CoefficientModel::zero_diag_power_law(3.0, 0.0, P).unwrap();
        let z = zc(0.5, 0.2);
        let opts = AnsatzOptions { order: 0.0, n_max: 200 };
        let a = build_ansatz(&m, AnsatzVariant::ZeroDiagCarleman, Some(&z), &opts).unwrap();
        for n in [0i64, 1, 10, 100] {
            let d = &(&a.phi(n + 1) - &a.phi(n)) - &a.theta(n);
            assert!(d.abs().to_f64() < 1e-70);
        }
        assert_eq!(a.q(0), ScaledComplex::one(P));
        let nc = build_ansatz(&m, AnsatzVariant::ZeroDiagNonCarleman, None, &opts).unwrap();
        let (an, _) = m.eval_coeffs(6).unwrap();
        let q = nc.q(6).to_cplx().unwrap();
        // (−i)^6 = −1
        assert!((q.re.to_f64() + an.to_f64().powf(-0.5)).abs() < 1e-14);
        // the Ansatz solves the recurrence asymptotically
        let r = remainder(&m, &nc, &zc(0.0, 0.0), 150).unwrap().abs().to_f64();
        assert!(r < 1e-3, "{r}");
        assert!(build_ansatz(&model(2.0, 4.0), AnsatzVariant::ZeroDiagNonCarleman, None, &opts).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn theta_nonnegative_real_part(n in 0i64..10_000_000, tau in prop::sample::select(vec![-9.0, -1.0, 0.5, 4.0])) {
            let m = model(2.5, tau);
            let a = base(&m, None);
            prop_assert!(!a.theta(n).re.is_sign_negative());
            prop_assert!(!a.q(n).is_zero());
        }
    }
}
