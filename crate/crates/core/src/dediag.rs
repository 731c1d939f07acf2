//! Zero-diagonal operators: squaring into the even/odd Jacobi pair and the
//! doubly critical checks on that pair.

use rug::Float;
use serde::Serialize;

use crate::coeffs::{AsymptoticMeta, CoefficientModel, Family, Table};
use crate::error::{Error, Result};
use crate::mp::{Cplx, Real};
use crate::recurrence::{delivered_tol, forward_polynomials, forward_polynomials_with};
use crate::scaled::ScaledComplex;
use crate::spectral::{norm_series, section_eigs_hp, truncated_eigs, NormSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DediagPair {
    pub source: CoefficientModel,
    pub plus: CoefficientModel,
    pub minus: CoefficientModel,
    /// rows stored in each derived table
    pub len: usize,
}

impl DediagPair {
    pub fn model(&self, s: Sign) -> &CoefficientModel {
        match s {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }
}

/// (σ, α̂) with 𝐚_n = (n/2)^{σ/2}(1 + α̂/n + O(n⁻²)), when known.
fn source_params(src: &CoefficientModel) -> Option<(f64, f64)> {
    match src.family() {
        Family::ZeroDiagPowerLaw { sigma, alpha_hat } => Some((*sigma, *alpha_hat)),
        Family::Hermite => Some((1.0, 0.5)),
        Family::Table(t) => t.meta.as_ref().filter(|m| m.gamma == 0.0).map(|m| (2.0 * m.sigma, m.alpha)),
        _ => None,
    }
}

/// Asymptotic parameters of the derived models; both have γ = 1 and τ = 0.
pub fn derived_meta(sigma: f64, alpha_hat: f64, s: Sign) -> AsymptoticMeta {
    let (alpha, beta) = match s {
        Sign::Plus => (alpha_hat + sigma / 4.0, alpha_hat - sigma / 4.0),
        Sign::Minus => (alpha_hat + 3.0 * sigma / 4.0, alpha_hat + sigma / 4.0),
    };
    AsymptoticMeta { sigma, alpha, beta, gamma: 1.0, tau: Some(0.0) }
}

/// Build J^(±) with `len` rows each from a zero-diagonal source.
pub fn dediagonalize(source: &CoefficientModel, len: usize) -> Result<DediagPair> {
    if len < 1 {
        return Err(Error::InvalidParameter("len must be at least 1".into()));
    }
    let p = source.precision();
    let t = source.coeff_table(2 * len + 1)?;
    if !source.is_zero_diagonal() {
        if let Some(n) = (0..=2 * len as i64 + 1).find(|&n| !t.b(n).is_zero()) {
            return Err(Error::Domain(format!("source has nonzero diagonal b_{n}")));
        }
    }
    // 𝐚_{−1} = 0 here, not the ½ used by the recurrence
    let a = |n: i64| if n < 0 { Float::new(p) } else { t.a(n).clone() };
    let sq = |x: Real| Float::with_val(p, x.square_ref());
    let mut ap = Vec::with_capacity(len);
    let mut bp = Vec::with_capacity(len);
    let mut am = Vec::with_capacity(len);
    let mut bm = Vec::with_capacity(len);
    for n in 0..len as i64 {
        ap.push(Float::with_val(p, &a(2 * n) * &a(2 * n + 1)));
        bp.push(Float::with_val(p, sq(a(2 * n - 1)) + sq(a(2 * n))));
        am.push(Float::with_val(p, &a(2 * n + 1) * &a(2 * n + 2)));
        bm.push(Float::with_val(p, sq(a(2 * n)) + sq(a(2 * n + 1))));
    }
    let params = source_params(source);
    let label = source.descriptor()["variant"].as_str().unwrap_or("source").to_string();
    let plus = CoefficientModel::table(
        Table { a: ap, b: bp, meta: params.map(|(s, a)| derived_meta(s, a, Sign::Plus)), label: format!("{label}+") },
        p,
    )?;
    let minus = CoefficientModel::table(
        Table { a: am, b: bm, meta: params.map(|(s, a)| derived_meta(s, a, Sign::Minus)), label: format!("{label}-") },
        p,
    )?;
    Ok(DediagPair { source: source.clone(), plus, minus, len })
}

/// Zero-diagonal table with 𝐚_{2n} = √((n+x)(n+y)), 𝐚_{2n+1} = √((n+1)(n+x+y)),
/// whose plus model is the continuous dual Hahn recurrence.
pub fn dual_hahn_source(x: f64, y: f64, len: usize, precision: u32) -> Result<CoefficientModel> {
    let p = precision;
    let xy = Float::with_val(p, x) + Float::with_val(p, y);
    let mut a = Vec::with_capacity(len);
    for i in 0..len {
        let n = Float::with_val(p, i / 2);
        let v = if i % 2 == 0 {
            Float::with_val(p, Float::with_val(p, &n + x) * Float::with_val(p, &n + y))
        } else {
            Float::with_val(p, Float::with_val(p, &n + 1) * Float::with_val(p, &n + &xy))
        };
        a.push(v.sqrt());
    }
    let b = vec![Float::new(p); len];
    let meta = AsymptoticMeta { sigma: 1.0, alpha: x + y, beta: 0.0, gamma: 0.0, tau: None };
    CoefficientModel::table(Table { a, b, meta: Some(meta), label: format!("dual_hahn_source({x},{y})") }, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub sign: Sign,
    pub z: (f64, f64),
    pub n_max: usize,
    pub max_residual: f64,
    pub max_residual_log10: f64,
}

/// max_n |P_n^(±)(z) − rhs_n| / |rhs_n| where rhs is 𝐏_{2n}(√z) or
/// 𝐚_0 𝐏_{2n+1}(√z)/√z (the normalization forced by 𝐏_1(x) = x/𝐚_0);
/// principal square root.
pub fn polynomial_identity_check(pair: &DediagPair, sign: Sign, z: &Cplx, n_max: usize) -> Result<IdentityReport> {
    if sign == Sign::Minus && z.is_zero() {
        return Err(Error::Domain("the minus identity divides by √z; z = 0 excluded".into()));
    }
    if n_max >= pair.len {
        return Err(Error::OutOfRange { index: n_max as i64, max: pair.len as i64 - 1 });
    }
    let p = pair.source.precision();
    let z = z.with_prec(p);
    let root = z.sqrt();
    let src = forward_polynomials(&pair.source, &root, 2 * n_max + 1)?;
    let lhs = forward_polynomials(pair.model(sign), &z, n_max)?;
    let scale = match sign {
        Sign::Plus => None,
        Sign::Minus => {
            let a0 = pair.source.eval_coeffs(0)?.0;
            Some(root.recip().scale(&a0))
        }
    };
    let mut worst: f64 = 0.0;
    for n in 0..=n_max as i64 {
        let rhs = match &scale {
            None => src.at(2 * n).clone(),
            Some(c) => src.at(2 * n + 1).mul_cplx(c),
        };
        let l = lhs.at(n);
        let d = (l - &rhs).abs();
        let m = if l.cmp_abs(&rhs).is_ge() { l.abs() } else { rhs.abs() };
        if m.is_zero() {
            continue;
        }
        worst = worst.max((&d / &m).to_c64().0);
    }
    Ok(IdentityReport {
        sign,
        z: z.to_c64(),
        n_max,
        max_residual: worst,
        max_residual_log10: if worst > 0.0 { worst.log10() } else { f64::NEG_INFINITY },
    })
}

/// Squared eigenvalues of the 2N×2N zero-diagonal section against the N×N
/// sections of J^(±): returns (max |μ² − λ⁺|, interleaving holds).
///
/// The even block of the squared section is exactly the plus section; the
/// odd block is the minus section with 𝐚_{2N−1}² removed from its last
/// diagonal entry, so its eigenvalues (the same squares) interleave the
/// minus spectrum from below.
pub fn section_consistency(pair: &DediagPair, n: usize, bits: u32) -> Result<(f64, bool)> {
    if n > pair.len {
        return Err(Error::OutOfRange { index: n as i64, max: pair.len as i64 });
    }
    let src = pair.source.with_precision(bits).coeff_table(2 * n)?;
    let a: Vec<Real> = (0..2 * n as i64 - 1).map(|k| src.a(k).clone()).collect();
    let b = vec![Float::new(bits); 2 * n];
    let bound = a.iter().map(|x| x.to_f64()).fold(0.0, f64::max) * 2.0 + 1.0;
    let mu = section_eigs_hp(&a, &b, 0.0, bound, bits);
    let mut sq: Vec<Real> = mu.iter().map(|m| Float::with_val(bits, m.square_ref())).collect();
    sq.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let section = |m: &CoefficientModel| -> Result<Vec<Real>> {
        let t = m.with_precision(bits).coeff_table(n - 1)?;
        let a: Vec<Real> = (0..n as i64 - 1).map(|k| t.a(k).clone()).collect();
        let b: Vec<Real> = (0..n as i64).map(|k| t.b(k).clone()).collect();
        let hi = b.iter().map(|x| x.to_f64()).fold(0.0, f64::max) + 2.0 * a.iter().map(|x| x.to_f64()).fold(0.0, f64::max) + 1.0;
        Ok(section_eigs_hp(&a, &b, -1.0, hi, bits))
    };
    let lp = section(&pair.plus)?;
    let lm = section(&pair.minus)?;
    if sq.len() != lp.len() || lm.len() != n {
        return Err(Error::Verification(format!("count mismatch: {} squares, {} plus, {} minus", sq.len(), lp.len(), lm.len())));
    }
    let mut dev: f64 = 0.0;
    for (s, l) in sq.iter().zip(&lp) {
        let d = Float::with_val(bits, s - l).abs().to_f64() / l.to_f64().abs().max(1.0);
        dev = dev.max(d);
    }
    let slack = Float::with_val(bits, Float::with_val(bits, 1) >> (bits / 2));
    let mut inter = true;
    for k in 0..n {
        if lm[k] < Float::with_val(bits, &sq[k] - &slack) {
            inter = false;
        }
        if k + 1 < n && lm[k] > Float::with_val(bits, &sq[k + 1] + &slack) {
            inter = false;
        }
    }
    Ok((dev, inter))
}

// ---------------------------------------------------------------------------
// regular doubly critical case

#[derive(Clone, Debug, Serialize)]
pub struct OscillationReport {
    pub lambda: f64,
    pub sigma: f64,
    pub n_range: (usize, usize),
    /// phase variable name: "log n" or "n^(1-σ/2)/(1-σ/2)"
    pub variable: String,
    /// crossing positions in the phase variable
    pub crossings: Vec<f64>,
    pub mean_spacing: f64,
    pub expected_spacing: f64,
    pub spacing_rel_error: f64,
    /// max |s_n| over consecutive dyadic windows
    pub window_max: Vec<(usize, f64)>,
    pub bounded: bool,
    pub amplitude: f64,
    pub phase: f64,
}

impl OscillationReport {
    pub fn crossings_csv(&self) -> String {
        let mut s = String::from("k,phase_variable,spacing\n");
        for (k, c) in self.crossings.iter().enumerate() {
            let sp = if k > 0 { format!("{:.12e}", c - self.crossings[k - 1]) } else { String::new() };
            s.push_str(&format!("{k},{c:.12e},{sp}\n"));
        }
        s
    }
}

fn phase_var(sigma: f64, n: f64) -> f64 {
    if sigma == 2.0 {
        n.ln()
    } else {
        n.powf(1.0 - sigma / 2.0) / (1.0 - sigma / 2.0)
    }
}

/// (−1)^n n^{σ/4} P_n(λ) as f64 for n in 0..=N.
fn normalized_real(model: &CoefficientModel, lambda: f64, sigma: f64, n_max: usize) -> Result<Vec<f64>> {
    let p = model.precision();
    let t = model.coeff_table(n_max)?;
    let pp = forward_polynomials_with(&t, &Cplx::from_f64(p, lambda, 0.0), n_max, p);
    Ok((0..=n_max as i64)
        .map(|n| {
            let v = pp.at(n);
            if v.is_zero() {
                return 0.0;
            }
            let mag = (v.ln_abs() + sigma / 4.0 * (n.max(1) as f64).ln()).exp();
            let s = v.re_sign() as f64;
            if n % 2 == 0 { s * mag } else { -s * mag }
        })
        .collect())
}

/// Oscillation check for a τ = 0 model with σ ∈ (2/3, 2] at λ > 0 over
/// n ∈ [n_lo, N].
pub fn regular_asymptotics_model(model: &CoefficientModel, lambda: f64, n_lo: usize, n_max: usize) -> Result<OscillationReport> {
    let meta = model.meta()?;
    let cls = model.classify()?;
    if cls.tau.abs() > 1e-12 || meta.gamma != 1.0 {
        return Err(Error::Domain("regular check needs a doubly critical model (γ = 1, τ = 0)".into()));
    }
    let sigma = meta.sigma;
    if !(sigma > 2.0 / 3.0 && sigma <= 2.0) {
        return Err(Error::Domain(format!("σ = {sigma} outside (2/3, 2]; use singular_flat_check for σ > 2")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("λ must be positive".into()));
    }
    if n_lo < 1 || n_lo * 4 > n_max {
        return Err(Error::InvalidParameter("need 1 ≤ n_lo and 4·n_lo ≤ N".into()));
    }
    let s = normalized_real(model, lambda, sigma, n_max)?;
    let mut crossings = Vec::new();
    for n in n_lo..n_max {
        let (a, b) = (s[n], s[n + 1]);
        if a == 0.0 || a.signum() != b.signum() {
            let (x0, x1) = (phase_var(sigma, n as f64), phase_var(sigma, n as f64 + 1.0));
            let t = if a == b { 0.0 } else { a / (a - b) };
            crossings.push(x0 + t * (x1 - x0));
        }
    }
    let expected = std::f64::consts::PI / lambda.sqrt();
    let mean = if crossings.len() >= 2 {
        (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
    } else {
        f64::NAN
    };
    let mut window_max = Vec::new();
    let mut w = n_lo;
    while 2 * w <= n_max {
        let m = s[w..=2 * w].iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        window_max.push((w, m));
        w *= 2;
    }
    let hi = window_max.iter().map(|x| x.1).fold(0.0, f64::max);
    let lo = window_max.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let bounded = lo > 0.0 && hi / lo <= 1.5;
    // least squares s ≈ A sin(√λ φ) + B cos(√λ φ) on the upper half
    let rl = lambda.sqrt();
    let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let start = n_max / 2;
    let step = ((n_max - start) / 4000).max(1);
    for n in (start..=n_max).step_by(step) {
        let ph = rl * phase_var(sigma, n as f64);
        let (si, co) = ph.sin_cos();
        ss += si * si;
        sc += si * co;
        cc += co * co;
        ys += s[n] * si;
        yc += s[n] * co;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    Ok(OscillationReport {
        lambda,
        sigma,
        n_range: (n_lo, n_max),
        variable: if sigma == 2.0 { "log n".into() } else { "n^(1-σ/2)/(1-σ/2)".into() },
        mean_spacing: mean,
        expected_spacing: expected,
        spacing_rel_error: (mean - expected).abs() / expected,
        crossings,
        window_max,
        bounded,
        amplitude: a.hypot(b),
        phase: b.atan2(a),
    })
}

pub fn regular_asymptotics_check(pair: &DediagPair, sign: Sign, lambda: f64, n_lo: usize, n_max: usize) -> Result<OscillationReport> {
    regular_asymptotics_model(pair.model(sign), lambda, n_lo, n_max)
}

// ---------------------------------------------------------------------------
// singular doubly critical case

#[derive(Clone, Debug, Serialize)]
pub struct FlatReport {
    pub z: (f64, f64),
    pub sigma: f64,
    /// (n, c_n) with c_n = (−1)^n n^{σ/4} P_n(z), at dyadic n
    pub samples: Vec<(usize, (f64, f64))>,
    /// |c_{2n} − c_n| / |c_{2n}| for consecutive samples
    pub increments: Vec<(usize, f64)>,
    pub norm: NormSeries,
}

impl FlatReport {
    /// Largest increment over samples starting at or beyond n.
    pub fn max_increment_from(&self, n: usize) -> f64 {
        self.increments.iter().filter(|x| x.0 >= n).map(|x| x.1).fold(0.0, f64::max)
    }
}

/// Convergence of (−1)^n n^{σ/4} P_n(z) and ℓ² saturation, σ > 2.
pub fn singular_flat_model(model: &CoefficientModel, z: &Cplx, n_start: usize, n_max: usize) -> Result<FlatReport> {
    let meta = model.meta()?;
    let sigma = meta.sigma;
    if meta.gamma != 1.0 || model.classify()?.tau.abs() > 1e-12 {
        return Err(Error::Domain("flat check needs a doubly critical model (γ = 1, τ = 0)".into()));
    }
    if sigma <= 2.0 {
        return Err(Error::Domain(format!("σ = {sigma} ≤ 2 is the regular case; use regular_asymptotics_check")));
    }
    if n_start < 1 || 2 * n_start > n_max {
        return Err(Error::InvalidParameter("need 1 ≤ n_start and 2·n_start ≤ N".into()));
    }
    let p = model.precision();
    let z = z.with_prec(p);
    let pp = forward_polynomials(model, &z, n_max)?;
    let c = |n: usize| -> ScaledComplex {
        let f = Float::with_val(p, n).ln() * (sigma / 4.0);
        let v = pp.at(n as i64).mul_real(&f.exp());
        if n % 2 == 1 { -&v } else { v }
    };
    let mut samples = Vec::new();
    let mut increments = Vec::new();
    let mut n = n_start;
    let mut prev: Option<ScaledComplex> = None;
    while n <= n_max {
        let v = c(n);
        if let Some(pv) = &prev {
            let d = (&(&v - pv).abs() / &v.abs()).to_c64().0;
            increments.push((n / 2, d));
        }
        samples.push((n, v.to_c64()));
        prev = Some(v);
        n *= 2;
    }
    let norm = norm_series(&pp.values[1..]);
    Ok(FlatReport { z: z.to_c64(), sigma, samples, increments, norm })
}

pub fn singular_flat_check(pair: &DediagPair, sign: Sign, z: &Cplx, n_start: usize, n_max: usize) -> Result<FlatReport> {
    singular_flat_model(pair.model(sign), z, n_start, n_max)
}

// ---------------------------------------------------------------------------
// Stieltjes–Carlitz spectra

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub max_gap: f64,
    /// consecutive gap ratios g_{k+1}/g_k over the interior
    pub gap_ratios: Vec<f64>,
}

/// Finite-section eigenvalues in a window and their gaps, for each size.
pub fn gap_profile(model: &CoefficientModel, sizes: &[usize], interval: (f64, f64)) -> Result<Vec<GapReport>> {
    sizes
        .iter()
        .map(|&n| {
            let r = truncated_eigs(model, n, interval)?;
            let ev = r.lambdas();
            let gaps: Vec<f64> = ev.windows(2).map(|w| w[1] - w[0]).collect();
            let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
            let ratios = gaps.windows(2).map(|w| w[1] / w[0]).collect();
            Ok(GapReport { n, eigenvalues: ev, max_gap, gap_ratios: ratios })
        })
        .collect()
}

/// Relative identity tolerance expected at the model precision.
pub fn identity_tolerance(prec: u32) -> f64 {
    delivered_tol(prec) * 2f64.powi(104)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    const P: u32 = 256;

    fn table_source(a: Vec<f64>) -> CoefficientModel {
        let n = a.len();
        let a = a.into_iter().map(|x| Float::with_val(P, x)).collect();
        let b = vec![Float::new(P); n];
        CoefficientModel::new(Family::Table(Arc::new(Table { a, b, meta: None, label: "t".into() })), P).unwrap()
    }

    #[test]
    fn integer_source() {
        let src = table_source((1..=20).map(|x| x as f64).collect());
        let d = dediagonalize(&src, 5).unwrap();
        let (a0, b0) = d.plus.eval_coeffs(0).unwrap();
        assert_eq!(a0, 2);
        assert_eq!(b0, 1);
        let (a0m, b0m) = d.minus.eval_coeffs(0).unwrap();
        assert_eq!(a0m, 6);
        assert_eq!(b0m, 5);
    }

    #[test]
    fn nonzero_diagonal_rejected() {
        let m = CoefficientModel::laguerre(0.0, P).unwrap();
        assert!(matches!(dediagonalize(&m, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn hermite_gives_laguerre() {
        let d = dediagonalize(&CoefficientModel::hermite(P).unwrap(), 60).unwrap();
        for (s, lp) in [(Sign::Plus, -0.5), (Sign::Minus, 0.5)] {
            let l = CoefficientModel::laguerre(lp, P).unwrap();
            for n in 0..60 {
                let (a, b) = d.model(s).eval_coeffs(n).unwrap();
                let (la, lb) = l.eval_coeffs(n).unwrap();
                assert!(Float::with_val(P, &a - &la).abs() < 1e-70);
                assert!(Float::with_val(P, &b - &lb).abs() < 1e-70);
            }
        }
    }

    #[test]
    fn dual_hahn_factorization() {
        let src = dual_hahn_source(1.3, 0.7, 200, P).unwrap();
        let d = dediagonalize(&src, 90).unwrap();
        let dh = CoefficientModel::dual_hahn(1.3, 0.7, P).unwrap();
        for n in 0..90 {
            let (a, b) = d.plus.eval_coeffs(n).unwrap();
            let (da, db) = dh.eval_coeffs(n).unwrap();
            assert!(Float::with_val(P, &a - &da).abs() / &da < 1e-70, "n={n}");
            assert!(Float::with_val(P, &b - &db).abs() / &db < 1e-70, "n={n}");
        }
        assert_eq!(d.plus.meta().unwrap(), dh.meta().unwrap());
    }

    #[test]
    fn identities_hold() {
        let d = dediagonalize(&CoefficientModel::hermite(P).unwrap(), 60).unwrap();
        let z = Cplx::from_f64(P, 2.3, 0.0);
        for s in [Sign::Plus, Sign::Minus] {
            let r = polynomial_identity_check(&d, s, &z, 50).unwrap();
            assert!(r.max_residual <= 1e-60, "{s:?} {}", r.max_residual);
        }
        let r = polynomial_identity_check(&d, Sign::Plus, &Cplx::from_f64(P, 0.0, 0.0), 0).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert!(polynomial_identity_check(&d, Sign::Minus, &Cplx::zero(P), 5).is_err());
    }

    #[test]
    fn random_table_identities() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let src = table_source((0..130).map(|_| rng.gen_range(0.2..3.0)).collect());
        let d = dediagonalize(&src, 60).unwrap();
        let z = Cplx::from_f64(P, -1.0, 0.5);
        for s in [Sign::Plus, Sign::Minus] {
            let r = polynomial_identity_check(&d, s, &z, 50).unwrap();
            assert!(r.max_residual <= 1e-60, "{s:?} {}", r.max_residual);
        }
    }

    #[test]
    fn sign_symmetry() {
        let m = CoefficientModel::zero_diag_power_law(3.0, 0.2, P).unwrap();
        let z = Cplx::from_f64(P, 0.7, -0.4);
        let mz = Cplx::from_f64(P, -0.7, 0.4);
        let a = forward_polynomials(&m, &z, 40).unwrap();
        let b = forward_polynomials(&m, &mz, 40).unwrap();
        for n in 0..=40i64 {
            let bb = if n % 2 == 1 { -b.at(n) } else { b.at(n).clone() };
            assert!((&(a.at(n) - &bb).abs() / &a.at(n).abs()).to_c64().0 < 1e-70);
        }
    }

    #[test]
    fn derived_meta_matches_fit() {
        // n(a_n/n^σ − 1) → α, n(b_n/(2n^σ) − 1) → β, estimated by Richardson
        let (sigma, ah) = (1.5, 0.3);
        let d = dediagonalize(&CoefficientModel::zero_diag_power_law(sigma, ah, P).unwrap(), 20001).unwrap();
        for s in [Sign::Plus, Sign::Minus] {
            let m = d.model(s);
            let est = |n: i64| {
                let (a, b) = m.eval_coeffs(n).unwrap();
                let ns = (n as f64).powf(sigma);
                let ea = n as f64 * (a.to_f64() / ns - 1.0);
                let eb = n as f64 * (b.to_f64() / (2.0 * ns) - 1.0);
                (ea, eb)
            };
            let (a1, b1) = est(10000);
            let (a2, b2) = est(20000);
            let (fa, fb) = (2.0 * a2 - a1, 2.0 * b2 - b1);
            let meta = m.meta().unwrap();
            assert!((fa - meta.alpha).abs() < 1e-4, "{s:?} α {fa} {}", meta.alpha);
            assert!((fb - meta.beta).abs() < 1e-4, "{s:?} β {fb} {}", meta.beta);
            assert!(m.classify().unwrap().tau.abs() < 1e-12);
        }
    }

    #[test]
    fn squared_sections_interleave() {
        for src in [CoefficientModel::hermite(P).unwrap(), CoefficientModel::zero_diag_power_law(3.0, 0.1, P).unwrap()] {
            let d = dediagonalize(&src, 12).unwrap();
            for n in [1, 5, 12] {
                let (dev, inter) = section_consistency(&d, n, 256).unwrap();
                assert!(dev < 1e-20, "n={n} {dev:e}");
                assert!(inter);
            }
        }
    }

    #[test]
    fn laguerre_half_oscillation() {
        let d = dediagonalize(&CoefficientModel::hermite(P).unwrap(), 20001).unwrap();
        let r = regular_asymptotics_check(&d, Sign::Plus, 1.0, 100, 20000).unwrap();
        assert!(r.spacing_rel_error < 0.05, "{}", r.mean_spacing);
        assert!(r.bounded, "{:?}", r.window_max);
    }

    #[test]
    fn regular_rejects_singular_sigma() {
        let d = dediagonalize(&CoefficientModel::zero_diag_power_law(3.0, 0.0, P).unwrap(), 100).unwrap();
        assert!(matches!(regular_asymptotics_check(&d, Sign::Plus, 1.0, 10, 90), Err(Error::Domain(_))));
        let h = dediagonalize(&CoefficientModel::hermite(P).unwrap(), 100).unwrap();
        assert!(matches!(singular_flat_check(&h, Sign::Plus, &Cplx::one(P), 10, 90), Err(Error::Domain(_))));
    }

    #[test]
    fn singular_flat_small() {
        let d = dediagonalize(&CoefficientModel::zero_diag_power_law(3.0, 0.0, P).unwrap(), 4100).unwrap();
        for s in [Sign::Plus, Sign::Minus] {
            let r = singular_flat_check(&d, s, &Cplx::one(P), 16, 4096).unwrap();
            let inc: Vec<f64> = r.increments.iter().map(|x| x.1).collect();
            assert!(inc.windows(2).skip(2).all(|w| w[1] < w[0]), "{inc:?}");
            assert!(r.norm.saturates);
        }
    }
}
