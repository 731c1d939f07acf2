//! Discrete spectrum: zeros of the Jost function, a finite-section oracle,
//! spectral weights and ℓ²-evidence for deficiency indices.

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::coeffs::{Cell, CoefficientModel};
use crate::error::{Error, Result};
use crate::jost::{default_engine, JostEngine};
use crate::mp::{Cplx, Real};
use crate::recurrence::{delivered_tol, forward_polynomials_with};
use crate::scaled::ScaledComplex;

/// Tolerance for the Jost-function evaluations inside scans.
pub const SCAN_JOST_TOL: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    JostZero,
    Truncation,
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    /// bracket width
    pub width: f64,
    /// polished value as a decimal string (Jost zeros only)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_jost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_sum: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub method: SpectralMethod,
    pub interval: (f64, f64),
    pub eigenvalues: Vec<Eigenvalue>,
    /// (truncation size or grid size, max eigenvalue shift or zero count)
    pub convergence: Vec<(usize, f64)>,
    /// Volterra horizon used for every Ω evaluation (Jost zeros only)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

impl SpectralReport {
    pub fn lambdas(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.lambda).collect()
    }
}

// ---------------------------------------------------------------------------
// Jost-function zeros

/// Scanner with a fixed horizon for a window.
pub struct JostScanner {
    pub engine: JostEngine,
    pub m: usize,
}

impl JostScanner {
    /// Engine and one horizon M valid over the whole window.
    pub fn new(model: &CoefficientModel, interval: (f64, f64)) -> Result<Self> {
        let cls = model.classify()?;
        if cls.cell != Cell::CriticalSingularSuper {
            return Err(Error::Domain(format!("Jost-zero scan needs the supercritical cell, got {}", cls.cell)));
        }
        let (lo, hi) = interval;
        if !(lo < hi) {
            return Err(Error::InvalidParameter("interval must satisfy lo < hi".into()));
        }
        let engine = default_engine(model, SCAN_JOST_TOL, 4096)?;
        let p = engine.precision();
        let probes = [lo, 0.5 * (lo + hi), hi];
        let mut m = 0;
        for x in probes {
            let (_, _, _, mm) = engine.horizon(&Cplx::from_f64(p, x, 0.0), SCAN_JOST_TOL)?;
            m = m.max(mm);
        }
        let m = m + m / 4;
        Ok(JostScanner { engine, m })
    }

    pub fn precision(&self) -> u32 {
        self.engine.precision()
    }

    /// Ω(λ) for real λ, verified real.
    pub fn omega(&self, lambda: &Real) -> Result<Real> {
        let p = self.precision();
        let z = Cplx::from_real(Float::with_val(p, lambda));
        let o = self.engine.omega_fast(&z, self.m)?;
        real_part(&o)
    }

    /// (f_0, f_{−1}) at real λ.
    fn f0_fm1(&self, lambda: &Real) -> Result<(Real, Real)> {
        let p = self.precision();
        let z = Cplx::from_real(Float::with_val(p, lambda));
        let f = self.engine.f_fast(&z, self.m)?;
        Ok((real_part(f.at(0))?, real_part(f.at(-1))?))
    }

    /// Illinois iteration inside a sign-change bracket to near working precision.
    pub fn polish(&self, lo: f64, hi: f64) -> Result<Real> {
        let p = self.precision();
        let mut a = Float::with_val(p, lo);
        let mut b = Float::with_val(p, hi);
        let mut fa = self.omega(&a)?;
        let mut fb = self.omega(&b)?;
        if fa.is_zero() {
            return Ok(a);
        }
        if fb.is_zero() {
            return Ok(b);
        }
        if fa.is_sign_negative() == fb.is_sign_negative() {
            return Err(Error::Domain("polish: no sign change in bracket".into()));
        }
        let stop = Float::with_val(p, delivered_tol(p)) * Float::with_val(p, 1.0 + lo.abs().max(hi.abs()));
        let mut side = 0;
        for _ in 0..200 {
            let w = Float::with_val(p, &b - &a);
            if w.clone().abs() <= stop {
                break;
            }
            let c = Float::with_val(p, &b - Float::with_val(p, &fb * &w) / Float::with_val(p, &fb - &fa));
            // fall back to bisection if the secant step leaves the bracket
            let c = if (c > a && c < b) || (c < a && c > b) { c } else { Float::with_val(p, &a + &b) / 2u32 };
            let fc = self.omega(&c)?;
            if fc.is_zero() {
                return Ok(c);
            }
            if fc.is_sign_negative() == fb.is_sign_negative() {
                b = c;
                fb = fc;
                if side == -1 {
                    fa /= 2u32;
                }
                side = -1;
            } else {
                a = c;
                fa = fc;
                if side == 1 {
                    fb /= 2u32;
                }
                side = 1;
            }
        }
        Ok(Float::with_val(p, &a + &b) / 2u32)
    }

    /// (w_jost, w_sum) at a polished zero.
    pub fn weights(&self, lambda: &Real, n_sum: usize) -> Result<(f64, f64)> {
        let p = self.precision();
        let h = Float::with_val(p, Float::with_val(p, 1) >> (p / 3)) * Float::with_val(p, 1.0 + lambda.to_f64().abs());
        let (f0, fm1) = self.f0_fm1(lambda)?;
        let (_, fp) = self.f0_fm1(&Float::with_val(p, lambda + &h))?;
        let (_, fm) = self.f0_fm1(&Float::with_val(p, lambda - &h))?;
        let deriv = Float::with_val(p, Float::with_val(p, &fp - &fm) / Float::with_val(p, &h * 2u32));
        if deriv.is_zero() {
            return Err(Error::Degenerate { index: -1, reason: "vanishing derivative of f_{-1}".into() });
        }
        let newton = Float::with_val(p, &fm1 / &deriv).abs().to_f64();
        if newton > 1e-8 * (1.0 + lambda.to_f64().abs()) {
            return Err(Error::Domain(format!("λ = {} is not a Jost zero (Newton distance {newton:e})", lambda.to_f64())));
        }
        let w_jost = Float::with_val(p, Float::with_val(p, &f0 * 2u32) / &deriv).to_f64();
        let w_sum = weight_sum(&self.engine, lambda, n_sum)?;
        Ok((w_jost, w_sum))
    }
}

fn real_part(x: &ScaledComplex) -> Result<Real> {
    let c = x.to_cplx().ok_or_else(|| Error::Range("value outside the MPFR range".into()))?;
    if !c.im.is_zero() {
        let rel = Float::with_val(c.prec(), &c.im / c.abs()).abs().to_f64();
        if rel > 1e-20 {
            return Err(Error::Verification(format!("Ω not real on the real axis: |Im|/|Ω| = {rel:e}")));
        }
    }
    Ok(c.re)
}

/// 1 / Σ_{n ≤ N} P_n(λ)², stopping once the terms no longer matter.
pub fn weight_sum(engine: &JostEngine, lambda: &Real, n_sum: usize) -> Result<f64> {
    let p = engine.precision();
    let t = engine.table(n_sum + 1)?;
    let z = Cplx::from_real(Float::with_val(p, lambda));
    let pp = forward_polynomials_with(&t, &z, n_sum, p);
    // λ is only known to the accuracy of Ω, so far out the terms pick up
    // the growing solution; stop once they are negligible or turn upward
    let mut sum = Float::new(p);
    let floor = Float::with_val(p, Float::with_val(p, 1) >> (p / 3));
    let small = Float::with_val(p, 1e-12);
    let mut prev: Option<Real> = None;
    let (mut small_run, mut rising) = (0, 0);
    for n in 0..=n_sum as i64 {
        let v = pp.at(n).to_cplx().ok_or_else(|| Error::Range("P_n out of range".into()))?;
        let sq = v.norm_sqr();
        let negligible = sq <= Float::with_val(p, &sum * &floor);
        let tiny = sq <= Float::with_val(p, &sum * &small);
        rising = match &prev {
            Some(q) if tiny && sq > *q => rising + 1,
            _ => 0,
        };
        if rising >= 3 {
            break;
        }
        sum += &sq;
        prev = Some(sq);
        if negligible {
            small_run += 1;
            if small_run >= 8 {
                break;
            }
        } else {
            small_run = 0;
        }
    }
    Ok(Float::with_val(p, sum.recip()).to_f64())
}

fn sign_changes(vals: &[Real]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..vals.len().saturating_sub(1) {
        let (a, b) = (&vals[i], &vals[i + 1]);
        if a.is_zero() {
            out.push(i);
        } else if !b.is_zero() && a.is_sign_negative() != b.is_sign_negative() {
            out.push(i);
        }
    }
    out
}

/// Zeros of Ω on [lo, hi]: grid sign changes (grid doubled until the count
/// is stable twice) refined by bisection to width `tol`.
pub fn jost_zero_scan(model: &CoefficientModel, interval: (f64, f64), grid: usize, tol: f64) -> Result<SpectralReport> {
    let sc = JostScanner::new(model, interval)?;
    scan_with(&sc, interval, grid, tol)
}

pub fn scan_with(sc: &JostScanner, interval: (f64, f64), grid: usize, tol: f64) -> Result<SpectralReport> {
    if grid < 8 {
        return Err(Error::InvalidParameter("grid must be at least 8".into()));
    }
    let (lo, hi) = interval;
    let p = sc.precision();
    let eval_grid = |g: usize| -> Result<(Vec<f64>, Vec<Real>)> {
        let xs: Vec<f64> = (0..=g).map(|i| lo + (hi - lo) * i as f64 / g as f64).collect();
        let vs: Vec<Real> = xs.par_iter().map(|&x| sc.omega(&Float::with_val(p, x))).collect::<Result<_>>()?;
        Ok((xs, vs))
    };
    let mut g = grid;
    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut stable = 0;
    let mut last: Option<usize> = None;
    let mut doublings = 0;
    let (xs, vs) = loop {
        let (xs, vs) = eval_grid(g)?;
        let c = sign_changes(&vs).len();
        history.push((g, c as f64));
        if last == Some(c) {
            stable += 1;
        } else {
            stable = 0;
        }
        last = Some(c);
        if stable >= 2 {
            break (xs, vs);
        }
        if doublings >= 4 {
            let partial = sign_changes(&vs).iter().map(|&i| 0.5 * (xs[i] + xs[i + 1])).collect();
            return Err(Error::UnresolvedSpectrum { counts: history.iter().map(|h| h.1 as usize).collect(), partial });
        }
        g *= 2;
        doublings += 1;
    };
    let brackets = sign_changes(&vs);
    let eig: Vec<Eigenvalue> = brackets
        .par_iter()
        .map(|&i| -> Result<Eigenvalue> {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let mut fa = vs[i].clone();
            if fa.is_zero() {
                return Ok(Eigenvalue { lambda: a, width: 0.0, lambda_hp: None, w_jost: None, w_sum: None });
            }
            while b - a > tol {
                let c = 0.5 * (a + b);
                if c <= a || c >= b {
                    break;
                }
                let fc = sc.omega(&Float::with_val(p, c))?;
                if fc.is_zero() {
                    a = c;
                    b = c;
                    break;
                }
                if fc.is_sign_negative() == fa.is_sign_negative() {
                    a = c;
                    fa = fc;
                } else {
                    b = c;
                }
            }
            Ok(Eigenvalue { lambda: 0.5 * (a + b), width: b - a, lambda_hp: None, w_jost: None, w_sum: None })
        })
        .collect::<Result<_>>()?;
    Ok(SpectralReport { method: SpectralMethod::JostZero, interval, eigenvalues: eig, convergence: history, horizon: Some(sc.m) })
}

/// Polish every eigenvalue of a Jost-zero report and attach both weights.
pub fn attach_weights(sc: &JostScanner, rep: &mut SpectralReport, n_sum: usize) -> Result<()> {
    let res: Vec<(String, f64, f64, f64)> = rep
        .eigenvalues
        .par_iter()
        .map(|e| {
            let half = e.width.max(1e-12 * (1.0 + e.lambda.abs()));
            let (lo, hi) = widen_bracket(sc, e.lambda - half, e.lambda + half)?;
            let l = sc.polish(lo, hi)?;
            let (wj, ws) = sc.weights(&l, n_sum)?;
            Ok((l.to_string_radix(10, Some(40)), l.to_f64(), wj, ws))
        })
        .collect::<Result<_>>()?;
    for (e, (s, l, wj, ws)) in rep.eigenvalues.iter_mut().zip(res) {
        e.lambda_hp = Some(s);
        e.lambda = l;
        e.w_jost = Some(wj);
        e.w_sum = Some(ws);
    }
    Ok(())
}

fn widen_bracket(sc: &JostScanner, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let p = sc.precision();
    for _ in 0..20 {
        let a = sc.omega(&Float::with_val(p, lo))?;
        let b = sc.omega(&Float::with_val(p, hi))?;
        if a.is_zero() || b.is_zero() || a.is_sign_negative() != b.is_sign_negative() {
            return Ok((lo, hi));
        }
        let w = hi - lo;
        lo -= w;
        hi += w;
    }
    Err(Error::Domain("could not re-bracket eigenvalue".into()))
}

/// Spectral weights at λ_k (which is polished first).
pub fn spectral_weights(model: &CoefficientModel, lambda_k: f64, n_sum: usize) -> Result<(f64, f64)> {
    let w = 1e-6 * (1.0 + lambda_k.abs());
    let sc = JostScanner::new(model, (lambda_k - w, lambda_k + w))?;
    let (lo, hi) = widen_bracket(&sc, lambda_k - w, lambda_k + w)?;
    let l = sc.polish(lo, hi)?;
    sc.weights(&l, n_sum)
}

// ---------------------------------------------------------------------------
// finite sections

const STURM_PREC: u32 = 192;

/// Number of eigenvalues of the N×N section below x.
pub fn sturm_count(a: &[Real], b: &[Real], x: f64) -> usize {
    sturm_count_hp(a, b, &Float::with_val(STURM_PREC, x))
}

/// Sturm count at a multiprecision point; works at the precision of `x`.
pub fn sturm_count_hp(a: &[Real], b: &[Real], x: &Real) -> usize {
    let p = x.prec();
    let xf = x;
    let tiny = Float::with_val(p, Float::with_val(p, 1) >> (p as i32 - 8) as u32);
    let mut cnt = 0;
    let mut d = Float::with_val(p, &b[0] - xf);
    for i in 0..b.len() {
        if i > 0 {
            let q = Float::with_val(p, a[i - 1].square_ref());
            d = Float::with_val(p, &b[i] - xf) - Float::with_val(p, &q / &d);
        }
        if d.is_zero() {
            d = tiny.clone();
        }
        if d.is_sign_negative() {
            cnt += 1;
        }
    }
    cnt
}

/// All eigenvalues of the section (a, b) in [lo, hi], bisected at `bits`
/// precision to relative width 2^{−(bits−16)}.
pub fn section_eigs_hp(a: &[Real], b: &[Real], lo: f64, hi: f64, bits: u32) -> Vec<Real> {
    let lo = Float::with_val(bits, lo);
    let hi = Float::with_val(bits, hi);
    let c_lo = sturm_count_hp(a, b, &lo);
    let c_hi = sturm_count_hp(a, b, &hi);
    let rel = Float::with_val(bits, Float::with_val(bits, 1) >> (bits - 16));
    (c_lo..c_hi)
        .into_par_iter()
        .map(|k| {
            let (mut x0, mut x1) = (lo.clone(), hi.clone());
            loop {
                let mid = Float::with_val(bits, &x0 + &x1) / 2u32;
                let mut w = Float::with_val(bits, mid.abs_ref());
                if w < 1 {
                    w = Float::with_val(bits, 1);
                }
                w *= &rel;
                if Float::with_val(bits, &x1 - &x0) <= w || mid <= x0 || mid >= x1 {
                    break mid;
                }
                if sturm_count_hp(a, b, &mid) > k {
                    x1 = mid;
                } else {
                    x0 = mid;
                }
            }
        })
        .collect()
}

/// Eigenvalues of the leading N×N section inside the interval, each to width
/// `rel_width`·max(1, |λ|), by Sturm bisection.
pub fn truncated_eigs(model: &CoefficientModel, n: usize, interval: (f64, f64)) -> Result<SpectralReport> {
    truncated_eigs_width(model, n, interval, 1e-10)
}

pub fn truncated_eigs_width(model: &CoefficientModel, n: usize, interval: (f64, f64), rel_width: f64) -> Result<SpectralReport> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::InvalidParameter("interval must satisfy lo < hi".into()));
    }
    let t = model.with_precision(STURM_PREC).coeff_table(n)?;
    let a: Vec<Real> = (0..n as i64 - 1).map(|k| t.a(k).clone()).collect();
    let b: Vec<Real> = (0..n as i64).map(|k| t.b(k).clone()).collect();
    let c_lo = sturm_count(&a, &b, lo);
    let c_hi = sturm_count(&a, &b, hi);
    let eig: Vec<Eigenvalue> = (c_lo..c_hi)
        .into_par_iter()
        .map(|k| {
            // the (k+1)-th eigenvalue: count(x) ≤ k below, > k above
            let (mut x0, mut x1) = (lo, hi);
            loop {
                let mid = 0.5 * (x0 + x1);
                let w = rel_width * mid.abs().max(1.0);
                if x1 - x0 <= w || mid <= x0 || mid >= x1 {
                    break;
                }
                if sturm_count(&a, &b, mid) > k {
                    x1 = mid;
                } else {
                    x0 = mid;
                }
            }
            Eigenvalue { lambda: 0.5 * (x0 + x1), width: x1 - x0, lambda_hp: None, w_jost: None, w_sum: None }
        })
        .collect();
    Ok(SpectralReport {
        method: SpectralMethod::Truncation,
        interval,
        eigenvalues: eig,
        convergence: vec![(n, f64::NAN)],
        horizon: None,
    })
}

/// Double N from `n0` until the eigenvalue list in the window is stable to
/// `shift_tol` (same count, max shift below the threshold).
pub fn truncated_eigs_converged(
    model: &CoefficientModel,
    interval: (f64, f64),
    n0: usize,
    shift_tol: f64,
    n_cap: usize,
) -> Result<SpectralReport> {
    let mut n = n0.max(2);
    let mut prev = truncated_eigs(model, n, interval)?;
    let mut conv = vec![(n, f64::INFINITY)];
    loop {
        if 2 * n > n_cap {
            return Err(Error::UnresolvedSpectrum {
                counts: vec![prev.eigenvalues.len()],
                partial: prev.lambdas(),
            });
        }
        n *= 2;
        let cur = truncated_eigs(model, n, interval)?;
        let shift = if cur.eigenvalues.len() == prev.eigenvalues.len() {
            cur.lambdas().iter().zip(prev.lambdas()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        conv.push((n, shift));
        prev = cur;
        if shift < shift_tol {
            prev.convergence = conv;
            return Ok(prev);
        }
    }
}

// ---------------------------------------------------------------------------
// deficiency indices and resolvent

#[derive(Clone, Debug, Serialize)]
pub struct NormSeries {
    /// (N, Σ_{n ≤ N} |x_n|²) at dyadic N
    pub partial: Vec<(usize, f64)>,
    /// ratios of consecutive dyadic block sums
    pub block_ratios: Vec<f64>,
    pub saturates: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeficiencyReport {
    pub z: (f64, f64),
    pub n: usize,
    pub jost: Option<NormSeries>,
    pub polynomial: NormSeries,
    pub verdict: String,
    pub note: &'static str,
}

pub(crate) fn norm_series(vals: &[ScaledComplex]) -> NormSeries {
    // block k covers [2^k − 1, 2^{k+1} − 1)
    let mut blocks: Vec<f64> = Vec::new();
    let mut ln_blocks: Vec<f64> = Vec::new();
    let mut partial = Vec::new();
    let mut total_ln = f64::NEG_INFINITY;
    let mut start = 0usize;
    let mut len = 1usize;
    while start < vals.len() {
        let end = (start + len).min(vals.len());
        let mut m = f64::NEG_INFINITY;
        let lns: Vec<f64> = vals[start..end].iter().map(|v| 2.0 * v.ln_abs()).collect();
        for &l in &lns {
            m = m.max(l);
        }
        let s: f64 = lns.iter().map(|l| (l - m).exp()).sum();
        let ln_b = m + s.ln();
        ln_blocks.push(ln_b);
        blocks.push(ln_b.exp());
        total_ln = log_add(total_ln, ln_b);
        partial.push((end - 1, total_ln.exp()));
        start = end;
        len *= 2;
    }
    let ratios: Vec<f64> = ln_blocks.windows(2).map(|w| (w[1] - w[0]).exp()).collect();
    // saturation: the last three block ratios are all below one and the
    // geometric tail they imply is small against the partial sum
    let k = ratios.len();
    let saturates = k >= 3 && {
        let last = &ratios[k - 3..];
        let r = last.iter().cloned().fold(0.0, f64::max);
        let tail_ln = ln_blocks[ln_blocks.len() - 1] + (r / (1.0 - r)).ln();
        r < 1.0 && tail_ln - total_ln < 0.0
    };
    NormSeries { partial, block_ratios: ratios, saturates }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Partial ℓ² norms of P(z) and the Jost solution at dyadic N.
pub fn deficiency_probe(model: &CoefficientModel, z: &Cplx, n: usize) -> Result<DeficiencyReport> {
    if z.im.is_zero() {
        return Err(Error::InvalidParameter("deficiency probe needs Im z ≠ 0".into()));
    }
    let engine = default_engine(model, 1e-20, n)?;
    let p = engine.precision();
    let z = z.with_prec(p);
    let t = engine.table(n + 1)?;
    let pp = forward_polynomials_with(&t, &z, n, p);
    let pol = norm_series(&pp.values[1..]);
    let jost = engine.solve(&z, 1e-20, n).ok().map(|s| norm_series(&s.f.values[1..=n + 1]));
    let verdict = match (&jost, pol.saturates) {
        (Some(j), true) if j.saturates => "both solutions appear square summable: deficiency indices (1,1)",
        (_, false) => "P(z) is not square summable: limit point case (essentially self-adjoint)",
        (None, true) => "P(z) appears square summable",
        (Some(_), true) => "P(z) appears square summable; Jost norm inconclusive",
    };
    Ok(DeficiencyReport {
        z: z.to_c64(),
        n,
        jost,
        polynomial: pol,
        verdict: verdict.to_string(),
        note: "numerical evidence only",
    })
}

/// Max residual of (J − z)G = I on the leading `size`×`size` block, with
/// G_{n,m} = P_{min} f_{max} / Ω, and the max asymmetry |G_{n,m} − G_{m,n}|
/// when each column is generated separately by the recurrence.
pub fn resolvent_check(engine: &JostEngine, z: &Cplx, size: usize) -> Result<(f64, f64)> {
    if z.im.is_zero() {
        return Err(Error::InvalidParameter("resolvent check needs Im z ≠ 0".into()));
    }
    let p = engine.precision();
    let z = z.with_prec(p);
    let sol = engine.solve(&z, 1e-30, size + 2)?;
    let t = engine.table(size + 2)?;
    let pp = forward_polynomials_with(&t, &z, size + 2, p);
    let f = &sol.f;
    let om = &sol.omega;
    let g = |n: i64, m: i64| -> ScaledComplex { &(pp.at(n.min(m)) * f.at(n.max(m))) / om };
    let mut resid: f64 = 0.0;
    for m in 0..size as i64 {
        // column m by the recurrence: x_n = P_n f_m/Ω up to m, then continued
        // forward from (x_{m−1}, x_m) using the jump condition at m
        for n in 0..size as i64 {
            let lhs = {
                let c = g(n, m).mul_cplx(&Cplx { re: Float::with_val(p, t.b(n) - &z.re), im: Float::with_val(p, -&z.im) });
                let l = if n > 0 { g(n - 1, m).mul_real(t.a(n - 1)) } else { ScaledComplex::zero(p) };
                let r = g(n + 1, m).mul_real(t.a(n));
                &(&l + &c) + &r
            };
            let want = if n == m { ScaledComplex::one(p) } else { ScaledComplex::zero(p) };
            let scale = g(n, m).abs().mul_real(t.b(n)).abs();
            let d = (&lhs - &want).abs();
            let rel = (&d / &(&scale + &ScaledComplex::one(p))).to_c64().0;
            resid = resid.max(rel);
        }
    }
    // columns generated independently: column m continued from its own
    // boundary values, then compared entrywise with the transposed entries
    let mut asym: f64 = 0.0;
    for m in 0..size as i64 {
        let mut col = vec![g(0, m), g(1, m)];
        for n in 1..size as i64 {
            let zb = Cplx { re: Float::with_val(p, &z.re - t.b(n)), im: z.im.clone() };
            let jump = if n == m { ScaledComplex::one(p) } else { ScaledComplex::zero(p) };
            let next = (&(&col[n as usize].mul_cplx(&zb) - &col[n as usize - 1].mul_real(t.a(n - 1))) + &jump)
                .div_real(t.a(n));
            col.push(next);
        }
        // the n = 0 row fixes x_1 when m = 0
        if m == 0 {
            continue;
        }
        for n in 0..size as i64 {
            let d = (&col[n as usize] - &g(m, n)).abs();
            let s = g(m, n).abs();
            asym = asym.max((&d / &s).to_c64().0);
        }
    }
    Ok((resid, asym))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{Table, Family};
    use std::sync::Arc;

    const P: u32 = 256;

    fn free(n: usize) -> CoefficientModel {
        let a = vec![Float::with_val(P, 1); n + 2];
        let b = vec![Float::new(P); n + 2];
        CoefficientModel::new(Family::Table(Arc::new(Table { a, b, meta: None, label: "free".into() })), P).unwrap()
    }

    #[test]
    fn free_section_closed_form() {
        let r = truncated_eigs(&free(8), 5, (-3.0, 3.0)).unwrap();
        let want: Vec<f64> = (1..=5).rev().map(|k| 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos()).collect();
        assert_eq!(r.eigenvalues.len(), 5);
        for (e, w) in r.eigenvalues.iter().zip(&want) {
            assert!((e.lambda - w).abs() < 1e-9, "{} {}", e.lambda, w);
        }
    }

    #[test]
    fn one_by_one_section() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let (_, b0) = m.eval_coeffs(0).unwrap();
        let r = truncated_eigs(&m, 1, (-100.0, 100.0)).unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert!((r.eigenvalues[0].lambda - b0.to_f64()).abs() < 1e-9);
    }

    #[test]
    fn sturm_count_matches_list() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let r = truncated_eigs(&m, 40, (-5.0, 40.0)).unwrap();
        let t = m.with_precision(STURM_PREC).coeff_table(40).unwrap();
        let a: Vec<Real> = (0..39).map(|k| t.a(k).clone()).collect();
        let b: Vec<Real> = (0..40).map(|k| t.b(k).clone()).collect();
        assert_eq!(sturm_count(&a, &b, 40.0) - sturm_count(&a, &b, -5.0), r.eigenvalues.len());
        let ls = r.lambdas();
        assert!(ls.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn omega_real_and_zeros_match_sections() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let rep = jost_zero_scan(&m, (-5.0, 20.0), 16, 1e-11).unwrap();
        let tr = truncated_eigs_converged(&m, (-5.0, 20.0), 32, 1e-10, 4096).unwrap();
        assert_eq!(rep.eigenvalues.len(), tr.eigenvalues.len());
        assert!(!rep.eigenvalues.is_empty());
        for (a, b) in rep.lambdas().iter().zip(tr.lambdas()) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn weights_agree() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let sc = JostScanner::new(&m, (-5.0, 10.0)).unwrap();
        let mut rep = scan_with(&sc, (-5.0, 10.0), 16, 1e-10).unwrap();
        attach_weights(&sc, &mut rep, 4000).unwrap();
        let e = &rep.eigenvalues[0];
        let (wj, ws) = (e.w_jost.unwrap(), e.w_sum.unwrap());
        assert!(wj > 0.0 && ws > 0.0);
        assert!((wj - ws).abs() / ws < 1e-6, "{wj} {ws}");
        // not a zero
        let l = Float::with_val(sc.precision(), e.lambda + 0.3);
        assert!(matches!(sc.weights(&l, 100), Err(Error::Domain(_))));
    }

    #[test]
    fn weight_sum_monotone_in_n() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let eng = default_engine(&m, 1e-20, 100).unwrap();
        let l = Float::with_val(eng.precision(), 1.234);
        let a = weight_sum(&eng, &l, 20).unwrap();
        let b = weight_sum(&eng, &l, 40).unwrap();
        assert!(b <= a);
    }

    #[test]
    fn deficiency_dichotomy() {
        let z = Cplx::from_f64(P, 0.0, 1.0);
        let sub = CoefficientModel::power_law(2.0, 0.0, -3.0, 1.0, P).unwrap();
        let r = deficiency_probe(&sub, &z, 4096).unwrap();
        assert!(r.polynomial.saturates, "{:?}", r.polynomial.block_ratios);
        assert!(r.jost.as_ref().unwrap().saturates);
        let sup = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let r = deficiency_probe(&sup, &z, 4096).unwrap();
        assert!(!r.polynomial.saturates);
        assert!(r.jost.as_ref().unwrap().saturates);
    }

    #[test]
    fn resolvent_symmetric() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let eng = default_engine(&m, 1e-30, 64).unwrap();
        let (res, asym) = resolvent_check(&eng, &Cplx::from_f64(P, 0.5, 1.0), 8).unwrap();
        assert!(res < 1e-20, "{res:e}");
        assert!(asym < 1e-20, "{asym:e}");
    }
}
