//! Three-term recurrence a_{n−1}f_{n−1} + (b_n − z)f_n + a_n f_{n+1} = 0.

use std::fmt::Write as _;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffTable, CoefficientModel};
use crate::error::{Error, Result};
use crate::mp::{Cplx, Real};
use crate::scaled::ScaledComplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqKind {
    Polynomial,
    Jost,
    Conjugate,
    Second,
    Custom,
}

/// Solution values `f_start, …, f_end` at a fixed spectral parameter.
#[derive(Clone, Debug)]
pub struct SolutionSeq {
    pub start: i64,
    pub values: Vec<ScaledComplex>,
    pub z: Cplx,
    pub kind: SeqKind,
}

impl SolutionSeq {
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.start && n <= self.end()
    }

    pub fn get(&self, n: i64) -> Option<&ScaledComplex> {
        if self.contains(n) {
            Some(&self.values[(n - self.start) as usize])
        } else {
            None
        }
    }

    /// Value at `n`; panics outside the stored range.
    pub fn at(&self, n: i64) -> &ScaledComplex {
        self.get(n).unwrap_or_else(|| panic!("index {n} outside {}..={}", self.start, self.end()))
    }

    /// Entrywise complex conjugate (the solution at conj(z)).
    pub fn conj(&self) -> SolutionSeq {
        SolutionSeq {
            start: self.start,
            values: self.values.iter().map(|v| v.conj()).collect(),
            z: self.z.conj(),
            kind: SeqKind::Conjugate,
        }
    }

    /// Multiply every entry by `c`.
    pub fn scale(&self, c: &ScaledComplex) -> SolutionSeq {
        SolutionSeq {
            start: self.start,
            values: self.values.iter().map(|v| v * c).collect(),
            z: self.z.clone(),
            kind: self.kind,
        }
    }

    /// CSV with columns n, Re(mantissa), Im(mantissa), exp2, log10|f_n|.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,re_mantissa,im_mantissa,exp2,log10_abs\n");
        for (i, v) in self.values.iter().enumerate() {
            let n = self.start + i as i64;
            let m = v.mantissa();
            let l = if v.is_zero() { "-inf".to_string() } else { format!("{:.12}", v.log10_abs()) };
            let _ = writeln!(
                s,
                "{n},{},{},{},{l}",
                m.re.to_string_radix(10, Some(20)),
                m.im.to_string_radix(10, Some(20)),
                v.exp2()
            );
        }
        s
    }
}

/// Relative tolerance for identities that should hold to the delivered
/// precision (working bits minus the fixed 64-bit guard).
pub fn delivered_tol(prec: u32) -> f64 {
    let bits = prec.saturating_sub(64).max(32) as i32;
    2f64.powi(-bits).max(f64::MIN_POSITIVE)
}

fn z_minus_b(z: &Cplx, b: &Real) -> Cplx {
    let p = z.prec().max(b.prec());
    Cplx { re: Float::with_val(p, &z.re - b), im: z.im.clone() }
}

/// P_{−1..=N}(z) by forward recurrence.
pub fn forward_polynomials(model: &CoefficientModel, z: &Cplx, n_max: usize) -> Result<SolutionSeq> {
    let t = model.coeff_table(n_max)?;
    Ok(forward_polynomials_with(&t, z, n_max, model.precision()))
}

pub fn forward_polynomials_with(t: &CoeffTable, z: &Cplx, n_max: usize, prec: u32) -> SolutionSeq {
    let z = z.with_prec(prec);
    let mut v = Vec::with_capacity(n_max + 2);
    v.push(ScaledComplex::zero(prec));
    v.push(ScaledComplex::one(prec));
    for n in 0..n_max as i64 {
        let pn = &v[(n + 1) as usize];
        let pm = &v[n as usize];
        let t1 = pn.mul_cplx(&z_minus_b(&z, t.b(n)));
        let t2 = pm.mul_real(t.a(n - 1));
        let next = (&t1 - &t2).div_real(t.a(n));
        v.push(next);
    }
    SolutionSeq { start: -1, values: v, z, kind: SeqKind::Polynomial }
}

/// Continue a solution forward from `(f_{k−1}, f_k)` up to index `n_max`.
pub fn forward_from(
    t: &CoeffTable,
    z: &Cplx,
    k: i64,
    pair: (ScaledComplex, ScaledComplex),
    n_max: i64,
    kind: SeqKind,
) -> SolutionSeq {
    let prec = pair.0.prec().max(pair.1.prec());
    let z = z.with_prec(prec);
    let mut v = vec![pair.0, pair.1];
    for n in k..n_max {
        let i = (n - k + 1) as usize;
        let t1 = v[i].mul_cplx(&z_minus_b(&z, t.b(n)));
        let t2 = v[i - 1].mul_real(t.a(n - 1));
        v.push((&t1 - &t2).div_real(t.a(n)));
    }
    SolutionSeq { start: k - 1, values: v, z, kind }
}

/// f_{−1..=M+1} from tail data `(f_M, f_{M+1})` by backward recurrence.
pub fn backward_solution(
    model: &CoefficientModel,
    z: &Cplx,
    tail: (ScaledComplex, ScaledComplex),
    m: usize,
) -> Result<SolutionSeq> {
    let t = model.coeff_table(m)?;
    Ok(backward_solution_with(&t, z, tail, m, SeqKind::Custom))
}

pub fn backward_solution_with(
    t: &CoeffTable,
    z: &Cplx,
    tail: (ScaledComplex, ScaledComplex),
    m: usize,
    kind: SeqKind,
) -> SolutionSeq {
    let prec = tail.0.prec().max(tail.1.prec());
    let z = z.with_prec(prec);
    let len = m + 3;
    let mut v: Vec<ScaledComplex> = vec![ScaledComplex::zero(prec); len];
    // slot i holds f_{i−1}
    v[len - 2] = tail.0;
    v[len - 1] = tail.1;
    for n in (0..=m as i64).rev() {
        let i = (n + 1) as usize;
        let t1 = v[i].mul_cplx(&z_minus_b(&z, t.b(n)));
        let t2 = v[i + 1].mul_real(t.a(n));
        v[i - 1] = (&t1 - &t2).div_real(t.a(n - 1));
    }
    SolutionSeq { start: -1, values: v, z, kind }
}

/// W[F, G](n) = a_n(F_n G_{n+1} − F_{n+1} G_n), a_{−1} = 1/2.
pub fn wronskian(model: &CoefficientModel, f: &SolutionSeq, g: &SolutionSeq, n: i64) -> Result<ScaledComplex> {
    let a = if n == -1 {
        Float::with_val(model.precision(), 0.5)
    } else {
        model.eval_coeffs(n)?.0
    };
    wronskian_with_a(&a, f, g, n)
}

pub fn wronskian_with(t: &CoeffTable, f: &SolutionSeq, g: &SolutionSeq, n: i64) -> Result<ScaledComplex> {
    if n > t.n_max() {
        return Err(Error::OutOfRange { index: n, max: t.n_max() });
    }
    wronskian_with_a(t.a(n), f, g, n)
}

fn wronskian_with_a(a: &Real, f: &SolutionSeq, g: &SolutionSeq, n: i64) -> Result<ScaledComplex> {
    if f.z != g.z {
        return Err(Error::Domain("Wronskian of solutions at different z".into()));
    }
    let fetch = |s: &SolutionSeq, k: i64| -> Result<ScaledComplex> {
        s.get(k).cloned().ok_or(Error::OutOfRange { index: k, max: s.end() })
    };
    let (f0, f1, g0, g1) = (fetch(f, n)?, fetch(f, n + 1)?, fetch(g, n)?, fetch(g, n + 1)?);
    let d = f0.scaled_mul(&g1)?.scaled_sub(&f1.scaled_mul(&g0)?)?;
    Ok(d.mul_real(a))
}

/// Default lower summation index for the second solution: the first n ≥ 1
/// after which no |f_m| is tiny relative to its neighbours.
pub fn default_n0(f: &SolutionSeq) -> i64 {
    let prec = f.values.first().map(|v| v.prec()).unwrap_or(64);
    let guard = -(prec as f64) / 2.0 * std::f64::consts::LN_2;
    let mut n0 = 1;
    let lo = f.start.max(0);
    for m in lo..f.end() {
        let here = f.at(m).ln_abs();
        let nb = f.get(m - 1).map(|v| v.ln_abs()).unwrap_or(f64::NEG_INFINITY).max(f.at(m + 1).ln_abs());
        if here - nb < guard {
            n0 = m + 2;
        }
    }
    n0.max(1)
}

/// g_n = f_n Σ_{m=n0}^{n} (a_{m−1} f_{m−1} f_m)^{−1}; stored from n0 − 1
/// (where the empty sum gives g = 0) to the end of `f`.
pub fn second_solution(model: &CoefficientModel, f: &SolutionSeq, n0: Option<i64>) -> Result<SolutionSeq> {
    let end = f.end();
    let t = model.coeff_table(end.max(0) as usize)?;
    second_solution_with(&t, f, n0)
}

pub fn second_solution_with(t: &CoeffTable, f: &SolutionSeq, n0: Option<i64>) -> Result<SolutionSeq> {
    let n0 = n0.unwrap_or_else(|| default_n0(f));
    let end = f.end();
    if n0 < 0 || n0 - 1 < f.start || n0 >= end {
        return Err(Error::Domain(format!("n0 = {n0} outside the solution range")));
    }
    let prec = f.at(n0).prec();
    for m in (n0 - 1)..=end {
        if f.at(m).is_zero() {
            return Err(Error::Degenerate { index: m, reason: "f_m vanishes".into() });
        }
    }
    let mut vals = Vec::with_capacity((end - n0 + 2) as usize);
    vals.push(ScaledComplex::zero(prec));
    let mut sum = ScaledComplex::zero(prec);
    for n in n0..=end {
        let d = f.at(n - 1).scaled_mul(f.at(n))?.mul_real(t.a(n - 1));
        sum = sum.scaled_add(&d.recip()?)?;
        vals.push(f.at(n).scaled_mul(&sum)?);
    }
    let g = SolutionSeq { start: n0 - 1, values: vals, z: f.z.clone(), kind: SeqKind::Second };
    let tol = delivered_tol(prec);
    let one = ScaledComplex::one(prec);
    let probes = [n0 - 1, (n0 + end) / 2, end - 1];
    for &k in &probes {
        let w = wronskian_with(t, f, &g, k)?;
        let dev = (&w - &one).abs().to_c64().0;
        if !(dev <= tol.max(1e-300)) {
            return Err(Error::Verification(format!("W[f,g] at n={k} deviates from 1 by {dev:e}")));
        }
    }
    Ok(g)
}

/// max_n |a_{n−1}f_{n−1} + (b_n − z)f_n + a_n f_{n+1}| / max(|a_{n−1}f_{n−1}|, |a_n f_{n+1}|)
/// over interior indices n ≥ max(start+1, 0).
pub fn recurrence_residual(t: &CoeffTable, f: &SolutionSeq) -> f64 {
    let mut worst: f64 = 0.0;
    let lo = (f.start + 1).max(0);
    let hi = (f.end() - 1).min(t.n_max());
    for n in lo..=hi {
        let l = f.at(n - 1).mul_real(t.a(n - 1));
        let c = f.at(n).mul_cplx(&z_minus_b(&f.z, t.b(n)));
        let r = f.at(n + 1).mul_real(t.a(n));
        let s = &(&l - &c) + &r;
        let scale = if l.cmp_abs(&r).is_ge() { l.abs() } else { r.abs() };
        let scale = if scale.cmp_abs(&c).is_ge() { scale } else { c.abs() };
        if scale.is_zero() {
            continue;
        }
        let rel = (&s.abs() / &scale).to_c64().0;
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{parse_table_csv, CoefficientModel};
    use proptest::prelude::*;
    use rug::ops::Pow;

    const P: u32 = 256;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::from_f64(P, re, im)
    }

    fn val(s: &ScaledComplex) -> (f64, f64) {
        s.to_c64()
    }

    fn free_model(n: usize) -> CoefficientModel {
        let mut txt = String::new();
        for k in 0..n {
            txt.push_str(&format!("{k},1,0\n"));
        }
        CoefficientModel::table(parse_table_csv(&txt, P).unwrap(), P).unwrap()
    }

    #[test]
    fn first_polynomial() {
        let m = CoefficientModel::power_law(2.0, 0.3, 1.0, 1.0, P).unwrap();
        let z = c(0.7, -0.2);
        let p = forward_polynomials(&m, &z, 3).unwrap();
        let (a0, b0) = m.eval_coeffs(0).unwrap();
        let want = &(&z - &Cplx::from_real(b0)) / &Cplx::from_real(a0);
        assert!(p.at(-1).is_zero());
        assert_eq!(val(p.at(0)), (1.0, 0.0));
        let d = (&p.at(1).to_cplx().unwrap() - &want).abs();
        assert!(d.to_f64() < 1e-70);
    }

    #[test]
    fn hermite_second_polynomial() {
        let m = CoefficientModel::hermite(P).unwrap();
        let p = forward_polynomials(&m, &c(1.0, 0.0), 2).unwrap();
        let (re, im) = val(p.at(2));
        assert!((re - 0.5f64.sqrt()).abs() < 1e-15 && im == 0.0);
    }

    #[test]
    fn laguerre_at_zero_is_unimodular() {
        let m = CoefficientModel::laguerre(0.0, P).unwrap();
        let p = forward_polynomials(&m, &c(0.0, 0.0), 20).unwrap();
        for n in 0..=20i64 {
            let (re, _) = val(p.at(n));
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((re - want).abs() < 1e-60, "n={n} {re}");
        }
    }

    #[test]
    fn leading_coefficient_is_inverse_product() {
        // leading coefficient of P_n equals lim_{z→∞} P_n(z)/z^n
        let m = CoefficientModel::dual_hahn(0.5, 2.0, P).unwrap();
        let big = Float::with_val(P, 10).pow(60u32);
        let z = Cplx::from_real(big.clone());
        let n = 12usize;
        let p = forward_polynomials(&m, &z, n).unwrap();
        let mut prod = Float::with_val(P, 1);
        for k in 0..n as i64 {
            prod *= m.eval_coeffs(k).unwrap().0;
        }
        let zn = ScaledComplex::from_real(&Float::with_val(P, big.pow(n as u32)));
        let lead = (p.at(n as i64) / &zn).mul_real(&prod);
        let (re, _) = lead.to_c64();
        assert!((re - 1.0).abs() < 1e-40);
    }

    #[test]
    fn backward_roundtrip_recovers_boundary() {
        // polynomial growth only, so the backward pass is well conditioned
        let m = CoefficientModel::laguerre(0.5, P).unwrap();
        let z = c(0.3, 0.1);
        let p = forward_polynomials(&m, &z, 51).unwrap();
        let f = backward_solution(&m, &z, (p.at(50).clone(), p.at(51).clone()), 50).unwrap();
        let rel = (f.at(-1) / p.at(50)).abs().to_c64().0;
        assert!(rel < 2f64.powi(-(P as i32) + 40), "{rel:e}");
        let d = (&(f.at(0) - p.at(0))).abs().to_c64().0;
        assert!(d < 1e-60);
    }

    #[test]
    fn backward_free_example() {
        let m = free_model(8);
        let z = c(0.0, 0.0);
        let f = backward_solution(&m, &z, (ScaledComplex::one(P), ScaledComplex::zero(P)), 3).unwrap();
        let got: Vec<f64> = (-1..=4).map(|n| val(f.at(n)).0).collect();
        // f_{n−1} = −f_{n+1}, with a_{−1} = 1/2 doubling the last step
        assert_eq!(got, vec![2.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let fw = forward_from(&m.coeff_table(6).unwrap(), &z, 0, (f.at(-1).clone(), f.at(0).clone()), 4, SeqKind::Custom);
        for n in -1..=4 {
            assert_eq!(val(fw.at(n)), val(f.at(n)));
        }
    }

    #[test]
    fn vanishing_tail_gives_vanishing_solution() {
        let m = CoefficientModel::laguerre(0.5, P).unwrap();
        let z = c(1.5, 0.0);
        let f = backward_solution(&m, &z, (ScaledComplex::zero(P), ScaledComplex::one(P)), 10).unwrap();
        assert!(f.at(10).is_zero());
        let t = m.coeff_table(11).unwrap();
        assert!(recurrence_residual(&t, &f) < 2f64.powi(-(P as i32) + 10));
    }

    #[test]
    fn wronskian_constancy() {
        let m = CoefficientModel::power_law(2.0, 0.0, -3.0, 1.0, P).unwrap();
        let z = c(1.0, 0.5);
        let f = backward_solution(&m, &z, (ScaledComplex::one(P), ScaledComplex::from_f64(P, 0.3, 0.2)), 40).unwrap();
        let g = backward_solution(&m, &z, (ScaledComplex::from_f64(P, -0.1, 1.0), ScaledComplex::one(P)), 40).unwrap();
        let w0 = wronskian(&m, &f, &g, -1).unwrap();
        for n in [0, 17, 39] {
            let w = wronskian(&m, &f, &g, n).unwrap();
            let rel = (&(&w - &w0).abs() / &w0.abs()).to_c64().0;
            assert!(rel < 10f64.powf(-0.3 * (P - 64) as f64), "{rel:e}");
        }
        assert!(wronskian(&m, &f, &f, 5).unwrap().is_zero());
        let cf = f.scale(&ScaledComplex::from_f64(P, 2.5, -1.0));
        let w = wronskian(&m, &f, &cf, 7).unwrap();
        assert!(w.is_zero() || w.ln_abs() < -150.0);
        let other = backward_solution(&m, &c(2.0, 0.0), (ScaledComplex::one(P), ScaledComplex::one(P)), 40).unwrap();
        assert!(matches!(wronskian(&m, &f, &other, 0), Err(Error::Domain(_))));
        assert!(wronskian(&m, &f, &g, 41).is_err());
    }

    #[test]
    fn conjugation_symmetry() {
        let m = CoefficientModel::power_law(1.75, 0.2, -0.3, 1.0, P).unwrap();
        let z = c(0.4, 1.3);
        let p = forward_polynomials(&m, &z, 200).unwrap();
        let q = forward_polynomials(&m, &z.conj(), 200).unwrap();
        for n in 0..=200 {
            assert_eq!(p.at(n).conj(), *q.at(n));
        }
    }

    #[test]
    fn second_solution_wronskian_and_first_value() {
        let m = CoefficientModel::power_law(2.0, 0.0, 1.0, 1.0, P).unwrap();
        let z = c(0.0, 0.0);
        // a backward solution is dominated by the decaying one
        let p = backward_solution(&m, &z, (ScaledComplex::one(P), ScaledComplex::from_f64(P, -0.01, 0.0)), 59).unwrap();
        let g = second_solution(&m, &p, Some(3)).unwrap();
        let t = m.coeff_table(60).unwrap();
        let want = (p.at(2).mul_real(t.a(2))).recip().unwrap();
        let d = (&(g.at(3) - &want).abs() / &want.abs()).to_c64().0;
        assert!(d < 1e-60);
        for n in [2, 10, 40, 59] {
            let w = wronskian(&m, &p, &g, n).unwrap();
            assert!(((&w - &ScaledComplex::one(P)).abs().to_c64().0) < 10f64.powf(-0.3 * (P - 64) as f64));
        }
        assert!(recurrence_residual(&t, &g) < 2f64.powi(-(P as i32) + 20));
    }

    #[test]
    fn second_solution_rejects_zero() {
        let m = free_model(12);
        let z = c(0.0, 0.0);
        let p = forward_polynomials(&m, &z, 10).unwrap();
        // P_1(0) = 0 for the free matrix
        assert!(matches!(second_solution(&m, &p, Some(1)), Err(Error::Degenerate { index: 1, .. })));
    }

    #[test]
    fn csv_export_columns() {
        let m = CoefficientModel::laguerre(0.0, P).unwrap();
        let p = forward_polynomials(&m, &c(0.0, 0.0), 3).unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,re_mantissa,im_mantissa,exp2,log10_abs");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].starts_with("0,1.0"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn polynomial_residual_small(re in -20.0f64..20.0, im in -5.0f64..5.0, s in 1.6f64..3.0, b in -3.0f64..3.0) {
            let m = CoefficientModel::power_law(s, 0.0, b, 1.0, P).unwrap();
            let z = c(re, im);
            let p = forward_polynomials(&m, &z, 300).unwrap();
            let t = m.coeff_table(300).unwrap();
            prop_assert!(recurrence_residual(&t, &p) <= 2f64.powi(-(P as i32) + 10));
            let q = forward_polynomials(&m, &z.conj(), 300).unwrap();
            prop_assert_eq!(p.at(300).conj(), q.at(300).clone());
        }

        #[test]
        fn wronskian_independent_of_index(re in -5.0f64..5.0, im in -2.0f64..2.0, n in 0i64..90) {
            let m = CoefficientModel::laguerre(0.25, P).unwrap();
            let z = c(re, im);
            let f = forward_polynomials(&m, &z, 100).unwrap();
            let g = backward_solution(&m, &z, (ScaledComplex::one(P), ScaledComplex::from_f64(P, 0.5, -0.5)), 99).unwrap();
            let w0 = wronskian(&m, &f, &g, -1).unwrap();
            let w = wronskian(&m, &f, &g, n).unwrap();
            let rel = (&(&w - &w0).abs() / &w0.abs()).to_c64().0;
            prop_assert!(rel < 2f64.powi(-(P as i32) + 40));
        }
    }
}
