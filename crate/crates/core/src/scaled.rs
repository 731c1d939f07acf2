//! Complex values with a separate 64-bit binary exponent.
//!
//! A `ScaledComplex` stores `mant · 2^exp2` with `1 ≤ |mant| < 2` (or an
//! exact zero with `exp2 = 0`), so products of many exponentially large or
//! small factors never leave the MPFR exponent range.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::AddAssignRound;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp::{ln2, Cplx, Real};

#[derive(Clone, PartialEq)]
pub struct ScaledComplex {
    mant: Cplx,
    exp2: i64,
}

impl fmt::Debug for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}·2^{}", self.mant, self.exp2)
    }
}

impl fmt::Display for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.report_string())
    }
}

/// floor(log2 |m|) for nonzero `m`, computed exactly.
fn floor_log2_abs(m: &Cplx) -> i64 {
    let p = m.prec();
    // rounding down keeps the exponent of |m|^2 exact at powers of two
    let (mut n2, _) = Float::with_val_round(p, m.re.square_ref(), Round::Down);
    let (im2, _) = Float::with_val_round(p, m.im.square_ref(), Round::Down);
    n2.add_assign_round(&im2, Round::Down);
    let e2 = n2.get_exp().expect("nonzero norm") as i64;
    (e2 - 1).div_euclid(2)
}

fn shift(x: &mut Cplx, k: i64) {
    let k = k as i32;
    x.re <<= k;
    x.im <<= k;
}

impl ScaledComplex {
    fn normalize(mut mant: Cplx, exp2: i64) -> Result<Self> {
        if !mant.is_finite() {
            return Err(Error::Domain("non-finite mantissa".into()));
        }
        if mant.is_zero() {
            let p = mant.prec();
            return Ok(ScaledComplex { mant: Cplx::zero(p), exp2: 0 });
        }
        let k = floor_log2_abs(&mant);
        if k != 0 {
            shift(&mut mant, -k);
        }
        let exp2 = exp2
            .checked_add(k)
            .ok_or_else(|| Error::Range("binary exponent overflow".into()))?;
        Ok(ScaledComplex { mant, exp2 })
    }

    pub fn zero(prec: u32) -> Self {
        ScaledComplex { mant: Cplx::zero(prec), exp2: 0 }
    }

    pub fn one(prec: u32) -> Self {
        ScaledComplex { mant: Cplx::one(prec), exp2: 0 }
    }

    /// Exact normalized representation of a finite complex value.
    pub fn make_scaled(x: &Cplx) -> Result<Self> {
        Self::normalize(x.clone(), 0)
    }

    pub fn from_cplx(x: &Cplx) -> Self {
        Self::make_scaled(x).expect("finite value")
    }

    pub fn from_real(x: &Real) -> Self {
        Self::from_cplx(&Cplx::from_real(x.clone()))
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Self::from_cplx(&Cplx::from_f64(prec, re, im))
    }

    /// Build from raw parts; the mantissa is renormalized.
    pub fn from_parts(mant: Cplx, exp2: i64) -> Result<Self> {
        Self::normalize(mant, exp2)
    }

    /// `e^l` without forming the possibly out-of-range real exponential.
    pub fn from_exp(l: &Cplx) -> Result<Self> {
        let p = l.prec();
        let approx = l.re.to_f64() / std::f64::consts::LN_2;
        if !approx.is_finite() || approx.abs() > 9.0e15 {
            return Err(Error::Range("exponent of exponential out of range".into()));
        }
        let k = approx.floor() as i64;
        let wide = p + 64;
        let r = Float::with_val(wide, &l.re - Float::with_val(wide, ln2(wide) * k));
        let m = Float::with_val(p, r.exp_ref());
        let s = Float::with_val(p, l.im.sin_ref());
        let c = Float::with_val(p, l.im.cos_ref());
        let mant = Cplx { re: Float::with_val(p, &m * &c), im: Float::with_val(p, &m * &s) };
        Self::normalize(mant, k)
    }

    pub fn mantissa(&self) -> &Cplx {
        &self.mant
    }

    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    pub fn prec(&self) -> u32 {
        self.mant.prec()
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.mant.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ScaledComplex { mant: self.mant.conj(), exp2: self.exp2 }
    }

    pub fn re(&self) -> Self {
        Self::normalize(Cplx::from_real(self.mant.re.clone()), self.exp2).expect("finite")
    }

    pub fn im(&self) -> Self {
        Self::normalize(Cplx::from_real(self.mant.im.clone()), self.exp2).expect("finite")
    }

    pub fn abs(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Self::normalize(Cplx::from_real(self.mant.abs()), self.exp2).expect("finite")
    }

    /// Multiply by `2^k`.
    pub fn mul_pow2(&self, k: i64) -> Result<Self> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let exp2 = self
            .exp2
            .checked_add(k)
            .ok_or_else(|| Error::Range("binary exponent overflow".into()))?;
        Ok(ScaledComplex { mant: self.mant.clone(), exp2 })
    }

    pub fn scaled_mul(&self, o: &Self) -> Result<Self> {
        if self.is_zero() || o.is_zero() {
            return Ok(Self::zero(self.prec().max(o.prec())));
        }
        let exp2 = self
            .exp2
            .checked_add(o.exp2)
            .ok_or_else(|| Error::Range("binary exponent overflow".into()))?;
        Self::normalize(&self.mant * &o.mant, exp2)
    }

    pub fn scaled_div(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::Domain("division by exact zero".into()));
        }
        if self.is_zero() {
            return Ok(Self::zero(self.prec().max(o.prec())));
        }
        let exp2 = self
            .exp2
            .checked_sub(o.exp2)
            .ok_or_else(|| Error::Range("binary exponent overflow".into()))?;
        Self::normalize(&self.mant / &o.mant, exp2)
    }

    pub fn scaled_add(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(o.clone());
        }
        let (big, small) = if self.exp2 >= o.exp2 { (self, o) } else { (o, self) };
        let gap = big.exp2 as i128 - small.exp2 as i128;
        let p = big.prec().max(small.prec());
        if gap > p as i128 + 2 {
            return Ok(big.clone());
        }
        let mut m = small.mant.clone();
        shift(&mut m, -(gap as i64));
        Self::normalize(&big.mant + &m, big.exp2)
    }

    pub fn scaled_sub(&self, o: &Self) -> Result<Self> {
        self.scaled_add(&-o)
    }

    pub fn mul_cplx(&self, c: &Cplx) -> Self {
        Self::normalize(&self.mant * c, self.exp2).expect("finite product")
    }

    pub fn mul_real(&self, r: &Real) -> Self {
        Self::normalize(self.mant.scale(r), self.exp2).expect("finite product")
    }

    pub fn div_real(&self, r: &Real) -> Self {
        let p = self.prec();
        let m = Cplx { re: Float::with_val(p, &self.mant.re / r), im: Float::with_val(p, &self.mant.im / r) };
        Self::normalize(m, self.exp2).expect("finite quotient")
    }

    pub fn recip(&self) -> Result<Self> {
        Self::one(self.prec()).scaled_div(self)
    }

    /// ln|x| at working precision.
    pub fn to_log_magnitude(&self) -> Result<Real> {
        if self.is_zero() {
            return Err(Error::Domain("logarithm of zero".into()));
        }
        let p = self.prec();
        let wide = p + 64;
        let l = Float::with_val(wide, self.mant.with_prec(wide).abs().ln_ref());
        let e = Float::with_val(wide, ln2(wide) * self.exp2);
        Ok(Float::with_val(p, l + e))
    }

    /// ln|x| as f64 (−∞ for zero).
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().to_f64().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    /// log10|x| as f64 (−∞ for zero).
    pub fn log10_abs(&self) -> f64 {
        self.ln_abs() / std::f64::consts::LN_10
    }

    /// The value as a plain complex number, if it fits the MPFR exponent range.
    pub fn to_cplx(&self) -> Option<Cplx> {
        if self.is_zero() {
            return Some(self.mant.clone());
        }
        if self.exp2.abs() > (1 << 29) {
            return None;
        }
        let mut m = self.mant.clone();
        shift(&mut m, self.exp2);
        Some(m)
    }

    /// Value rounded to double precision (saturating to 0 or ∞).
    pub fn to_c64(&self) -> (f64, f64) {
        let e = self.exp2.clamp(-4000, 4000) as i32;
        let (re, im) = self.mant.to_c64();
        let s = 2f64.powi(e / 2);
        let t = 2f64.powi(e - e / 2);
        (re * s * t, im * s * t)
    }

    /// Compare magnitudes |self| vs |o|.
    pub fn cmp_abs(&self, o: &Self) -> Ordering {
        match (self.is_zero(), o.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.exp2.cmp(&o.exp2) {
            Ordering::Equal => self
                .mant
                .norm_sqr()
                .partial_cmp(&o.mant.norm_sqr())
                .unwrap_or(Ordering::Equal),
            c => c,
        }
    }

    /// Sign of the real part (−1, 0, +1).
    pub fn re_sign(&self) -> i32 {
        match self.mant.re.cmp0() {
            Some(Ordering::Less) => -1,
            Some(Ordering::Greater) => 1,
            _ => 0,
        }
    }

    /// Decimal report form, e.g. "(0.923000−0.385000i)·10^−4312.770000".
    pub fn report_string(&self) -> String {
        if self.is_zero() {
            return "(0+0i)·10^0".to_string();
        }
        let r = self.mant.abs();
        let u = Cplx { re: Float::with_val(53, &self.mant.re / &r), im: Float::with_val(53, &self.mant.im / &r) };
        let (ur, ui) = u.to_c64();
        let l = self.log10_abs();
        let minus = |x: f64, d: usize| {
            let s = format!("{:.*}", d, x.abs());
            if x < 0.0 && s.chars().any(|c| c.is_ascii_digit() && c != '0') {
                format!("−{s}")
            } else {
                s
            }
        };
        let sign = if ui < 0.0 { "−" } else { "+" };
        format!("({}{}{:.6}i)·10^{}", minus(ur, 6), sign, ui.abs(), minus(l, 6))
    }

    /// Lossless JSON-friendly form.
    pub fn to_repr(&self) -> ScaledRepr {
        let p = self.prec();
        let digits = (p as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
        ScaledRepr {
            re: self.mant.re.to_string_radix(10, Some(digits)),
            im: self.mant.im.to_string_radix(10, Some(digits)),
            exp2: self.exp2,
            log10_abs: if self.is_zero() { None } else { Some(round_sig(self.log10_abs(), 12)) },
            text: self.report_string(),
        }
    }
}

/// Round to `sig` significant digits so reports do not depend on the last
/// bits of an f64 conversion.
pub fn round_sig(x: f64, sig: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let f = 10f64.powi(sig - 1 - e);
    (x * f).round() / f
}

/// Serialized scaled value: decimal mantissa parts and binary exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledRepr {
    pub re: String,
    pub im: String,
    pub exp2: i64,
    pub log10_abs: Option<f64>,
    pub text: String,
}

impl Add for &ScaledComplex {
    type Output = ScaledComplex;
    fn add(self, o: &ScaledComplex) -> ScaledComplex {
        self.scaled_add(o).expect("scaled addition")
    }
}

impl Sub for &ScaledComplex {
    type Output = ScaledComplex;
    fn sub(self, o: &ScaledComplex) -> ScaledComplex {
        self.scaled_sub(o).expect("scaled subtraction")
    }
}

impl Mul for &ScaledComplex {
    type Output = ScaledComplex;
    fn mul(self, o: &ScaledComplex) -> ScaledComplex {
        self.scaled_mul(o).expect("scaled multiplication")
    }
}

impl Div for &ScaledComplex {
    type Output = ScaledComplex;
    fn div(self, o: &ScaledComplex) -> ScaledComplex {
        self.scaled_div(o).expect("scaled division")
    }
}

impl Neg for &ScaledComplex {
    type Output = ScaledComplex;
    fn neg(self) -> ScaledComplex {
        ScaledComplex { mant: -&self.mant, exp2: self.exp2 }
    }
}

/// Working precision derived from the base precision and the largest index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub base_bits: u32,
    pub cancellation_guard: u32,
    pub effective_bits: u32,
}

impl PrecisionPolicy {
    pub fn new(base_bits: u32, delta: f64, n_max: u64) -> Self {
        let lg = (n_max.max(2) as f64).log2();
        let guard = (delta.max(0.0) * lg).ceil() as u32 + 64;
        PrecisionPolicy {
            base_bits,
            cancellation_guard: guard,
            effective_bits: (base_bits + guard).max(128),
        }
    }
}
