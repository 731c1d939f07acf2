//! Complex numbers over MPFR floats.
//!
//! Only the operations the recurrence machinery needs are provided. Every
//! result is produced at the larger of the operand precisions with
//! round-to-nearest.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

/// Real scalar type used throughout the crate.
pub type Real = Float;

/// `x` as a real at `prec` bits.
pub fn real(prec: u32, x: f64) -> Real {
    Float::with_val(prec, x)
}

/// `n` as a real at `prec` bits (exact for |n| < 2^prec).
pub fn real_int(prec: u32, n: i64) -> Real {
    Float::with_val(prec, n)
}

/// ln 2 at `prec` bits.
pub fn ln2(prec: u32) -> Real {
    Float::with_val(prec, Constant::Log2)
}

/// π at `prec` bits.
pub fn pi(prec: u32) -> Real {
    Float::with_val(prec, Constant::Pi)
}

/// `x^e` for real `x > 0`.
pub fn powr(x: &Real, e: &Real) -> Real {
    let p = x.prec().max(e.prec());
    Float::with_val(p, x.pow(e))
}

/// Complex number with MPFR real and imaginary parts.
#[derive(Clone, PartialEq)]
pub struct Cplx {
    pub re: Real,
    pub im: Real,
}

impl fmt::Debug for Cplx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:e}, {:e})", self.re.to_f64(), self.im.to_f64())
    }
}

impl Cplx {
    pub fn new(re: Real, im: Real) -> Self {
        let p = re.prec().max(im.prec());
        let mut re = re;
        let mut im = im;
        if re.prec() != p {
            re.set_prec(p);
        }
        if im.prec() != p {
            im.set_prec(p);
        }
        Cplx { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Cplx { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn one(prec: u32) -> Self {
        Cplx::from_f64(prec, 1.0, 0.0)
    }

    pub fn i(prec: u32) -> Self {
        Cplx::from_f64(prec, 0.0, 1.0)
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Cplx { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_real(x: Real) -> Self {
        let p = x.prec();
        Cplx { re: x, im: Float::new(p) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    /// Copy at a different precision (rounded to nearest).
    pub fn with_prec(&self, prec: u32) -> Self {
        Cplx { re: Float::with_val(prec, &self.re), im: Float::with_val(prec, &self.im) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Cplx { re: self.re.clone(), im: Float::with_val(self.im.prec(), -&self.im) }
    }

    pub fn norm_sqr(&self) -> Real {
        let p = self.prec();
        let mut n = Float::with_val(p, self.re.square_ref());
        n += Float::with_val(p, self.im.square_ref());
        n
    }

    pub fn abs(&self) -> Real {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn arg(&self) -> Real {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, s: &Real) -> Self {
        let p = self.prec().max(s.prec());
        Cplx { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn mul_i(&self) -> Self {
        Cplx { re: Float::with_val(self.im.prec(), -&self.im), im: self.re.clone() }
    }

    pub fn recip(&self) -> Self {
        let p = self.prec();
        let d = self.norm_sqr();
        Cplx {
            re: Float::with_val(p, &self.re / &d),
            im: Float::with_val(p, -Float::with_val(p, &self.im / &d)),
        }
    }

    /// `e^self`; the caller is responsible for the MPFR exponent range.
    pub fn exp(&self) -> Self {
        let p = self.prec();
        let m = Float::with_val(p, self.re.exp_ref());
        let s = Float::with_val(p, self.im.sin_ref());
        let c = Float::with_val(p, self.im.cos_ref());
        Cplx { re: Float::with_val(p, &m * &c), im: Float::with_val(p, &m * &s) }
    }

    /// Principal square root, branch cut on the negative real axis.
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        if self.is_zero() {
            return Cplx::zero(p);
        }
        let r = self.abs();
        // t = sqrt((|x| + |re|) / 2) is computed without cancellation
        let t = Float::with_val(p, Float::with_val(p, &r + Float::with_val(p, self.re.abs_ref())) / 2u32).sqrt();
        let half = Float::with_val(p, Float::with_val(p, &self.im / &t) / 2u32);
        if !self.re.is_sign_negative() {
            Cplx { re: t, im: half }
        } else {
            let re = half.abs();
            let im = if self.im.is_sign_negative() { -t } else { t };
            Cplx { re, im }
        }
    }

    /// Natural logarithm, principal branch.
    pub fn ln(&self) -> Self {
        let p = self.prec();
        Cplx { re: Float::with_val(p, self.abs().ln_ref()), im: self.arg() }
    }

    pub fn to_c64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add for &Cplx {
    type Output = Cplx;
    fn add(self, o: &Cplx) -> Cplx {
        let p = self.prec().max(o.prec());
        Cplx { re: Float::with_val(p, &self.re + &o.re), im: Float::with_val(p, &self.im + &o.im) }
    }
}

impl Sub for &Cplx {
    type Output = Cplx;
    fn sub(self, o: &Cplx) -> Cplx {
        let p = self.prec().max(o.prec());
        Cplx { re: Float::with_val(p, &self.re - &o.re), im: Float::with_val(p, &self.im - &o.im) }
    }
}

impl Mul for &Cplx {
    type Output = Cplx;
    fn mul(self, o: &Cplx) -> Cplx {
        let p = self.prec().max(o.prec());
        if self.im.is_zero() && o.im.is_zero() {
            return Cplx { re: Float::with_val(p, &self.re * &o.re), im: Float::new(p) };
        }
        let rr = Float::with_val(p, &self.re * &o.re);
        let ii = Float::with_val(p, &self.im * &o.im);
        let ri = Float::with_val(p, &self.re * &o.im);
        let ir = Float::with_val(p, &self.im * &o.re);
        Cplx { re: Float::with_val(p, &rr - &ii), im: Float::with_val(p, &ri + &ir) }
    }
}

impl Mul<&Real> for &Cplx {
    type Output = Cplx;
    fn mul(self, s: &Real) -> Cplx {
        self.scale(s)
    }
}

impl Div for &Cplx {
    type Output = Cplx;
    fn div(self, o: &Cplx) -> Cplx {
        let p = self.prec().max(o.prec());
        if o.im.is_zero() {
            return Cplx {
                re: Float::with_val(p, &self.re / &o.re),
                im: Float::with_val(p, &self.im / &o.re),
            };
        }
        let d = o.norm_sqr();
        let num = self * &o.conj();
        Cplx { re: Float::with_val(p, &num.re / &d), im: Float::with_val(p, &num.im / &d) }
    }
}

impl Neg for &Cplx {
    type Output = Cplx;
    fn neg(self) -> Cplx {
        Cplx { re: Float::with_val(self.re.prec(), -&self.re), im: Float::with_val(self.im.prec(), -&self.im) }
    }
}

/// Parse "re+imi", "re-imi", "re", "imi" (also with `j`).
pub fn parse_complex(s: &str) -> Option<(f64, f64)> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut cut = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                cut = Some(k);
                break;
            }
        }
        let (re, im) = match cut {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        Some((re.parse().ok()?, im.parse().ok()?))
    } else {
        Some((t.parse().ok()?, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_principal_branch() {
        let z = Cplx::from_f64(128, -4.0, 0.0);
        let r = z.sqrt();
        assert!(r.re.is_zero() || r.re.to_f64().abs() < 1e-30);
        assert!((r.im.to_f64() - 2.0).abs() < 1e-30);
        let z = Cplx::from_f64(128, -1.0, 0.5);
        let r = z.sqrt();
        let back = &r * &r;
        assert!((back.re.to_f64() + 1.0).abs() < 1e-30);
        assert!((back.im.to_f64() - 0.5).abs() < 1e-30);
        assert!(r.re.to_f64() > 0.0);
    }

    #[test]
    fn division_roundtrip() {
        let a = Cplx::from_f64(200, 1.25, -3.5);
        let b = Cplx::from_f64(200, -0.5, 2.0);
        let q = &a / &b;
        let back = &q * &b;
        let err = (&back - &a).abs();
        assert!(err.to_f64() < 1e-55);
    }

    #[test]
    fn exp_of_imaginary_is_unimodular() {
        let z = Cplx::from_f64(256, 0.0, 7.0);
        let e = z.exp();
        assert!((e.abs().to_f64() - 1.0).abs() < 1e-70);
    }

    #[test]
    fn parses_complex_literals() {
        assert_eq!(parse_complex("1+2i"), Some((1.0, 2.0)));
        assert_eq!(parse_complex("-0.5-1.5i"), Some((-0.5, -1.5)));
        assert_eq!(parse_complex("i"), Some((0.0, 1.0)));
        assert_eq!(parse_complex("-i"), Some((0.0, -1.0)));
        assert_eq!(parse_complex("3"), Some((3.0, 0.0)));
        assert_eq!(parse_complex("1e-3+2e+1i"), Some((1e-3, 20.0)));
        assert_eq!(parse_complex("abc"), None);
        assert_eq!(parse_complex(""), None);
    }
}
