//! Small helpers over `rug` floats and complex numbers.
//!
//! Everything in the crate works at an explicit binary precision (`prec`,
//! in bits) derived from a decimal digit count.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Extra bits carried on top of the requested decimal precision.
pub const GUARD_BITS: u32 = 16;

pub fn bits_for_digits(digits: u32) -> u32 {
    (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
}

/// Decimal digits meaningfully represented at `prec` bits.
pub fn digits_for_bits(prec: u32) -> u32 {
    (f64::from(prec.saturating_sub(GUARD_BITS)) / std::f64::consts::LOG2_10).floor() as u32
}

pub fn float(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

pub fn complex(prec: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(prec, (re, im))
}

pub fn czero(prec: u32) -> Complex {
    Complex::new(prec)
}

pub fn cone(prec: u32) -> Complex {
    Complex::with_val(prec, 1)
}

pub fn from_real(x: &Float) -> Complex {
    Complex::with_val(x.prec(), x)
}

/// Copy of `z` at a (usually higher) precision; the binary value is kept exactly
/// when `prec` is not smaller than the current precision.
pub fn cwith(prec: u32, z: &Complex) -> Complex {
    Complex::with_val(prec, z)
}

pub fn prec_of(z: &Complex) -> u32 {
    z.prec().0
}

pub fn conj(z: &Complex) -> Complex {
    Complex::with_val(prec_of(z), z.conj_ref())
}

pub fn abs(z: &Complex) -> Float {
    Float::with_val(prec_of(z), z.abs_ref())
}

pub fn is_zero(z: &Complex) -> bool {
    z.real().is_zero() && z.imag().is_zero()
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// `10^e` at `prec` bits.
pub fn pow10(prec: u32, e: i32) -> Float {
    Float::with_val(prec, 10).pow(e)
}

/// `10^(-digits / div)` as a real tolerance.
pub fn tol_digits(prec: u32, digits: u32, div: u32) -> Float {
    let e = f64::from(digits) / f64::from(div);
    Float::with_val(prec, 10).pow(Float::with_val(prec, -e))
}

pub fn factorial(prec: u32, n: u32) -> Float {
    Float::with_val(prec, rug::Integer::from(rug::Integer::factorial(n)))
}

pub fn binomial(prec: u32, n: u32, k: u32) -> Float {
    Float::with_val(prec, rug::Integer::from(rug::Integer::binomial_u(n, k)))
}

/// `z^k` for small non-negative integer powers.
pub fn cpow(z: &Complex, k: u32) -> Complex {
    let prec = prec_of(z);
    let mut out = cone(prec);
    for _ in 0..k {
        out *= z;
    }
    out
}

/// `e^z` for complex `z`, keeping an exact 1 at `z = 0`.
pub fn cexp(z: &Complex) -> Complex {
    z.clone().exp()
}

/// Logarithm of a strictly positive real, or `None` for zero.
pub fn ln_pos(x: &Float) -> Option<Float> {
    if x.is_zero() {
        None
    } else {
        Some(x.clone().ln())
    }
}

pub fn max_float<'a>(xs: impl IntoIterator<Item = &'a Float>) -> Option<Float> {
    let mut best: Option<Float> = None;
    for x in xs {
        match &best {
            Some(b) if *b >= *x => {}
            _ => best = Some(x.clone()),
        }
    }
    best
}

/// Full-precision decimal rendering used in every JSON/CSV output.
pub fn fmt(x: &Float, digits: u32) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf" } else { "inf" }.to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    x.to_string_radix(10, Some(digits.max(1) as usize))
}

pub fn fmt_pair(z: &Complex, digits: u32) -> [String; 2] {
    [fmt(z.real(), digits), fmt(z.imag(), digits)]
}

pub fn parse_float(prec: u32, s: &str) -> Result<Float> {
    let parsed = Float::parse(s.trim())
        .map_err(|e| Error::Parse(format!("invalid real number {s:?}: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

/// Parses `"1.5"`, `"-2i"`, `"1.5+0.5i"`, `"3-4i"` (also `j` for the unit).
pub fn parse_complex(prec: u32, s: &str) -> Result<Complex> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(Error::Parse("empty complex number".into()));
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return Ok(from_real(&parse_float(prec, &t)?));
    };
    // split at the last sign that is not an exponent sign
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i];
        if (c == b'+' || c == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re = parse_float(prec, re)?;
    let im = parse_float(prec, im)?;
    Ok(Complex::with_val(prec, (re, im)))
}

/// Real number serialized as a full-precision decimal string.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Real(pub Float);

/// Complex number serialized as `[re, im]` decimal strings.
#[derive(Clone, Debug, PartialEq)]
pub struct Cplx(pub Complex);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt(&self.0, digits_for_bits(self.0.prec())))
    }
}

impl Serialize for Cplx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        fmt_pair(&self.0, digits_for_bits(prec_of(&self.0))).serialize(s)
    }
}

impl From<Float> for Real {
    fn from(x: Float) -> Self {
        Real(x)
    }
}

impl From<Complex> for Cplx {
    fn from(z: Complex) -> Self {
        Cplx(z)
    }
}

pub fn reals(xs: Vec<Float>) -> Vec<Real> {
    xs.into_iter().map(Real).collect()
}

pub fn cplxs(zs: Vec<Complex>) -> Vec<Cplx> {
    zs.into_iter().map(Cplx).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_forms() {
        let p = 128;
        let z = parse_complex(p, "1.5+0.5i").unwrap();
        assert_eq!(z, complex(p, 1.5, 0.5));
        assert_eq!(parse_complex(p, "-2i").unwrap(), complex(p, 0.0, -2.0));
        assert_eq!(parse_complex(p, "3-4i").unwrap(), complex(p, 3.0, -4.0));
        assert_eq!(parse_complex(p, "1e-3+2e+1i").unwrap(), Complex::with_val(p, (parse_float(p, "1e-3").unwrap(), 20)));
        assert_eq!(parse_complex(p, "i").unwrap(), complex(p, 0.0, 1.0));
        assert_eq!(parse_complex(p, "7").unwrap(), complex(p, 7.0, 0.0));
        assert!(parse_complex(p, "abc").is_err());
    }

    #[test]
    fn formatting_round_trips() {
        let p = bits_for_digits(60);
        let x = Float::with_val(p, 2).sqrt();
        let s = fmt(&x, 60);
        let back = parse_float(p, &s).unwrap();
        let err = Float::with_val(p, &back - &x).abs();
        assert!(err < pow10(p, -58));
    }

    #[test]
    fn digit_bit_conversion() {
        assert!(bits_for_digits(50) >= 166 + GUARD_BITS);
        assert_eq!(digits_for_bits(bits_for_digits(200)), 200);
    }
}
