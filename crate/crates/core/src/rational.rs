//! Exact probability arithmetic.
//!
//! Every probability, expectation and loss value in the engine is a
//! [`Rational`]. Decimal input is converted exactly at parse time, so a
//! literal such as `0.6` becomes `3/5` rather than the nearest binary float.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serializer;

pub type Rational = num_rational::BigRational;

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num/den`. Panics on a zero denominator, so only use it with literals.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `a/b`, a signed integer, or a decimal such as `-0.125`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_decimal(num)?;
        let den = parse_decimal(den)?;
        if den.is_zero() {
            return None;
        }
        return Some(num / den);
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (negative, digits) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut all = String::with_capacity(whole.len() + frac.len());
    all.push_str(whole);
    all.push_str(frac);
    let num: BigInt = all.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let value = Rational::new(num, den);
    Some(if negative { -value } else { value })
}

/// Canonical `numerator/denominator` rendering (`n` alone for integers).
pub fn fmt_exact(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal rendering rounded to `digits` significant digits.
///
/// Presentation only; nothing in the engine reads these strings back.
pub fn fmt_decimal(value: &Rational, digits: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let digits = digits.max(1);
    let negative = value.is_negative();
    let abs = value.abs();
    // Find exponent e with 10^e <= abs < 10^(e+1).
    let ten = Rational::from_integer(BigInt::from(10));
    let mut exp: i64 = 0;
    let mut scaled = abs.clone();
    while scaled >= ten {
        scaled /= &ten;
        exp += 1;
    }
    while scaled < one() {
        scaled *= &ten;
        exp -= 1;
    }
    // scaled in [1, 10); keep `digits` significant digits.
    let shift = num_traits::pow(BigInt::from(10), digits - 1);
    let mut mantissa = round_half_even(&(scaled * Rational::from_integer(shift.clone())));
    if mantissa >= shift.clone() * BigInt::from(10) {
        mantissa /= BigInt::from(10);
        exp += 1;
    }
    let mut mdigits = mantissa.to_string();
    // Trim trailing zeros of the mantissa.
    while mdigits.len() > 1 && mdigits.ends_with('0') {
        mdigits.pop();
    }
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    let point = exp + 1; // digits before the decimal point
    if !(-6..15).contains(&exp) {
        out.push_str(&mdigits[..1]);
        if mdigits.len() > 1 {
            out.push('.');
            out.push_str(&mdigits[1..]);
        }
        let _ = write!(out, "e{exp}");
    } else if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(&mdigits);
    } else {
        let point = point as usize;
        if mdigits.len() <= point {
            out.push_str(&mdigits);
            for _ in mdigits.len()..point {
                out.push('0');
            }
        } else {
            out.push_str(&mdigits[..point]);
            out.push('.');
            out.push_str(&mdigits[point..]);
        }
    }
    out
}

fn round_half_even(value: &Rational) -> BigInt {
    let floor = value.floor().to_integer();
    let frac = value - Rational::from_integer(floor.clone());
    let half = ratio(1, 2);
    if frac > half || (frac == half && floor.is_odd()) {
        floor + 1
    } else {
        floor
    }
}

pub(crate) fn ser_rational<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_exact(value))
}

pub(crate) fn ser_rationals<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(values.iter().map(fmt_exact))
}

pub(crate) fn ser_opt_rational<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => ser_rational(v, s),
        None => s.serialize_none(),
    }
}

/// True when `values` is a probability vector: entries in [0,1], exact sum 1.
pub fn is_distribution(values: &[Rational]) -> bool {
    let mut total = zero();
    for v in values {
        if v.is_negative() || *v > one() {
            return false;
        }
        total += v;
    }
    total.is_one()
}
