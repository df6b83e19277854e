//! Exact conversions between `astro_float::BigFloat` and big integers / rationals,
//! plus decimal formatting and parsing that round-trips bit-exactly.

use astro_float::{BigFloat, RoundingMode, Sign, Word, WORD_BIT_SIZE};
use num_bigint::{BigInt, BigUint, Sign as BigSign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

pub(crate) fn zero(bits: usize) -> BigFloat {
    BigFloat::from_word(0, bits)
}

pub(crate) fn neg(x: &BigFloat) -> BigFloat {
    let mut y = x.clone();
    y.inv_sign();
    y
}

/// Decomposes a finite float into `(m, e)` with value `m * 2^e`.
pub(crate) fn to_parts(x: &BigFloat) -> (BigInt, i64) {
    if x.is_zero() {
        return (BigInt::zero(), 0);
    }
    let (words, _n, sign, exp, _) = x
        .as_raw_parts()
        .expect("non-finite big-float reached an exact conversion");
    let mut digits: Vec<u32> = Vec::with_capacity(words.len() * 2);
    for w in words {
        let w = *w as u64;
        digits.push((w & 0xffff_ffff) as u32);
        digits.push((w >> 32) as u32);
    }
    let mag = BigUint::new(digits);
    let s = if sign == Sign::Neg { BigSign::Minus } else { BigSign::Plus };
    let m = BigInt::from_biguint(s, mag);
    let e = exp as i64 - (words.len() * WORD_BIT_SIZE) as i64;
    (m, e)
}

/// Builds `m * 2^e` rounded to `bits`.
pub(crate) fn from_parts(m: &BigInt, e: i64, bits: usize) -> BigFloat {
    if m.is_zero() {
        return zero(bits);
    }
    let words: Vec<Word> = m.magnitude().iter_u64_digits().map(|d| d as Word).collect();
    let p = words.len() * WORD_BIT_SIZE;
    let sign = if m.is_negative() { Sign::Neg } else { Sign::Pos };
    let exp = e + p as i64;
    let exp32 = i32::try_from(exp).expect("big-float exponent out of range");
    let mut f = BigFloat::from_words(&words, sign, exp32);
    f.set_precision(bits, RM).expect("invalid precision");
    f
}

/// Correctly rounded conversion of a rational to a float of `bits` precision.
pub(crate) fn from_rational(q: &BigRational, bits: usize) -> BigFloat {
    if q.is_zero() {
        return zero(bits);
    }
    let num = q.numer().abs();
    let den = q.denom().clone();
    let target = bits as i64 + 2;
    let shift = target + den.bits() as i64 - num.bits() as i64;
    let (quot, rem) = if shift >= 0 {
        (num << shift as usize).div_rem(&den)
    } else {
        num.div_rem(&(den << (-shift) as usize))
    };
    // sticky bit below the rounding position keeps round-to-even correct
    let quot = if rem.is_zero() { quot } else { quot | BigInt::one() };
    let quot = if q.is_negative() { -quot } else { quot };
    from_parts(&quot, -shift, bits)
}

/// Exact dyadic rational value of a finite float.
pub(crate) fn to_rational(x: &BigFloat) -> BigRational {
    let (m, e) = to_parts(x);
    if e >= 0 {
        BigRational::from_integer(m << e as usize)
    } else {
        BigRational::new(m, BigInt::one() << (-e) as usize)
    }
}

pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let (m, e) = to_parts(x);
    let bl = m.bits() as i64;
    let (top, e) = if bl > 60 {
        (&m >> (bl - 60) as usize, e + bl - 60)
    } else {
        (m.clone(), e)
    };
    let t = top.to_f64().unwrap_or(0.0);
    ldexp(t, e)
}

pub(crate) fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

pub(crate) fn from_f64(v: f64, bits: usize) -> BigFloat {
    let mut f = BigFloat::from_f64(v, bits.max(64));
    f.set_precision(bits, RM).expect("invalid precision");
    f
}

/// Multiplies by `2^k` exactly.
pub(crate) fn mul_pow2(x: &BigFloat, k: i64) -> BigFloat {
    if x.is_zero() {
        return x.clone();
    }
    let mut y = x.clone();
    let e = x.exponent().expect("finite") as i64 + k;
    y.set_exponent(i32::try_from(e).expect("big-float exponent out of range"));
    y
}

/// Binary exponent `e` such that `2^(e-1) <= |x| < 2^e`.
pub(crate) fn binary_exponent(x: &BigFloat) -> i64 {
    x.exponent().map(|e| e as i64).unwrap_or(0)
}

/// Number of significant decimal digits that makes a `bits`-precision value
/// round-trip through decimal.
pub(crate) fn roundtrip_digits(bits: usize) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
}

/// Formats a rational in scientific notation with `digits` significant digits,
/// rounding half to even.
pub(crate) fn format_rational_sci(q: &BigRational, digits: usize) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let neg = q.is_negative();
    let a = q.abs();
    let est = (a.numer().bits() as f64 - a.denom().bits() as f64) * std::f64::consts::LOG10_2;
    let mut k = est.floor() as i64;
    let ten = BigInt::from(10);
    loop {
        // scaled = a * 10^(digits-1-k)
        let p = digits as i64 - 1 - k;
        let scaled = if p >= 0 {
            &a * BigRational::from_integer(num_traits::pow(ten.clone(), p as usize))
        } else {
            &a / BigRational::from_integer(num_traits::pow(ten.clone(), (-p) as usize))
        };
        let fl = scaled.floor().to_integer();
        let frac = &scaled - BigRational::from_integer(fl.clone());
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let rounded = if frac > half || (frac == half && fl.is_odd()) {
            fl + BigInt::one()
        } else {
            fl
        };
        let lo = num_traits::pow(ten.clone(), digits - 1);
        let hi = &lo * &ten;
        if rounded < lo {
            k -= 1;
            continue;
        }
        if rounded >= hi {
            k += 1;
            continue;
        }
        let s = rounded.to_string();
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&s[..1]);
        let rest = s[1..].trim_end_matches('0');
        if !rest.is_empty() {
            out.push('.');
            out.push_str(rest);
        }
        if k != 0 {
            out.push('e');
            out.push_str(&k.to_string());
        }
        return out;
    }
}

pub(crate) fn format_float(x: &BigFloat, bits: usize) -> String {
    format_rational_sci(&to_rational(x), roundtrip_digits(bits))
}

/// Parses `p/q`, integers, and decimal literals with optional exponent into an
/// exact rational. Returns `None` on malformed input.
pub fn parse_rational_literal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let m: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let m = if neg { -m } else { m };
    let e10 = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let q = if e10 >= 0 {
        BigRational::from_integer(m * num_traits::pow(ten, e10 as usize))
    } else {
        BigRational::new(m, num_traits::pow(ten, (-e10) as usize))
    };
    Some(q)
}
