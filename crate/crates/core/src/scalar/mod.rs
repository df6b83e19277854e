//! Scalar field for every computation in the crate.
//!
//! A [`Scalar`] is either an exact rational (kept in lowest terms by
//! `num-rational`) or a complex big-float pair at an explicit binary precision.
//! Exact operands stay exact; as soon as a rounded operand or an irrational
//! root enters, the result is a big-float at the widest precision involved.

pub(crate) mod float;
mod matrix;
mod poly;

pub use float::parse_rational_literal;
pub use matrix::{determinant, solve_linear, DenseMatrix, LinearSolution};
pub use poly::{match_multisets, poly_eval, poly_mul, poly_roots};

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use float::RM;

pub const DEFAULT_PRECISION: usize = 256;
pub const MIN_PRECISION: usize = 64;

/// Complex big-float with both parts at `bits` precision.
#[derive(Clone, Debug)]
pub struct ComplexFloat {
    re: BigFloat,
    im: BigFloat,
    bits: usize,
}

impl ComplexFloat {
    fn new(re: BigFloat, im: BigFloat, bits: usize) -> Self {
        ComplexFloat { re, im, bits }
    }

    fn real(re: BigFloat, bits: usize) -> Self {
        ComplexFloat { re, im: float::zero(bits), bits }
    }

    fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn add(&self, o: &Self, p: usize) -> Self {
        Self::new(self.re.add(&o.re, p, RM), self.im.add(&o.im, p, RM), p)
    }

    fn sub(&self, o: &Self, p: usize) -> Self {
        Self::new(self.re.sub(&o.re, p, RM), self.im.sub(&o.im, p, RM), p)
    }

    fn mul(&self, o: &Self, p: usize) -> Self {
        if self.is_real() && o.is_real() {
            return Self::real(self.re.mul(&o.re, p, RM), p);
        }
        if o.is_real() {
            return Self::new(self.re.mul(&o.re, p, RM), self.im.mul(&o.re, p, RM), p);
        }
        if self.is_real() {
            return Self::new(self.re.mul(&o.re, p, RM), self.re.mul(&o.im, p, RM), p);
        }
        let ac = self.re.mul(&o.re, p, RM);
        let bd = self.im.mul(&o.im, p, RM);
        let ad = self.re.mul(&o.im, p, RM);
        let bc = self.im.mul(&o.re, p, RM);
        Self::new(ac.sub(&bd, p, RM), ad.add(&bc, p, RM), p)
    }

    fn div(&self, o: &Self, p: usize) -> Self {
        if o.is_real() {
            return Self::new(self.re.div(&o.re, p, RM), self.im.div(&o.re, p, RM), p);
        }
        let den = o.re.mul(&o.re, p, RM).add(&o.im.mul(&o.im, p, RM), p, RM);
        let re = self.re.mul(&o.re, p, RM).add(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.im.mul(&o.re, p, RM).sub(&self.re.mul(&o.im, p, RM), p, RM);
        Self::new(re.div(&den, p, RM), im.div(&den, p, RM), p)
    }

    fn neg(&self) -> Self {
        Self::new(float::neg(&self.re), float::neg(&self.im), self.bits)
    }

    fn abs(&self, p: usize) -> BigFloat {
        if self.is_real() {
            return self.re.abs();
        }
        let s = self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM);
        s.sqrt(p, RM)
    }

    /// Principal square root (real part ≥ 0; the negative real axis maps to +i).
    fn sqrt(&self, p: usize) -> Self {
        if self.re.is_zero() && self.im.is_zero() {
            return self.clone();
        }
        if self.is_real() {
            if self.re.is_positive() {
                return Self::real(self.re.sqrt(p, RM), p);
            }
            return Self::new(float::zero(p), self.re.abs().sqrt(p, RM), p);
        }
        let r = self.abs(p);
        let t = r.add(&self.re.abs(), p, RM);
        let t = float::mul_pow2(&t, -1).sqrt(p, RM);
        let two_t = float::mul_pow2(&t, 1);
        if self.re.is_positive() || self.re.is_zero() {
            Self::new(t.clone(), self.im.div(&two_t, p, RM), p)
        } else {
            let re = self.im.abs().div(&two_t, p, RM);
            let im = if self.im.is_negative() { float::neg(&t) } else { t };
            Self::new(re, im, p)
        }
    }
}

/// Field element: exact rational or complex big-float.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Float(ComplexFloat),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Scalar::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Scalar::Exact(q)
    }

    pub fn from_f64(v: f64, bits: usize) -> Self {
        let bits = bits.max(MIN_PRECISION);
        Scalar::Float(ComplexFloat::real(float::from_f64(v, bits), bits))
    }

    pub fn complex_f64(re: f64, im: f64, bits: usize) -> Self {
        let bits = bits.max(MIN_PRECISION);
        Scalar::Float(ComplexFloat::new(
            float::from_f64(re, bits),
            float::from_f64(im, bits),
            bits,
        ))
    }

    /// Complex number from two real scalars, rounded to `bits`.
    pub fn complex(re: &Scalar, im: &Scalar, bits: usize) -> Self {
        let bits = bits.max(re.bits()).max(im.bits()).max(MIN_PRECISION);
        let r = re.to_complex(bits);
        let i = im.to_complex(bits);
        Scalar::Float(ComplexFloat::new(r.re, i.re, bits))
    }

    pub fn imaginary_unit(bits: usize) -> Self {
        Scalar::complex(&Scalar::zero(), &Scalar::one(), bits)
    }

    /// Parses a CLI literal: `p/q` and integers are exact, decimals are
    /// rounded to `bits`.
    pub fn parse_literal(s: &str, bits: usize) -> Option<Self> {
        let q = parse_rational_literal(s)?;
        let t = s.trim();
        if t.contains('.') || t.contains('e') || t.contains('E') {
            Some(Scalar::Exact(q).to_float(bits))
        } else {
            Some(Scalar::Exact(q))
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    /// Working precision of a rounded value; `None` for exact rationals.
    pub fn precision(&self) -> Option<usize> {
        match self {
            Scalar::Exact(_) => None,
            Scalar::Float(c) => Some(c.bits),
        }
    }

    fn bits(&self) -> usize {
        self.precision().unwrap_or(0)
    }

    fn to_complex(&self, bits: usize) -> ComplexFloat {
        match self {
            Scalar::Exact(q) => ComplexFloat::real(float::from_rational(q, bits), bits),
            Scalar::Float(c) => {
                if c.bits == bits {
                    c.clone()
                } else {
                    let mut re = c.re.clone();
                    let mut im = c.im.clone();
                    re.set_precision(bits, RM).expect("precision");
                    im.set_precision(bits, RM).expect("precision");
                    ComplexFloat::new(re, im, bits)
                }
            }
        }
    }

    /// Rounded copy at `bits` (exact values are converted).
    pub fn to_float(&self, bits: usize) -> Scalar {
        Scalar::Float(self.to_complex(bits.max(MIN_PRECISION)))
    }

    /// Exact dyadic value of a real float, or the rational itself.
    /// Returns `None` for values with a nonzero imaginary part.
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Scalar::Exact(q) => Some(q.clone()),
            Scalar::Float(c) if c.is_real() => Some(float::to_rational(&c.re)),
            Scalar::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Float(c) => c.re.is_zero() && c.im.is_zero(),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Scalar::Exact(_) => true,
            Scalar::Float(c) => c.is_real(),
        }
    }

    pub fn re(&self) -> Scalar {
        match self {
            Scalar::Exact(_) => self.clone(),
            Scalar::Float(c) => Scalar::Float(ComplexFloat::real(c.re.clone(), c.bits)),
        }
    }

    pub fn im(&self) -> Scalar {
        match self {
            Scalar::Exact(_) => Scalar::zero(),
            Scalar::Float(c) => Scalar::Float(ComplexFloat::real(c.im.clone(), c.bits)),
        }
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Exact(_) => self.clone(),
            Scalar::Float(c) => Scalar::Float(ComplexFloat::new(c.re.clone(), float::neg(&c.im), c.bits)),
        }
    }

    /// Modulus; exact for exact inputs.
    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.abs()),
            Scalar::Float(c) => Scalar::Float(ComplexFloat::real(c.abs(c.bits), c.bits)),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(c) => float::to_f64(&c.re),
        }
    }

    pub fn to_c64(&self) -> (f64, f64) {
        match self {
            Scalar::Exact(q) => (q.to_f64().unwrap_or(f64::NAN), 0.0),
            Scalar::Float(c) => (float::to_f64(&c.re), float::to_f64(&c.im)),
        }
    }

    pub fn abs_f64(&self) -> f64 {
        let (re, im) = self.to_c64();
        re.hypot(im)
    }

    /// Compares the real parts of two scalars.
    pub fn cmp_real(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => {
                let p = self.bits().max(other.bits()).max(MIN_PRECISION);
                let a = self.to_complex(p).re;
                let b = other.to_complex(p).re;
                match a.cmp(&b) {
                    Some(s) if s < 0 => Ordering::Less,
                    Some(s) if s > 0 => Ordering::Greater,
                    _ => Ordering::Equal,
                }
            }
        }
    }

    /// Compares moduli.
    pub fn cmp_abs(&self, other: &Scalar) -> Ordering {
        self.abs().cmp_real(&other.abs())
    }

    /// `|self| <= tol` where `tol` is a nonnegative real.
    pub fn abs_le(&self, tol: &Scalar) -> bool {
        self.cmp_abs(tol) != Ordering::Greater
    }

    /// `|self - other| <= tol`.
    pub fn approx_eq(&self, other: &Scalar, tol: &Scalar) -> bool {
        (self - other).abs_le(tol)
    }

    /// Rational upper bound on the modulus, valid for rounded values too.
    pub fn abs_upper_bound(&self) -> BigRational {
        match self {
            Scalar::Exact(q) => q.abs(),
            Scalar::Float(c) => {
                let a = float::to_rational(&c.re).abs() + float::to_rational(&c.im).abs();
                let slack = BigRational::new(BigInt::one(), BigInt::one() << (c.bits - 8));
                &a + &a * slack
            }
        }
    }

    /// Nearest integer when the value is within `tol` of one and real.
    pub fn as_integer(&self, tol: &Scalar) -> Option<BigInt> {
        match self {
            Scalar::Exact(q) => q.is_integer().then(|| q.to_integer()),
            Scalar::Float(c) => {
                if !Scalar::Float(ComplexFloat::real(c.im.clone(), c.bits)).abs_le(tol) {
                    return None;
                }
                let q = float::to_rational(&c.re);
                let n = q.round().to_integer();
                let d = Scalar::Exact(q - BigRational::from_integer(n.clone()));
                d.abs_le(tol).then_some(n)
            }
        }
    }

    pub fn recip(&self) -> Scalar {
        &Scalar::one() / self
    }

    pub fn powi(&self, n: i64) -> Scalar {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut result = Scalar::one();
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Principal square root.
    pub fn sqrt(&self, bits: usize) -> Scalar {
        nth_root(self, 2, 0, bits)
    }

    /// `2^(-bits/2)`, the rank/consistency threshold at a given precision.
    pub fn half_precision_eps(bits: usize) -> Scalar {
        Scalar::Exact(BigRational::new(BigInt::one(), BigInt::one() << (bits / 2)))
    }

    /// `10^(-k)` as an exact rational.
    pub fn ten_pow_neg(k: u32) -> Scalar {
        Scalar::Exact(BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), k as usize)))
    }

    /// Maximum modulus over a slice, as a real scalar.
    pub fn max_abs<'a, I: IntoIterator<Item = &'a Scalar>>(it: I) -> Scalar {
        let mut best = Scalar::zero();
        for s in it {
            let a = s.abs();
            if a.cmp_real(&best) == Ordering::Greater {
                best = a;
            }
        }
        best
    }

    fn binop(
        a: &Scalar,
        b: &Scalar,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational,
        inexact: impl Fn(&ComplexFloat, &ComplexFloat, usize) -> ComplexFloat,
    ) -> Scalar {
        match (a, b) {
            (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(exact(x, y)),
            _ => {
                let p = a.bits().max(b.bits());
                Scalar::Float(inexact(&a.to_complex(p), &b.to_complex(p), p))
            }
        }
    }
}

/// `x^(1/n)` on branch `branch`: branch 0 is the principal root (argument in
/// (−π/n, π/n]); branch k multiplies it by `exp(2πik/n)`. Perfect powers of
/// nonnegative rationals stay exact.
pub fn nth_root(x: &Scalar, n: u32, branch: u32, bits: usize) -> Scalar {
    assert!(n >= 1, "root order must be positive");
    assert!(branch < n, "branch out of range");
    if n == 1 {
        return x.clone();
    }
    if x.is_zero() {
        return x.clone();
    }
    let bits = bits.max(x.bits()).max(MIN_PRECISION);
    if let Scalar::Exact(q) = x {
        if !q.is_negative() {
            let (num, den) = (q.numer(), q.denom());
            let rn = num.nth_root(n);
            let rd = den.nth_root(n);
            if num_traits::pow(rn.clone(), n as usize) == *num
                && num_traits::pow(rd.clone(), n as usize) == *den
            {
                let r = Scalar::Exact(BigRational::new(rn, rd));
                if branch == 0 {
                    return r;
                }
                if 2 * branch == n {
                    return -r;
                }
                return &r * &root_of_unity(n, branch, bits);
            }
        }
    }
    let c = x.to_complex(bits);
    let principal = if n.is_power_of_two() {
        let mut r = c;
        let mut m = n;
        while m > 1 {
            r = r.sqrt(bits);
            m /= 2;
        }
        Scalar::Float(r)
    } else {
        newton_principal_root(&c, n, bits)
    };
    if branch == 0 {
        principal
    } else {
        &principal * &root_of_unity(n, branch, bits)
    }
}

/// `exp(2πik/n)`; the quarter-turn values are exact.
pub fn root_of_unity(n: u32, k: u32, bits: usize) -> Scalar {
    let k = k % n;
    if k == 0 {
        return Scalar::one();
    }
    if 2 * k == n {
        return Scalar::int(-1);
    }
    if 4 * k == n {
        return Scalar::imaginary_unit(bits);
    }
    if 4 * k == 3 * n {
        return -Scalar::imaginary_unit(bits);
    }
    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
    let seed = ComplexFloat::new(
        float::from_f64(theta.cos(), bits),
        float::from_f64(theta.sin(), bits),
        bits,
    );
    newton_refine(&seed, &ComplexFloat::real(float::from_f64(1.0, bits), bits), n, bits)
}

fn newton_principal_root(x: &ComplexFloat, n: u32, bits: usize) -> Scalar {
    // scale |x| into [1, 2^n) so the f64 seed is always representable
    let e = float::binary_exponent(&x.re).max(float::binary_exponent(&x.im));
    let shift = e.div_euclid(n as i64);
    let xs = ComplexFloat::new(
        float::mul_pow2(&x.re, -shift * n as i64),
        float::mul_pow2(&x.im, -shift * n as i64),
        bits,
    );
    let (re, im) = (float::to_f64(&xs.re), float::to_f64(&xs.im));
    let r = re.hypot(im).powf(1.0 / n as f64);
    let theta = im.atan2(re) / n as f64;
    let seed = ComplexFloat::new(
        float::from_f64(r * theta.cos(), bits),
        float::from_f64(r * theta.sin(), bits),
        bits,
    );
    let root = match newton_refine(&seed, &xs, n, bits) {
        Scalar::Float(c) => c,
        Scalar::Exact(_) => unreachable!(),
    };
    Scalar::Float(ComplexFloat::new(
        float::mul_pow2(&root.re, shift),
        float::mul_pow2(&root.im, shift),
        bits,
    ))
}

fn newton_refine(seed: &ComplexFloat, target: &ComplexFloat, n: u32, bits: usize) -> Scalar {
    let p = bits + 32;
    let t = Scalar::Float(target.clone()).to_complex(p);
    let mut z = Scalar::Float(seed.clone()).to_complex(p);
    let nn = ComplexFloat::real(float::from_f64(n as f64, p), p);
    let stop = Scalar::half_precision_eps(2 * bits + 8);
    for _ in 0..200 {
        let mut zn1 = ComplexFloat::real(float::from_f64(1.0, p), p);
        for _ in 0..n - 1 {
            zn1 = zn1.mul(&z, p);
        }
        let zn = zn1.mul(&z, p);
        let step = zn.sub(&t, p).div(&nn.mul(&zn1, p), p);
        z = z.sub(&step, p);
        let rel = Scalar::Float(step).abs_f64() / Scalar::Float(z.clone()).abs_f64().max(1e-300);
        if rel == 0.0 || Scalar::from_f64(rel, 64).abs_le(&stop) {
            break;
        }
    }
    Scalar::Float(z).to_float(bits)
}

impl PartialEq for Scalar {
    /// Mathematical equality of the represented values.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => {
                if self.im().to_rational() != other.im().to_rational() {
                    return false;
                }
                self.re().to_rational() == other.re().to_rational()
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        match self {
            Scalar::Exact(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Scalar::Float(c) => {
                let re = float::format_rational_sci(&float::to_rational(&c.re), digits);
                if c.is_real() {
                    write!(f, "{re}")
                } else {
                    let im = float::format_rational_sci(&float::to_rational(&c.im), digits);
                    if let Some(mag) = im.strip_prefix('-') {
                        write!(f, "{re} - {mag}i")
                    } else {
                        write!(f, "{re} + {im}i")
                    }
                }
            }
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $exact:expr, $inexact:expr) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                Scalar::binop(self, rhs, $exact, $inexact)
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a + b, |a, b, p| a.add(b, p));
forward_binop!(Sub, sub, |a, b| a - b, |a, b, p| a.sub(b, p));
forward_binop!(Mul, mul, |a, b| a * b, |a, b, p| a.mul(b, p));
forward_binop!(
    Div,
    div,
    |a, b| {
        assert!(!b.is_zero(), "exact division by zero");
        a / b
    },
    |a, b, p| a.div(b, p)
);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Float(c) => Scalar::Float(c.neg()),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |a, b| a + b)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Exact { num: String, den: String },
    Float { re: String, im: String, bits: usize },
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Scalar::Exact(q) => ScalarRepr::Exact {
                num: q.numer().to_string(),
                den: q.denom().to_string(),
            },
            Scalar::Float(c) => ScalarRepr::Float {
                re: float::format_float(&c.re, c.bits),
                im: float::format_float(&c.im, c.bits),
                bits: c.bits,
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match ScalarRepr::deserialize(d)? {
            ScalarRepr::Exact { num, den } => {
                let n: BigInt = num.parse().map_err(D::Error::custom)?;
                let dd: BigInt = den.parse().map_err(D::Error::custom)?;
                if dd.is_zero() {
                    return Err(D::Error::custom("zero denominator"));
                }
                Ok(Scalar::Exact(BigRational::new(n, dd)))
            }
            ScalarRepr::Float { re, im, bits } => {
                if bits < MIN_PRECISION {
                    return Err(D::Error::custom("precision below 64 bits"));
                }
                let r = parse_rational_literal(&re).ok_or_else(|| D::Error::custom("bad re"))?;
                let i = parse_rational_literal(&im).ok_or_else(|| D::Error::custom("bad im"))?;
                Ok(Scalar::Float(ComplexFloat::new(
                    float::from_rational(&r, bits),
                    float::from_rational(&i, bits),
                    bits,
                )))
            }
        }
    }
}
