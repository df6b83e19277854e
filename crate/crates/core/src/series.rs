//! Truncated Laurent/Puiseux series in `(t - t0)` with rational exponents.

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::scalar::{nth_root, Scalar};

/// `Σ coeffs[i] (t - center)^(lead + i*step)`, known through the last stored
/// coefficient: the first omitted exponent is `lead + len*step`.
///
/// `first_index` is only a label: the recurrence index of `coeffs[0]`
/// (−2 for the Hénon–Heiles series, whose leading terms are `t^-2` / `t^-3/2`).
#[derive(Clone, Debug, PartialEq)]
pub struct PuiseuxSeries {
    lead: Rational64,
    step: Rational64,
    coeffs: Vec<Scalar>,
    first_index: i64,
    center: Scalar,
}

pub fn exponent_to_string(e: Rational64) -> String {
    if e.is_integer() {
        e.to_integer().to_string()
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

pub fn parse_exponent(s: &str) -> Option<Rational64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Rational64::new(n, d))
        }
        None => Some(Rational64::from_integer(s.parse().ok()?)),
    }
}

impl PuiseuxSeries {
    pub fn new(lead: Rational64, step: Rational64, coeffs: Vec<Scalar>) -> Self {
        assert!(step.is_positive(), "series step must be positive");
        PuiseuxSeries { lead, step, coeffs, first_index: 0, center: Scalar::zero() }
    }

    /// Integer-step Laurent series starting at `t^lead`.
    pub fn laurent(lead: i64, coeffs: Vec<Scalar>) -> Self {
        PuiseuxSeries::new(Rational64::from_integer(lead), Rational64::one(), coeffs)
    }

    pub fn zeros(lead: Rational64, step: Rational64, len: usize) -> Self {
        PuiseuxSeries::new(lead, step, vec![Scalar::zero(); len])
    }

    pub fn with_first_index(mut self, k: i64) -> Self {
        self.first_index = k;
        self
    }

    pub fn with_center(mut self, t0: Scalar) -> Self {
        self.center = t0;
        self
    }

    pub fn lead(&self) -> Rational64 {
        self.lead
    }

    pub fn step(&self) -> Rational64 {
        self.step
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Scalar] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn center(&self) -> &Scalar {
        &self.center
    }

    /// Highest recurrence index carried (`first_index + len - 1`).
    pub fn trunc_order(&self) -> i64 {
        self.first_index + self.coeffs.len() as i64 - 1
    }

    /// First exponent not represented (the `O(t^order)` term).
    pub fn order(&self) -> Rational64 {
        self.lead + self.step * Rational64::from_integer(self.coeffs.len() as i64)
    }

    pub fn exponent(&self, i: usize) -> Rational64 {
        self.lead + self.step * Rational64::from_integer(i as i64)
    }

    /// Coefficient labelled by recurrence index `k`, if stored.
    pub fn at_index(&self, k: i64) -> Option<&Scalar> {
        let i = k - self.first_index;
        (i >= 0).then(|| self.coeffs.get(i as usize)).flatten()
    }

    /// Coefficient of `t^e`: `Some(0)` for lattice gaps below the lead,
    /// `None` at or beyond the truncation order or off the lattice.
    pub fn coeff_at(&self, e: Rational64) -> Option<Scalar> {
        if e >= self.order() {
            return None;
        }
        let off = (e - self.lead) / self.step;
        if !off.is_integer() {
            return None;
        }
        let i = off.to_integer();
        if i < 0 {
            return Some(Scalar::zero());
        }
        Some(self.coeffs[i as usize].clone())
    }

    pub fn is_identically_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    pub fn max_abs(&self) -> Scalar {
        Scalar::max_abs(&self.coeffs)
    }

    fn lattice_offset(&self, other: &PuiseuxSeries) -> Result<()> {
        if self.step != other.step {
            return contract("series with different exponent steps");
        }
        if !((self.lead - other.lead) / self.step).is_integer() {
            return contract("series exponents lie on different lattices");
        }
        if self.center != other.center {
            return contract("series expanded about different centers");
        }
        Ok(())
    }

    fn combine(&self, other: &PuiseuxSeries, sign: &Scalar) -> Result<PuiseuxSeries> {
        self.lattice_offset(other)?;
        let lead = self.lead.min(other.lead);
        let order = self.order().min(other.order());
        let len = ((order - lead) / self.step).to_integer().max(0) as usize;
        let mut out = PuiseuxSeries::zeros(lead, self.step, len).with_center(self.center.clone());
        for i in 0..len {
            let e = out.exponent(i);
            let a = self.coeff_at(e).unwrap_or_else(Scalar::zero);
            let b = other.coeff_at(e).unwrap_or_else(Scalar::zero);
            out.coeffs[i] = &a + &(sign * &b);
        }
        Ok(out)
    }

    pub fn add(&self, other: &PuiseuxSeries) -> Result<PuiseuxSeries> {
        self.combine(other, &Scalar::one())
    }

    pub fn sub(&self, other: &PuiseuxSeries) -> Result<PuiseuxSeries> {
        self.combine(other, &Scalar::int(-1))
    }

    pub fn mul(&self, other: &PuiseuxSeries) -> Result<PuiseuxSeries> {
        if self.step != other.step {
            return contract("series with different exponent steps");
        }
        if self.center != other.center {
            return contract("series expanded about different centers");
        }
        let len = self.len().min(other.len());
        let mut coeffs = Vec::with_capacity(len);
        for n in 0..len {
            let s: Scalar = (0..=n)
                .filter(|&i| !self.coeffs[i].is_zero() && !other.coeffs[n - i].is_zero())
                .map(|i| &self.coeffs[i] * &other.coeffs[n - i])
                .sum();
            coeffs.push(s);
        }
        Ok(PuiseuxSeries::new(self.lead + other.lead, self.step, coeffs).with_center(self.center.clone()))
    }

    pub fn scale(&self, c: &Scalar) -> PuiseuxSeries {
        let mut out = self.clone();
        out.first_index = 0;
        for v in out.coeffs.iter_mut() {
            *v = &*v * c;
        }
        out
    }

    pub fn neg(&self) -> PuiseuxSeries {
        self.scale(&Scalar::int(-1))
    }

    /// Adds a constant; `t^0` must lie on the exponent lattice when `c != 0`.
    pub fn add_constant(&self, c: &Scalar) -> Result<PuiseuxSeries> {
        if c.is_zero() {
            return Ok(self.clone());
        }
        let off = (-self.lead) / self.step;
        if !off.is_integer() {
            return contract("constant term off the series exponent lattice");
        }
        let order = self.order();
        if order <= Rational64::zero() {
            return Ok(self.clone());
        }
        let constant = PuiseuxSeries::new(
            Rational64::zero(),
            self.step,
            std::iter::once(c.clone())
                .chain(std::iter::repeat(Scalar::zero()))
                .take(((order) / self.step).to_integer() as usize)
                .collect(),
        )
        .with_center(self.center.clone());
        self.add(&constant)
    }

    pub fn derivative(&self) -> PuiseuxSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let e = self.exponent(i);
                c * &Scalar::ratio(*e.numer(), *e.denom())
            })
            .collect();
        PuiseuxSeries::new(self.lead - Rational64::one(), self.step, coeffs).with_center(self.center.clone())
    }

    pub fn truncate(&self, len: usize) -> PuiseuxSeries {
        let mut out = self.clone();
        out.coeffs.truncate(len);
        out
    }

    /// Sums the series at `t` (principal branch of fractional powers).
    pub fn evaluate(&self, t: &Scalar, bits: usize) -> Scalar {
        let dt = t - &self.center;
        let q = self.lead.denom().lcm(self.step.denom());
        let u = if q == 1 { dt } else { nth_root(&dt, q as u32, 0, bits) };
        let lead_pow = (self.lead * Rational64::from_integer(q)).to_integer();
        let step_pow = (self.step * Rational64::from_integer(q)).to_integer();
        let us = u.powi(step_pow);
        let mut acc = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &us) + c;
        }
        &acc * &u.powi(lead_pow)
    }

    /// The `x -> -x` image of the coefficient list.
    pub fn negated(&self) -> PuiseuxSeries {
        let mut out = self.clone();
        for v in out.coeffs.iter_mut() {
            *v = -&*v;
        }
        out
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            step: exponent_to_string(self.step),
            lead: exponent_to_string(self.lead),
            first_index: self.first_index,
            n: self.trunc_order(),
            center: self.center.clone(),
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self> {
        let step = parse_exponent(&j.step)
            .filter(|s| s.is_positive())
            .ok_or_else(|| crate::Error::Parse(format!("bad series step {:?}", j.step)))?;
        let lead = parse_exponent(&j.lead)
            .ok_or_else(|| crate::Error::Parse(format!("bad series lead {:?}", j.lead)))?;
        let s = PuiseuxSeries::new(lead, step, j.coeffs.clone())
            .with_first_index(j.first_index)
            .with_center(j.center.clone());
        if s.trunc_order() != j.n {
            return Err(crate::Error::Parse(format!(
                "series N = {} inconsistent with {} coefficients from index {}",
                j.n,
                j.coeffs.len(),
                j.first_index
            )));
        }
        Ok(s)
    }

    /// Largest `k` such that every coefficient with exponent below
    /// `lead + k*step` has modulus at most `tol`.
    pub fn vanishing_prefix(&self, tol: &Scalar) -> usize {
        self.coeffs.iter().take_while(|c| c.abs_le(tol)).count()
    }

    /// `f64` view of the exponents, handy for reports.
    pub fn exponent_f64(&self, i: usize) -> f64 {
        self.exponent(i).to_f64().unwrap_or(f64::NAN)
    }
}

/// JSON carrier for a single series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesJson {
    pub step: String,
    pub lead: String,
    #[serde(default)]
    pub first_index: i64,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(default = "Scalar::zero")]
    pub center: Scalar,
    pub coeffs: Vec<Scalar>,
}
