//! The generalized Hénon–Heiles model
//!
//! ```text
//! H = ½(x_t² + y_t² + λx² + y²) + x²y − (C/3)y³
//! x_tt = −λx − 2xy,   y_tt = −y − x² + Cy²
//! ```
//!
//! together with its fourth-order scalar reduction, formal residuals on
//! series, and a Taylor-series integrator used as an independent numeric check.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::scalar::{Scalar, MIN_PRECISION};
use crate::series::PuiseuxSeries;

/// `coef · x^px · y^py`
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coef: Scalar,
    pub px: u32,
    pub py: u32,
}

impl Monomial {
    pub fn new(coef: Scalar, px: u32, py: u32) -> Self {
        Monomial { coef, px, py }
    }

    pub fn degree(&self) -> u32 {
        self.px + self.py
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BivariatePoly {
    pub terms: Vec<Monomial>,
}

impl BivariatePoly {
    pub fn new(terms: Vec<Monomial>) -> Self {
        BivariatePoly { terms: terms.into_iter().filter(|m| !m.coef.is_zero()).collect() }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Scalar, y: &Scalar) -> Scalar {
        self.terms
            .iter()
            .map(|m| &(&m.coef * &x.powi(m.px as i64)) * &y.powi(m.py as i64))
            .sum()
    }

    pub fn partial_x(&self) -> BivariatePoly {
        BivariatePoly::new(
            self.terms
                .iter()
                .filter(|m| m.px > 0)
                .map(|m| Monomial::new(&m.coef * &Scalar::int(m.px as i64), m.px - 1, m.py))
                .collect(),
        )
    }

    pub fn partial_y(&self) -> BivariatePoly {
        BivariatePoly::new(
            self.terms
                .iter()
                .filter(|m| m.py > 0)
                .map(|m| Monomial::new(&m.coef * &Scalar::int(m.py as i64), m.px, m.py - 1))
                .collect(),
        )
    }

    /// Substitutes series for `x` and `y`.
    pub fn eval_series(&self, xs: &PuiseuxSeries, ys: &PuiseuxSeries) -> Result<Option<PuiseuxSeries>> {
        let mut acc: Option<PuiseuxSeries> = None;
        let mut constant = Scalar::zero();
        for m in &self.terms {
            if m.degree() == 0 {
                constant = &constant + &m.coef;
                continue;
            }
            let mut term: Option<PuiseuxSeries> = None;
            for (s, p) in [(xs, m.px), (ys, m.py)] {
                for _ in 0..p {
                    term = Some(match term {
                        None => s.clone(),
                        Some(t) => t.mul(s)?,
                    });
                }
            }
            let term = term.expect("nonconstant monomial").scale(&m.coef);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        match acc {
            Some(a) => Ok(Some(a.add_constant(&constant)?)),
            None if constant.is_zero() => Ok(None),
            None => contract("constant right-hand side has no series lattice to live on"),
        }
    }
}

/// Second-order system `(x_tt, y_tt) = (rhs[0](x,y), rhs[1](x,y))`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialODESystem {
    pub lambda: Scalar,
    pub c: Scalar,
    rhs: [BivariatePoly; 2],
}

impl PolynomialODESystem {
    /// General quadratic system; the energy functions still use the
    /// Hénon–Heiles Hamiltonian with the given `(λ, C)`.
    pub fn new(lambda: Scalar, c: Scalar, rhs_x: BivariatePoly, rhs_y: BivariatePoly) -> Result<Self> {
        if rhs_x.degree() > 2 || rhs_y.degree() > 2 {
            return contract("right-hand sides must have total degree at most 2");
        }
        Ok(PolynomialODESystem { lambda, c, rhs: [rhs_x, rhs_y] })
    }

    pub fn rhs(&self) -> &[BivariatePoly; 2] {
        &self.rhs
    }

    pub fn eval_rhs(&self, x: &Scalar, y: &Scalar) -> (Scalar, Scalar) {
        (self.rhs[0].eval(x, y), self.rhs[1].eval(x, y))
    }
}

pub fn build_henon_heiles(c: Scalar, lambda: Scalar) -> PolynomialODESystem {
    let rhs_x = BivariatePoly::new(vec![
        Monomial::new(-&lambda, 1, 0),
        Monomial::new(Scalar::int(-2), 1, 1),
    ]);
    let rhs_y = BivariatePoly::new(vec![
        Monomial::new(Scalar::int(-1), 0, 1),
        Monomial::new(Scalar::int(-1), 2, 0),
        Monomial::new(c.clone(), 0, 2),
    ]);
    PolynomialODESystem { lambda, c, rhs: [rhs_x, rhs_y] }
}

/// The potential part of the Hamiltonian as a polynomial.
pub fn potential(lambda: &Scalar, c: &Scalar) -> BivariatePoly {
    BivariatePoly::new(vec![
        Monomial::new(lambda * &Scalar::ratio(1, 2), 2, 0),
        Monomial::new(Scalar::ratio(1, 2), 0, 2),
        Monomial::new(Scalar::one(), 2, 1),
        Monomial::new(-(c * &Scalar::ratio(1, 3)), 0, 3),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Scalar,
    pub xt: Scalar,
    pub y: Scalar,
    pub yt: Scalar,
    pub t: Scalar,
}

impl PhaseState {
    pub fn at_rest(x: Scalar, y: Scalar, t: Scalar) -> Self {
        PhaseState { x, xt: Scalar::zero(), y, yt: Scalar::zero(), t }
    }

    fn components(&self) -> [&Scalar; 4] {
        [&self.x, &self.xt, &self.y, &self.yt]
    }
}

pub fn energy(sys: &PolynomialODESystem, s: &PhaseState) -> Scalar {
    let kinetic = &(&s.xt * &s.xt) + &(&s.yt * &s.yt);
    &(&kinetic * &Scalar::ratio(1, 2)) + &potential(&sys.lambda, &sys.c).eval(&s.x, &s.y)
}

/// `y'''' = a1·y''y + a2·y'' + a3·y'² + a4·y³ + a5·y² + a6·y + a7`
#[derive(Clone, Debug, PartialEq)]
pub struct FourthOrderForm {
    pub c: Scalar,
    pub lambda: Scalar,
    pub h: Scalar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourthOrderCoefficients {
    pub ytt_y: Scalar,
    pub ytt: Scalar,
    pub yt_sq: Scalar,
    pub y_cube: Scalar,
    pub y_sq: Scalar,
    pub y: Scalar,
    pub constant: Scalar,
}

pub fn reduce_to_fourth_order(sys: &PolynomialODESystem, h: Scalar) -> FourthOrderForm {
    FourthOrderForm { c: sys.c.clone(), lambda: sys.lambda.clone(), h }
}

impl FourthOrderForm {
    pub fn coefficients(&self) -> FourthOrderCoefficients {
        let c = &self.c;
        let l = &self.lambda;
        FourthOrderCoefficients {
            ytt_y: &(c * &Scalar::int(2)) - &Scalar::int(8),
            ytt: -(&(l * &Scalar::int(4)) + &Scalar::one()),
            yt_sq: &(c + &Scalar::one()) * &Scalar::int(2),
            y_cube: c * &Scalar::ratio(20, 3),
            y_sq: &(&(c * l) * &Scalar::int(4)) - &Scalar::int(6),
            y: l * &Scalar::int(-4),
            constant: &self.h * &Scalar::int(-4),
        }
    }

    /// `y'''' − RHS` on a y-series.
    pub fn residual(&self, ys: &PuiseuxSeries) -> Result<PuiseuxSeries> {
        let k = self.coefficients();
        let y1 = ys.derivative();
        let y2 = y1.derivative();
        let y4 = y2.derivative().derivative();
        let rhs = y2
            .mul(ys)?
            .scale(&k.ytt_y)
            .add(&y2.scale(&k.ytt))?
            .add(&y1.mul(&y1)?.scale(&k.yt_sq))?
            .add(&ys.mul(ys)?.mul(ys)?.scale(&k.y_cube))?
            .add(&ys.mul(ys)?.scale(&k.y_sq))?
            .add(&ys.scale(&k.y))?
            .add_constant(&k.constant)?;
        y4.sub(&rhs)
    }
}

fn check_pair(xs: &PuiseuxSeries, ys: &PuiseuxSeries) -> Result<()> {
    if xs.trunc_order() != ys.trunc_order() {
        return contract(format!(
            "series truncation orders differ: {} vs {}",
            xs.trunc_order(),
            ys.trunc_order()
        ));
    }
    if xs.step() != ys.step() || xs.center() != ys.center() {
        return contract("series pair must share step and center");
    }
    Ok(())
}

/// `(x_tt − rhs₁, y_tt − rhs₂)` as truncated series.
pub fn residual_of_series(
    sys: &PolynomialODESystem,
    xs: &PuiseuxSeries,
    ys: &PuiseuxSeries,
) -> Result<(PuiseuxSeries, PuiseuxSeries)> {
    check_pair(xs, ys)?;
    let mut out = Vec::with_capacity(2);
    for (s, rhs) in [xs, ys].into_iter().zip(sys.rhs.iter()) {
        let tt = s.derivative().derivative();
        out.push(match rhs.eval_series(xs, ys)? {
            Some(r) => tt.sub(&r)?,
            None => tt,
        });
    }
    let ry = out.pop().expect("two components");
    let rx = out.pop().expect("two components");
    Ok((rx, ry))
}

/// Formal expansion of the Hamiltonian along a series solution.
pub fn energy_series(sys: &PolynomialODESystem, xs: &PuiseuxSeries, ys: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    check_pair(xs, ys)?;
    let xt = xs.derivative();
    let yt = ys.derivative();
    let kinetic = xt.mul(&xt)?.add(&yt.mul(&yt)?)?.scale(&Scalar::ratio(1, 2));
    match potential(&sys.lambda, &sys.c).eval_series(xs, ys)? {
        Some(v) => kinetic.add(&v),
        None => Ok(kinetic),
    }
}

/// Constant term and largest nonconstant coefficient of an energy series.
pub fn split_energy(e: &PuiseuxSeries) -> (Scalar, Scalar) {
    let zero = num_rational::Rational64::from_integer(0);
    let mut h = Scalar::zero();
    let mut worst = Scalar::zero();
    for (i, c) in e.coeffs().iter().enumerate() {
        if e.exponent(i) == zero {
            h = c.clone();
        } else if c.cmp_abs(&worst).is_gt() {
            worst = c.abs();
        }
    }
    (h, worst)
}

const TAYLOR_ORDER: usize = 24;
const MAX_STEPS: usize = 1_000_000;

fn product_coeff(a: &[Scalar], b: &[Scalar], k: usize) -> Scalar {
    (0..=k).map(|l| &a[l] * &b[k - l]).sum()
}

/// Taylor coefficients of `x(t0+h)`, `y(t0+h)` through `h^order`.
fn taylor_coefficients(sys: &PolynomialODESystem, s: &PhaseState, order: usize) -> (Vec<Scalar>, Vec<Scalar>) {
    let mut xs = vec![s.x.clone(), s.xt.clone()];
    let mut ys = vec![s.y.clone(), s.yt.clone()];
    for k in 0..=order - 2 {
        let mut f = [Scalar::zero(), Scalar::zero()];
        for (fi, rhs) in f.iter_mut().zip(sys.rhs.iter()) {
            for m in &rhs.terms {
                let v = match (m.px, m.py) {
                    (0, 0) if k == 0 => Scalar::one(),
                    (0, 0) => continue,
                    (1, 0) => xs[k].clone(),
                    (0, 1) => ys[k].clone(),
                    (2, 0) => product_coeff(&xs, &xs, k),
                    (1, 1) => product_coeff(&xs, &ys, k),
                    (0, 2) => product_coeff(&ys, &ys, k),
                    _ => unreachable!("degree checked at construction"),
                };
                *fi = &*fi + &(&m.coef * &v);
            }
        }
        let denom = Scalar::int(((k + 1) * (k + 2)) as i64).recip();
        let [fx, fy] = f;
        xs.push(&fx * &denom);
        ys.push(&fy * &denom);
    }
    (xs, ys)
}

fn horner(c: &[Scalar], h: &Scalar) -> (Scalar, Scalar) {
    let mut v = Scalar::zero();
    let mut d = Scalar::zero();
    for (k, ck) in c.iter().enumerate().rev() {
        v = &(&v * h) + ck;
        if k > 0 {
            d = &(&d * h) + &(ck * &Scalar::int(k as i64));
        }
    }
    (v, d)
}

fn state_precision(s0: &PhaseState, t_end: &Scalar, tol: &Scalar) -> usize {
    let explicit = s0
        .components()
        .into_iter()
        .chain([&s0.t, t_end])
        .filter_map(Scalar::precision)
        .max();
    // enough bits to resolve tol with headroom
    let needed = (-tol.abs_f64().max(1e-300).log2()).ceil() as usize + 64;
    explicit.unwrap_or(crate::scalar::DEFAULT_PRECISION).max(needed).max(MIN_PRECISION)
}

/// Adaptive fixed-order Taylor integration from `s0.t` to `t_end` along the
/// real segment. Each step keeps the two trailing Taylor terms below `tol`.
pub fn integrate_numeric(
    sys: &PolynomialODESystem,
    s0: &PhaseState,
    t_end: &Scalar,
    tol: &Scalar,
) -> Result<PhaseState> {
    if !tol.is_real() || tol.cmp_real(&Scalar::zero()).is_le() {
        return contract("integration tolerance must be a positive real");
    }
    if !s0.t.is_real() || !t_end.is_real() {
        return contract("integration path must be real");
    }
    let bits = state_precision(s0, t_end, tol);
    let tol_f = tol.to_f64();
    let margin = tol_f.powf(0.25);
    let p = TAYLOR_ORDER;

    let mut s = PhaseState {
        x: s0.x.to_float(bits),
        xt: s0.xt.to_float(bits),
        y: s0.y.to_float(bits),
        yt: s0.yt.to_float(bits),
        t: s0.t.clone(),
    };
    for _ in 0..MAX_STEPS {
        let remaining = t_end - &s.t;
        if remaining.is_zero() {
            s.t = t_end.clone();
            return Ok(s);
        }
        let (cx, cy) = taylor_coefficients(sys, &s, p);
        let norm = |k: usize| cx[k].abs_f64().max(cy[k].abs_f64());
        // radius estimate from the two highest coefficients
        let mut rho = f64::INFINITY;
        let mut h = f64::INFINITY;
        for k in [p - 1, p] {
            let n = norm(k);
            if n > 0.0 {
                rho = rho.min(n.powf(-1.0 / k as f64));
                h = h.min(0.5 * (tol_f / n).powf(1.0 / k as f64));
            }
        }
        if rho < margin {
            return Err(Error::SingularityApproach { t: s.t.to_string() });
        }
        let rem_f = remaining.to_f64();
        let full = h >= rem_f.abs();
        let h = if full {
            remaining.clone()
        } else {
            Scalar::from_f64(h.copysign(rem_f), bits)
        };
        if !full && h.abs_f64() < margin * 1e-12 {
            return Err(Error::SingularityApproach { t: s.t.to_string() });
        }
        let (x, xt) = horner(&cx, &h);
        let (y, yt) = horner(&cy, &h);
        let t = if full { t_end.clone() } else { &s.t + &h };
        s = PhaseState { x, xt, y, yt, t };
    }
    Err(Error::SingularityApproach { t: s.t.to_string() })
}
