//! Three-parameter local solutions at C = −16/5 and C = −4/3.
//!
//! C = −16/5 (`C165`):
//! ```text
//! x = √t (c1 t^-2 + Σ_{j≥-1} a_j t^j),   y = −15/8 t^-2 + Σ_{j≥-1} b_j t^j
//! (k²−4) a_k + 2 c1 b_k       = −λ a_{k−2} − 2 Σ_{j=-1}^{k-1} a_j b_{k−j−2}
//! ((k−1)k−12) b_k             = −b_{k−2} − Σ_{j=-2}^{k-1} a_j a_{k−j−3} − 16/5 Σ_{j=-1}^{k-1} b_j b_{k−j−2}
//! ```
//! C = −4/3 (`C43`):
//! ```text
//! x = √6 t^-2 + Σ_{k≥-1} d_k t^k,        y = −3 t^-2 + Σ_{k≥-1} f_k t^k
//! ((k−1)k−6) d_k + 2√6 f_k    = −λ d_{k−2} − 2 Σ_{j=-1}^{k-1} d_j f_{k−j−2}
//! 2√6 d_k + ((k−1)k−8) f_k    = −f_{k−2} − Σ_{j=-1}^{k-1} d_j d_{k−j−2} − 4/3 Σ_{j=-1}^{k-1} f_j f_{k−j−2}
//! ```
//!
//! Internally x is divided by its leading coefficient `s` (`c1` or `±√6`).
//! The scaled recurrences only involve `s²`, so they stay rational whenever
//! λ, the free parameters and `s²` are, and `x → −x` is an exact sign flip.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::odemodel::{build_henon_heiles, BivariatePoly, Monomial, PolynomialODESystem};
use crate::scalar::{
    determinant, nth_root, root_of_unity, solve_linear, DenseMatrix, LinearSolution, Scalar, DEFAULT_PRECISION,
};
use crate::series::PuiseuxSeries;
use num_rational::Rational64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeriesCase {
    C165,
    C43,
}

impl SeriesCase {
    pub fn c_value(self) -> Scalar {
        match self {
            SeriesCase::C165 => Scalar::ratio(-16, 5),
            SeriesCase::C43 => Scalar::ratio(-4, 3),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "C165" | "-16/5" => Some(SeriesCase::C165),
            "C43" | "-4/3" => Some(SeriesCase::C43),
            _ => None,
        }
    }

    /// Recurrence indices with a singular step matrix, for k ≥ −1.
    pub fn resonant_indices(self) -> &'static [i64] {
        match self {
            SeriesCase::C165 => &[2, 4],
            SeriesCase::C43 => &[-1, 2, 4],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootBranch {
    Plus,
    Minus,
    Zero,
}

impl RootBranch {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plus" | "+" => Some(RootBranch::Plus),
            "minus" | "-" => Some(RootBranch::Minus),
            "zero" | "0" => Some(RootBranch::Zero),
            _ => None,
        }
    }

    fn sign(self) -> i64 {
        match self {
            RootBranch::Plus => 1,
            RootBranch::Minus => -1,
            RootBranch::Zero => 0,
        }
    }
}

/// One local solution family.
///
/// `free_params` are `(a₂, b₄)` for C165 and `(f₂, f₄)` for C43, taken
/// literally as the series coefficients. `x_sign` flips the leading x
/// coefficient; the exact `x → −x` image of a C165 solution also needs `a₂`
/// negated. `residue_sign` picks the sign of `f₋₁` (C43 only), and
/// `quarter_turn` multiplies `c1` by `i` (C165 only, complex branches).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub case: SeriesCase,
    pub lambda: Scalar,
    pub root_branch: RootBranch,
    pub x_sign: i8,
    #[serde(default = "plus_one")]
    pub residue_sign: i8,
    #[serde(default)]
    pub quarter_turn: bool,
    pub free_params: (Scalar, Scalar),
    #[serde(default = "Scalar::zero")]
    pub t0: Scalar,
    #[serde(default = "default_bits")]
    pub bits: usize,
}

fn plus_one() -> i8 {
    1
}

fn default_bits() -> usize {
    DEFAULT_PRECISION
}

impl BranchSpec {
    pub fn new(case: SeriesCase, lambda: Scalar, root_branch: RootBranch) -> Self {
        BranchSpec {
            case,
            lambda,
            root_branch,
            x_sign: 1,
            residue_sign: 1,
            quarter_turn: false,
            free_params: (Scalar::zero(), Scalar::zero()),
            t0: Scalar::zero(),
            bits: DEFAULT_PRECISION,
        }
    }

    pub fn with_x_sign(mut self, s: i8) -> Self {
        self.x_sign = s;
        self
    }

    pub fn with_residue_sign(mut self, s: i8) -> Self {
        self.residue_sign = s;
        self
    }

    pub fn with_free_params(mut self, p: Scalar, q: Scalar) -> Self {
        self.free_params = (p, q);
        self
    }

    pub fn with_t0(mut self, t0: Scalar) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_bits(mut self, bits: usize) -> Self {
        self.bits = bits;
        self
    }

    pub fn with_quarter_turn(mut self, on: bool) -> Self {
        self.quarter_turn = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.root_branch == RootBranch::Zero && self.case == SeriesCase::C165 {
            return contract("the zero root branch exists only for C43");
        }
        if self.x_sign.abs() != 1 || self.residue_sign.abs() != 1 {
            return contract("x_sign and residue_sign must be +1 or -1");
        }
        if self.quarter_turn && self.case == SeriesCase::C43 {
            return contract("quarter_turn applies only to C165");
        }
        if self.bits < crate::scalar::MIN_PRECISION {
            return contract(format!("precision {} below the 64-bit minimum", self.bits));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let sign = |s: i8| if s > 0 { '+' } else { '-' };
        let rb = match self.root_branch {
            RootBranch::Plus => "plus",
            RootBranch::Minus => "minus",
            RootBranch::Zero => "zero",
        };
        match self.case {
            SeriesCase::C165 => format!(
                "C165/{rb}/x{}{}",
                sign(self.x_sign),
                if self.quarter_turn { "/i" } else { "" }
            ),
            SeriesCase::C43 => format!("C43/{rb}/res{}/x{}", sign(self.residue_sign), sign(self.x_sign)),
        }
    }
}

fn lambda_at(lambda: &Scalar, bits: usize) -> Scalar {
    if lambda.is_exact() {
        lambda.clone()
    } else {
        lambda.to_float(bits)
    }
}

/// `1125(525 − 1680λ ± 4√(35(2048λ² − 1280λ + 387)))/167552`
pub fn c1_fourth_power(lambda: &Scalar, branch: RootBranch, bits: usize) -> Result<Scalar> {
    if branch == RootBranch::Zero {
        return contract("c1^4 has only the plus and minus branches");
    }
    let l = lambda_at(lambda, bits);
    let quad = &(&(&Scalar::int(2048) * &(&l * &l)) - &(&Scalar::int(1280) * &l)) + &Scalar::int(387);
    let radicand = &Scalar::int(35) * &quad;
    if l.is_real() {
        // 2048λ² − 1280λ + 387 has discriminant 1280² − 4·2048·387 < 0
        assert!(radicand.cmp_real(&Scalar::zero()).is_gt(), "c1^4 radicand must be positive for real lambda");
    }
    let root = &Scalar::int(4 * branch.sign()) * &radicand.sqrt(bits);
    let num = &(&Scalar::int(525) - &(&Scalar::int(1680) * &l)) + &root;
    Ok(&(&Scalar::int(1125) * &num) / &Scalar::int(167552))
}

/// `(105 − 140λ ± √(7(1216λ² − 1824λ + 783)))/385`, or 0 on the zero branch.
pub fn f_minus1_squared(lambda: &Scalar, branch: RootBranch, bits: usize) -> Scalar {
    if branch == RootBranch::Zero {
        return Scalar::zero();
    }
    let l = lambda_at(lambda, bits);
    let quad = &(&(&Scalar::int(1216) * &(&l * &l)) - &(&Scalar::int(1824) * &l)) + &Scalar::int(783);
    let root = &Scalar::int(branch.sign()) * &(&Scalar::int(7) * &quad).sqrt(bits);
    &(&(&Scalar::int(105) - &(&Scalar::int(140) * &l)) + &root) / &Scalar::int(385)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Resolution {
    Unique,
    /// Singular step whose system is automatically consistent.
    FreedParameter { parameter: String },
    /// Singular step whose consistency fixes earlier data; `parameter`
    /// names the coefficient that is then left free.
    CompatibilityConstrained { parameter: String, condition: Scalar },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceStep {
    pub k: i64,
    /// The step matrix in the unscaled coefficients.
    pub matrix: DenseMatrix,
    pub rhs: (Scalar, Scalar),
    pub det: Scalar,
    pub resolution: Resolution,
    /// Solved `(x_k, y_k)`.
    pub solution: (Scalar, Scalar),
    /// `(x_k / s, y_k)`, what the recurrence actually carries.
    #[serde(skip)]
    pub scaled_solution: (Scalar, Scalar),
}

/// Coefficients known so far, indexed from −2, x stored divided by `scale`.
#[derive(Clone, Debug)]
pub struct RecurrenceState {
    case: SeriesCase,
    lambda: Scalar,
    scale: Scalar,
    scale_sq: Scalar,
    x_scaled: Vec<Scalar>,
    y: Vec<Scalar>,
    f_minus1: Scalar,
}

impl RecurrenceState {
    pub fn new(spec: &BranchSpec) -> Result<Self> {
        spec.validate()?;
        let bits = spec.bits;
        let lambda = lambda_at(&spec.lambda, bits);
        let sign = Scalar::int(spec.x_sign as i64);
        let (scale, scale_sq, y_lead, f_minus1) = match spec.case {
            SeriesCase::C165 => {
                let q = c1_fourth_power(&lambda, spec.root_branch, bits)?;
                let mut c1 = nth_root(&q, 4, 0, bits);
                if spec.quarter_turn {
                    c1 = &c1 * &root_of_unity(4, 1, bits);
                }
                let c1 = &c1 * &sign;
                let w = &c1 * &c1;
                (c1, w, Scalar::ratio(-15, 8), Scalar::zero())
            }
            SeriesCase::C43 => {
                let f2 = f_minus1_squared(&lambda, spec.root_branch, bits);
                let f = &f2.sqrt(bits) * &Scalar::int(spec.residue_sign as i64);
                (&Scalar::int(6).sqrt(bits) * &sign, Scalar::int(6), Scalar::int(-3), f)
            }
        };
        Ok(RecurrenceState {
            case: spec.case,
            lambda,
            scale,
            scale_sq,
            x_scaled: vec![Scalar::one()],
            y: vec![y_lead],
            f_minus1,
        })
    }

    pub fn next_index(&self) -> i64 {
        self.y.len() as i64 - 2
    }

    pub fn scale(&self) -> &Scalar {
        &self.scale
    }

    fn xs(&self, i: i64) -> Scalar {
        if i < -2 {
            return Scalar::zero();
        }
        self.x_scaled.get((i + 2) as usize).cloned().unwrap_or_else(Scalar::zero)
    }

    fn ys(&self, i: i64) -> Scalar {
        if i < -2 {
            return Scalar::zero();
        }
        self.y.get((i + 2) as usize).cloned().unwrap_or_else(Scalar::zero)
    }

    fn conv(&self, from: i64, to: i64, f: impl Fn(i64) -> (Scalar, Scalar)) -> Scalar {
        (from..=to)
            .map(|j| {
                let (u, v) = f(j);
                if u.is_zero() || v.is_zero() {
                    Scalar::zero()
                } else {
                    &u * &v
                }
            })
            .sum()
    }

    /// Scaled step matrix and right-hand side.
    fn scaled_system(&self, k: i64) -> (DenseMatrix, Scalar, Scalar) {
        let p = Scalar::int((k - 1) * k);
        let l = &self.lambda;
        match self.case {
            SeriesCase::C165 => {
                let m = DenseMatrix::from_rows(vec![
                    vec![Scalar::int(k * k - 4), Scalar::int(2)],
                    vec![Scalar::zero(), &p - &Scalar::int(12)],
                ])
                .expect("2x2");
                let s1 = self.conv(-1, k - 1, |j| (self.xs(j), self.ys(k - j - 2)));
                let r1 = &(-(l * &self.xs(k - 2))) - &(&Scalar::int(2) * &s1);
                let saa = self.conv(-2, k - 1, |j| (self.xs(j), self.xs(k - j - 3)));
                let sbb = self.conv(-1, k - 1, |j| (self.ys(j), self.ys(k - j - 2)));
                let r2 = &(&(-self.ys(k - 2)) - &(&self.scale_sq * &saa)) - &(&Scalar::ratio(16, 5) * &sbb);
                (m, r1, r2)
            }
            SeriesCase::C43 => {
                let m = DenseMatrix::from_rows(vec![
                    vec![&p - &Scalar::int(6), Scalar::int(2)],
                    vec![Scalar::int(12), &p - &Scalar::int(8)],
                ])
                .expect("2x2");
                let s1 = self.conv(-1, k - 1, |j| (self.xs(j), self.ys(k - j - 2)));
                let r1 = &(-(l * &self.xs(k - 2))) - &(&Scalar::int(2) * &s1);
                let sdd = self.conv(-1, k - 1, |j| (self.xs(j), self.xs(k - j - 2)));
                let sff = self.conv(-1, k - 1, |j| (self.ys(j), self.ys(k - j - 2)));
                let r2 = &(&(-self.ys(k - 2)) - &(&self.scale_sq * &sdd)) - &(&Scalar::ratio(4, 3) * &sff);
                (m, r1, r2)
            }
        }
    }

    fn push(&mut self, x_scaled: Scalar, y: Scalar) {
        self.x_scaled.push(x_scaled);
        self.y.push(y);
    }
}

/// Printed (unscaled) matrix: `diag(s, 1) · S · diag(1/s, 1)`.
fn unscale_matrix(m: &DenseMatrix, s: &Scalar) -> DenseMatrix {
    let mut out = m.clone();
    out.set(0, 1, &m.get(0, 1).clone() * s);
    out.set(1, 0, m.get(1, 0) / s);
    out
}

/// Which component a singular step frees, its name, and whether the
/// step's consistency is a genuine condition on earlier data.
fn singular_step(case: SeriesCase, k: i64) -> Option<(usize, &'static str, bool)> {
    match (case, k) {
        (SeriesCase::C165, 2) => Some((0, "a2", true)),
        (SeriesCase::C165, 4) => Some((1, "b4", false)),
        (SeriesCase::C43, -1) => Some((1, "f-1", false)),
        (SeriesCase::C43, 2) => Some((1, "f2", true)),
        (SeriesCase::C43, 4) => Some((1, "f4", false)),
        _ => None,
    }
}

/// Solves the recurrence step `k` given all earlier coefficients in `prior`.
pub fn step_recurrence(spec: &BranchSpec, k: i64, prior: &RecurrenceState) -> Result<RecurrenceStep> {
    if k != prior.next_index() {
        return contract(format!("step {k} requested but coefficients are known through {}", prior.next_index() - 1));
    }
    let (m, r1, r2) = prior.scaled_system(k);
    let det = determinant(&m)?;
    let s = &prior.scale;
    let matrix = unscale_matrix(&m, s);
    let rhs = (&r1 * s, r2.clone());
    let violation = |detail: String| Error::CompatibilityViolation { k, detail };

    let sol = solve_linear(&m, &[r1.clone(), r2.clone()])?;
    let (xk, yk, resolution) = match sol {
        LinearSolution::Unique(v) => {
            if !det.is_zero() {
                (v[0].clone(), v[1].clone(), Resolution::Unique)
            } else {
                return Err(violation("singular matrix reported a unique solution".into()));
            }
        }
        LinearSolution::Inconsistent => {
            return Err(violation(format!(
                "singular step is inconsistent (rhs = ({}, {}))",
                rhs.0, rhs.1
            )));
        }
        LinearSolution::Parametrized { particular, nullspace } => {
            let Some((comp, name, constrained)) = singular_step(prior.case, k) else {
                return Err(violation("unexpected singular step".into()));
            };
            if nullspace.len() != 1 {
                return Err(violation(format!("nullspace of dimension {}", nullspace.len())));
            }
            let n = &nullspace[0];
            // target value of the freed component, in scaled units
            let target = match (prior.case, k) {
                (SeriesCase::C165, 2) => &spec.free_params.0 / s,
                (SeriesCase::C165, 4) | (SeriesCase::C43, 4) => spec.free_params.1.clone(),
                (SeriesCase::C43, 2) => spec.free_params.0.clone(),
                (SeriesCase::C43, -1) => prior.f_minus1.clone(),
                _ => unreachable!(),
            };
            let mult = &(&target - &particular[comp]) / &n[comp];
            let v0 = &particular[0] + &(&mult * &n[0]);
            let v1 = &particular[1] + &(&mult * &n[1]);
            let resolution = if constrained {
                // row combination annihilating the matrix, applied to the rhs
                let cond = compatibility_residual(&m, &r1, &r2);
                Resolution::CompatibilityConstrained { parameter: name.into(), condition: cond }
            } else {
                Resolution::FreedParameter { parameter: name.into() }
            };
            (v0, v1, resolution)
        }
    };
    let solution = (&xk * s, yk.clone());
    Ok(RecurrenceStep { k, matrix, rhs, det, resolution, solution, scaled_solution: (xk, yk) })
}

/// `u·r` for the left null vector `u` of a singular 2×2 matrix.
fn compatibility_residual(m: &DenseMatrix, r1: &Scalar, r2: &Scalar) -> Scalar {
    // rows are proportional; use u = (m10, −m00) or (m11, −m01)
    let (a, b) = if !m.get(0, 0).is_zero() || !m.get(1, 0).is_zero() {
        (m.get(1, 0).clone(), m.get(0, 0).clone())
    } else {
        (m.get(1, 1).clone(), m.get(0, 1).clone())
    };
    &(&a * r1) - &(&b * r2)
}

/// A built local solution.
#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub spec: BranchSpec,
    pub x: PuiseuxSeries,
    pub y: PuiseuxSeries,
    pub h: Scalar,
    pub steps: Vec<RecurrenceStep>,
    /// Leading x coefficient `s` (`c1`, or `±√6`).
    pub x_scale: Scalar,
    /// `x / s`, exact whenever λ, the free parameters and `s²` are rational.
    pub x_scaled: PuiseuxSeries,
}

impl SeriesSolution {
    /// The system satisfied by `(x/s, y)`: `x'' = −λx − 2xy`, `y'' = −y − s²x² + Cy²`.
    pub fn scaled_system(&self) -> PolynomialODESystem {
        let c = self.spec.case.c_value();
        let lambda = lambda_at(&self.spec.lambda, self.spec.bits);
        let s2 = match self.spec.case {
            SeriesCase::C43 => Scalar::int(6),
            SeriesCase::C165 => &self.x_scale * &self.x_scale,
        };
        let rx = BivariatePoly::new(vec![Monomial::new(-&lambda, 1, 0), Monomial::new(Scalar::int(-2), 1, 1)]);
        let ry = BivariatePoly::new(vec![
            Monomial::new(Scalar::int(-1), 0, 1),
            Monomial::new(-s2, 2, 0),
            Monomial::new(c.clone(), 0, 2),
        ]);
        PolynomialODESystem::new(lambda, c, rx, ry).expect("quadratic system")
    }

    pub fn system(&self) -> PolynomialODESystem {
        build_henon_heiles(self.spec.case.c_value(), lambda_at(&self.spec.lambda, self.spec.bits))
    }

    pub fn n(&self) -> i64 {
        self.y.trunc_order()
    }

    /// `(x, y)` with a different truncation (fewer terms).
    pub fn truncated(&self, n: i64) -> (PuiseuxSeries, PuiseuxSeries) {
        let len = (n + 3).max(0) as usize;
        (self.x.truncate(len), self.y.truncate(len))
    }
}

/// Energy series in scaled variables; equals the Hamiltonian of `(s·x̃, y)`.
fn scaled_energy(x: &PuiseuxSeries, y: &PuiseuxSeries, s2: &Scalar, lambda: &Scalar, c: &Scalar) -> Result<PuiseuxSeries> {
    let xt = x.derivative();
    let yt = y.derivative();
    let x2 = x.mul(x)?;
    let y2 = y.mul(y)?;
    let half = Scalar::ratio(1, 2);
    let quad = xt
        .mul(&xt)?
        .scale(s2)
        .add(&yt.mul(&yt)?)?
        .add(&x2.scale(&(lambda * s2)))?
        .add(&y2)?
        .scale(&half);
    let cubic = x2.mul(y)?.scale(s2).sub(&y2.mul(y)?.scale(&(c * &Scalar::ratio(1, 3))))?;
    quad.add(&cubic)
}

/// Steps the recurrence from k = −1 through k = `n`.
pub fn build_series(spec: &BranchSpec, n: i64) -> Result<SeriesSolution> {
    if n < 5 {
        return contract(format!("truncation order N = {n} must be at least 5 to pass k = 4"));
    }
    let mut state = RecurrenceState::new(spec)?;
    let mut steps = Vec::with_capacity((n + 2) as usize);
    for k in -1..=n {
        let st = step_recurrence(spec, k, &state)?;
        let (xk, yk) = st.scaled_solution.clone();
        state.push(xk, yk);
        steps.push(st);
    }
    let lead_x = match spec.case {
        SeriesCase::C165 => Rational64::new(-3, 2),
        SeriesCase::C43 => Rational64::from_integer(-2),
    };
    let one = Rational64::from_integer(1);
    let x_scaled = PuiseuxSeries::new(lead_x, one, state.x_scaled.clone()).with_first_index(-2);
    let y0 = PuiseuxSeries::new(Rational64::from_integer(-2), one, state.y.clone()).with_first_index(-2);
    let c = spec.case.c_value();
    let energy = scaled_energy(&x_scaled, &y0, &state.scale_sq, &state.lambda, &c)?;
    let h = energy.coeff_at(Rational64::from_integer(0)).unwrap_or_else(Scalar::zero);

    let x = x_scaled
        .scale(&state.scale)
        .with_first_index(-2)
        .with_center(spec.t0.clone());
    Ok(SeriesSolution {
        spec: spec.clone(),
        x,
        y: y0.with_center(spec.t0.clone()),
        h,
        steps,
        x_scale: state.scale.clone(),
        x_scaled: x_scaled.with_center(spec.t0.clone()),
    })
}

fn same_series(a: &SeriesSolution, b: &SeriesSolution) -> bool {
    let tol = Scalar::half_precision_eps(a.spec.bits);
    let close = |p: &PuiseuxSeries, q: &PuiseuxSeries| {
        p.coeffs().len() == q.coeffs().len()
            && p.coeffs().iter().zip(q.coeffs()).all(|(u, v)| u.approx_eq(v, &(&tol * &(Scalar::one() + u.abs()))))
    };
    close(&a.x, &b.x) && close(&a.y, &b.y)
}

/// Outcome of branch enumeration: nominal specs that build consistently
/// (deduplicated), those merged into an earlier one, and those rejected by
/// a compatibility condition.
#[derive(Clone, Debug, Serialize)]
pub struct BranchEnumeration {
    pub branches: Vec<BranchSpec>,
    pub merged: Vec<(BranchSpec, String)>,
    pub rejected: Vec<(BranchSpec, String)>,
}

fn nominal_specs(case: SeriesCase, lambda: &Scalar, include_complex: bool) -> Vec<BranchSpec> {
    let mut specs = Vec::new();
    match case {
        SeriesCase::C165 => {
            let turns: &[bool] = if include_complex { &[false, true] } else { &[false] };
            for &turn in turns {
                for rb in [RootBranch::Plus, RootBranch::Minus] {
                    for xs in [1, -1] {
                        specs.push(
                            BranchSpec::new(case, lambda.clone(), rb)
                                .with_x_sign(xs)
                                .with_quarter_turn(turn),
                        );
                    }
                }
            }
        }
        SeriesCase::C43 => {
            specs.push(BranchSpec::new(case, lambda.clone(), RootBranch::Zero));
            for rb in [RootBranch::Plus, RootBranch::Minus] {
                for rs in [1, -1] {
                    specs.push(BranchSpec::new(case, lambda.clone(), rb).with_residue_sign(rs));
                }
            }
        }
    }
    specs
}

/// Nominal branches: C165 `{plus, minus} × x_sign ±` (plus the `i·c1`
/// rotations when `include_complex`); C43 `f₋₁ ∈ {0, ±√F₊, ±√F₋}` with
/// `x_sign = +`, whose `x → −x` images follow from [`BranchSpec::with_x_sign`].
/// Each is built to a short order; coincident series are merged.
pub fn enumerate_branches_report(case: SeriesCase, lambda: &Scalar, include_complex: bool) -> Result<BranchEnumeration> {
    let mut kept: Vec<(BranchSpec, SeriesSolution)> = Vec::new();
    let mut merged = Vec::new();
    let mut rejected = Vec::new();
    for spec in nominal_specs(case, lambda, include_complex) {
        match build_series(&spec, 6) {
            Ok(sol) => match kept.iter().find(|(_, other)| same_series(other, &sol)) {
                Some((first, _)) => merged.push((spec, first.label())),
                None => kept.push((spec, sol)),
            },
            Err(e @ Error::CompatibilityViolation { .. }) => rejected.push((spec, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(BranchEnumeration { branches: kept.into_iter().map(|(s, _)| s).collect(), merged, rejected })
}

pub fn enumerate_branches(case: SeriesCase, lambda: &Scalar, include_complex: bool) -> Result<Vec<BranchSpec>> {
    Ok(enumerate_branches_report(case, lambda, include_complex)?.branches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odemodel::{energy_series, residual_of_series, split_energy};

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn radicand_at_vertex() {
        let l = q(5, 16);
        let quad = &(&(&Scalar::int(2048) * &(&l * &l)) - &(&Scalar::int(1280) * &l)) + &Scalar::int(387);
        assert_eq!(&Scalar::int(35) * &quad, Scalar::int(6545));
        c1_fourth_power(&l, RootBranch::Plus, 256).unwrap();
    }

    #[test]
    fn f_minus1_squared_at_lambda_one() {
        assert_eq!(f_minus1_squared(&Scalar::one(), RootBranch::Plus, 256), Scalar::zero());
        assert_eq!(f_minus1_squared(&Scalar::one(), RootBranch::Minus, 256), q(-2, 11));
        assert_eq!(f_minus1_squared(&q(3, 7), RootBranch::Zero, 256), Scalar::zero());
    }

    #[test]
    fn low_order_c165_coefficients() {
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
        let sol = build_series(&spec, 6).unwrap();
        let c1 = sol.x_scale.clone();
        let tol = Scalar::ten_pow_neg(60);
        assert!(sol.y.at_index(-1).unwrap().approx_eq(&(&(&c1 * &c1) / &Scalar::int(10)), &tol));
        assert!(sol.x.at_index(-1).unwrap().approx_eq(&(&c1.powi(3) / &Scalar::int(15)), &tol));
    }

    #[test]
    fn step_examples() {
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
        let sol = build_series(&spec, 6).unwrap();
        let at = |k: i64| sol.steps.iter().find(|s| s.k == k).unwrap();
        assert_eq!(at(3).det, Scalar::int(-30));
        assert_eq!(at(3).resolution, Resolution::Unique);
        assert_eq!(at(4).det, Scalar::zero());
        assert!(matches!(&at(4).resolution, Resolution::FreedParameter { parameter } if parameter == "b4"));
        assert!(matches!(&at(2).resolution, Resolution::CompatibilityConstrained { parameter, .. } if parameter == "a2"));

        let spec = BranchSpec::new(SeriesCase::C43, q(1, 9), RootBranch::Minus);
        let sol = build_series(&spec, 6).unwrap();
        let first = &sol.steps[0];
        assert_eq!(first.k, -1);
        assert_eq!(first.det, Scalar::zero());
        assert!(matches!(&first.resolution, Resolution::FreedParameter { parameter } if parameter == "f-1"));
    }

    #[test]
    fn printed_matrix_has_sqrt6_entries() {
        let spec = BranchSpec::new(SeriesCase::C43, q(1, 2), RootBranch::Zero);
        let sol = build_series(&spec, 5).unwrap();
        let m = &sol.steps[0].matrix;
        let two_sqrt6 = &Scalar::int(2) * &Scalar::int(6).sqrt(256);
        let tol = Scalar::ten_pow_neg(60);
        assert!(m.get(0, 1).approx_eq(&two_sqrt6, &tol));
        assert!(m.get(1, 0).approx_eq(&two_sqrt6, &tol));
        assert_eq!(m.get(0, 0), &Scalar::int(-4));
        assert_eq!(m.get(1, 1), &Scalar::int(-6));
    }

    #[test]
    fn free_parameters_are_placed() {
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus).with_free_params(q(1, 3), q(-2, 7));
        let sol = build_series(&spec, 8).unwrap();
        let tol = Scalar::ten_pow_neg(60);
        assert!(sol.x.at_index(2).unwrap().approx_eq(&q(1, 3), &tol));
        assert!(sol.y.at_index(4).unwrap().approx_eq(&q(-2, 7), &tol));

        let spec = BranchSpec::new(SeriesCase::C43, q(1, 9), RootBranch::Plus).with_free_params(q(1, 3), q(-2, 7));
        let sol = build_series(&spec, 8).unwrap();
        assert!(sol.y.at_index(2).unwrap().approx_eq(&q(1, 3), &tol));
        assert!(sol.y.at_index(4).unwrap().approx_eq(&q(-2, 7), &tol));
    }

    #[test]
    fn c165_residual_and_energy() {
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
        let sol = build_series(&spec, 20).unwrap();
        let (rx, ry) = residual_of_series(&sol.system(), &sol.x, &sol.y).unwrap();
        let tol = Scalar::ten_pow_neg(25);
        assert!(rx.max_abs().abs_le(&tol), "{}", rx.max_abs());
        assert!(ry.max_abs().abs_le(&tol), "{}", ry.max_abs());
        let (h, drift) = split_energy(&energy_series(&sol.system(), &sol.x, &sol.y).unwrap());
        assert!(drift.abs_le(&tol));
        assert!(h.approx_eq(&sol.h, &tol));
    }

    #[test]
    fn c43_zero_branch_is_exact() {
        // f₋₁ = 0 is compatible only at λ ∈ {1/2, 1}
        let spec = BranchSpec::new(SeriesCase::C43, q(1, 2), RootBranch::Zero).with_free_params(q(1, 2), q(-1, 3));
        let sol = build_series(&spec, 16).unwrap();
        assert!(sol.x_scaled.coeffs().iter().all(Scalar::is_exact));
        assert!(sol.y.coeffs().iter().all(Scalar::is_exact));
        assert!(sol.h.is_exact());
        let (rx, ry) = residual_of_series(&sol.scaled_system(), &sol.x_scaled, &sol.y).unwrap();
        assert!(rx.is_identically_zero() && ry.is_identically_zero());
    }

    #[test]
    fn tampered_branch_violates_compatibility() {
        // C165 with a c1 that does not satisfy the k = 2 condition
        let mut state = RecurrenceState::new(&BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus)).unwrap();
        state.scale = &state.scale * &q(11, 10);
        state.scale_sq = &state.scale * &state.scale;
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
        let mut err = None;
        for k in -1..=3 {
            match step_recurrence(&spec, k, &state) {
                Ok(st) => state.push(st.scaled_solution.0, st.scaled_solution.1),
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert!(matches!(err, Some(Error::CompatibilityViolation { k: 2, .. })));
    }

    #[test]
    fn zero_residue_needs_special_lambda() {
        for l in [q(1, 9), q(2, 5), Scalar::int(2)] {
            let spec = BranchSpec::new(SeriesCase::C43, l, RootBranch::Zero);
            assert!(matches!(build_series(&spec, 6), Err(Error::CompatibilityViolation { k: 2, .. })));
        }
        for l in [q(1, 2), Scalar::one()] {
            build_series(&BranchSpec::new(SeriesCase::C43, l, RootBranch::Zero), 6).unwrap();
        }
    }

    #[test]
    fn small_n_rejected() {
        let spec = BranchSpec::new(SeriesCase::C43, q(1, 9), RootBranch::Zero);
        assert!(matches!(build_series(&spec, 4), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn branch_counts() {
        assert_eq!(enumerate_branches(SeriesCase::C165, &q(1, 9), false).unwrap().len(), 4);
        assert_eq!(enumerate_branches(SeriesCase::C165, &q(1, 9), true).unwrap().len(), 8);
        let generic = enumerate_branches_report(SeriesCase::C43, &q(1, 9), false).unwrap();
        assert_eq!(generic.branches.len(), 4);
        assert_eq!(generic.rejected.len(), 1);
        assert_eq!(generic.rejected[0].0.root_branch, RootBranch::Zero);
        for l in [Scalar::one(), q(1, 2)] {
            let merged = enumerate_branches_report(SeriesCase::C43, &l, false).unwrap();
            assert_eq!(merged.branches.len(), 3);
            assert_eq!(merged.merged.len(), 2);
        }
    }
}
