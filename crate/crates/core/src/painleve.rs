//! Dominant balances, resonances and the (C, λ) classification.
//!
//! Resonances are obtained twice: from the closed-form table and from the
//! determinant of the linearized (Kowalevski) matrix around each balance.
//! The two must agree before a result is returned.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::odemodel::{build_henon_heiles, BivariatePoly};
use crate::scalar::{match_multisets, poly_mul, poly_roots, Scalar, DEFAULT_PRECISION};

/// Agreement required between the table and the Kowalevski determinant.
pub const RESONANCE_AGREEMENT: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    Case1,
    Case2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominantBalance {
    pub case_tag: CaseTag,
    pub alpha: Scalar,
    pub beta: Scalar,
    /// `None` marks the arbitrary leading coefficient of Case 2.
    pub a_alpha: Option<Scalar>,
    pub b_beta: Scalar,
    /// +1 or −1: the sign in front of the square root in `a_α` (Case 1) or `α` (Case 2).
    pub sign: i8,
    pub logarithmic: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceSet {
    pub values: Vec<Scalar>,
    pub all_integer: bool,
    /// More than one resonance with negative real part (−1 is always present).
    pub has_extra_negative: bool,
    /// Largest distance between table values and Kowalevski roots.
    pub kowalevski_deviation: Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictLabel {
    IntegrableCandidate,
    ThreeParameterCandidate,
    Logarithmic,
    Generic,
}

impl VerdictLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictLabel::IntegrableCandidate => "integrable-candidate",
            VerdictLabel::ThreeParameterCandidate => "three-parameter-candidate",
            VerdictLabel::Logarithmic => "logarithmic",
            VerdictLabel::Generic => "generic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyzedBalance {
    pub balance: DominantBalance,
    pub resonances: ResonanceSet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationVerdict {
    pub label: VerdictLabel,
    pub detail: String,
    pub balances: Vec<AnalyzedBalance>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateC {
    pub c: Scalar,
    pub case_tag: Option<CaseTag>,
    pub annotation: String,
}

fn bits_of(c: &Scalar) -> usize {
    c.precision().unwrap_or(DEFAULT_PRECISION)
}

/// Exact equality for rationals, `2^(-bits/2)` closeness otherwise.
fn same(a: &Scalar, b: &Scalar) -> bool {
    if a.is_exact() && b.is_exact() {
        return a == b;
    }
    let bits = a.precision().or(b.precision()).unwrap_or(DEFAULT_PRECISION);
    a.approx_eq(b, &Scalar::half_precision_eps(bits))
}

fn reject_zero(c: &Scalar) -> Result<()> {
    if c.is_zero() {
        return Err(Error::UnsupportedParameter("C = 0: Case-2 balances divide by C".into()));
    }
    Ok(())
}

fn case2_root(c: &Scalar, bits: usize) -> Scalar {
    (&Scalar::one() - &(&Scalar::int(48) / c)).sqrt(bits)
}

fn case1_root(c: &Scalar, bits: usize) -> Scalar {
    (&Scalar::one() - &(&Scalar::int(24) * &(&Scalar::one() + c))).sqrt(bits)
}

pub fn find_dominant_balances(c: &Scalar) -> Result<Vec<DominantBalance>> {
    reject_zero(c)?;
    let bits = bits_of(c);
    let two = Scalar::int(-2);
    let mut out = Vec::new();

    let log_case = same(c, &Scalar::int(-2));
    if log_case {
        out.push(DominantBalance {
            case_tag: CaseTag::Case1,
            alpha: two.clone(),
            beta: two.clone(),
            a_alpha: Some(Scalar::zero()),
            b_beta: Scalar::int(-3),
            sign: 1,
            logarithmic: true,
            note: Some("a_alpha = 0: the leading behaviour involves a logarithm, not a pure power".into()),
        });
    } else {
        let root = &Scalar::int(3) * &(&Scalar::int(2) + c).sqrt(bits);
        for sign in [1i8, -1] {
            out.push(DominantBalance {
                case_tag: CaseTag::Case1,
                alpha: two.clone(),
                beta: two.clone(),
                a_alpha: Some(&root * &Scalar::int(sign as i64)),
                b_beta: Scalar::int(-3),
                sign,
                logarithmic: false,
                note: None,
            });
        }
    }

    let s = case2_root(c, bits);
    for sign in [-1i8, 1] {
        let alpha = &(&Scalar::one() + &(&s * &Scalar::int(sign as i64))) * &Scalar::ratio(1, 2);
        if log_case && same(&alpha, &two) {
            // this branch is the Case-1 balance above
            continue;
        }
        let note = (alpha.re().cmp_real(&two).is_le())
            .then(|| "Re(alpha) <= beta: not a Case-2 ordering, kept for completeness".to_string());
        out.push(DominantBalance {
            case_tag: CaseTag::Case2,
            alpha,
            beta: two.clone(),
            a_alpha: None,
            b_beta: &Scalar::int(6) / c,
            sign,
            logarithmic: false,
            note,
        });
    }
    Ok(out)
}

/// Closed-form resonances, in the order they are listed.
fn table_resonances(b: &DominantBalance, c: &Scalar) -> Vec<Scalar> {
    let bits = bits_of(c);
    match b.case_tag {
        CaseTag::Case1 => {
            let d = &case1_root(c, bits) * &Scalar::ratio(1, 2);
            let half = Scalar::ratio(5, 2);
            vec![Scalar::int(-1), Scalar::int(6), &half - &d, &half + &d]
        }
        CaseTag::Case2 => {
            // α = (1 ∓ s)/2 pairs with r = ±s
            let s = case2_root(c, bits);
            let r = &s * &Scalar::int(-(b.sign as i64));
            vec![Scalar::int(-1), Scalar::zero(), Scalar::int(6), r]
        }
    }
}

/// `(α+r)(α+r−1)` as a polynomial in r.
fn shifted_falling(alpha: &Scalar) -> Vec<Scalar> {
    vec![
        alpha * &(alpha - &Scalar::one()),
        &(alpha * &Scalar::int(2)) - &Scalar::one(),
        Scalar::one(),
    ]
}

/// Jacobian entries of the part of `rhs` whose weight equals `target`.
fn dominant_jacobian(
    rhs: &BivariatePoly,
    target: &Scalar,
    alpha: &Scalar,
    beta: &Scalar,
    a: &Scalar,
    b: &Scalar,
) -> (Scalar, Scalar) {
    let mut dx = Scalar::zero();
    let mut dy = Scalar::zero();
    for m in &rhs.terms {
        let w = &(alpha * &Scalar::int(m.px as i64)) + &(beta * &Scalar::int(m.py as i64));
        if !same(&w, target) {
            continue;
        }
        if m.px > 0 {
            let v = &(&m.coef * &Scalar::int(m.px as i64)) * &(&a.powi(m.px as i64 - 1) * &b.powi(m.py as i64));
            dx = &dx + &v;
        }
        if m.py > 0 {
            let v = &(&m.coef * &Scalar::int(m.py as i64)) * &(&a.powi(m.px as i64) * &b.powi(m.py as i64 - 1));
            dy = &dy + &v;
        }
    }
    (dx, dy)
}

/// Determinant of the Kowalevski matrix as a polynomial in r (ascending).
///
/// Substituting `x = a τ^α + p τ^(α+r)`, `y = b τ^β + q τ^(β+r)` and keeping
/// terms linear in `(p, q)` gives `K(r)·(p, q) = 0` with
/// `K = diag((α+r)(α+r−1), (β+r)(β+r−1)) − J`, `J` the Jacobian of the
/// dominant right-hand-side terms at `(a, b)`.
pub fn kowalevski_polynomial(b: &DominantBalance, c: &Scalar, lambda: &Scalar) -> Vec<Scalar> {
    let sys = build_henon_heiles(c.clone(), lambda.clone());
    // Case 2 leaves a_α free; any nonzero value gives the same resonances
    let a = b.a_alpha.clone().unwrap_or_else(Scalar::one);
    let [rx, ry] = sys.rhs();
    let two = Scalar::int(2);
    let (j11, j12) = dominant_jacobian(rx, &(&b.alpha - &two), &b.alpha, &b.beta, &a, &b.b_beta);
    let (j21, j22) = dominant_jacobian(ry, &(&b.beta - &two), &b.alpha, &b.beta, &a, &b.b_beta);
    let mut k11 = shifted_falling(&b.alpha);
    k11[0] = &k11[0] - &j11;
    let mut k22 = shifted_falling(&b.beta);
    k22[0] = &k22[0] - &j22;
    let mut det = poly_mul(&k11, &k22);
    det[0] = &det[0] - &(&j12 * &j21);
    det
}

pub fn resonances(b: &DominantBalance, c: &Scalar) -> Result<ResonanceSet> {
    resonances_with_lambda(b, c, &Scalar::one())
}

/// λ only enters through subdominant terms, so it never affects resonances;
/// it is accepted here so callers can check that directly.
pub fn resonances_with_lambda(b: &DominantBalance, c: &Scalar, lambda: &Scalar) -> Result<ResonanceSet> {
    reject_zero(c)?;
    let bits = bits_of(c);
    let values = table_resonances(b, c);
    let poly = kowalevski_polynomial(b, c, lambda);
    let roots = poly_roots(&poly, bits);
    let dev = match_multisets(&values, &roots).ok_or_else(|| {
        Error::ContractViolation(format!("Kowalevski determinant has degree {} instead of 4", roots.len()))
    })?;
    if !dev.abs_le(&Scalar::ten_pow_neg(RESONANCE_AGREEMENT)) {
        return Err(Error::ContractViolation(format!(
            "Kowalevski resonances deviate from the table by {dev}"
        )));
    }
    let tol = Scalar::half_precision_eps(bits);
    let all_integer = values.iter().all(|r| r.as_integer(&tol).is_some());
    let negatives = values
        .iter()
        .filter(|r| r.re().cmp_real(&Scalar::zero()).is_lt())
        .count();
    Ok(ResonanceSet { values, all_integer, has_extra_negative: negatives > 1, kowalevski_deviation: dev })
}

pub fn classify(c: &Scalar, lambda: &Scalar) -> Result<ClassificationVerdict> {
    reject_zero(c)?;
    let balances = find_dominant_balances(c)?
        .into_iter()
        .map(|b| {
            let r = resonances_with_lambda(&b, c, lambda)?;
            Ok(AnalyzedBalance { balance: b, resonances: r })
        })
        .collect::<Result<Vec<_>>>()?;
    let is = |n: i64, d: i64| same(c, &Scalar::ratio(n, d));
    let lambda_is = |n: i64, d: i64| same(lambda, &Scalar::ratio(n, d));
    let (label, detail) = if is(-1, 1) {
        if lambda_is(1, 1) {
            (VerdictLabel::IntegrableCandidate, "integrable case C = -1, lambda = 1".to_string())
        } else {
            (VerdictLabel::Generic, "C = -1 requires lambda = 1; otherwise logarithmic terms appear".into())
        }
    } else if is(-6, 1) {
        (VerdictLabel::IntegrableCandidate, "integrable case C = -6, any lambda".into())
    } else if is(-16, 1) {
        if lambda_is(1, 16) {
            (VerdictLabel::IntegrableCandidate, "integrable case C = -16, lambda = 1/16".into())
        } else {
            (VerdictLabel::Generic, "C = -16 requires lambda = 1/16; otherwise logarithmic terms appear".into())
        }
    } else if is(-16, 5) {
        (
            VerdictLabel::ThreeParameterCandidate,
            "Case 2, alpha = -3/2, resonances {-1, 0, 4, 6}: single-valued three-parameter Puiseux series".into(),
        )
    } else if is(-4, 3) {
        (
            VerdictLabel::ThreeParameterCandidate,
            "Case 1, resonances {-1, 1, 4, 6}: single-valued three-parameter Laurent series".into(),
        )
    } else if is(-2, 1) {
        (VerdictLabel::Logarithmic, "Case 1 and Case 2 coincide; a_alpha = 0 and the leading term is logarithmic".into())
    } else {
        (VerdictLabel::Generic, "no admissible integer resonance pattern".into())
    };
    Ok(ClassificationVerdict { label, detail, balances })
}

pub fn candidate_c_values() -> Vec<CandidateC> {
    let case2 = "Case 2, alpha = (1 - sqrt(1 - 48/C))/2";
    vec![
        CandidateC {
            c: Scalar::int(-1),
            case_tag: Some(CaseTag::Case1),
            annotation: "Case 1, resonances {-1, 2, 3, 6}; integrable at lambda = 1".into(),
        },
        CandidateC {
            c: Scalar::ratio(-4, 3),
            case_tag: Some(CaseTag::Case1),
            annotation: "Case 1, resonances {-1, 1, 4, 6}; three-parameter candidate".into(),
        },
        CandidateC {
            c: Scalar::ratio(-16, 5),
            case_tag: Some(CaseTag::Case2),
            annotation: format!("{case2} = -3/2, resonances {{-1, 0, 4, 6}}; three-parameter candidate"),
        },
        CandidateC {
            c: Scalar::int(-6),
            case_tag: Some(CaseTag::Case2),
            annotation: format!("{case2} = -1, resonances {{-1, 0, 3, 6}}; integrable for any lambda"),
        },
        CandidateC {
            c: Scalar::int(-16),
            case_tag: Some(CaseTag::Case2),
            annotation: format!("{case2} = -1/2, resonances {{-1, 0, 2, 6}}; integrable at lambda = 1/16"),
        },
        CandidateC {
            c: Scalar::int(-2),
            case_tag: None,
            annotation: "two types of singular behaviour coincide; a_alpha = 0, logarithmic".into(),
        },
    ]
}
