//! Convergence certificates for the local series in `0 < |t| ≤ 1 − ε`.
//!
//! If every coefficient with index `−1 ≤ n < k` is bounded by `M`, the
//! recurrence gives explicit bounds for the coefficients at `k`. When both
//! bounds are `≤ M` for every `k > N`, a prefix check through `N` bounds the
//! whole series by `M`.
//!
//! C165 (coefficients `a_k`, `b_k`; the sum over `a` also contains `a₋₂ = c1`):
//! ```text
//! |a_k| ≤ (2M(k+1) + |λ| + 2|c1|) M / |k²−4|
//! |b_k| ≤ (21Mk + 26M + 5) M / (5|k²−k−12|)
//! ```
//! C43, from the inverse of `[[P−6, 2√6], [2√6, P−8]]`, `P = (k−1)k`,
//! `D = (P−12)(P−2)`, `R₁ = |λ|M + 2(k+1)M²`, `R₂ = M + 7/3 (k+1)M²`:
//! ```text
//! |d_k| ≤ (|P−8| R₁ + 2√6 R₂) / |D|
//! |f_k| ≤ (2√6 R₁ + |P−6| R₂) / |D|
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{contract, Error, Result};
use crate::laurent::{SeriesCase, SeriesSolution};
use crate::scalar::{poly_eval, poly_mul, poly_roots, Scalar};

/// Rational upper bound for `2√6 ≈ 4.89898`.
const TWO_SQRT6_UPPER: (i64, i64) = (49, 10);

/// Highest shift tried when proving a threshold polynomial stays positive.
const MAX_THRESHOLD: i64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundAudit {
    pub case: SeriesCase,
    pub lambda_abs_bound: Scalar,
    /// `|c1|` upper bound (C165) or the `2√6` upper bound (C43).
    pub lead_bound: Scalar,
    pub first_bound: String,
    pub second_bound: String,
    /// Threshold polynomials in k (ascending), one per bound.
    pub threshold_polynomials: Vec<Vec<Scalar>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCheck {
    pub t: Scalar,
    pub x_difference: Scalar,
    pub y_difference: Scalar,
    pub bound: Scalar,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceCertificate {
    #[serde(rename = "M")]
    pub m: Scalar,
    #[serde(rename = "N")]
    pub n: i64,
    pub epsilon: Scalar,
    pub checked_prefix: i64,
    pub verdict: Verdict,
    pub reason: String,
    pub audit: BoundAudit,
    pub tail_checks: Vec<TailCheck>,
}

fn sc(q: BigRational) -> Scalar {
    Scalar::from_rational(q)
}

fn int(n: i64) -> Scalar {
    Scalar::int(n)
}

/// Coefficient vectors (ascending in k) of the two closure polynomials
/// `g(k) ≥ 0 ⇔ bound ≤ M`, valid for k ≥ 5.
fn threshold_polys(case: SeriesCase, m: &Scalar, lambda_abs: &Scalar, lead: &Scalar) -> Vec<Vec<Scalar>> {
    match case {
        SeriesCase::C165 => {
            // k² − 4 − (2M(k+1) + |λ| + 2|c1|)
            let a0 = &(&(&int(-4) - &(&int(2) * m)) - lambda_abs) - &(&int(2) * lead);
            let ga = vec![a0, -(&int(2) * m), int(1)];
            // 5(k² − k − 12) − (21Mk + 26M + 5)
            let gb = vec![&int(-65) - &(&int(26) * m), &int(-5) - &(&int(21) * m), int(5)];
            vec![ga, gb]
        }
        SeriesCase::C43 => {
            let p = vec![int(0), int(-1), int(1)];
            let shift = |c: i64| {
                let mut v = p.clone();
                v[0] = &v[0] + &int(c);
                v
            };
            let d = poly_mul(&shift(-12), &shift(-2));
            // R₁/M = |λ| + 2M(k+1), R₂/M = 1 + 7/3 M(k+1)
            let r1 = vec![lambda_abs + &(&int(2) * m), &int(2) * m];
            let seven_thirds_m = &Scalar::ratio(7, 3) * m;
            let r2 = vec![&int(1) + &seven_thirds_m, seven_thirds_m];
            let sub = |a: &[Scalar], b: &[Scalar]| -> Vec<Scalar> {
                let n = a.len().max(b.len());
                (0..n)
                    .map(|i| {
                        let x = a.get(i).cloned().unwrap_or_else(Scalar::zero);
                        let y = b.get(i).cloned().unwrap_or_else(Scalar::zero);
                        &x - &y
                    })
                    .collect()
            };
            let scale = |a: &[Scalar], c: &Scalar| a.iter().map(|v| v * c).collect::<Vec<_>>();
            let gd = sub(&sub(&d, &poly_mul(&shift(-8), &r1)), &scale(&r2, lead));
            let gf = sub(&sub(&d, &scale(&r1, lead)), &poly_mul(&shift(-6), &r2));
            vec![gd, gf]
        }
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// All coefficients of `g(s + u)` in `u` are nonnegative, so `g ≥ 0` on `[s, ∞)`.
fn nonnegative_beyond(g: &[BigRational], s: i64) -> bool {
    let s = BigRational::from_integer(BigInt::from(s));
    (0..g.len()).all(|j| {
        let mut h = BigRational::zero();
        let mut pow = BigRational::one();
        for (i, gi) in g.iter().enumerate().skip(j) {
            h += gi * &pow * BigRational::from_integer(binomial(i, j));
            pow *= &s;
        }
        !h.is_negative()
    })
}

/// Largest `k ≥ 5` with `g(k) < 0` (4 if none), or `Err(required)` when the
/// polynomial cannot be shown positive below `MAX_THRESHOLD`.
fn last_failure(g: &[Scalar]) -> std::result::Result<i64, i64> {
    let exact: Vec<BigRational> = g
        .iter()
        .map(|c| c.to_rational().expect("threshold polynomials are exact"))
        .collect();
    let max_re = poly_roots(g, 128)
        .iter()
        .map(|r| r.re().to_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut s = if max_re.is_finite() { (max_re.ceil() as i64 + 1).max(5) } else { 5 };
    while !nonnegative_beyond(&exact, s) {
        if s > MAX_THRESHOLD {
            return Err(s);
        }
        s += (s / 8).max(1);
    }
    let eval = |k: i64| -> BigRational {
        let kk = BigRational::from_integer(BigInt::from(k));
        exact.iter().rev().fold(BigRational::zero(), |acc, c| acc * &kk + c)
    };
    Ok((5..s).rev().find(|&k| eval(k).is_negative()).unwrap_or(4))
}

fn audit_strings(case: SeriesCase) -> (String, String) {
    match case {
        SeriesCase::C165 => (
            "|a_k| <= (2M(k+1) + |lambda| + 2|c1|) M / |k^2 - 4|".into(),
            "|b_k| <= (21Mk + 26M + 5) M / (5|k^2 - k - 12|)".into(),
        ),
        SeriesCase::C43 => (
            "|d_k| <= (|P-8|(|lambda|M + 2(k+1)M^2) + 2sqrt6 (M + 7/3 (k+1)M^2)) / |(P-12)(P-2)|, P = (k-1)k".into(),
            "|f_k| <= (2sqrt6 (|lambda|M + 2(k+1)M^2) + |P-6|(M + 7/3 (k+1)M^2)) / |(P-12)(P-2)|".into(),
        ),
    }
}

fn bounds_with(case: SeriesCase, k: i64, m: &Scalar, lambda_abs: &Scalar, lead: &Scalar) -> Result<(Scalar, Scalar)> {
    match case {
        SeriesCase::C165 => {
            let d1 = k * k - 4;
            let d2 = k * k - k - 12;
            if d1 == 0 || d2 == 0 {
                return contract(format!("bound denominator vanishes at k = {k}"));
            }
            let n1 = &(&(&(&int(2) * m) * &int(k + 1)) + lambda_abs) + &(&int(2) * lead);
            let a = &(&n1 * m) / &int(d1.abs());
            let n2 = &(&(&int(21 * k) * m) + &(&int(26) * m)) + &int(5);
            let b = &(&n2 * m) / &int(5 * d2.abs());
            Ok((a, b))
        }
        SeriesCase::C43 => {
            let p = (k - 1) * k;
            if p == 12 || p == 2 {
                return contract(format!("bound denominator vanishes at k = {k}"));
            }
            let d = (&int(p - 12) * &int(p - 2)).abs();
            let km = &int(k + 1) * m;
            let r1 = &(lambda_abs * m) + &(&(&int(2) * &km) * m);
            let r2 = m + &(&(&Scalar::ratio(7, 3) * &km) * m);
            let bd = &(&(&int((p - 8).abs()) * &r1) + &(lead * &r2)) / &d;
            let bf = &(&(lead * &r1) + &(&int((p - 6).abs()) * &r2)) / &d;
            Ok((bd, bf))
        }
    }
}

/// The two coefficient bounds at step `k` given `|coefficients| ≤ M` below `k`.
/// For C43 `c1_abs` is ignored and `2√6` enters at working precision.
pub fn bound_step(k: i64, m: &Scalar, lambda: &Scalar, c1_abs: &Scalar, case: SeriesCase) -> Result<(Scalar, Scalar)> {
    let lead = match case {
        SeriesCase::C165 => c1_abs.clone(),
        SeriesCase::C43 => &int(2) * &int(6).sqrt(crate::scalar::DEFAULT_PRECISION),
    };
    bounds_with(case, k, m, &lambda.abs(), &lead)
}

fn power_of_two_at_least(x: &BigRational) -> BigRational {
    let mut m = BigRational::one();
    if x.is_zero() {
        return m;
    }
    while &m < x {
        m *= BigRational::from_integer(BigInt::from(2));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    while &(&m * &half) >= x {
        m *= &half;
    }
    m
}

/// Certifies the series of `sol` on `0 < |t| ≤ 1 − ε`, searching `M` over
/// powers of two up to `m_limit`.
pub fn certify(sol: &SeriesSolution, epsilon: &Scalar, m_limit: &Scalar) -> Result<ConvergenceCertificate> {
    let zero = Scalar::zero();
    if !epsilon.is_real() || epsilon.cmp_real(&zero).is_le() || epsilon.cmp_real(&Scalar::one()).is_ge() {
        return contract("epsilon must lie in (0, 1)");
    }
    let case = sol.spec.case;
    let available = sol.n();
    let lambda_abs = sc(sol.spec.lambda.abs_upper_bound());
    let lead = match case {
        SeriesCase::C165 => sc(sol.x_scale.abs_upper_bound()),
        SeriesCase::C43 => Scalar::ratio(TWO_SQRT6_UPPER.0, TWO_SQRT6_UPPER.1),
    };

    // coefficients with index −1..=N, plus c1 where it enters the sums
    let mut largest = BigRational::zero();
    let mut consider = |v: &Scalar| {
        let b = v.abs_upper_bound();
        if b > largest {
            largest = b;
        }
    };
    for k in -1..=available {
        consider(sol.x.at_index(k).expect("built series covers its own range"));
        consider(sol.y.at_index(k).expect("built series covers its own range"));
    }
    if case == SeriesCase::C165 {
        consider(&sol.x_scale);
    }
    let m = sc(power_of_two_at_least(&largest));
    let (first_bound, second_bound) = audit_strings(case);
    let polys = threshold_polys(case, &m, &lambda_abs, &lead);
    let audit = BoundAudit {
        case,
        lambda_abs_bound: lambda_abs.clone(),
        lead_bound: lead.clone(),
        first_bound,
        second_bound,
        threshold_polynomials: polys.clone(),
    };

    if m.cmp_real(m_limit).is_gt() {
        return Ok(ConvergenceCertificate {
            m,
            n: available,
            epsilon: epsilon.clone(),
            checked_prefix: available,
            verdict: Verdict::NotCertified,
            reason: format!("prefix coefficients need M above the search limit {m_limit}"),
            audit,
            tail_checks: Vec::new(),
        });
    }

    let mut threshold = 4;
    for g in &polys {
        match last_failure(g) {
            Ok(k) => threshold = threshold.max(k),
            Err(required) => return Err(Error::InsufficientPrefix { required, available }),
        }
    }
    if threshold > available {
        return Err(Error::InsufficientPrefix { required: threshold, available });
    }
    // self-check: the step closes just above the threshold
    for k in threshold + 1..=threshold + 3 {
        let (p, q) = bounds_with(case, k, &m, &lambda_abs, &lead)?;
        debug_assert!(p.cmp_real(&m).is_le() && q.cmp_real(&m).is_le());
    }

    let tail_checks = tail_checks(sol, epsilon, &m)?;
    let tails_ok = tail_checks.iter().all(|c| c.holds);
    Ok(ConvergenceCertificate {
        m,
        n: threshold,
        epsilon: epsilon.clone(),
        checked_prefix: available,
        verdict: if tails_ok { Verdict::Certified } else { Verdict::NotCertified },
        reason: if tails_ok {
            "prefix bounded by M and induction closes beyond N".into()
        } else {
            "geometric tail check failed".into()
        },
        audit,
        tail_checks,
    })
}

/// Partial sums through index `N/2` and `N` differ by at most `M r^(N/2) / ε`
/// at four points of the circle `|t − t0| = r = 1 − ε`.
pub fn tail_checks(sol: &SeriesSolution, epsilon: &Scalar, m: &Scalar) -> Result<Vec<TailCheck>> {
    let bits = sol.spec.bits;
    let r = &Scalar::one() - epsilon;
    let half = sol.n() / 2;
    if half < 1 {
        return contract("series too short for a tail check");
    }
    let len_half = (half + 3) as usize;
    let len_full = (2 * half + 3) as usize;
    let bound = &(m * &r.powi(half)) / epsilon;
    let i = Scalar::imaginary_unit(bits);
    let points = [r.clone(), &r * &i, -&r, -(&r * &i)];
    let mut out = Vec::new();
    for dt in points {
        let t = &sol.spec.t0 + &dt;
        let diff = |s: &crate::series::PuiseuxSeries| {
            let a = s.truncate(len_full).evaluate(&t, bits);
            let b = s.truncate(len_half).evaluate(&t, bits);
            (&a - &b).abs()
        };
        let dx = diff(&sol.x);
        let dy = diff(&sol.y);
        let holds = dx.cmp_real(&bound).is_le() && dy.cmp_real(&bound).is_le();
        out.push(TailCheck { t, x_difference: dx, y_difference: dy, bound: bound.clone(), holds });
    }
    Ok(out)
}

/// `g(k)` for a threshold polynomial, exposed for audits.
pub fn threshold_value(g: &[Scalar], k: i64) -> Scalar {
    poly_eval(g, &int(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::{build_series, BranchSpec, RootBranch};

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn printed_bound_at_k10() {
        let (a, b) = bound_step(10, &Scalar::one(), &Scalar::zero(), &Scalar::zero(), SeriesCase::C165).unwrap();
        assert_eq!(a, q(22, 96));
        assert_eq!(b, q(241, 390));
        let (a, _) = bound_step(10, &Scalar::one(), &q(1, 9), &q(3, 2), SeriesCase::C165).unwrap();
        assert_eq!(a, &(&(&int(22) + &q(1, 9)) + &int(3)) / &int(96));
    }

    #[test]
    fn bounds_vanish_and_grow_with_m() {
        for case in [SeriesCase::C165, SeriesCase::C43] {
            let (a, b) = bound_step(100_000, &int(4), &q(1, 9), &q(3, 2), case).unwrap();
            assert!(a.to_f64() < 1e-3 && b.to_f64() < 1e-3);
            let (a1, b1) = bound_step(12, &int(2), &q(1, 9), &q(3, 2), case).unwrap();
            let (a2, b2) = bound_step(12, &int(3), &q(1, 9), &q(3, 2), case).unwrap();
            assert!(a2.cmp_real(&a1).is_gt() && b2.cmp_real(&b1).is_gt());
        }
    }

    #[test]
    fn resonant_denominators_rejected() {
        assert!(bound_step(2, &int(1), &int(0), &int(0), SeriesCase::C165).is_err());
        assert!(bound_step(4, &int(1), &int(0), &int(0), SeriesCase::C165).is_err());
        assert!(bound_step(-1, &int(1), &int(0), &int(0), SeriesCase::C43).is_err());
        assert!(bound_step(4, &int(1), &int(0), &int(0), SeriesCase::C43).is_err());
    }

    #[test]
    fn threshold_matches_direct_bounds() {
        let m = int(4);
        let l = q(1, 9);
        let lead = q(3, 2);
        for case in [SeriesCase::C165, SeriesCase::C43] {
            let lead = if case == SeriesCase::C43 { q(49, 10) } else { lead.clone() };
            let polys = threshold_polys(case, &m, &l, &lead);
            for k in 5..60 {
                let (a, b) = bounds_with(case, k, &m, &l, &lead).unwrap();
                assert_eq!(threshold_value(&polys[0], k).cmp_real(&Scalar::zero()).is_ge(), a.cmp_real(&m).is_le());
                assert_eq!(threshold_value(&polys[1], k).cmp_real(&Scalar::zero()).is_ge(), b.cmp_real(&m).is_le());
            }
        }
    }

    #[test]
    fn certifies_c165_reference_series() {
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
        let sol = build_series(&spec, 40).unwrap();
        let cert = certify(&sol, &q(1, 10), &int(1 << 20)).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified, "{}", cert.reason);
        assert!(cert.n <= 40);
        // monotone in epsilon
        let wider = certify(&sol, &q(1, 5), &int(1 << 20)).unwrap();
        assert_eq!(wider.verdict, Verdict::Certified);
        assert_eq!((wider.m, wider.n), (cert.m, cert.n));
    }

    #[test]
    fn injected_coefficient_is_not_certified() {
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
        let mut sol = build_series(&spec, 40).unwrap();
        let i = (30 + 2) as usize;
        sol.y.coeffs_mut()[i] = Scalar::int(1_000_000);
        let cert = certify(&sol, &q(1, 10), &int(1 << 10)).unwrap();
        assert_eq!(cert.verdict, Verdict::NotCertified);
    }

    #[test]
    fn short_prefix_is_reported() {
        let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
        let sol = build_series(&spec, 6).unwrap();
        assert!(matches!(
            certify(&sol, &q(1, 10), &int(1 << 20)),
            Err(Error::InsufficientPrefix { available: 6, .. })
        ));
    }
}
