//! Acceptance suite: one test per criterion, each printing a single
//! `criterion NN ... PASS|FAIL` line before asserting.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! for an ordered report.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use hh_painleve::convergence::{certify, Verdict};
use hh_painleve::laurent::{
    build_series, c1_fourth_power, enumerate_branches, enumerate_branches_report, f_minus1_squared, BranchSpec,
    RootBranch, SeriesCase,
};
use hh_painleve::painleve::{
    candidate_c_values, classify, find_dominant_balances, kowalevski_polynomial, resonances, CaseTag, VerdictLabel,
};
use hh_painleve::scalar::{match_multisets, poly_eval, Scalar, DEFAULT_PRECISION};
use hh_painleve::series::PuiseuxSeries;
use hh_painleve::subequation::{fit, residue_pairing, ResiduePairing, SubequationAnsatz};
use hh_painleve::verify::{energy_split, numeric_cross_check, residual_max};

const BITS: usize = DEFAULT_PRECISION;

/// Table-vs-Kowalevski agreement of resonances.
const RESONANCE_TOL_EXP: u32 = 20;
/// Closed forms against the eliminated compatibility systems.
const CLOSED_FORM_TOL_EXP: u32 = 30;
/// Series residuals and energy drift.
const SERIES_TOL_EXP: u32 = 25;
/// x_sign symmetry on rounded coefficients.
const SYMMETRY_TOL_EXP: u32 = 30;
/// Series against the integrator.
const CROSS_CHECK_TOL_EXP: u32 = 15;
/// Integrator tolerance for the cross-check.
const INTEGRATOR_TOL_EXP: u32 = 20;
/// Fitted subequation coefficients and residue pairing.
const FIT_TOL_EXP: u32 = 25;

const LAMBDA_SAMPLES: [(i64, i64); 5] = [(0, 1), (1, 9), (1, 2), (1, 1), (2, 1)];

fn q(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

fn tol(exp: u32) -> Scalar {
    Scalar::ten_pow_neg(exp)
}

fn report(n: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:02} {name:<34} {status}  ({detail}; {:.2?})", elapsed);
}

fn integer_set(values: &[Scalar]) -> Option<BTreeSet<i64>> {
    values
        .iter()
        .map(|v| v.as_rational().filter(|r| r.is_integer()).map(|r| r.to_integer().try_into().unwrap()))
        .collect()
}

#[test]
fn criterion_01_resonance_table() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_dev = Scalar::zero();
    let mut check = |c: Scalar, tag: CaseTag, alpha: Option<Scalar>, want: &[i64], exact_set: bool| {
        let balances = find_dominant_balances(&c).unwrap();
        let b = balances
            .iter()
            .find(|b| b.case_tag == tag && alpha.as_ref().is_none_or(|a| &b.alpha == a))
            .unwrap_or_else(|| panic!("no {tag:?} balance at C = {c}"));
        let r = resonances(b, &c).unwrap();
        if r.kowalevski_deviation.cmp_abs(&worst_dev).is_gt() {
            worst_dev = r.kowalevski_deviation.clone();
        }
        // every claimed integer resonance is an exact root of the Kowalevski determinant
        let k = kowalevski_polynomial(b, &c, &Scalar::ratio(1, 9));
        for &w in want {
            let v = poly_eval(&k, &Scalar::int(w));
            if !v.abs_le(&tol(RESONANCE_TOL_EXP)) {
                failures.push(format!("C = {c}: K({w}) = {v}"));
            }
        }
        let want_set: BTreeSet<i64> = want.iter().copied().collect();
        if exact_set {
            if integer_set(&r.values) != Some(want_set) {
                failures.push(format!("C = {c}: resonances {:?}", r.values.iter().map(|v| v.to_string()).collect::<Vec<_>>()));
            }
        } else {
            let have: BTreeSet<i64> = r
                .values
                .iter()
                .filter_map(|v| v.as_rational().filter(|q| q.is_integer()).map(|q| q.to_integer().try_into().unwrap()))
                .collect();
            if !want_set.is_subset(&have) {
                failures.push(format!("C = {c}: {have:?} lacks {want_set:?}"));
            }
        }
    };
    check(Scalar::int(-1), CaseTag::Case1, None, &[-1, 2, 3, 6], true);
    check(q(-4, 3), CaseTag::Case1, None, &[-1, 1, 4, 6], true);
    check(q(-16, 5), CaseTag::Case2, Some(q(-3, 2)), &[-1, 0, 4, 6], true);
    for c in [q(-7, 3), q(-5, 1), q(2, 1), q(11, 10), q(-100, 1)] {
        check(c, CaseTag::Case2, None, &[-1, 0, 6], false);
    }
    let elapsed = start.elapsed();
    let dev_ok = worst_dev.abs_le(&tol(RESONANCE_TOL_EXP));
    let pass = failures.is_empty() && dev_ok && elapsed < Duration::from_secs(1);
    report(1, "resonance table", pass, &format!("max Kowalevski deviation {:.3e}", worst_dev.abs_f64()), elapsed);
    assert!(failures.is_empty(), "{failures:?}");
    assert!(dev_ok);
    assert!(elapsed < Duration::from_secs(1));
}

#[test]
fn criterion_02_classification() {
    let start = Instant::now();
    let label = |c: Scalar, l: Scalar| classify(&c, &l).unwrap().label;
    let mut bad = Vec::new();
    let mut expect = |c: Scalar, l: Scalar, want: VerdictLabel| {
        let got = label(c.clone(), l.clone());
        if got != want {
            bad.push(format!("C = {c}, lambda = {l}: {} (want {})", got.as_str(), want.as_str()));
        }
    };
    use VerdictLabel::*;
    expect(Scalar::int(-1), Scalar::one(), IntegrableCandidate);
    expect(Scalar::int(-1), q(1, 9), Generic);
    for l in [q(0, 1), q(1, 9), q(7, 3), q(-5, 2)] {
        expect(Scalar::int(-6), l, IntegrableCandidate);
    }
    expect(Scalar::int(-16), q(1, 16), IntegrableCandidate);
    expect(Scalar::int(-16), Scalar::one(), Generic);
    for l in [q(0, 1), q(1, 9), q(2, 1)] {
        expect(q(-16, 5), l.clone(), ThreeParameterCandidate);
        expect(q(-4, 3), l, ThreeParameterCandidate);
    }
    expect(Scalar::int(-2), q(1, 9), Logarithmic);
    for c in [q(-7, 3), q(1, 1), q(-3, 1)] {
        expect(c, q(1, 9), Generic);
    }
    let cands: BTreeSet<String> = candidate_c_values().iter().map(|c| c.c.to_string()).collect();
    let want: BTreeSet<String> = ["-1", "-4/3", "-16/5", "-6", "-16", "-2"].iter().map(|s| s.to_string()).collect();
    let list_ok = cands == want && candidate_c_values().len() == 6;
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && list_ok;
    report(2, "classification", pass, &format!("{} mislabels, candidates {cands:?}", bad.len()), elapsed);
    assert!(bad.is_empty(), "{bad:?}");
    assert!(list_ok);
}

#[test]
fn criterion_03_determinant_zeros() {
    let start = Instant::now();
    let zeros = |case: SeriesCase| -> BTreeSet<i64> {
        let sol = build_series(&BranchSpec::new(case, q(1, 9), RootBranch::Plus), 50).unwrap();
        assert!(sol.steps.iter().all(|s| s.det.is_exact()), "determinants must be exact");
        sol.steps.iter().filter(|s| s.det.is_zero()).map(|s| s.k).collect()
    };
    let z165 = zeros(SeriesCase::C165);
    let z43 = zeros(SeriesCase::C43);

    // positive resonances shifted by the leading exponent of y (−2)
    let shifted = |c: Scalar, tag: CaseTag, alpha: Option<Scalar>| -> BTreeSet<i64> {
        let b = find_dominant_balances(&c)
            .unwrap()
            .into_iter()
            .find(|b| b.case_tag == tag && alpha.as_ref().is_none_or(|a| &b.alpha == a))
            .unwrap();
        integer_set(&resonances(&b, &c).unwrap().values)
            .unwrap()
            .into_iter()
            .filter(|&r| r > 0)
            .map(|r| r - 2)
            .collect()
    };
    let s165 = shifted(q(-16, 5), CaseTag::Case2, Some(q(-3, 2)));
    let s43 = shifted(q(-4, 3), CaseTag::Case1, None);
    let elapsed = start.elapsed();
    let pass = z165 == BTreeSet::from([2, 4]) && z43 == BTreeSet::from([-1, 2, 4]) && s165 == z165 && s43 == z43;
    report(3, "determinant-zero structure", pass, &format!("C165 {z165:?}, C43 {z43:?}"), elapsed);
    assert_eq!(z165, BTreeSet::from([2, 4]));
    assert_eq!(z43, BTreeSet::from([-1, 2, 4]));
    assert_eq!(s165, z165);
    assert_eq!(s43, z43);
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn quadratic_roots(a: &BigRational, b: &BigRational, c: &BigRational) -> Vec<Scalar> {
    let (a, b, c) = (
        Scalar::from_rational(a.clone()),
        Scalar::from_rational(b.clone()),
        Scalar::from_rational(c.clone()),
    );
    let disc = (&(&b * &b) - &(&Scalar::int(4) * &(&a * &c))).sqrt(BITS);
    let two_a = &Scalar::int(2) * &a;
    vec![&(&(-&b) + &disc) / &two_a, &(&(-&b) - &disc) / &two_a]
}

/// c1⁴ from the two printed compatibility equations for `a₂, b₂`: eliminate
/// b₂ from the second and substitute into the first (divided by c1).
fn c1_fourth_oracle(lambda: &BigRational) -> Vec<Scalar> {
    let l = lambda;
    let l2 = l * l;
    // b₂ = (818176u² + (15660000λ − 4893750)u − 6328125) / 810000000
    let k = rat(864_000_000, 810_000_000);
    let a = rat(557_056, 1) + &k * rat(818_176, 1);
    let b = (rat(15_552_000, 1) * l - rat(4_860_000, 1)) + &k * (rat(15_660_000, 1) * l - rat(4_893_750, 1));
    let c = rat(108_000_000, 1) * &l2 - rat(67_500_000, 1) * l + rat(10_546_875, 1) - &k * rat(6_328_125, 1);
    quadratic_roots(&a, &b, &c)
}

/// Independent exact solver for the scaled C43 expansion
/// `u = t⁻² + Σ u_k t^k` (x = √6 u), `y = −3t⁻² + Σ f_k t^k`, working
/// directly from `u'' + λu + 2uy = 0`, `y'' + y + 6u² + 4/3 y² = 0`.
/// Returns the k = 2 compatibility defect for a given f₋₁.
fn c43_k2_defect(lambda: &BigRational, f_minus1: &BigRational) -> BigRational {
    let mut u = vec![BigRational::one()];
    let mut f = vec![rat(-3, 1)];
    let get = |v: &Vec<BigRational>, i: i64| -> BigRational {
        if i < -2 {
            return BigRational::zero();
        }
        v.get((i + 2) as usize).cloned().unwrap_or_else(BigRational::zero)
    };
    // coefficient of t^(k−2) in both equations with the order-k unknowns at zero
    let orders = |u: &Vec<BigRational>, f: &Vec<BigRational>, k: i64| -> (BigRational, BigRational) {
        let p = k - 2;
        let conv = |a: &Vec<BigRational>, b: &Vec<BigRational>| -> BigRational {
            (-2..=p + 2).map(|i| get(a, i) * get(b, p - i)).fold(BigRational::zero(), |s, v| s + v)
        };
        let e1 = lambda * get(u, k - 2) + rat(2, 1) * conv(u, f);
        let e2 = get(f, k - 2) + rat(6, 1) * conv(u, u) + rat(4, 3) * conv(f, f);
        (e1, e2)
    };
    for k in -1..=2i64 {
        let pk = BigRational::from_integer(BigInt::from(k * (k - 1)));
        let (r1, r2) = orders(&u, &f, k);
        // (P − 6)u_k + 2 f_k = −r1,  12 u_k + (P − 8) f_k = −r2
        let s11 = &pk - rat(6, 1);
        let s22 = &pk - rat(8, 1);
        let det = &s11 * &s22 - rat(24, 1);
        match k {
            -1 => {
                let uk = (-&r1 - rat(2, 1) * f_minus1) / &s11;
                assert!((rat(12, 1) * &uk + &s22 * f_minus1 + &r2).is_zero(), "k = -1 must be free");
                u.push(uk);
                f.push(f_minus1.clone());
            }
            2 => {
                assert!(det.is_zero());
                // row 2 = −3 · row 1, so consistency needs r2 + 3 r1 = 0
                return r2 + rat(3, 1) * r1;
            }
            _ => {
                let uk = (-&r1 * &s22 + &r2 * rat(2, 1)) / &det;
                let fk = (-&r2 * &s11 + &r1 * rat(12, 1)) / &det;
                u.push(uk);
                f.push(fk);
            }
        }
    }
    unreachable!()
}

/// Roots in F = f₋₁² of the k = 2 defect, interpolated from F ∈ {0, 1, 4}
/// and checked at F = 9.
fn f_minus1_sq_oracle(lambda: &BigRational) -> Vec<Scalar> {
    let d = |phi: i64| c43_k2_defect(lambda, &rat(phi, 1));
    let (d0, d1, d4, d9) = (d(0), d(1), d(2), d(3));
    // R(F) = aF² + bF + c
    let c = d0.clone();
    // a + b = d1 − c, 16a + 4b = d4 − c
    let a = ((&d4 - &c) - rat(4, 1) * (&d1 - &c)) / rat(12, 1);
    let b = (&d1 - &c) - &a;
    assert_eq!(rat(81, 1) * &a + rat(9, 1) * &b + &c, d9, "defect is not quadratic in f-1^2");
    assert!(d(-2) == d4, "defect must be even in f-1");
    quadratic_roots(&a, &b, &c)
}

#[test]
fn criterion_04_compatibility_closed_forms() {
    let start = Instant::now();
    let mut worst_c1 = Scalar::zero();
    let mut worst_f = Scalar::zero();
    for (n, d) in LAMBDA_SAMPLES {
        let lq = rat(n, d);
        let l = Scalar::from_rational(lq.clone());
        let lib_c1: Vec<Scalar> = [RootBranch::Plus, RootBranch::Minus]
            .iter()
            .map(|&b| c1_fourth_power(&l, b, BITS).unwrap())
            .collect();
        let dev = match_multisets(&lib_c1, &c1_fourth_oracle(&lq)).unwrap();
        if dev.cmp_abs(&worst_c1).is_gt() {
            worst_c1 = dev;
        }
        let lib_f: Vec<Scalar> = [RootBranch::Plus, RootBranch::Minus]
            .iter()
            .map(|&b| f_minus1_squared(&l, b, BITS))
            .collect();
        let dev = match_multisets(&lib_f, &f_minus1_sq_oracle(&lq)).unwrap();
        if dev.cmp_abs(&worst_f).is_gt() {
            worst_f = dev;
        }
    }
    // λ = 1: the two roots are exactly 0 and −2/11
    let at_one: Vec<Scalar> = [RootBranch::Plus, RootBranch::Minus]
        .iter()
        .map(|&b| f_minus1_squared(&Scalar::one(), b, BITS))
        .collect();
    let one_dev = match_multisets(&at_one, &[Scalar::zero(), q(-2, 11)]).unwrap();
    let elapsed = start.elapsed();
    let t = tol(CLOSED_FORM_TOL_EXP);
    let pass = worst_c1.abs_le(&t) && worst_f.abs_le(&t) && one_dev.abs_le(&t) && elapsed < Duration::from_secs(10);
    report(
        4,
        "compatibility closed forms",
        pass,
        &format!("c1^4 dev {:.2e}, f-1^2 dev {:.2e}, lambda=1 dev {:.2e}", worst_c1.abs_f64(), worst_f.abs_f64(), one_dev.abs_f64()),
        elapsed,
    );
    assert!(worst_c1.abs_le(&t), "{worst_c1}");
    assert!(worst_f.abs_le(&t), "{worst_f}");
    assert!(one_dev.abs_le(&t));
    assert!(elapsed < Duration::from_secs(10));
}

#[test]
fn criterion_05_series_validity() {
    let start = Instant::now();
    let lambda = q(1, 9);
    let t = tol(SERIES_TOL_EXP);
    let mut worst_res = Scalar::zero();
    let mut worst_energy = Scalar::zero();
    let mut count = 0;
    for case in [SeriesCase::C165, SeriesCase::C43] {
        for spec in enumerate_branches(case, &lambda, false).unwrap() {
            let sol = build_series(&spec, 40).unwrap();
            let r = residual_max(&spec, &sol.x, &sol.y).unwrap();
            let (_, e) = energy_split(&spec, &sol.x, &sol.y).unwrap();
            if r.cmp_abs(&worst_res).is_gt() {
                worst_res = r;
            }
            if e.cmp_abs(&worst_energy).is_gt() {
                worst_energy = e;
            }
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_res.abs_le(&t) && worst_energy.abs_le(&t) && elapsed < Duration::from_secs(60);
    report(
        5,
        "series validity (N = 40)",
        pass,
        &format!("{count} branches, residual {:.2e}, energy drift {:.2e}", worst_res.abs_f64(), worst_energy.abs_f64()),
        elapsed,
    );
    assert!(worst_res.abs_le(&t));
    assert!(worst_energy.abs_le(&t));
    assert!(elapsed < Duration::from_secs(60));
}

/// Expected to fail for C43: the f₋₁ = 0 branch does not satisfy the k = 2
/// compatibility condition unless λ ∈ {1/2, 1}, so only four branches exist
/// at generic λ.
#[test]
fn criterion_06_branch_counts() {
    let start = Instant::now();
    let c165 = enumerate_branches(SeriesCase::C165, &q(1, 9), false).unwrap().len();
    let c43 = enumerate_branches_report(SeriesCase::C43, &q(1, 9), false).unwrap();
    let at_one = enumerate_branches_report(SeriesCase::C43, &Scalar::one(), false).unwrap();
    let merge_at_one = !at_one.merged.is_empty();
    let elapsed = start.elapsed();
    let pass = c165 == 4 && c43.branches.len() == 5 && merge_at_one;
    let rejected: Vec<String> = c43.rejected.iter().map(|(s, why)| format!("{}: {why}", s.label())).collect();
    report(
        6,
        "branch counts",
        pass,
        &format!(
            "C165 {c165} (want 4), C43 {} (want 5; rejected {rejected:?}), merge at lambda=1: {merge_at_one}",
            c43.branches.len()
        ),
        elapsed,
    );
    assert_eq!(c165, 4);
    assert!(merge_at_one);
    assert_eq!(c43.branches.len(), 5, "C43 zero branch rejected: {rejected:?}");
}

#[test]
fn criterion_07_x_sign_symmetry() {
    let start = Instant::now();
    let t = tol(SYMMETRY_TOL_EXP);
    let mut exact = true;
    let mut worst = Scalar::zero();
    let zero = (q(0, 1), q(0, 1));
    let cases = [
        (SeriesCase::C165, RootBranch::Plus, q(1, 9), zero.clone(), zero.clone()),
        // the x -> -x image of a C165 solution carries -a2
        (SeriesCase::C165, RootBranch::Minus, q(1, 9), (q(2, 7), q(-1, 3)), (q(-2, 7), q(-1, 3))),
        (SeriesCase::C43, RootBranch::Plus, q(1, 9), (q(1, 5), q(3, 2)), (q(1, 5), q(3, 2))),
        (SeriesCase::C43, RootBranch::Minus, q(1, 9), zero.clone(), zero.clone()),
        // fully rational: scaled x and y are exact rationals here
        (SeriesCase::C43, RootBranch::Zero, q(1, 2), (q(1, 5), q(3, 2)), (q(1, 5), q(3, 2))),
    ];
    let mut rational_checked = false;
    for (case, rb, lambda, p_plus, p_minus) in cases {
        let plus = BranchSpec::new(case, lambda.clone(), rb).with_free_params(p_plus.0, p_plus.1);
        let minus = BranchSpec::new(case, lambda, rb).with_x_sign(-1).with_free_params(p_minus.0, p_minus.1);
        let a = build_series(&plus, 30).unwrap();
        let b = build_series(&minus, 30).unwrap();
        for (u, v) in a.x.coeffs().iter().zip(b.x.coeffs()) {
            let d = (u + v).abs();
            exact &= -u == *v;
            if d.cmp_abs(&worst).is_gt() {
                worst = d;
            }
        }
        for (u, v) in a.y.coeffs().iter().zip(b.y.coeffs()) {
            let d = (u - v).abs();
            exact &= u == v;
            if d.cmp_abs(&worst).is_gt() {
                worst = d;
            }
        }
        if rb == RootBranch::Zero {
            let all_exact = a.y.coeffs().iter().chain(a.x_scaled.coeffs()).all(Scalar::is_exact);
            rational_checked = all_exact && a.x_scaled.coeffs() == b.x_scaled.coeffs() && a.y.coeffs() == b.y.coeffs();
        }
    }
    exact &= rational_checked;
    let elapsed = start.elapsed();
    let pass = worst.abs_le(&t) && exact;
    report(7, "x_sign symmetry", pass, &format!("max deviation {:.2e}, bitwise exact: {exact}", worst.abs_f64()), elapsed);
    assert!(worst.abs_le(&t));
    assert!(exact);
}

#[test]
fn criterion_08_convergence_certificate() {
    let start = Instant::now();
    let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
    let sol = build_series(&spec, 40).unwrap();
    let cert = certify(&sol, &q(1, 10), &Scalar::int(1 << 20)).unwrap();
    let tails_ok = !cert.tail_checks.is_empty()
        && cert.tail_checks.iter().all(|c| c.holds && (&c.t - &spec.t0).abs().approx_eq(&q(9, 10), &tol(60)));
    let elapsed = start.elapsed();
    let pass = cert.verdict == Verdict::Certified && tails_ok && elapsed < Duration::from_secs(30);
    report(
        8,
        "convergence certificate",
        pass,
        &format!("M = {}, N = {}, prefix {}, tail checks {}", cert.m, cert.n, cert.checked_prefix, cert.tail_checks.len()),
        elapsed,
    );
    assert_eq!(cert.verdict, Verdict::Certified, "{}", cert.reason);
    assert!(tails_ok);
    assert!(elapsed < Duration::from_secs(30));
}

#[test]
fn criterion_09_numeric_cross_oracle() {
    let start = Instant::now();
    let spec = BranchSpec::new(SeriesCase::C165, q(1, 9), RootBranch::Plus);
    let sol = build_series(&spec, 40).unwrap();
    let cert = certify(&sol, &q(1, 10), &Scalar::int(1 << 20)).unwrap();
    assert_eq!(cert.verdict, Verdict::Certified);
    let check = numeric_cross_check(&spec, &sol.x, &sol.y, &q(3, 10), &q(1, 2), &tol(INTEGRATOR_TOL_EXP)).unwrap();
    let elapsed = start.elapsed();
    let t = tol(CROSS_CHECK_TOL_EXP);
    let pass = check.differences.iter().all(|d| d.abs_le(&t)) && elapsed < Duration::from_secs(60);
    report(
        9,
        "numeric cross-oracle",
        pass,
        &format!("max |series - integrator| {:.2e}", check.max_difference.abs_f64()),
        elapsed,
    );
    assert!(check.differences.iter().all(|d| d.abs_le(&t)), "{:?}", check.differences);
    assert!(elapsed < Duration::from_secs(60));
}

/// `℘ = t⁻² + Σ_{k≥2} c_k t^{2k−2}`, `c₂ = g₂/20`, `c₃ = g₃/28`,
/// `c_k = 3/((2k+1)(k−3)) Σ_{m=2}^{k−2} c_m c_{k−m}`.
fn weierstrass_series(g2: &BigRational, g3: &BigRational, len: usize) -> PuiseuxSeries {
    let kmax = len.div_ceil(2) + 1;
    let mut c = vec![BigRational::zero(); kmax + 1];
    c[0] = BigRational::one();
    if kmax >= 2 {
        c[2] = g2 / rat(20, 1);
    }
    if kmax >= 3 {
        c[3] = g3 / rat(28, 1);
    }
    for k in 4..=kmax {
        let s = (2..=k - 2).map(|m| &c[m] * &c[k - m]).fold(BigRational::zero(), |a, b| a + b);
        c[k] = s * rat(3, ((2 * k + 1) * (k - 3)) as i64);
    }
    let mut coeffs = vec![Scalar::zero(); len];
    for (k, ck) in c.iter().enumerate() {
        if k == 1 {
            continue;
        }
        let i = 2 * k; // exponent 2k − 2, offset from t⁻²
        if i < len {
            coeffs[i] = Scalar::from_rational(ck.clone());
        }
    }
    PuiseuxSeries::laurent(-2, coeffs)
}

#[test]
fn criterion_10_subequation_fitter() {
    let start = Instant::now();
    let t = tol(FIT_TOL_EXP);
    let mut inv = vec![Scalar::zero(); 20];
    inv[0] = Scalar::one();
    let fixture = PuiseuxSeries::laurent(-2, inv);
    let cubic = SubequationAnsatz::new(2).with(0, 2, Scalar::one()).with(3, 0, Scalar::int(-4));
    let r1 = fit(&fixture, 2, 14).unwrap();

    let wp = weierstrass_series(&rat(4, 1), &rat(1, 1), 20);
    let r2 = fit(&wp, 2, 14).unwrap();
    let weier = SubequationAnsatz::new(2)
        .with(0, 2, Scalar::one())
        .with(3, 0, Scalar::int(-4))
        .with(1, 0, Scalar::int(4))
        .with(0, 0, Scalar::int(1));

    let max_err = |got: &SubequationAnsatz, want: &SubequationAnsatz| -> Scalar {
        let got = got.unit_at(0, 2).expect("h02 present");
        SubequationAnsatz::index_set(2)
            .into_iter()
            .map(|(j, k)| (&got.get(j, k) - &want.get(j, k)).abs())
            .fold(Scalar::zero(), |a, b| if b.cmp_abs(&a).is_gt() { b } else { a })
    };
    let ok = |r: &hh_painleve::subequation::FitResult, want: &SubequationAnsatz| -> (bool, Scalar) {
        if r.nullspace_dim != 1 {
            return (false, Scalar::int(-1));
        }
        let e = max_err(&r.basis[0].h, want);
        (e.abs_le(&t) && r.basis[0].residual_order >= r.matched_powers.1, e)
    };
    let (ok1, e1) = ok(&r1, &cubic);
    let (ok2, e2) = ok(&r2, &weier);
    let elapsed = start.elapsed();
    report(
        10,
        "subequation fitter",
        ok1 && ok2,
        &format!("t^-2: dim {} err {}; wp: dim {} err {}", r1.nullspace_dim, e1, r2.nullspace_dim, e2),
        elapsed,
    );
    assert!(ok1, "{r1:?}");
    assert!(ok2, "{r2:?}");
}

/// The pair half passes; the zero-branch half is expected to fail because
/// the f₋₁ = 0 branch is rejected at generic λ (see criterion 6).
#[test]
fn criterion_11_residue_pairing() {
    let start = Instant::now();
    let lambda = q(1, 9);
    let report_c43 = enumerate_branches_report(SeriesCase::C43, &lambda, false).unwrap();
    let built: Vec<(BranchSpec, PuiseuxSeries)> = report_c43
        .branches
        .iter()
        .map(|s| (s.clone(), build_series(s, 20).unwrap().y))
        .collect();
    let pairing = residue_pairing(&built).unwrap();
    let t = tol(FIT_TOL_EXP);
    let pairs: Vec<_> = pairing
        .iter()
        .filter_map(|p| match p {
            ResiduePairing::Pair { first, second, residue } => Some((*first, *second, residue.clone())),
            _ => None,
        })
        .collect();
    let nonzero = built.iter().filter(|(s, _)| s.root_branch != RootBranch::Zero).count();
    let pairs_ok = nonzero == 4
        && pairs.len() == 2
        && pairs.iter().all(|(i, j, _)| {
            let r = |k: usize| built[k].1.coeff_at(num_rational::Rational64::from_integer(-1)).unwrap();
            (&r(*i) + &r(*j)).abs_le(&t) && !r(*i).abs_le(&t)
        });
    let zero_self = pairing.iter().any(|p| match p {
        ResiduePairing::SelfPaired { index } => built[*index].0.root_branch == RootBranch::Zero,
        _ => false,
    });
    let elapsed = start.elapsed();
    report(
        11,
        "residue pairing",
        pairs_ok && zero_self,
        &format!("{} nonzero branches in {} pairs; zero branch self-paired: {zero_self}", nonzero, pairs.len()),
        elapsed,
    );
    assert!(pairs_ok, "{pairing:?}");
    assert!(zero_self, "no zero-residue branch exists at lambda = 1/9: {:?}", report_c43.rejected);
}
