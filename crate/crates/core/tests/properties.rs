use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use hh_painleve::cli::parse_grid;
use hh_painleve::convergence::{certify, Verdict};
use hh_painleve::laurent::{build_series, enumerate_branches, BranchSpec, RootBranch, SeriesCase};
use hh_painleve::painleve::{find_dominant_balances, resonances_with_lambda};
use hh_painleve::scalar::Scalar;
use hh_painleve::series::PuiseuxSeries;
use hh_painleve::subequation::{fit, residue_pairing, ResiduePairing, SubequationAnsatz};
use hh_painleve::verify::{energy_split, residual_max};

fn small_rational() -> impl Strategy<Value = Scalar> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| Scalar::ratio(n, d))
}

fn nonzero_rational() -> impl Strategy<Value = Scalar> {
    small_rational().prop_filter("nonzero", |s| !s.is_zero())
}

fn exact_series(lead: i64) -> impl Strategy<Value = PuiseuxSeries> {
    prop::collection::vec(small_rational(), 3..10).prop_map(move |c| PuiseuxSeries::laurent(lead, c))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Laurent coefficients of ℘ through the classical recurrence.
fn weierstrass(g2: &BigRational, g3: &BigRational, len: usize) -> PuiseuxSeries {
    let kmax = len / 2 + 1;
    let mut c = vec![BigRational::zero(); kmax + 1];
    c[0] = BigRational::one();
    c[2] = g2 / rat(20, 1);
    c[3] = g3 / rat(28, 1);
    for k in 4..=kmax {
        let s = (2..=k - 2).map(|m| &c[m] * &c[k - m]).fold(BigRational::zero(), |a, b| a + b);
        c[k] = s * rat(3, ((2 * k + 1) * (k - 3)) as i64);
    }
    let mut coeffs = vec![Scalar::zero(); len];
    for (k, ck) in c.iter().enumerate() {
        if k != 1 && 2 * k < len {
            coeffs[2 * k] = Scalar::from_rational(ck.clone());
        }
    }
    PuiseuxSeries::laurent(-2, coeffs)
}

proptest! {
    #[test]
    fn exact_field_identities(a in small_rational(), b in nonzero_rational(), c in small_rational()) {
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(&(&a * &b) / &b, a.clone());
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn float_tracks_exact(a in small_rational(), b in nonzero_rational()) {
        let bits = 128;
        let exact = &(&a * &b) + &(&a / &b);
        let rounded = &(&a.to_float(bits) * &b.to_float(bits)) + &(&a.to_float(bits) / &b.to_float(bits));
        let tol = &Scalar::half_precision_eps(bits) * &(&Scalar::one() + &exact.abs());
        prop_assert!((&exact - &rounded).abs_le(&tol));
    }

    #[test]
    fn series_product_rules(a in exact_series(-2), b in exact_series(1)) {
        let (ab, ba) = (a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(ab.coeffs(), ba.coeffs());
        // (ab)' = a'b + ab' on the common known range
        let lhs = a.mul(&b).unwrap().derivative();
        let rhs = a.derivative().mul(&b).unwrap().add(&a.mul(&b.derivative()).unwrap()).unwrap();
        let n = lhs.len().min(rhs.len());
        for i in 0..n {
            prop_assert_eq!(lhs.coeff_at(lhs.exponent(i)), rhs.coeff_at(lhs.exponent(i)));
        }
    }

    #[test]
    fn series_json_round_trip(a in exact_series(-2)) {
        let back = PuiseuxSeries::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(back.coeffs(), a.coeffs());
        let f = a.scale(&Scalar::from_f64(0.1, 200));
        let back = PuiseuxSeries::from_json(&f.to_json()).unwrap();
        prop_assert_eq!(back.coeffs(), f.coeffs());
    }

    #[test]
    fn ansatz_shift_round_trip(h in prop::collection::vec(small_rational(), 9), p in small_rational()) {
        let mut a = SubequationAnsatz::new(2);
        for ((j, k), v) in SubequationAnsatz::index_set(2).into_iter().zip(h) {
            a.set(j, k, v);
        }
        prop_assert_eq!(a.shift(&p).shift(&-&p), a);
    }

    #[test]
    fn resonances_ignore_lambda(n in -30i64..=30, d in 1i64..=7, l in small_rational()) {
        let c = Scalar::ratio(n, d);
        prop_assume!(!c.is_zero() && c != Scalar::int(-2));
        for b in find_dominant_balances(&c).unwrap() {
            let r0 = resonances_with_lambda(&b, &c, &Scalar::zero()).unwrap();
            let r1 = resonances_with_lambda(&b, &c, &l).unwrap();
            prop_assert_eq!(r0.values, r1.values);
        }
    }

    #[test]
    fn grid_is_exact(a in 0i64..8, steps in 1i64..9, den in 1i64..6) {
        let grid = parse_grid(&format!("{}/{den}:{}/{den}:1/{den}", a, a + steps)).unwrap();
        prop_assert_eq!(grid.len() as i64, steps + 1);
        prop_assert!(grid.iter().all(Scalar::is_exact));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn x_sign_flip_is_exact(l in small_rational(), f2 in small_rational(), f4 in small_rational(), minus in any::<bool>()) {
        let rb = if minus { RootBranch::Minus } else { RootBranch::Plus };
        let plus = BranchSpec::new(SeriesCase::C43, l.clone(), rb).with_free_params(f2.clone(), f4.clone());
        let flipped = plus.clone().with_x_sign(-1);
        let a = build_series(&plus, 14).unwrap();
        let b = build_series(&flipped, 14).unwrap();
        for (u, v) in a.x.coeffs().iter().zip(b.x.coeffs()) {
            prop_assert_eq!(-u, v.clone());
        }
        prop_assert_eq!(a.y.coeffs(), b.y.coeffs());
    }

    #[test]
    fn c165_series_solve_and_conserve(l in small_rational(), a2 in small_rational(), b4 in small_rational(), minus in any::<bool>()) {
        let rb = if minus { RootBranch::Minus } else { RootBranch::Plus };
        let spec = BranchSpec::new(SeriesCase::C165, l, rb).with_free_params(a2, b4);
        let sol = build_series(&spec, 14).unwrap();
        let tol = Scalar::ten_pow_neg(25);
        let r = residual_max(&spec, &sol.x, &sol.y).unwrap();
        let (_, drift) = energy_split(&spec, &sol.x, &sol.y).unwrap();
        // free parameters up to 40 make coefficients large; compare relative to them
        let scale = &Scalar::one() + &Scalar::max_abs(sol.x.coeffs().iter().chain(sol.y.coeffs())).powi(3);
        prop_assert!(r.abs_le(&(&tol * &scale)), "residual {}", r);
        prop_assert!(drift.abs_le(&(&tol * &scale)), "energy drift {}", drift);
    }

    #[test]
    fn fit_recovers_weierstrass(g2n in -12i64..=12, g3n in -12i64..=12, d in 1i64..=4) {
        let (g2, g3) = (rat(g2n, d), rat(g3n, d));
        prop_assume!(!(g2.is_zero() && g3.is_zero()));
        let r = fit(&weierstrass(&g2, &g3, 24), 2, 16).unwrap();
        let want = SubequationAnsatz::new(2)
            .with(0, 2, Scalar::one())
            .with(3, 0, Scalar::int(-4))
            .with(1, 0, Scalar::from_rational(g2))
            .with(0, 0, Scalar::from_rational(g3));
        prop_assert!(r.basis.iter().any(|b| b.h.unit_at(0, 2).as_ref() == Some(&want)), "{:?}", r);
        prop_assert!(r.basis.iter().all(|b| b.residual_order >= r.matched_powers.1));
    }

    #[test]
    fn certificate_monotone_in_epsilon(e1 in 1i64..=9, e2 in 1i64..=9) {
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let spec = BranchSpec::new(SeriesCase::C165, Scalar::ratio(1, 9), RootBranch::Plus);
        let sol = build_series(&spec, 40).unwrap();
        let limit = Scalar::int(1 << 20);
        let a = certify(&sol, &Scalar::ratio(lo, 20), &limit).unwrap();
        let b = certify(&sol, &Scalar::ratio(hi, 20), &limit).unwrap();
        if a.verdict == Verdict::Certified {
            prop_assert_eq!(b.verdict, Verdict::Certified);
        }
        prop_assert_eq!((a.m, a.n), (b.m, b.n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn pairing_partitions_input(l in small_rational(), mask in 1u8..16) {
        let specs = enumerate_branches(SeriesCase::C43, &l, false).unwrap();
        let chosen: Vec<_> = specs
            .into_iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << (i % 4)) != 0)
            .map(|(_, s)| {
                let y = build_series(&s, 8).unwrap().y;
                (s, y)
            })
            .collect();
        let pairing = residue_pairing(&chosen).unwrap();
        let mut seen = vec![0; chosen.len()];
        for p in &pairing {
            match p {
                ResiduePairing::Pair { first, second, .. } => {
                    seen[*first] += 1;
                    seen[*second] += 1;
                }
                ResiduePairing::SelfPaired { index } | ResiduePairing::Unpaired { index, .. } => seen[*index] += 1,
            }
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
    }
}
