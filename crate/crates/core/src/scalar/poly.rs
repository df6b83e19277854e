//! Dense univariate polynomials over [`Scalar`], coefficients in ascending order.

use super::{Scalar, MIN_PRECISION};

pub fn poly_mul(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Scalar::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

pub fn poly_eval(c: &[Scalar], x: &Scalar) -> Scalar {
    c.iter().rev().fold(Scalar::zero(), |acc, ci| &(&acc * x) + ci)
}

/// All complex roots (with multiplicity) by simultaneous Weierstrass
/// (Durand–Kerner) iteration at `bits + 64` working precision.
pub fn poly_roots(coeffs: &[Scalar], bits: usize) -> Vec<Scalar> {
    let mut c: Vec<Scalar> = coeffs.to_vec();
    while c.last().is_some_and(Scalar::is_zero) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let p = bits.max(MIN_PRECISION) + 64;
    let lead = c[deg].clone();
    let monic: Vec<Scalar> = c.iter().map(|v| (v / &lead).to_float(p)).collect();

    // Cauchy bound for the initial circle
    let bound = 1.0
        + monic[..deg]
            .iter()
            .map(Scalar::abs_f64)
            .fold(0.0f64, f64::max);
    let seed = Scalar::complex_f64(0.4, 0.9, p);
    let mut z: Vec<Scalar> = (0..deg)
        .map(|i| seed.powi(i as i64) * Scalar::from_f64(bound.min(1e6), p))
        .collect();

    let stop = 2f64.powi(-(p as i32) + 16);
    for _ in 0..2000 {
        let mut worst = 0.0f64;
        for i in 0..deg {
            let num = poly_eval(&monic, &z[i]);
            let mut den = Scalar::one();
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    den = &den * &(&z[i] - zj);
                }
            }
            if den.is_zero() {
                z[i] = &z[i] + &Scalar::complex_f64(1e-10, 1e-10, p);
                worst = f64::INFINITY;
                continue;
            }
            let step = &num / &den;
            let rel = step.abs_f64() / z[i].abs_f64().max(1.0);
            worst = worst.max(rel);
            z[i] = &z[i] - &step;
        }
        if worst <= stop {
            break;
        }
    }
    z.into_iter().map(|r| r.to_float(bits.max(MIN_PRECISION))).collect()
}

/// Greedy nearest-neighbour matching of two equal-size multisets.
/// Returns the largest pairwise distance, or `None` if the sizes differ.
pub fn match_multisets(a: &[Scalar], b: &[Scalar]) -> Option<Scalar> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = Scalar::zero();
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).abs()))
            .min_by(|l, r| l.1.cmp_real(&r.1))?;
        used[j] = true;
        if d.cmp_real(&worst).is_gt() {
            worst = d;
        }
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_product_of_linears() {
        let roots = [-1i64, 0, 4, 6];
        let mut poly = vec![Scalar::one()];
        for r in roots {
            poly = poly_mul(&poly, &[Scalar::int(-r), Scalar::one()]);
        }
        let found = poly_roots(&poly, 256);
        let expected: Vec<Scalar> = roots.iter().map(|&r| Scalar::int(r)).collect();
        let d = match_multisets(&found, &expected).unwrap();
        assert!(d.abs_le(&Scalar::ten_pow_neg(60)));
    }

    #[test]
    fn double_root_converges() {
        // (r - 5/2)^2 (r^2 + 1)
        let sq = poly_mul(&[Scalar::ratio(-5, 2), Scalar::one()], &[Scalar::ratio(-5, 2), Scalar::one()]);
        let poly = poly_mul(&sq, &[Scalar::one(), Scalar::zero(), Scalar::one()]);
        let found = poly_roots(&poly, 256);
        let i = Scalar::imaginary_unit(256);
        let expected = vec![Scalar::ratio(5, 2), Scalar::ratio(5, 2), i.clone(), -i];
        let d = match_multisets(&found, &expected).unwrap();
        assert!(d.abs_le(&Scalar::ten_pow_neg(30)));
    }
}
