//! Fitting first-order polynomial subequations
//! `Σ_{k=0}^{m} Σ_{j=0}^{2m−2k} h_jk y^j (y')^k = 0` to a Laurent series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{contract, Result};
use crate::laurent::BranchSpec;
use crate::scalar::{poly_mul, solve_linear, DenseMatrix, LinearSolution, Scalar};
use crate::series::PuiseuxSeries;

/// Largest supported ansatz order.
pub const MAX_M: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SubequationAnsatz {
    pub m: usize,
    /// `(j, k) → h_jk`; absent entries are zero.
    pub h: BTreeMap<(usize, usize), Scalar>,
}

impl Serialize for SubequationAnsatz {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.h.len()))?;
        for ((j, k), v) in &self.h {
            map.serialize_entry(&format!("{j},{k}"), v)?;
        }
        map.end()
    }
}

impl SubequationAnsatz {
    /// All `(j, k)` pairs of the order-`m` ansatz, `k` outer.
    pub fn index_set(m: usize) -> Vec<(usize, usize)> {
        (0..=m).flat_map(|k| (0..=2 * m - 2 * k).map(move |j| (j, k))).collect()
    }

    pub fn new(m: usize) -> Self {
        SubequationAnsatz { m, h: BTreeMap::new() }
    }

    pub fn with(mut self, j: usize, k: usize, v: Scalar) -> Self {
        self.set(j, k, v);
        self
    }

    pub fn set(&mut self, j: usize, k: usize, v: Scalar) {
        assert!(k <= self.m && j <= 2 * self.m - 2 * k, "h_{j}{k} outside the order-{} ansatz", self.m);
        if v.is_zero() {
            self.h.remove(&(j, k));
        } else {
            self.h.insert((j, k), v);
        }
    }

    pub fn get(&self, j: usize, k: usize) -> Scalar {
        self.h.get(&(j, k)).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn is_trivial(&self) -> bool {
        self.h.values().all(Scalar::is_zero)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut out = SubequationAnsatz::new(self.m);
        for (&(j, k), v) in &self.h {
            out.set(j, k, v * c);
        }
        out
    }

    /// Divides by the largest-magnitude coefficient so that it becomes 1.
    pub fn normalized(&self) -> Self {
        let mut best: Option<&Scalar> = None;
        for v in self.h.values() {
            if best.is_none_or(|b| v.cmp_abs(b).is_gt()) {
                best = Some(v);
            }
        }
        match best {
            Some(b) => self.scale(&b.recip()),
            None => self.clone(),
        }
    }

    /// Rescales so that `h_jk = 1`; `None` if that coefficient vanishes.
    pub fn unit_at(&self, j: usize, k: usize) -> Option<Self> {
        let v = self.get(j, k);
        (!v.is_zero()).then(|| self.scale(&v.recip()))
    }

    /// Coefficient polynomial in `y` (ascending) multiplying `(y')^k`.
    pub fn y_polynomial(&self, k: usize) -> Vec<Scalar> {
        (0..=2 * self.m - 2 * k).map(|j| self.get(j, k)).collect()
    }

    /// The ansatz in the variable `y − p`: `h'(y) = h(y + p)`.
    pub fn shift(&self, p: &Scalar) -> Self {
        let mut out = SubequationAnsatz::new(self.m);
        let lin = [p.clone(), Scalar::one()];
        for k in 0..=self.m {
            let mut acc: Vec<Scalar> = Vec::new();
            for c in self.y_polynomial(k).iter().rev() {
                acc = add_poly(&poly_mul(&acc, &lin), std::slice::from_ref(c));
            }
            for (j, v) in acc.into_iter().enumerate() {
                out.set(j, k, v);
            }
        }
        out
    }

    /// Residual `Σ_k (y')^k Σ_j h_jk y^j` by Horner in `y` and `y'`.
    pub fn residual(&self, y: &PuiseuxSeries) -> Result<PuiseuxSeries> {
        let dy = y.derivative();
        let horner = |coeffs: &[Scalar], x: &PuiseuxSeries| -> Result<Option<PuiseuxSeries>> {
            let mut acc: Option<PuiseuxSeries> = None;
            for c in coeffs.iter().rev() {
                acc = match acc {
                    None if c.is_zero() => None,
                    None => Some(constant_like(x, c)),
                    Some(a) => Some(a.mul(x)?.add_constant(c)?),
                };
            }
            Ok(acc)
        };
        let polys: Vec<Option<PuiseuxSeries>> = (0..=self.m)
            .map(|k| horner(&self.y_polynomial(k), y))
            .collect::<Result<_>>()?;
        let mut acc: Option<PuiseuxSeries> = None;
        for p in polys.into_iter().rev() {
            acc = match (acc, p) {
                (None, p) => p,
                (Some(a), None) => Some(a.mul(&dy)?),
                (Some(a), Some(p)) => Some(a.mul(&dy)?.add(&p)?),
            };
        }
        Ok(acc.unwrap_or_else(|| PuiseuxSeries::laurent(0, Vec::new())))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (&(j, k), v) in self.h.iter().rev() {
            let mono = match (j, k) {
                (0, 0) => String::new(),
                _ => {
                    let mut parts = Vec::new();
                    match j {
                        0 => {}
                        1 => parts.push("y".to_string()),
                        _ => parts.push(format!("y^{j}")),
                    }
                    match k {
                        0 => {}
                        1 => parts.push("y'".to_string()),
                        _ => parts.push(format!("y'^{k}")),
                    }
                    parts.join(" ")
                }
            };
            let coef = v.to_string();
            if !out.is_empty() {
                out.push_str(" + ");
            }
            if mono.is_empty() {
                let _ = write!(out, "({coef})");
            } else if coef == "1" {
                out.push_str(&mono);
            } else {
                let _ = write!(out, "({coef}) {mono}");
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out.push_str(" = 0");
        out
    }
}

fn add_poly(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    (0..a.len().max(b.len()))
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Scalar::zero);
            let y = b.get(i).cloned().unwrap_or_else(Scalar::zero);
            &x + &y
        })
        .collect()
}

/// The constant `c` as a series known as far as `x` is, on the same lattice.
fn constant_like(x: &PuiseuxSeries, c: &Scalar) -> PuiseuxSeries {
    let len = (x.order() / x.step()).to_integer().max(1) as usize;
    let mut coeffs = vec![Scalar::zero(); len];
    coeffs[0] = c.clone();
    PuiseuxSeries::new(Rational64::zero(), x.step(), coeffs).with_center(x.center().clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct FitBasisElement {
    pub h: SubequationAnsatz,
    /// Highest power of `t` through which the re-substituted residual vanishes.
    pub residual_order: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub m: usize,
    pub nullspace_dim: usize,
    pub basis: Vec<FitBasisElement>,
    /// Powers of `t` matched by the linear system (inclusive).
    pub matched_powers: (i64, i64),
    /// Nullspace vectors dropped because their residual did not vanish.
    pub rejected: usize,
}

/// Fits the order-`m` ansatz to an integer-step Laurent series using
/// `match_order` consecutive powers of `t` starting from the most negative one.
pub fn fit(y: &PuiseuxSeries, m: usize, match_order: usize) -> Result<FitResult> {
    if m == 0 || m > MAX_M {
        return contract(format!("ansatz order m must lie in 1..={MAX_M}"));
    }
    if y.step() != Rational64::one() || !y.lead().is_integer() {
        return contract("fit needs an integer-step Laurent series");
    }
    let idx = SubequationAnsatz::index_set(m);
    if match_order < idx.len() + 2 {
        return contract(format!(
            "match_order {match_order} too small for {} unknowns (need at least {})",
            idx.len(),
            idx.len() + 2
        ));
    }

    let dy = y.derivative();
    let mut ypow = vec![constant_like(y, &Scalar::one())];
    for j in 1..=2 * m {
        let next = ypow[j - 1].mul(y)?;
        ypow.push(next);
    }
    let mut dpow = vec![constant_like(&dy, &Scalar::one())];
    for k in 1..=m {
        let next = dpow[k - 1].mul(&dy)?;
        dpow.push(next);
    }
    let terms: Vec<PuiseuxSeries> = idx
        .iter()
        .map(|&(j, k)| match (j, k) {
            (_, 0) => Ok(ypow[j].clone()),
            (0, _) => Ok(dpow[k].clone()),
            _ => ypow[j].mul(&dpow[k]),
        })
        .collect::<Result<_>>()?;

    let e_min = terms.iter().map(|t| t.lead().to_integer()).min().expect("nonempty index set");
    let known = terms.iter().map(|t| t.order().to_integer()).min().expect("nonempty index set");
    let e_max = e_min + match_order as i64 - 1;
    if e_max >= known {
        return contract(format!(
            "series too short: match_order {match_order} needs powers through t^{e_max}, products known below t^{known}"
        ));
    }

    let exact = y.coeffs().iter().all(Scalar::is_exact);
    let mut rows = Vec::with_capacity(match_order);
    for e in e_min..=e_max {
        let er = Rational64::from_integer(e);
        let mut row: Vec<Scalar> = terms
            .iter()
            .map(|t| t.coeff_at(er).unwrap_or_else(Scalar::zero))
            .collect();
        if !exact {
            let scale = Scalar::max_abs(&row);
            if !scale.is_zero() {
                let inv = scale.recip();
                row.iter_mut().for_each(|v| *v = &*v * &inv);
            }
        }
        rows.push(row);
    }
    let a = DenseMatrix::from_rows(rows)?;
    let vectors = match solve_linear(&a, &vec![Scalar::zero(); match_order])? {
        LinearSolution::Parametrized { nullspace, .. } => nullspace,
        LinearSolution::Unique(_) | LinearSolution::Inconsistent => Vec::new(),
    };

    let mut basis = Vec::new();
    let mut rejected = 0;
    for v in vectors {
        let mut ans = SubequationAnsatz::new(m);
        for (&(j, k), c) in idx.iter().zip(v) {
            ans.set(j, k, c);
        }
        let ans = ans.normalized();
        let order = verified_order(&ans, y, &terms, &idx)?;
        if order >= e_max {
            basis.push(FitBasisElement { h: ans, residual_order: order });
        } else {
            rejected += 1;
        }
    }
    Ok(FitResult { m, nullspace_dim: basis.len(), basis, matched_powers: (e_min, e_max), rejected })
}

/// Highest power through which the Horner residual vanishes, measured
/// against `10⁻²⁵ (1 + Σ |h_u| |term_u|)` at each power.
fn verified_order(ans: &SubequationAnsatz, y: &PuiseuxSeries, terms: &[PuiseuxSeries], idx: &[(usize, usize)]) -> Result<i64> {
    let res = ans.residual(y)?;
    let tol = Scalar::ten_pow_neg(25);
    let first = res.lead().to_integer();
    let mut e = first;
    for c in res.coeffs() {
        let er = Rational64::from_integer(e);
        let scale: Scalar = idx
            .iter()
            .zip(terms)
            .map(|(&(j, k), t)| (&ans.get(j, k) * &t.coeff_at(er).unwrap_or_else(Scalar::zero)).abs())
            .sum();
        let bound = &tol * &(&Scalar::one() + &scale);
        let ok = if c.is_exact() { c.is_zero() } else { c.abs_le(&bound) };
        if !ok {
            break;
        }
        e += 1;
    }
    Ok(e - 1)
}

/// `ϱ'² = ¼(Ãϱ⁴ + G̃ϱ³ + B̃ϱ² + Ẽϱ + C̃)` with `y = ϱ² + P₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarticForm {
    #[serde(rename = "A")]
    pub a: Scalar,
    #[serde(rename = "G")]
    pub g: Scalar,
    #[serde(rename = "B")]
    pub b: Scalar,
    #[serde(rename = "E")]
    pub e: Scalar,
    #[serde(rename = "C")]
    pub c: Scalar,
    #[serde(rename = "P0")]
    pub p0: Scalar,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuarticReport {
    /// `y'² − Ã(y−P₀)³ − B̃(y−P₀)² − C̃(y−P₀)` in ansatz layout (m = 2).
    pub polynomial_part: SubequationAnsatz,
    /// Coefficients of `(y−P₀)^{5/2}` and `(y−P₀)^{3/2}` left on the right-hand side.
    pub half_integer_remainder: Option<(Scalar, Scalar)>,
    pub rhs_identically_zero: bool,
    pub equation: String,
}

/// With `u = ϱ²`: `y'² = 4uϱ'² = Ãu³ + G̃u^{5/2} + B̃u² + Ẽu^{3/2} + C̃u`.
pub fn transform_quartic(q: &QuarticForm) -> QuarticReport {
    let u = [-&q.p0, Scalar::one()];
    let u2 = poly_mul(&u, &u);
    let u3 = poly_mul(&u2, &u);
    let scaled = |p: &[Scalar], c: &Scalar| p.iter().map(|v| v * c).collect::<Vec<_>>();
    let rhs = add_poly(&add_poly(&scaled(&u3, &q.a), &scaled(&u2, &q.b)), &scaled(&u, &q.c));
    let mut ans = SubequationAnsatz::new(2).with(0, 2, Scalar::one());
    for (j, v) in rhs.iter().enumerate() {
        ans.set(j, 0, -v);
    }
    let remainder = (!q.g.is_zero() || !q.e.is_zero()).then(|| (q.g.clone(), q.e.clone()));
    let rhs_zero = rhs.iter().all(Scalar::is_zero) && remainder.is_none();
    let mut equation = ans.render();
    if let Some((g, e)) = &remainder {
        equation = format!(
            "{} + ({g}) (y - {})^(5/2) + ({e}) (y - {})^(3/2)",
            equation.trim_end_matches(" = 0"),
            q.p0,
            q.p0
        );
        equation.push_str(" (non-polynomial)");
    }
    QuarticReport { polynomial_part: ans, half_integer_remainder: remainder, rhs_identically_zero: rhs_zero, equation }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResiduePairing {
    Pair { first: usize, second: usize, residue: Scalar },
    SelfPaired { index: usize },
    Unpaired { index: usize, residue: Scalar },
}

/// Groups branches whose `t⁻¹` coefficients of `y` cancel within `10⁻²⁵`;
/// zero-residue branches pair with themselves. Every input index appears once.
pub fn residue_pairing(branches: &[(BranchSpec, PuiseuxSeries)]) -> Result<Vec<ResiduePairing>> {
    if let Some((first, _)) = branches.first() {
        if branches.iter().any(|(b, _)| b.case != first.case || b.lambda != first.lambda) {
            return contract("residue pairing needs branches of one case and one lambda");
        }
    }
    let tol = Scalar::ten_pow_neg(25);
    let residues: Vec<Scalar> = branches
        .iter()
        .map(|(_, y)| {
            let rel = Rational64::from_integer(-1);
            y.coeff_at(rel).unwrap_or_else(Scalar::zero)
        })
        .collect();
    let mut used = vec![false; branches.len()];
    let mut out = Vec::new();
    for i in 0..branches.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if residues[i].abs_le(&tol) {
            out.push(ResiduePairing::SelfPaired { index: i });
            continue;
        }
        let partner = (i + 1..branches.len()).find(|&j| !used[j] && (&residues[i] + &residues[j]).abs_le(&tol));
        match partner {
            Some(j) => {
                used[j] = true;
                out.push(ResiduePairing::Pair { first: i, second: j, residue: residues[i].clone() });
            }
            None => out.push(ResiduePairing::Unpaired { index: i, residue: residues[i].clone() }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn inverse_square(len: usize) -> PuiseuxSeries {
        let mut c = vec![Scalar::zero(); len];
        c[0] = Scalar::one();
        PuiseuxSeries::laurent(-2, c)
    }

    #[test]
    fn index_set_layout() {
        assert_eq!(SubequationAnsatz::index_set(1), vec![(0, 0), (1, 0), (2, 0), (0, 1)]);
        assert_eq!(SubequationAnsatz::index_set(2).len(), 9);
        assert_eq!(SubequationAnsatz::index_set(3).len(), 16);
    }

    #[test]
    fn inverse_square_gives_cubic() {
        let r = fit(&inverse_square(20), 2, 14).unwrap();
        assert_eq!(r.nullspace_dim, 1);
        let h = r.basis[0].h.unit_at(0, 2).unwrap();
        let want = SubequationAnsatz::new(2).with(0, 2, Scalar::one()).with(3, 0, Scalar::int(-4));
        assert_eq!(h, want);
    }

    #[test]
    fn too_few_equations_rejected() {
        assert!(fit(&inverse_square(20), 2, 10).is_err());
        assert!(fit(&inverse_square(5), 2, 14).is_err());
    }

    #[test]
    fn normalized_largest_is_one() {
        let a = SubequationAnsatz::new(2).with(0, 2, q(1, 2)).with(3, 0, Scalar::int(-2));
        let n = a.normalized();
        assert_eq!(n.get(3, 0), Scalar::one());
        assert_eq!(n.get(0, 2), q(-1, 4));
    }

    #[test]
    fn shift_round_trip() {
        let a = SubequationAnsatz::new(2).with(0, 2, Scalar::one()).with(3, 0, q(-4, 1)).with(1, 0, q(3, 7));
        assert_eq!(a.shift(&q(5, 3)).shift(&q(-5, 3)), a);
    }

    #[test]
    fn quartic_pure_fourth_power() {
        let zero = Scalar::zero();
        let form = QuarticForm { a: Scalar::int(4), g: zero.clone(), b: zero.clone(), e: zero.clone(), c: zero.clone(), p0: zero.clone() };
        let r = transform_quartic(&form);
        let want = SubequationAnsatz::new(2).with(0, 2, Scalar::one()).with(3, 0, Scalar::int(-4));
        assert_eq!(r.polynomial_part, want);
        // ϱ = 1/t solves ϱ'² = ϱ⁴, so y = t⁻² must satisfy the report
        assert!(r.polynomial_part.residual(&inverse_square(12)).unwrap().is_identically_zero());

        let blank = QuarticForm { a: zero.clone(), ..form };
        assert!(transform_quartic(&blank).rhs_identically_zero);
    }

    #[test]
    fn quartic_half_powers_reported() {
        let zero = Scalar::zero();
        let form = QuarticForm { a: Scalar::one(), g: q(1, 2), b: zero.clone(), e: zero.clone(), c: zero.clone(), p0: zero };
        let r = transform_quartic(&form);
        assert_eq!(r.half_integer_remainder, Some((q(1, 2), Scalar::zero())));
        assert!(r.equation.contains("non-polynomial"));
    }
}
