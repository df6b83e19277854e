//! Residual, energy and numeric cross-checks for built series.

use serde::Serialize;

use crate::error::{contract, Result};
use crate::laurent::BranchSpec;
use crate::odemodel::{build_henon_heiles, energy_series, integrate_numeric, residual_of_series, split_energy, PhaseState};
use crate::scalar::Scalar;
use crate::series::PuiseuxSeries;

fn system_for(spec: &BranchSpec) -> crate::odemodel::PolynomialODESystem {
    let lambda = if spec.lambda.is_exact() { spec.lambda.clone() } else { spec.lambda.to_float(spec.bits) };
    build_henon_heiles(spec.case.c_value(), lambda)
}

/// Largest coefficient modulus of both equation residuals.
pub fn residual_max(spec: &BranchSpec, x: &PuiseuxSeries, y: &PuiseuxSeries) -> Result<Scalar> {
    let (rx, ry) = residual_of_series(&system_for(spec), x, y)?;
    Ok(Scalar::max_abs(rx.coeffs().iter().chain(ry.coeffs())))
}

/// Energy constant and the largest nonconstant energy coefficient.
pub fn energy_split(spec: &BranchSpec, x: &PuiseuxSeries, y: &PuiseuxSeries) -> Result<(Scalar, Scalar)> {
    Ok(split_energy(&energy_series(&system_for(spec), x, y)?))
}

/// `(x, x', y, y')` summed from the series at `t`.
pub fn series_state(x: &PuiseuxSeries, y: &PuiseuxSeries, t: &Scalar, bits: usize) -> PhaseState {
    PhaseState {
        x: x.evaluate(t, bits),
        xt: x.derivative().evaluate(t, bits),
        y: y.evaluate(t, bits),
        yt: y.derivative().evaluate(t, bits),
        t: t.clone(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericCrossCheck {
    pub t_start: Scalar,
    pub t_end: Scalar,
    pub tol: Scalar,
    /// `|series − integrated|` for x, x', y, y' at `t_end`.
    pub differences: [Scalar; 4],
    pub max_difference: Scalar,
}

/// Starts the integrator from the series state at `t0 + t_start` and compares
/// with the series at `t0 + t_end`.
pub fn numeric_cross_check(
    spec: &BranchSpec,
    x: &PuiseuxSeries,
    y: &PuiseuxSeries,
    t_start: &Scalar,
    t_end: &Scalar,
    tol: &Scalar,
) -> Result<NumericCrossCheck> {
    if !spec.t0.is_real() {
        return contract("numeric cross-check needs a real expansion point");
    }
    let bits = spec.bits;
    let ta = &spec.t0 + t_start;
    let tb = &spec.t0 + t_end;
    let s0 = series_state(x, y, &ta, bits);
    let integrated = integrate_numeric(&system_for(spec), &s0, &tb, tol)?;
    let reference = series_state(x, y, &tb, bits);
    let differences = [
        (&integrated.x - &reference.x).abs(),
        (&integrated.xt - &reference.xt).abs(),
        (&integrated.y - &reference.y).abs(),
        (&integrated.yt - &reference.yt).abs(),
    ];
    let max_difference = Scalar::max_abs(&differences);
    Ok(NumericCrossCheck {
        t_start: t_start.clone(),
        t_end: t_end.clone(),
        tol: tol.clone(),
        differences,
        max_difference,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub label: String,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "H")]
    pub h: Scalar,
    pub residual_max: Scalar,
    pub energy_nonconstant_max: Scalar,
    pub numeric: Option<NumericCrossCheck>,
}

/// All checks in one report; the numeric leg runs when `span` is given.
pub fn verify_series(
    spec: &BranchSpec,
    x: &PuiseuxSeries,
    y: &PuiseuxSeries,
    span: Option<(&Scalar, &Scalar, &Scalar)>,
) -> Result<VerificationReport> {
    let residual = residual_max(spec, x, y)?;
    let (h, drift) = energy_split(spec, x, y)?;
    let numeric = match span {
        Some((a, b, tol)) => Some(numeric_cross_check(spec, x, y, a, b, tol)?),
        None => None,
    };
    Ok(VerificationReport {
        label: spec.label(),
        n: y.trunc_order(),
        h,
        residual_max: residual,
        energy_nonconstant_max: drift,
        numeric,
    })
}
