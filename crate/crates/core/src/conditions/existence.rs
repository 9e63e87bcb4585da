use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::PaneitzOperator;
use crate::solvers::{Mode, ProblemSpec};
use crate::spectral_analysis::{energy_norm, EigenPair};

use super::tangency::tangency_constant;
use super::ConditionReport;

/// Exponent of `φ₁` in the pointwise existence inequality,
/// `q(p+1)/(p+q) − p(q−1)/(p+q) − 1`. It simplifies to zero.
pub fn ineq_phi_exponent(p: f64, q: f64) -> f64 {
    q * (p + 1.0) / (p + q) - p * (q - 1.0) / (p + q) - 1.0
}

/// Absorption problem: existence when
/// `max(A^{(q−1)/(p+q)} B₋^{(p+1)/(p+q)} φ₁^e) ≤ λ₁ / κ(p, q)`,
/// with `B₋ = max(−B, 0)` and `κ` the unit tangency slope.
pub fn check_existence_ineq(op: &PaneitzOperator, prob: &ProblemSpec, eig: &EigenPair) -> Result<ConditionReport> {
    if prob.mode() != Mode::Absorption {
        return Err(Error::InvalidProblem("the eigenfunction inequality applies to the absorption problem".into()));
    }
    let (p, q) = (prob.p(), prob.q());
    if q == 1.0 {
        return Err(Error::InvalidProblem("degenerate exponent q = 1".into()));
    }
    let phi = &eig.phi1;
    phi.same_grid(prob.a())?;
    if phi.min() <= 0.0 {
        return Err(Error::PositivityViolation {
            what: "principal eigenfunction".into(),
            min: phi.min(),
        });
    }
    let e = ineq_phi_exponent(p, q);
    let lhs = prob
        .a()
        .values()
        .iter()
        .zip(prob.b().values())
        .zip(phi.values())
        .map(|((&a, &b), &f)| {
            let bm = (-b).max(0.0);
            a.powf((q - 1.0) / (p + q)) * bm.powf((p + 1.0) / (p + q)) * f.powf(e)
        })
        .fold(0.0f64, f64::max);
    let kappa = tangency_constant(p, q);
    let rhs = eig.lambda1 / kappa;
    let mut ingredients = BTreeMap::new();
    ingredients.insert("lambda1".into(), eig.lambda1);
    ingredients.insert("kappa".into(), kappa);
    ingredients.insert("phi1_exponent".into(), e);
    ingredients.insert("phi1_max".into(), phi.max());
    ingredients.insert("phi1_min".into(), phi.min());
    ingredients.insert("coercivity_witness".into(), op.coercivity_witness(0.0));
    let mut notes = vec!["phi1 normalized to max 1".to_string()];
    if prob.b().max() <= 0.0 {
        notes.push("B has no positive part".into());
    }
    Ok(ConditionReport::new("existence_ineq", lhs <= rhs, lhs, rhs, ingredients, notes))
}

/// `S_ψ^{−(q+1)(p+2q+1)/(2(q−1))} · (q−1)(p−1)/2`.
pub fn cond_constant(s_psi: f64, p: f64, q: f64) -> f64 {
    s_psi.powf(-(q + 1.0) * (p + 2.0 * q + 1.0) / (2.0 * (q - 1.0))) * (q - 1.0) * (p - 1.0) / 2.0
}

/// Exponent `s = 2♯/(2♯ − q − 1)` of the `B` norm.
pub fn b_norm_exponent(two_sharp: f64, q: f64) -> f64 {
    let d = two_sharp - q - 1.0;
    if d <= 1e-12 {
        f64::INFINITY
    } else {
        two_sharp / d
    }
}

/// Source problem: existence when
/// `‖φ‖_ψ^{p−1} ‖B‖_{L^s}^{(p+1)/(q−1)} ∫A/φ^{p−1} < C(S_ψ)`.
pub fn check_existence_cond(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    phi: &ScalarField,
    s_psi: f64,
) -> Result<ConditionReport> {
    if prob.mode() != Mode::Source {
        return Err(Error::InvalidProblem("the energy condition applies to the source problem".into()));
    }
    let (p, q) = (prob.p(), prob.q());
    let two_sharp = op.params().two_sharp;
    if q >= two_sharp - 1.0 - 1e-12 {
        return Err(Error::InvalidProblem(format!(
            "q = {q} >= 2# - 1 = {}: the B-norm exponent degenerates",
            two_sharp - 1.0
        )));
    }
    phi.same_grid(prob.a())?;
    if phi.min() <= 0.0 {
        return Err(Error::PositivityViolation {
            what: "test function".into(),
            min: phi.min(),
        });
    }
    if !(s_psi > 0.0) {
        return Err(Error::InvalidProblem(format!("Sobolev constant must be positive, got {s_psi}")));
    }
    let s = b_norm_exponent(two_sharp, q);
    let phi_norm = energy_norm(op, phi)?;
    let b_norm = prob.b().lp_norm(s);
    let a_int = prob.a().zip_map(phi, |a, f| a / f.powf(p - 1.0)).integral();
    let lhs = phi_norm.powf(p - 1.0) * b_norm.powf((p + 1.0) / (q - 1.0)) * a_int;
    let c = cond_constant(s_psi, p, q);
    let mut ingredients = BTreeMap::new();
    ingredients.insert("s_psi".into(), s_psi);
    ingredients.insert("phi_energy_norm".into(), phi_norm);
    ingredients.insert("b_norm_exponent".into(), s);
    ingredients.insert("b_norm".into(), b_norm);
    ingredients.insert("a_over_phi_integral".into(), a_int);
    Ok(ConditionReport::new("existence_cond", lhs < c, lhs, c, ingredients, Vec::new()))
}
