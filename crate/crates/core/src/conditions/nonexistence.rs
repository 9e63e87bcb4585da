use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::PaneitzOperator;
use crate::solvers::{Mode, ProblemSpec};

use super::tangency::tangency_constant;
use super::ConditionReport;

/// Minimizer `X* = ((p+1)/(q−1))^{q/(p+q)} K` of
/// `X^{(q−1)/q} + K^{(p+q)/q} X^{−(p+1)/q}`.
pub fn nonexistence_minimizer(k: f64, p: f64, q: f64) -> f64 {
    ((p + 1.0) / (q - 1.0)).powf(q / (p + q)) * k
}

/// The threshold in its printed form,
/// `K^{(p+q)(q−3)/(q(p+q−2))}·(r^{(1−q)/(p+q−2)} K^{2(p+q)/(q(p+q−2))} + r^{(p+1)/(p+q−2)})`
/// with `r = (q−1)/(p+1)`. Reported next to the derived threshold, never used
/// to decide anything.
pub fn printed_nonexistence_value(k: f64, p: f64, q: f64) -> f64 {
    let r = (q - 1.0) / (p + 1.0);
    let d = p + q - 2.0;
    k.powf((p + q) * (q - 3.0) / (q * d))
        * (r.powf((1.0 - q) / d) * k.powf(2.0 * (p + q) / (q * d)) + r.powf((p + 1.0) / d))
}

/// Source problem `P u = A/u^p + B u^q`: integrating the equation gives
/// `∫W u = ∫A/u^p + ∫B u^q`, and Hölder plus minimization over `X = ∫B u^q`
/// rules out positive solutions when
/// `K^{(q−1)/q} κ(p, q) > H`, with `K = ∫A^{q/(p+q)} B^{p/(p+q)}` and
/// `H = (∫(W⁺)^{q/(q−1)} B^{−1/(q−1)})^{(q−1)/q}`.
pub fn check_nonexistence(op: &PaneitzOperator, prob: &ProblemSpec) -> Result<ConditionReport> {
    if prob.mode() != Mode::Source {
        return Err(Error::NoConclusion(
            "the integral obstruction needs the source sign; with absorption every term has the same sign".into(),
        ));
    }
    if prob.b_is_zero() {
        return Err(Error::NoConclusion("B vanishes identically, B^(-1/(q-1)) is undefined".into()));
    }
    let (p, q) = (prob.p(), prob.q());
    if !(q > 1.0) {
        return Err(Error::InvalidProblem(format!("non-existence needs q > 1, got {q}")));
    }
    let w = op.grid().cell_weight();
    let b_n = op.params().b_n;
    let mut k_sum = 0.0;
    let mut h_sum = 0.0;
    let mut h_printed_sum = 0.0;
    let mut unbounded = false;
    for ((&a, &b), &wx) in prob.a().values().iter().zip(prob.b().values()).zip(op.weight().values()) {
        k_sum += a.powf(q / (p + q)) * b.powf(p / (p + q));
        let wp = wx.max(0.0);
        if wp > 0.0 {
            if b == 0.0 {
                unbounded = true;
                continue;
            }
            h_sum += wp.powf(q / (q - 1.0)) * b.powf(-1.0 / (q - 1.0));
            h_printed_sum += (wp / b_n).powf(q / (q - 1.0)) * b.powf(-1.0 / (q - 1.0));
        }
    }
    let k = k_sum * w;
    let kappa = tangency_constant(p, q);
    let threshold = k.powf((q - 1.0) / q) * kappa;
    let (h, h_printed) = if unbounded {
        (f64::INFINITY, f64::INFINITY)
    } else {
        ((h_sum * w).powf((q - 1.0) / q), (h_printed_sum * w).powf((q - 1.0) / q))
    };
    let printed = printed_nonexistence_value(k, p, q);

    let mut ingredients = BTreeMap::new();
    ingredients.insert("k".into(), k);
    ingredients.insert("kappa".into(), kappa);
    ingredients.insert("x_star".into(), nonexistence_minimizer(k, p, q));
    ingredients.insert("h_printed".into(), h_printed);
    ingredients.insert("w_plus_max".into(), op.weight().max().max(0.0));
    let mut notes = Vec::new();
    if unbounded {
        notes.push("B vanishes where W > 0: the weighted integral diverges".into());
    }
    notes.push(format!("printed form satisfied: {}", printed > h_printed));
    let mut r = ConditionReport::new("nonexistence", threshold > h, h, threshold, ingredients, notes);
    r.printed = Some(printed);
    r.discrepancy = Some(printed - threshold);
    Ok(r)
}
