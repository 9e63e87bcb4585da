//! Regularized action functional
//! `E_ε(u) = ½⟨u, P u⟩ + (1/(p−1))∫A (ε + u⁺²)^{−(p−1)/2} ∓ (1/(q+1))∫B (u⁺)^{q+1}`,
//! with the power term subtracted in source mode and added in absorption mode.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::PaneitzOperator;

use super::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyParts {
    /// `½⟨u, P u⟩`
    pub quadratic: f64,
    /// `(1/(p−1))∫A (ε + u⁺²)^{−(p−1)/2}`, always nonnegative.
    pub singular: f64,
    /// `(1/(q+1))∫B (u⁺)^{q+1}`, subtracted in source mode.
    pub power: f64,
    pub total: f64,
}

fn check(eps: f64, u: &ScalarField) -> Result<()> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidProblem(format!("regularization must be >= 0, got {eps}")));
    }
    if eps == 0.0 && u.min() <= 0.0 {
        return Err(Error::PositivityViolation {
            what: "unregularized energy argument".into(),
            min: u.min(),
        });
    }
    Ok(())
}

pub fn energy_parts(op: &PaneitzOperator, prob: &ProblemSpec, eps: f64, u: &ScalarField) -> Result<EnergyParts> {
    check(eps, u)?;
    u.same_grid(prob.a())?;
    let (p, q) = (prob.p(), prob.q());
    let w = op.grid().cell_weight();
    let quadratic = 0.5 * op.quadratic_form(u)?;
    let mut sing = 0.0;
    let mut pow = 0.0;
    for ((&ui, &ai), &bi) in u.values().iter().zip(prob.a().values()).zip(prob.b().values()) {
        let up = ui.max(0.0);
        sing += ai * (eps + up * up).powf(-(p - 1.0) / 2.0);
        pow += bi * up.powf(q + 1.0);
    }
    let singular = sing * w / (p - 1.0);
    let power = pow * w / (q + 1.0);
    Ok(EnergyParts {
        quadratic,
        singular,
        power,
        total: quadratic + singular - prob.mode().sign() * power,
    })
}

pub fn energy(op: &PaneitzOperator, prob: &ProblemSpec, eps: f64, u: &ScalarField) -> Result<f64> {
    Ok(energy_parts(op, prob, eps, u)?.total)
}

/// Pointwise nonlinearity of the regularized Euler-Lagrange equation,
/// `A u⁺ (ε + u⁺²)^{−(p+1)/2} ± B (u⁺)^q`.
pub fn regularized_rhs(prob: &ProblemSpec, eps: f64, u: &ScalarField) -> ScalarField {
    let (p, q, s) = (prob.p(), prob.q(), prob.mode().sign());
    let vals = u
        .values()
        .iter()
        .zip(prob.a().values())
        .zip(prob.b().values())
        .map(|((&ui, &ai), &bi)| {
            let up = ui.max(0.0);
            let sing = if eps == 0.0 {
                ai / up.powf(p)
            } else {
                ai * up * (eps + up * up).powf(-(p + 1.0) / 2.0)
            };
            sing + s * bi * up.powf(q)
        })
        .collect();
    ScalarField::from_raw(u.grid().clone(), vals)
}

/// Derivative of [`regularized_rhs`] in `u`.
pub fn regularized_rhs_derivative(prob: &ProblemSpec, eps: f64, u: &ScalarField) -> ScalarField {
    let (p, q, s) = (prob.p(), prob.q(), prob.mode().sign());
    let vals = u
        .values()
        .iter()
        .zip(prob.a().values())
        .zip(prob.b().values())
        .map(|((&ui, &ai), &bi)| {
            if ui <= 0.0 {
                // u⁺ is flat here; only the regularized singular term survives at u = 0
                return if eps > 0.0 && ui == 0.0 {
                    ai * eps.powf(-(p + 1.0) / 2.0)
                } else {
                    0.0
                };
            }
            let sing = if eps == 0.0 {
                -p * ai / ui.powf(p + 1.0)
            } else {
                let g = eps + ui * ui;
                ai * g.powf(-(p + 3.0) / 2.0) * (eps - p * ui * ui)
            };
            sing + s * q * bi * ui.powf(q - 1.0)
        })
        .collect();
    ScalarField::from_raw(u.grid().clone(), vals)
}

/// `E_ε'(u)` as an `L²` density: `P u − f_ε(u)`.
pub fn energy_gradient(op: &PaneitzOperator, prob: &ProblemSpec, eps: f64, u: &ScalarField) -> Result<ScalarField> {
    check(eps, u)?;
    Ok(op.apply(u)?.sub(&regularized_rhs(prob, eps, u)))
}

/// Both sides of
/// `(q+1)E_ε(u) − ⟨E_ε'(u), u⟩ = ((q−1)/2)‖u‖²_ψ + ((q+1)/(p−1) + 1)∫A g^{−(p−1)/2} − ε∫A g^{−(p+1)/2}`
/// with `g = ε + u⁺²`, valid for nonnegative `u` in source mode.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub norm_term: f64,
    pub singular_term: f64,
    pub correction: f64,
    pub relative_gap: f64,
}

pub fn energy_identity(op: &PaneitzOperator, prob: &ProblemSpec, eps: f64, u: &ScalarField) -> Result<EnergyIdentity> {
    let (p, q) = (prob.p(), prob.q());
    let e = energy(op, prob, eps, u)?;
    let grad = energy_gradient(op, prob, eps, u)?;
    let lhs = (q + 1.0) * e - grad.inner(u);
    let w = op.grid().cell_weight();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (&ui, &ai) in u.values().iter().zip(prob.a().values()) {
        let up = ui.max(0.0);
        let g = eps + up * up;
        s1 += ai * g.powf(-(p - 1.0) / 2.0);
        if eps > 0.0 {
            s2 += ai * g.powf(-(p + 1.0) / 2.0);
        }
    }
    let norm_term = 0.5 * (q - 1.0) * op.quadratic_form(u)?;
    let singular_term = ((q + 1.0) / (p - 1.0) + 1.0) * s1 * w;
    let correction = eps * s2 * w;
    let rhs = norm_term + singular_term - correction;
    Ok(EnergyIdentity {
        lhs,
        rhs,
        norm_term,
        singular_term,
        correction,
        relative_gap: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE),
    })
}
