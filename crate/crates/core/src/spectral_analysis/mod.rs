//! Principal eigenpair, discrete Sobolev constant, energy norm and
//! maximum-principle diagnostics of `P_{g,ψ}`.

mod eigen;
mod positivity;
mod sobolev;

pub use eigen::{principal_eigenpair, principal_eigenpair_with, EigenConfig, EigenPair};
pub use positivity::{green_column, positivity_check, PositivityReport, ProbeSummary};
pub use sobolev::{
    rayleigh_minimum, rayleigh_quotient, sobolev_constant, sobolev_estimate, SobolevConfig,
    SobolevEstimate, StartRecord,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{GridSignature, ScalarField};
use crate::operator::PaneitzOperator;

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub grid: GridSignature,
    pub lambda1: f64,
    pub invariant_sign: i32,
    pub coercivity_witness: f64,
    /// Absent when the operator fails the coercivity witness.
    pub s_psi: Option<f64>,
}

/// Relative tolerance below which `λ₁` counts as zero.
pub const ZERO_EIGEN_TOL: f64 = 1e-9;

/// Sign of the principal eigenvalue, which decides the sign of the conformal
/// invariant.
pub fn invariant_sign(op: &PaneitzOperator) -> Result<i32> {
    Ok(sign_of(op, principal_eigenpair(op)?.lambda1))
}

fn sign_of(op: &PaneitzOperator, lambda1: f64) -> i32 {
    let tol = ZERO_EIGEN_TOL * op.params().beta.abs().max(1.0);
    if lambda1.abs() <= tol {
        0
    } else if lambda1 > 0.0 {
        1
    } else {
        -1
    }
}

/// `‖u‖_ψ = ⟨u, P u⟩^{1/2}`.
pub fn energy_norm(op: &PaneitzOperator, u: &ScalarField) -> Result<f64> {
    let q = op.quadratic_form(u)?;
    if q < 0.0 {
        return Err(Error::Indefinite { curvature: q });
    }
    Ok(q.sqrt())
}

pub fn analyze(op: &PaneitzOperator, cfg: &SobolevConfig) -> Result<AnalysisReport> {
    let eig = principal_eigenpair(op)?;
    let witness = op.coercivity_witness(0.0);
    let s_psi = if witness > 0.0 {
        Some(sobolev_estimate(op, cfg)?.value)
    } else {
        None
    };
    Ok(AnalysisReport {
        grid: op.grid().signature().clone(),
        lambda1: eig.lambda1,
        invariant_sign: sign_of(op, eig.lambda1),
        coercivity_witness: witness,
        s_psi,
    })
}
