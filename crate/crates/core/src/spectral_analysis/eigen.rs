use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::{LinearSolverConfig, PaneitzOperator};

/// Smallest eigenvalue of `P_{g,ψ}` and its eigenfunction, normalized to
/// `max φ₁ = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda1: f64,
    #[serde(skip)]
    pub phi1: ScalarField,
    /// `‖P φ₁ − λ₁ φ₁‖∞`.
    pub residual: f64,
    pub shift: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub linear: LinearSolverConfig,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 20_000,
            linear: LinearSolverConfig::default(),
        }
    }
}

pub fn principal_eigenpair(op: &PaneitzOperator) -> Result<EigenPair> {
    principal_eigenpair_with(op, &EigenConfig::default())
}

/// Inverse power iteration on `P + s`, where `s` makes the coercivity
/// witness positive.
pub fn principal_eigenpair_with(op: &PaneitzOperator, cfg: &EigenConfig) -> Result<EigenPair> {
    let beta_scale = op.params().beta.abs().max(1.0);
    let witness = op.coercivity_witness(0.0);
    let shift = if witness > 0.0 {
        0.0
    } else {
        -witness + 0.1 * beta_scale
    };

    let grid = op.grid().clone();
    let mut x = ScalarField::constant(&grid, 1.0);
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let y = op.solve_shifted_with(shift, &x, &cfg.linear)?.solution;
        let m = y.norm_inf();
        if m == 0.0 || !m.is_finite() {
            return Err(Error::NoConvergence {
                what: "inverse power iteration",
                iterations: it,
                residual,
            });
        }
        x = y.scale(1.0 / m);
        let px = op.apply(&x)?;
        let lambda = x.inner(&px) / x.inner(&x);
        residual = px.add_scaled(-lambda, &x).norm_inf();
        let scale = px.norm_inf().max(1.0);
        if residual <= cfg.tol * scale {
            return finish(x, lambda, residual, shift, it);
        }
    }
    Err(Error::NoConvergence {
        what: "inverse power iteration",
        iterations: cfg.max_iter,
        residual,
    })
}

fn finish(x: ScalarField, lambda1: f64, residual: f64, shift: f64, iterations: usize) -> Result<EigenPair> {
    let sign = if x.values().iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let x = x.scale(sign);
    let x = x.scale(1.0 / x.max());
    let min = x.min();
    if min <= 0.0 {
        return Err(Error::PositivityViolation {
            what: "principal eigenfunction".into(),
            min,
        });
    }
    Ok(EigenPair {
        lambda1,
        phi1: x,
        residual,
        shift,
        iterations,
    })
}
