use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::{krylov, PaneitzOperator};

use super::energy::{regularized_rhs, regularized_rhs_derivative};
use super::problem::ProblemSpec;

#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    /// Target `‖F(u)‖∞`.
    pub tol: f64,
    pub max_iter: usize,
    pub krylov_tol: f64,
    pub restart: usize,
    pub krylov_max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 60,
            krylov_tol: 1e-11,
            restart: 60,
            krylov_max_iter: 3000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub solution: ScalarField,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton on `F(u) = P u − f_ε(u)`, keeping `u > 0`. The Jacobian may
/// be indefinite (saddle points), so the steps are computed with GMRES.
pub fn newton_solve(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    eps: f64,
    u0: &ScalarField,
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome> {
    if u0.min() <= 0.0 {
        return Err(Error::PositivityViolation {
            what: "Newton start".into(),
            min: u0.min(),
        });
    }
    // residual together with the roundoff floor of its two terms
    let residual_of = |u: &ScalarField| -> Result<(ScalarField, f64)> {
        let pu = op.apply(u)?;
        let rhs = regularized_rhs(prob, eps, u);
        let floor = 1e-13 * (pu.norm_inf() + rhs.norm_inf());
        Ok((pu.sub(&rhs), floor))
    };
    // applying P to a rounded field costs about ε·max σ·‖u‖∞ in the residual
    let sigma_max = op.symbol().iter().fold(0.0f64, |m, s| m.max(s.abs())) + op.weight().norm_inf();
    let spectral_floor = |u: &ScalarField| f64::EPSILON * sigma_max * u.norm_inf();
    let mut u = u0.clone();
    let (mut f, mut floor) = residual_of(&u)?;
    let mut fnorm = f.norm_inf();
    for it in 0..cfg.max_iter {
        if fnorm <= cfg.tol.max(floor) {
            return Ok(NewtonOutcome {
                solution: u,
                residual: fnorm,
                iterations: it,
            });
        }
        let d = regularized_rhs_derivative(prob, eps, &u);
        let diag: Vec<f64> = op
            .weight()
            .values()
            .iter()
            .zip(d.values())
            .map(|(w, df)| w - df)
            .collect();
        let mean = diag.iter().sum::<f64>() / diag.len() as f64;
        let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let c = mean.abs().max(1e-3 * scale);
        let jac = |x: &[f64]| {
            let mut y = op.grid().apply_multiplier(x, op.symbol());
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(&diag) {
                *yi += di * xi;
            }
            y
        };
        let rhs: Vec<f64> = f.values().iter().map(|v| -v).collect();
        // an inexact step still descends as long as it halves the linear
        // residual; stiff grids stall GMRES at the roundoff floor
        let step = krylov::gmres_partial(
            jac,
            |r| op.precondition_raw(r, c),
            &rhs,
            cfg.krylov_tol,
            cfg.restart,
            cfg.krylov_max_iter,
        );
        if !(step.relative_residual <= 0.5) {
            return Err(Error::NoConvergence {
                what: "GMRES",
                iterations: step.iterations,
                residual: step.relative_residual,
            });
        }
        let step = ScalarField::from_raw(op.grid().clone(), step.solution);

        let f2 = f.inner(&f);
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-10 {
            let cand = u.add_scaled(t, &step);
            if cand.min() > 0.0 {
                let (fc, fl) = residual_of(&cand)?;
                if fc.inner(&fc) <= (1.0 - 1e-4 * t) * f2 {
                    accepted = Some((cand, fc, fl));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, fc, fl)) = accepted else {
            if fnorm <= cfg.tol.max(spectral_floor(&u)) {
                return Ok(NewtonOutcome {
                    solution: u,
                    residual: fnorm,
                    iterations: it,
                });
            }
            return Err(Error::NoConvergence {
                what: "Newton line search",
                iterations: it + 1,
                residual: fnorm,
            });
        };
        u = cand;
        f = fc;
        floor = fl;
        fnorm = f.norm_inf();
    }
    if fnorm <= cfg.tol.max(floor) {
        return Ok(NewtonOutcome {
            solution: u,
            residual: fnorm,
            iterations: cfg.max_iter,
        });
    }
    Err(Error::NoConvergence {
        what: "Newton iteration",
        iterations: cfg.max_iter,
        residual: fnorm,
    })
}
