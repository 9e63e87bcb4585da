use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::{LinearSolverConfig, PaneitzOperator};

use super::bracket::Bracket;
use super::energy::energy;
use super::problem::{lipschitz_shift, ProblemSpec};
use super::{SolverReport, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// From the subsolution; iterates increase.
    Upward,
    /// From the supersolution; iterates decrease.
    Downward,
}

#[derive(Debug, Clone, Copy)]
pub struct MonotoneConfig {
    pub step_tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Pointwise slack for the order checks, relative to `max(1, ‖u‖∞)`.
    pub slack: f64,
    /// Abort on an order violation instead of only flagging it.
    pub strict: bool,
    /// Return the last iterate with `converged = false` at the iteration cap
    /// instead of an error.
    pub allow_unconverged: bool,
    pub linear: LinearSolverConfig,
}

impl Default for MonotoneConfig {
    fn default() -> Self {
        Self {
            step_tol: 1e-10,
            residual_tol: 1e-8,
            max_iter: 100_000,
            slack: 1e-12,
            strict: true,
            allow_unconverged: false,
            linear: LinearSolverConfig::default(),
        }
    }
}

/// Upward iteration from `s1·e` inside the bracket.
pub fn monotone_solve(op: &PaneitzOperator, prob: &ProblemSpec, bracket: &Bracket) -> Result<SolverReport> {
    monotone_solve_with(op, prob, bracket, Direction::Upward, &MonotoneConfig::default())
}

pub fn monotone_solve_with(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    bracket: &Bracket,
    direction: Direction,
    cfg: &MonotoneConfig,
) -> Result<SolverReport> {
    monotone_iterate(op, prob, &bracket.lower(), &bracket.upper(), direction, cfg)
}

/// `u^{k+1} = (P + λ_k)⁻¹(f(u^k) + λ_k u^k)` between an ordered pair of sub- and
/// supersolution fields, with `λ_k` the Lipschitz bound of `f` over the part
/// of the bracket still reachable from `u^k`.
pub fn monotone_iterate(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    lower: &ScalarField,
    upper: &ScalarField,
    direction: Direction,
    cfg: &MonotoneConfig,
) -> Result<SolverReport> {
    lower.same_grid(upper)?;
    if lower.min() <= 0.0 {
        return Err(Error::InvalidProblem("lower bracket must be positive".into()));
    }
    if let Some(i) = (0..lower.len()).find(|&i| lower.values()[i] > upper.values()[i]) {
        return Err(Error::OrderingViolation(format!(
            "lower bracket exceeds upper bracket at index {i}"
        )));
    }
    let floor = -(op.symbol().iter().copied().fold(f64::INFINITY, f64::min) + op.weight().min());
    let mut u = match direction {
        Direction::Upward => lower.clone(),
        Direction::Downward => upper.clone(),
    };
    let mut trace = vec![trace_row(op, prob, 0.0, &u)?];
    let mut worst = 0.0f64;
    let mut monotone_ok = true;
    let mut confined_ok = true;
    let mut lambda = 0.0;
    for k in 1..=cfg.max_iter {
        let (delta, m) = match direction {
            Direction::Upward => (u.min(), upper.max()),
            Direction::Downward => (lower.min(), u.max()),
        };
        lambda = lipschitz_shift(prob, delta, m);
        if lambda <= floor {
            // keep the shifted operator inside the coercivity witness
            lambda = floor + 1e-3 * (1.0 + floor.abs());
        }
        let rhs = prob.rhs(&u)?.add_scaled(lambda, &u);
        let next = op.solve_shifted_with(lambda, &rhs, &cfg.linear)?.solution;

        let tol = cfg.slack * u.norm_inf().max(1.0);
        let decrease = match direction {
            Direction::Upward => u.sub(&next).max(),
            Direction::Downward => next.sub(&u).max(),
        };
        worst = worst.max(decrease);
        if decrease > tol {
            monotone_ok = false;
            if cfg.strict {
                return Err(Error::MonotonicityViolation { iteration: k, worst: decrease });
            }
        }
        let below = lower.sub(&next).max();
        let above = next.sub(upper).max();
        if below > tol || above > tol {
            confined_ok = false;
            if cfg.strict {
                return Err(Error::OrderingViolation(format!(
                    "iterate {k} leaves the bracket by {:.3e}",
                    below.max(above)
                )));
            }
        }
        if next.min() <= 0.0 {
            return Err(Error::PositivityViolation {
                what: format!("monotone iterate {k}"),
                min: next.min(),
            });
        }

        let step = next.sub(&u).norm_inf();
        u = next;
        let residual = prob.residual(op, &u)?;
        trace.push(TraceRow {
            time: k as f64,
            residual,
            min_u: u.min(),
            max_u: u.max(),
            energy: energy(op, prob, 0.0, &u)?,
        });
        if step <= cfg.step_tol && residual <= cfg.residual_tol {
            return Ok(SolverReport {
                method: "monotone".into(),
                converged: true,
                residual,
                iterations: k,
                monotone_ok,
                confined_ok,
                worst_order_violation: worst,
                bracket: Some((lower.min(), upper.max())),
                shift: lambda,
                min_u: u.min(),
                max_u: u.max(),
                trace,
                solution: u,
            });
        }
    }
    let residual = prob.residual(op, &u)?;
    if cfg.allow_unconverged {
        return Ok(SolverReport {
            method: "monotone".into(),
            converged: false,
            residual,
            iterations: cfg.max_iter,
            monotone_ok,
            confined_ok,
            worst_order_violation: worst,
            bracket: Some((lower.min(), upper.max())),
            shift: lambda,
            min_u: u.min(),
            max_u: u.max(),
            trace,
            solution: u,
        });
    }
    Err(Error::NoConvergence {
        what: "monotone iteration",
        iterations: cfg.max_iter,
        residual,
    })
}

fn trace_row(op: &PaneitzOperator, prob: &ProblemSpec, time: f64, u: &ScalarField) -> Result<TraceRow> {
    Ok(TraceRow {
        time,
        residual: prob.residual(op, u)?,
        min_u: u.min(),
        max_u: u.max(),
        energy: energy(op, prob, 0.0, u)?,
    })
}
