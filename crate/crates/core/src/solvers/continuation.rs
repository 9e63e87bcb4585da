use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::PaneitzOperator;

use super::bracket::find_sub_super;
use super::monotone::{monotone_iterate, Direction, MonotoneConfig};
use super::problem::{Mode, ProblemSpec};
use super::SolverReport;

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStep {
    pub eps: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `‖u_ε − u_{ε_prev}‖∞`; zero for the first entry.
    pub sup_change: f64,
    /// Pointwise `u_ε ≥ u_{ε_prev}` within slack.
    pub ordered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub report: SolverReport,
    pub steps: Vec<ContinuationStep>,
    /// Smallest value of any `u_ε`.
    pub lower_bound: f64,
    pub ordered: bool,
    /// `‖u_0 − R‖∞` for the linear Richardson extrapolation `R` of the last
    /// two positive-ε solutions, when two are available.
    pub extrapolation_gap: Option<f64>,
}

/// Below this the lower bound is considered to have collapsed.
const COLLAPSE: f64 = 1e-8;

/// Absorption solves with `B_ε = B + ε` along a decreasing schedule, each
/// warm-started from the previous solution (a subsolution for the next ε),
/// finished by the `ε = 0` solve.
pub fn epsilon_continuation(op: &PaneitzOperator, prob: &ProblemSpec, schedule: &[f64]) -> Result<ContinuationReport> {
    epsilon_continuation_with(op, prob, schedule, &MonotoneConfig::default())
}

pub fn epsilon_continuation_with(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    schedule: &[f64],
    cfg: &MonotoneConfig,
) -> Result<ContinuationReport> {
    if prob.mode() != Mode::Absorption {
        return Err(Error::InvalidProblem("continuation runs on the absorption problem".into()));
    }
    if prob.b().min() < 0.0 {
        return Err(Error::InvalidProblem("continuation needs B >= 0".into()));
    }
    if schedule.iter().any(|e| !(*e >= 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidProblem("schedule must be nonnegative and strictly decreasing".into()));
    }
    let mut eps_list = schedule.to_vec();
    if eps_list.last().map_or(true, |&e| e > 0.0) {
        eps_list.push(0.0);
    }

    // a supersolution of the target is one for every B + ε
    let target_bracket = find_sub_super(op, prob)?;
    let upper = target_bracket.upper();

    let mut steps: Vec<ContinuationStep> = Vec::new();
    let mut sols: Vec<(f64, ScalarField)> = Vec::new();
    let mut last: Option<SolverReport> = None;
    let mut ordered = true;
    for &eps in &eps_list {
        let shifted = prob.with_b(prob.b().map(|b| b + eps))?;
        let lower = match &last {
            Some(r) => r.solution.clone(),
            None if eps == 0.0 => target_bracket.lower(),
            None => find_sub_super(op, &shifted)?.lower(),
        };
        let r = monotone_iterate(op, &shifted, &lower, &upper, Direction::Upward, cfg)?;
        if r.min_u < COLLAPSE {
            return Err(Error::LowerBoundCollapse {
                min: r.min_u,
                detail: format!("continuation at eps = {eps:.3e}"),
            });
        }
        let (sup_change, step_ordered) = match &last {
            Some(prev) => {
                let d = r.solution.sub(&prev.solution);
                let tol = cfg.slack * prev.solution.norm_inf().max(1.0);
                (d.norm_inf(), d.min() >= -tol)
            }
            None => (0.0, true),
        };
        ordered &= step_ordered;
        steps.push(ContinuationStep {
            eps,
            min_u: r.min_u,
            max_u: r.max_u,
            residual: r.residual,
            iterations: r.iterations,
            sup_change,
            ordered: step_ordered,
        });
        sols.push((eps, r.solution.clone()));
        last = Some(r);
    }
    let report = last.expect("schedule has at least the final entry");
    let positive: Vec<&(f64, ScalarField)> = sols.iter().filter(|(e, _)| *e > 0.0).collect();
    let extrapolation_gap = if positive.len() >= 2 {
        let (e1, u1) = positive[positive.len() - 2];
        let (e2, u2) = positive[positive.len() - 1];
        let rich = u2.add_scaled(e2 / (e1 - e2), &u2.sub(u1));
        Some(rich.sub(&report.solution).norm_inf())
    } else {
        None
    };
    let lower_bound = steps.iter().fold(f64::INFINITY, |m, s| m.min(s.min_u));
    Ok(ContinuationReport {
        report: SolverReport {
            method: "epsilon_continuation".into(),
            ..report
        },
        steps,
        lower_bound,
        ordered,
        extrapolation_gap,
    })
}
