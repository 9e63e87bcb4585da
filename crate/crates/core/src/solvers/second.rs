use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::PaneitzOperator;

use super::monotone::{monotone_iterate, Direction, MonotoneConfig};
use super::mountain_pass::{mountain_pass_solve_with, MountainPassConfig};
use super::newton::{newton_solve, NewtonConfig};
use super::problem::{Mode, ProblemSpec};
use super::SolverReport;

/// Solutions closer than this in the sup norm count as the same.
const DISTINCT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct SecondSolution {
    pub report: SolverReport,
    pub eps_pert: f64,
    /// `‖ũ − u_B‖∞`.
    pub distance: f64,
    pub distinct: bool,
    /// `u_{B−ε} ≤ u_{B+ε}` pointwise, when both perturbed solves succeeded.
    pub ordering_ok: bool,
    pub lower_source: String,
    pub upper_source: String,
    /// The monotone limit was finished by Newton.
    pub polished: bool,
    pub notes: Vec<String>,
}

pub fn second_solution_attempt(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    u_b: &ScalarField,
    eps_pert: f64,
) -> Result<Option<SecondSolution>> {
    let mp = MountainPassConfig {
        require_cond: false,
        ..MountainPassConfig::default()
    };
    second_solution_attempt_with(op, prob, u_b, eps_pert, &mp)
}

/// Mountain-pass solutions for `B − ε` and `B + ε` are a sub- and a
/// supersolution for `B`; the monotone iteration between them looks for a
/// solution other than `u_B`.
///
/// When the pair is not ordered the iteration starts from a small constant
/// subsolution instead, and when the `B + ε` solve fails `u_B` itself serves as
/// the supersolution. Returns `None` when no limit can be produced.
pub fn second_solution_attempt_with(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    u_b: &ScalarField,
    eps_pert: f64,
    mp: &MountainPassConfig,
) -> Result<Option<SecondSolution>> {
    if prob.mode() != Mode::Source {
        return Err(Error::InvalidProblem("the second-solution attempt applies to the source problem".into()));
    }
    u_b.same_grid(prob.a())?;
    if u_b.min() <= 0.0 {
        return Err(Error::PositivityViolation {
            what: "reference solution".into(),
            min: u_b.min(),
        });
    }
    if !(eps_pert >= 0.0) {
        return Err(Error::InvalidProblem(format!("perturbation must be >= 0, got {eps_pert}")));
    }
    if eps_pert == 0.0 {
        let residual = prob.residual(op, u_b)?;
        return Ok(Some(SecondSolution {
            report: trivial_report(u_b, residual),
            eps_pert,
            distance: 0.0,
            distinct: false,
            ordering_ok: true,
            lower_source: "u_b".into(),
            upper_source: "u_b".into(),
            polished: false,
            notes: vec!["zero perturbation: the bracket collapses to u_B".into()],
        }));
    }

    let one = ScalarField::constant(op.grid(), 1.0);
    let mut notes = Vec::new();
    let solve = |b: ScalarField| -> Option<ScalarField> {
        let perturbed = prob.with_b(b).ok()?;
        mountain_pass_solve_with(op, &perturbed, &one, mp).ok().map(|r| r.report.solution)
    };
    let minus = if prob.b().min() >= eps_pert {
        solve(prob.b().map(|b| b - eps_pert))
    } else {
        notes.push("B - eps is negative somewhere: no lower perturbed solve".into());
        None
    };
    let plus = solve(prob.b().map(|b| b + eps_pert));

    let (upper, upper_source) = match &plus {
        Some(u) => (u.clone(), "perturbed_plus"),
        None => {
            notes.push("B + eps solve failed: u_B used as supersolution".into());
            (u_b.clone(), "u_b")
        }
    };
    let slack = 1e-12 * upper.norm_inf().max(1.0);
    let below = |l: &ScalarField| l.sub(&upper).max() <= slack;
    let ordering_ok = matches!((&minus, &plus), (Some(m), Some(_)) if below(m));
    let (lower, lower_source) = match minus {
        Some(m) if below(&m) => (m, "perturbed_minus"),
        other => {
            if other.is_some() {
                notes.push("u_{B-eps} is not below the supersolution: ordering fails".into());
            }
            match constant_subsolution(op, prob, upper.min()) {
                Some(s) => (ScalarField::constant(op.grid(), s), "constant_subsolution"),
                None => return Ok(None),
            }
        }
    };

    let cfg = MonotoneConfig {
        strict: false,
        allow_unconverged: true,
        max_iter: 20_000,
        ..MonotoneConfig::default()
    };
    let mut report = match monotone_iterate(op, prob, &lower, &upper, Direction::Upward, &cfg) {
        Ok(r) => r,
        Err(_) => return Ok(None),
    };
    let mut polished = false;
    if !report.converged || report.residual > cfg.residual_tol {
        match newton_solve(op, prob, 0.0, &report.solution, &NewtonConfig::default()) {
            Ok(out) => {
                report.residual = prob.residual(op, &out.solution)?;
                report.converged = report.residual <= cfg.residual_tol;
                report.min_u = out.solution.min();
                report.max_u = out.solution.max();
                report.iterations += out.iterations;
                report.solution = out.solution;
                polished = true;
            }
            Err(_) => return Ok(None),
        }
    }
    report.method = "second_solution".into();
    let distance = report.solution.sub(u_b).norm_inf();
    Ok(Some(SecondSolution {
        report,
        eps_pert,
        distance,
        distinct: distance > DISTINCT_TOL,
        ordering_ok,
        lower_source: lower_source.into(),
        upper_source: upper_source.into(),
        polished,
        notes,
    }))
}

/// Largest `s = 2^{−k} ≤ cap` with `s W ≤ A/s^p + B s^q` everywhere.
fn constant_subsolution(op: &PaneitzOperator, prob: &ProblemSpec, cap: f64) -> Option<f64> {
    let w = op.weight().values();
    let mut s = 1.0f64;
    for _ in 0..400 {
        if s <= cap && (0..w.len()).all(|i| s * w[i] <= prob.f_at(i, s)) {
            return Some(s);
        }
        s *= 0.5;
    }
    None
}

fn trivial_report(u: &ScalarField, residual: f64) -> SolverReport {
    SolverReport {
        method: "second_solution".into(),
        converged: true,
        residual,
        iterations: 0,
        monotone_ok: true,
        confined_ok: true,
        worst_order_violation: 0.0,
        bracket: Some((u.min(), u.max())),
        shift: 0.0,
        min_u: u.min(),
        max_u: u.max(),
        trace: Vec::new(),
        solution: u.clone(),
    }
}
