use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{GridSignature, ScalarField};
use crate::operator::PaneitzOperator;
use crate::solvers::{mountain_pass_solve_with, Mode, MountainPassConfig, ProblemSpec};
use crate::spectral_analysis::{sobolev_estimate, SobolevConfig};

use super::existence::{b_norm_exponent, check_existence_cond};
use super::nonexistence::check_nonexistence;

/// One feasibility probe of the bisection.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub lambda: f64,
    pub feasible: bool,
    pub residual: Option<f64>,
    pub min_u: Option<f64>,
    /// Error kind when the solve failed.
    pub failure: Option<String>,
}

/// Bracket `[lower, upper]` for the critical coupling `λ*` of
/// `P u = 1/u^p + λ u^q`, optionally with a bisection estimate.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaStarResult {
    pub p: f64,
    pub q: f64,
    /// Largest `λ` for which the energy condition with `φ ≡ 1` holds.
    pub lower: f64,
    /// Smallest `λ` for which the non-existence certificate holds.
    pub upper: f64,
    pub empirical: Option<f64>,
    /// Final bisection interval `(last feasible, first infeasible)`.
    pub interval: Option<(f64, f64)>,
    pub tolerance: Option<f64>,
    pub s_psi: f64,
    pub cond_constant: f64,
    /// Left side of the energy condition at `λ = 1`.
    pub cond_lhs_at_one: f64,
    /// Both sides of the non-existence certificate at `λ = 1`.
    pub nonexistence_lhs_at_one: f64,
    pub nonexistence_rhs_at_one: f64,
    pub printed_lower: f64,
    pub printed_upper: f64,
    pub evaluations: Vec<Evaluation>,
    pub anomalies: Vec<String>,
    pub budget_exhausted: bool,
    pub grid: GridSignature,
}

/// `λ` at which `lhs(1)·λ^{(p+1)/(q−1)} = C`.
pub fn lower_from_constant(c: f64, lhs_at_one: f64, p: f64, q: f64) -> f64 {
    (c / lhs_at_one).powf((q - 1.0) / (p + 1.0))
}

pub fn lambda_star_bracket(op: &PaneitzOperator, p: f64, q: f64) -> Result<LambdaStarResult> {
    let s = sobolev_estimate(op, &SobolevConfig::default())?.value;
    lambda_star_bracket_with(op, p, q, s)
}

/// Both ends in closed form: the energy-condition side is a monomial
/// `lhs(1) λ^{(p+1)/(q−1)}` and the non-existence certificate compares
/// `λ^{(p+1)/(p+q)}` with a fixed ratio.
pub fn lambda_star_bracket_with(op: &PaneitzOperator, p: f64, q: f64, s_psi: f64) -> Result<LambdaStarResult> {
    let params = op.params();
    if q >= params.two_sharp - 1.0 {
        return Err(Error::InvalidProblem(format!(
            "the bracket needs q < 2# - 1 = {}",
            params.two_sharp - 1.0
        )));
    }
    let grid = op.grid();
    let unit = ProblemSpec::constants(grid, 1.0, 1.0, p, q, Mode::Source, params)?;
    let one = ScalarField::constant(grid, 1.0);
    let cond = check_existence_cond(op, &unit, &one, s_psi)?;
    let lower = lower_from_constant(cond.rhs, cond.lhs, p, q);
    let non = check_nonexistence(op, &unit)?;
    let upper = (non.lhs / non.rhs).powf((p + q) / (p + 1.0));

    // printed bounds, reading the doubled "pp" as p²
    let vol = grid.volume();
    let s = b_norm_exponent(params.two_sharp, q);
    let w_int = op.weight().integral();
    let printed_lower = (vol.powf(-1.0 / s) * cond.rhs * w_int.powf(-(p - 1.0))).powf((q - 1.0) / (p + 1.0));
    let q_psi = op.q_psi();
    let q_norm = q_psi.lp_norm(q / (q - 1.0));
    let d = p * q + q - 2.0;
    let printed_upper = vol.powf(-(p + q) * (q - 1.0) / d)
        * ((q - 1.0) / (p + 1.0)).powf(q * (q - 1.0) / (p * p + q - 2.0))
        * q_norm.powf(q * (p + q - 2.0) / d);

    let mut anomalies = Vec::new();
    if lower > upper {
        anomalies.push(format!("lower {lower:.6e} exceeds upper {upper:.6e}"));
    }
    Ok(LambdaStarResult {
        p,
        q,
        lower,
        upper,
        empirical: None,
        interval: None,
        tolerance: None,
        s_psi,
        cond_constant: cond.rhs,
        cond_lhs_at_one: cond.lhs,
        nonexistence_lhs_at_one: non.lhs,
        nonexistence_rhs_at_one: non.rhs,
        printed_lower,
        printed_upper,
        evaluations: Vec::new(),
        anomalies,
        budget_exhausted: false,
        grid: grid.signature().clone(),
    })
}

#[derive(Debug, Clone)]
pub struct BisectConfig {
    /// Cap on feasibility probes, endpoints included.
    pub max_evaluations: usize,
    pub mountain_pass: MountainPassConfig,
}

impl Default for BisectConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 64,
            mountain_pass: MountainPassConfig {
                require_cond: false,
                ..MountainPassConfig::default()
            },
        }
    }
}

pub fn lambda_star_bisect(op: &PaneitzOperator, p: f64, q: f64, tol: f64) -> Result<LambdaStarResult> {
    lambda_star_bisect_with(op, p, q, tol, &BisectConfig::default())
}

/// Bisection of `λ` on `[0, 2·upper]` with feasibility decided by a
/// mountain-pass solve reaching the residual target. The empirical value is
/// the largest `λ` verified feasible.
pub fn lambda_star_bisect_with(
    op: &PaneitzOperator,
    p: f64,
    q: f64,
    tol: f64,
    cfg: &BisectConfig,
) -> Result<LambdaStarResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidProblem(format!("tolerance must be positive, got {tol}")));
    }
    let s_psi = match cfg.mountain_pass.s_psi {
        Some(s) => s,
        None => sobolev_estimate(op, &cfg.mountain_pass.sobolev)?.value,
    };
    let mut res = lambda_star_bracket_with(op, p, q, s_psi)?;
    let mp = MountainPassConfig {
        s_psi: Some(s_psi),
        ..cfg.mountain_pass.clone()
    };
    let one = ScalarField::constant(op.grid(), 1.0);
    let probe = |lambda: f64| -> Result<Evaluation> {
        let prob = ProblemSpec::constants(op.grid(), 1.0, lambda, p, q, Mode::Source, op.params())?;
        Ok(match mountain_pass_solve_with(op, &prob, &one, &mp) {
            Ok(r) => Evaluation {
                lambda,
                feasible: r.report.residual <= mp.residual_tol && r.report.min_u > 0.0,
                residual: Some(r.report.residual),
                min_u: Some(r.report.min_u),
                failure: None,
            },
            Err(e) => Evaluation {
                lambda,
                feasible: false,
                residual: None,
                min_u: None,
                failure: Some(e.kind().to_string()),
            },
        })
    };

    let mut lo = 0.0;
    let mut hi = 2.0 * res.upper;
    for (lambda, expect) in [(lo, true), (hi, false)] {
        let ev = probe(lambda)?;
        if ev.feasible != expect {
            res.anomalies.push(format!(
                "endpoint lambda = {lambda:.6e} is {}",
                if ev.feasible { "feasible" } else { "infeasible" }
            ));
        }
        res.evaluations.push(ev);
    }
    if !res.evaluations[0].feasible {
        res.tolerance = Some(tol);
        return Ok(res);
    }
    while hi - lo > tol {
        if res.evaluations.len() >= cfg.max_evaluations {
            res.budget_exhausted = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        let ev = probe(mid)?;
        if ev.feasible {
            lo = mid;
        } else {
            hi = mid;
        }
        res.evaluations.push(ev);
    }
    // a feasible probe above an infeasible one contradicts the dichotomy
    let first_bad = res
        .evaluations
        .iter()
        .filter(|e| !e.feasible)
        .map(|e| e.lambda)
        .fold(f64::INFINITY, f64::min);
    if let Some(e) = res.evaluations.iter().find(|e| e.feasible && e.lambda > first_bad) {
        res.anomalies.push(format!(
            "non-monotone feasibility: lambda = {:.6e} feasible above infeasible {first_bad:.6e}",
            e.lambda
        ));
    }
    res.empirical = Some(lo);
    res.interval = Some((lo, hi));
    res.tolerance = Some(tol);
    Ok(res)
}
