use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::conditions::{
    check_existence_cond, check_existence_ineq, check_nonexistence, lambda_star_bisect_with,
    lambda_star_bracket_with, BisectConfig, ConditionReport,
};
use crate::error::{Error, Result};
use crate::geometry::{io, GeometryParams, ScalarField, SpectralGrid};
use crate::operator::PaneitzOperator;
use crate::solvers::{
    epsilon_continuation_with, find_sub_super, monotone_solve_with, mountain_pass_solve_with,
    parabolic_flow_with, second_solution_attempt_with, Direction, FlowConfig, Mode, MonotoneConfig,
    MountainPassConfig, ProblemSpec,
};
use crate::spectral_analysis::{
    positivity_check, principal_eigenpair, sobolev_estimate, SobolevConfig, ZERO_EIGEN_TOL,
};

use super::config::{Action, Coefficient, ExperimentConfig, PsiSpec};
use super::output::{csv_opt, RunManifest, RunSummary, Sink, Timing, SCHEMA_VERSION};

struct Outcome {
    exit_code: i32,
    summary: RunSummary,
}

impl Outcome {
    fn ok(summary: RunSummary) -> Self {
        Self { exit_code: 0, summary }
    }
}

/// Runs the configured action into `cfg.out` and writes `manifest.json`
/// there. Action failures become `error.json` with exit code 2; only I/O
/// failures on the output directory itself are returned as errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut sink = Sink::new(&cfg.out)?;
    let (exit_code, summary) = match dispatch(cfg, &mut sink) {
        Ok(o) => (o.exit_code, o.summary),
        Err(e) => {
            sink.json("error.json", &error_json(&e, Some(cfg.action)))?;
            (
                2,
                RunSummary {
                    error_kind: Some(e.kind().to_string()),
                    ..RunSummary::default()
                },
            )
        }
    };
    let status = match exit_code {
        0 => "ok",
        1 => "infeasible",
        _ => "error",
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        schema: SCHEMA_VERSION,
        action: cfg.action.as_str().to_string(),
        seed: cfg.seed,
        exit_code,
        status: status.to_string(),
        summary,
        config: cfg.echo(),
        artifacts: sink.into_artifacts(),
        timing: Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    let mut data = serde_json::to_vec_pretty(&manifest)?;
    data.push(b'\n');
    fs::write(cfg.out.join("manifest.json"), data)?;
    Ok(manifest)
}

/// Machine-readable error document.
pub fn error_json(e: &Error, action: Option<Action>) -> Value {
    let mut v = json!({
        "schema": SCHEMA_VERSION,
        "kind": e.kind(),
        "message": e.to_string(),
        "action": action.map(Action::as_str),
    });
    if let Error::Config { line, .. } = e {
        v["line"] = json!(line);
    }
    v
}

fn dispatch(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome> {
    if cfg.action == Action::Sweep {
        return sweep(cfg, sink);
    }
    let op = build_operator(cfg)?;
    match cfg.action {
        Action::Eigen => eigen(cfg, &op, sink),
        Action::Sobolev => sobolev(cfg, &op, sink),
        Action::LambdaStar => lambda_star(cfg, &op, sink),
        action => {
            let prob = build_problem(cfg, &op)?;
            match action {
                Action::Solve => solve(cfg, &op, &prob, sink),
                Action::Flow => flow(cfg, &op, &prob, sink),
                Action::CheckExistence => check_existence(cfg, &op, &prob, sink),
                Action::CheckNonexistence => check_nonexistence_action(cfg, &op, &prob, sink),
                Action::MountainPass => match refusal(&op, &prob)? {
                    Some(r) => refuse(cfg, &op, &prob, r, sink),
                    None => mountain_pass(cfg, &op, &prob, sink, None),
                },
                _ => unreachable!("handled above"),
            }
        }
    }
}

fn load_field(path: &Path, grid: &Arc<SpectralGrid>) -> Result<ScalarField> {
    if path.extension().is_some_and(|e| e == "csv") {
        io::from_csv(&fs::read_to_string(path)?, grid)
    } else {
        io::read_binary_on(path, grid)
    }
}

pub fn build_operator(cfg: &ExperimentConfig) -> Result<PaneitzOperator> {
    let params = GeometryParams::derive(cfg.n, cfg.r)?;
    let grid = SpectralGrid::new(&cfg.sizes, &cfg.lengths)?;
    match &cfg.psi {
        PsiSpec::Zero => Ok(PaneitzOperator::new(params, &grid)),
        PsiSpec::Mode { amplitude, wavevector } => {
            let lengths = grid.lengths().to_vec();
            let psi = ScalarField::from_fn(&grid, |x| {
                let phase: f64 = wavevector
                    .iter()
                    .zip(x)
                    .zip(&lengths)
                    .map(|((&m, &xi), &l)| 2.0 * PI * m as f64 * xi / l)
                    .sum();
                amplitude * phase.cos()
            })?;
            PaneitzOperator::with_psi(params, &psi)
        }
        PsiSpec::File(path) => PaneitzOperator::with_psi(params, &load_field(path, &grid)?),
    }
}

pub fn build_problem(cfg: &ExperimentConfig, op: &PaneitzOperator) -> Result<ProblemSpec> {
    let field = |c: &Coefficient| match c {
        Coefficient::Constant(v) => Ok(ScalarField::constant(op.grid(), *v)),
        Coefficient::File(p) => load_field(p, op.grid()),
    };
    ProblemSpec::new(field(&cfg.a)?, field(&cfg.b)?, cfg.p, cfg.q, cfg.mode, op.params())
}

fn sobolev_config(cfg: &ExperimentConfig) -> SobolevConfig {
    SobolevConfig {
        random_starts: cfg.solver.sobolev_starts,
        seed: cfg.seed,
        max_iter: cfg.solver.sobolev_max_iter,
        ..SobolevConfig::default()
    }
}

fn monotone_config(cfg: &ExperimentConfig) -> MonotoneConfig {
    MonotoneConfig {
        residual_tol: cfg.solver.residual_tol,
        max_iter: cfg.solver.max_iter,
        ..MonotoneConfig::default()
    }
}

fn mp_config(cfg: &ExperimentConfig) -> MountainPassConfig {
    MountainPassConfig {
        nodes: cfg.solver.mp_nodes,
        max_sweeps: cfg.solver.mp_max_sweeps,
        eps_schedule: cfg.solver.eps_schedule.clone(),
        residual_tol: cfg.solver.mp_residual_tol,
        require_cond: cfg.solver.require_cond,
        sobolev: sobolev_config(cfg),
        ..MountainPassConfig::default()
    }
}

fn report(cfg: &ExperimentConfig, op: &PaneitzOperator, prob: Option<&ProblemSpec>, result: Value) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "action": cfg.action.as_str(),
        "seed": cfg.seed,
        "params": op.params(),
        "grid": op.grid().signature(),
        "problem": prob.map(ProblemSpec::summary),
        "result": result,
    })
}

fn field_out(cfg: &ExperimentConfig, sink: &mut Sink, stem: &str, f: &ScalarField) -> Result<()> {
    if cfg.solver.write_fields {
        sink.field(stem, f)?;
    }
    Ok(())
}

fn eigen(cfg: &ExperimentConfig, op: &PaneitzOperator, sink: &mut Sink) -> Result<Outcome> {
    let eig = principal_eigenpair(op)?;
    let tol = ZERO_EIGEN_TOL * op.params().beta.abs().max(1.0);
    let sign = if eig.lambda1.abs() <= tol { 0 } else { eig.lambda1.signum() as i32 };
    let pos = positivity_check(op, cfg.solver.positivity_samples, cfg.seed)?;
    let result = json!({
        "eigenpair": eig,
        "invariant_sign": sign,
        "coercivity_witness": op.coercivity_witness(0.0),
        "positivity": pos,
    });
    sink.json("report.json", &report(cfg, op, None, result))?;
    field_out(cfg, sink, "phi1", &eig.phi1)?;
    Ok(Outcome::ok(RunSummary {
        satisfied: Some(pos.pass),
        residual: Some(eig.residual),
        min_u: Some(eig.phi1.min()),
        max_u: Some(eig.phi1.max()),
        value: Some(eig.lambda1),
        ..RunSummary::default()
    }))
}

fn sobolev(cfg: &ExperimentConfig, op: &PaneitzOperator, sink: &mut Sink) -> Result<Outcome> {
    let est = sobolev_estimate(op, &sobolev_config(cfg))?;
    sink.json("report.json", &report(cfg, op, None, json!({ "sobolev": est })))?;
    field_out(cfg, sink, "minimizer", &est.minimizer)?;
    Ok(Outcome::ok(RunSummary {
        value: Some(est.value),
        ..RunSummary::default()
    }))
}

/// The non-existence certificate, when it fires for a source problem.
fn refusal(op: &PaneitzOperator, prob: &ProblemSpec) -> Result<Option<ConditionReport>> {
    if prob.mode() != Mode::Source || prob.b_is_zero() {
        return Ok(None);
    }
    match check_nonexistence(op, prob) {
        Ok(r) if r.satisfied => Ok(Some(r)),
        Ok(_) | Err(Error::NoConclusion(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn refuse(
    cfg: &ExperimentConfig,
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    cert: ConditionReport,
    sink: &mut Sink,
) -> Result<Outcome> {
    let result = json!({ "refused": true, "nonexistence": cert });
    sink.json("report.json", &report(cfg, op, Some(prob), result))?;
    Ok(Outcome {
        exit_code: 1,
        summary: RunSummary {
            satisfied: Some(false),
            ..RunSummary::default()
        },
    })
}

fn solve(cfg: &ExperimentConfig, op: &PaneitzOperator, prob: &ProblemSpec, sink: &mut Sink) -> Result<Outcome> {
    if prob.mode() == Mode::Source {
        return match refusal(op, prob)? {
            Some(r) => refuse(cfg, op, prob, r, sink),
            None => {
                let cert = if prob.b_is_zero() { None } else { Some(check_nonexistence(op, prob)?) };
                mountain_pass(cfg, op, prob, sink, cert)
            }
        };
    }
    let mc = monotone_config(cfg);
    let bracket = find_sub_super(op, prob)?;
    let up = monotone_solve_with(op, prob, &bracket, Direction::Upward, &mc)?;
    let down = monotone_solve_with(op, prob, &bracket, Direction::Downward, &mc)?;
    let gap = up.solution.sub(&down.solution).norm_inf();
    let continuation = match &cfg.solver.continuation_schedule {
        Some(s) => Some(epsilon_continuation_with(op, prob, s, &mc)?),
        None => None,
    };
    let result = json!({
        "bracket": bracket,
        "upward": up,
        "downward": down,
        "uniqueness_gap": gap,
        "continuation": continuation,
    });
    sink.json("report.json", &report(cfg, op, Some(prob), result))?;
    sink.trace("trace.csv", &up.trace)?;
    sink.trace("trace_downward.csv", &down.trace)?;
    field_out(cfg, sink, "solution", &up.solution)?;
    Ok(Outcome::ok(RunSummary {
        satisfied: Some(up.converged && down.converged),
        residual: Some(up.residual),
        min_u: Some(up.min_u),
        max_u: Some(up.max_u),
        value: Some(gap),
        ..RunSummary::default()
    }))
}

fn flow(cfg: &ExperimentConfig, op: &PaneitzOperator, prob: &ProblemSpec, sink: &mut Sink) -> Result<Outcome> {
    let fc = FlowConfig {
        tau: cfg.solver.flow_tau,
        t_max: cfg.solver.flow_t_max,
        residual_tol: cfg.solver.residual_tol,
        ..FlowConfig::default()
    };
    let u0 = ScalarField::constant(op.grid(), cfg.solver.flow_u0);
    let f = parabolic_flow_with(op, prob, &u0, &fc)?;
    sink.json("report.json", &report(cfg, op, Some(prob), json!({ "flow": f })))?;
    sink.trace("trace.csv", &f.report.trace)?;
    field_out(cfg, sink, "solution", &f.report.solution)?;
    Ok(Outcome::ok(RunSummary {
        satisfied: Some(f.steady),
        residual: Some(f.report.residual),
        min_u: Some(f.report.min_u),
        max_u: Some(f.report.max_u),
        value: Some(f.final_time),
        ..RunSummary::default()
    }))
}

fn check_existence(cfg: &ExperimentConfig, op: &PaneitzOperator, prob: &ProblemSpec, sink: &mut Sink) -> Result<Outcome> {
    let (r, extra) = match prob.mode() {
        Mode::Absorption => {
            let eig = principal_eigenpair(op)?;
            (check_existence_ineq(op, prob, &eig)?, json!({ "eigenpair": eig }))
        }
        Mode::Source => {
            let est = sobolev_estimate(op, &sobolev_config(cfg))?;
            let one = ScalarField::constant(op.grid(), 1.0);
            (check_existence_cond(op, prob, &one, est.value)?, json!({ "sobolev": est }))
        }
    };
    let satisfied = r.satisfied;
    let margin = r.margin;
    sink.json("report.json", &report(cfg, op, Some(prob), json!({ "condition": r, "inputs": extra })))?;
    Ok(Outcome::ok(RunSummary {
        satisfied: Some(satisfied),
        value: Some(margin),
        ..RunSummary::default()
    }))
}

fn check_nonexistence_action(
    cfg: &ExperimentConfig,
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    sink: &mut Sink,
) -> Result<Outcome> {
    let (result, summary) = match check_nonexistence(op, prob) {
        Ok(r) => {
            let s = RunSummary {
                satisfied: Some(r.satisfied),
                value: Some(r.margin),
                ..RunSummary::default()
            };
            (json!({ "condition": r, "conclusion": true }), s)
        }
        Err(Error::NoConclusion(msg)) => (json!({ "condition": null, "conclusion": false, "note": msg }), RunSummary::default()),
        Err(e) => return Err(e),
    };
    sink.json("report.json", &report(cfg, op, Some(prob), result))?;
    Ok(Outcome::ok(summary))
}

fn lambda_star(cfg: &ExperimentConfig, op: &PaneitzOperator, sink: &mut Sink) -> Result<Outcome> {
    let mut mp = MountainPassConfig {
        require_cond: false,
        ..mp_config(cfg)
    };
    let s_psi = sobolev_estimate(op, &mp.sobolev)?.value;
    mp.s_psi = Some(s_psi);
    let r = if cfg.solver.lambda_bisect {
        let bc = BisectConfig {
            max_evaluations: cfg.solver.max_evaluations,
            mountain_pass: mp,
        };
        lambda_star_bisect_with(op, cfg.p, cfg.q, cfg.solver.lambda_tol, &bc)?
    } else {
        lambda_star_bracket_with(op, cfg.p, cfg.q, s_psi)?
    };
    sink.json("report.json", &report(cfg, op, None, json!({ "lambda_star": r })))?;
    let mut csv = String::from("lambda,feasible,residual,min_u,failure\n");
    for e in &r.evaluations {
        let _ = writeln!(
            csv,
            "{:?},{},{},{},{}",
            e.lambda,
            e.feasible,
            csv_opt(e.residual),
            csv_opt(e.min_u),
            e.failure.as_deref().unwrap_or("")
        );
    }
    sink.bytes("evaluations.csv", csv.as_bytes())?;
    let inside = r.empirical.map(|e| r.lower <= e && e <= r.upper);
    Ok(Outcome::ok(RunSummary {
        satisfied: inside,
        value: r.empirical,
        ..RunSummary::default()
    }))
}

fn mountain_pass(
    cfg: &ExperimentConfig,
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    sink: &mut Sink,
    cert: Option<ConditionReport>,
) -> Result<Outcome> {
    let mp = mp_config(cfg);
    let one = ScalarField::constant(op.grid(), 1.0);
    let r = mountain_pass_solve_with(op, prob, &one, &mp)?;
    let second = match cfg.solver.eps_pert {
        Some(e) if prob.mode() == Mode::Source && !r.routed_to_absorption => {
            let loose = MountainPassConfig {
                require_cond: false,
                s_psi: r.s_psi,
                ..mp.clone()
            };
            second_solution_attempt_with(op, prob, &r.report.solution, e, &loose)?
        }
        _ => None,
    };
    let result = json!({
        "mountain_pass": r,
        "second_solution": second,
        "nonexistence": cert,
    });
    sink.json("report.json", &report(cfg, op, Some(prob), result))?;
    sink.trace("trace.csv", &r.report.trace)?;
    field_out(cfg, sink, "solution", &r.report.solution)?;
    if let Some(s) = &second {
        field_out(cfg, sink, "second_solution", &s.report.solution)?;
    }
    Ok(Outcome::ok(RunSummary {
        satisfied: Some(r.report.converged),
        residual: Some(r.report.residual),
        min_u: Some(r.report.min_u),
        max_u: Some(r.report.max_u),
        value: r.geometry.as_ref().map(|g| g.pass_level),
        ..RunSummary::default()
    }))
}

fn cell_name(i: usize) -> String {
    format!("cell_{i:04}")
}

fn sweep(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Outcome> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config { line: 0, msg: "sweep settings missing".into() })?;
    let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &spec.axes {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    // validate every cell before running any
    let configs = cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut values: Vec<(&str, String)> = c.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            values.push(("action", spec.action.as_str().to_string()));
            values.push(("out", sink.root().join(cell_name(i)).to_string_lossy().into_owned()));
            cfg.with_values(&values).map_err(|e| Error::Config {
                line: 0,
                msg: format!("{}: {e}", cell_name(i)),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let manifests = pool.install(|| configs.par_iter().map(run).collect::<Vec<_>>());

    let mut csv = String::from(
        "cell,param1,value1,param2,value2,action,exit_code,status,error_kind,satisfied,residual,min_u,max_u,value\n",
    );
    let mut rows = Vec::new();
    for (i, (cell, m)) in cells.iter().zip(manifests).enumerate() {
        let m = m?;
        let name = cell_name(i);
        sink.adopt(&name, &m.artifacts);
        let kv = |j: usize| cell.get(j).map(|(k, v)| (k.as_str(), v.as_str())).unwrap_or(("", ""));
        let ((k1, v1), (k2, v2)) = (kv(0), kv(1));
        let s = &m.summary;
        let _ = writeln!(
            csv,
            "{name},{k1},{v1},{k2},{v2},{},{},{},{},{},{},{},{},{}",
            m.action,
            m.exit_code,
            m.status,
            s.error_kind.as_deref().unwrap_or(""),
            s.satisfied.map(|b| b.to_string()).unwrap_or_default(),
            csv_opt(s.residual),
            csv_opt(s.min_u),
            csv_opt(s.max_u),
            csv_opt(s.value),
        );
        rows.push(json!({
            "cell": name,
            "values": cell.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
            "exit_code": m.exit_code,
            "status": m.status,
            "summary": m.summary,
        }));
    }
    sink.bytes("sweep.csv", csv.as_bytes())?;
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "action": "sweep",
        "seed": cfg.seed,
        "sweep_action": spec.action.as_str(),
        "axes": spec.axes,
        "cells": rows,
    });
    sink.json("report.json", &doc)?;
    Ok(Outcome::ok(RunSummary::default()))
}
