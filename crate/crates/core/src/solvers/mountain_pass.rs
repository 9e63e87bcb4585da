use serde::Serialize;

use crate::conditions::{b_norm_exponent, check_existence_cond, ConditionReport};
use crate::error::{Error, Result};
use crate::geometry::ScalarField;
use crate::operator::PaneitzOperator;
use crate::spectral_analysis::{energy_norm, green_column, sobolev_estimate, SobolevConfig};

use super::bracket::find_sub_super;
use super::energy::{energy, energy_gradient, energy_identity, EnergyIdentity};
use super::monotone::monotone_solve;
use super::newton::{newton_solve, NewtonConfig};
use super::problem::{Mode, ProblemSpec};
use super::{SolverReport, TraceRow};

#[derive(Debug, Clone)]
pub struct MountainPassConfig {
    pub nodes: usize,
    pub max_sweeps: usize,
    pub reparam_every: usize,
    /// Decreasing regularization schedule; the path search runs at the first
    /// entry and `ε = 0` is always appended.
    pub eps_schedule: Vec<f64>,
    pub residual_tol: f64,
    /// Refuse when the energy condition does not hold for `φ`.
    pub require_cond: bool,
    /// Precomputed discrete Sobolev constant.
    pub s_psi: Option<f64>,
    pub sobolev: SobolevConfig,
    pub newton: NewtonConfig,
    /// Geometric step of the ray scan.
    pub scan_ratio: f64,
}

impl Default for MountainPassConfig {
    fn default() -> Self {
        Self {
            nodes: 32,
            max_sweeps: 200,
            reparam_every: 10,
            eps_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
            residual_tol: 1e-6,
            require_cond: true,
            s_psi: None,
            sobolev: SobolevConfig::default(),
            newton: NewtonConfig::default(),
            scan_ratio: 1.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsStep {
    pub eps: f64,
    pub energy: f64,
    pub residual: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub newton_iterations: usize,
    /// `∫A/(ε + u²)^{(p+1)/2}`, which must stay bounded as `ε → 0`.
    pub singular_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatePath {
    /// `(q+1)/(p−1) − 1 > 0`: the energy identity bounds `‖u‖_ψ` directly.
    EnergyIdentity,
    /// Otherwise `∫B u^{q+1}` is bounded through the Sobolev inequality.
    SobolevBound,
}

/// `∫B u^{q+1} ≤ ‖B‖_{L^s} S_ψ^{−(q+1)/2} ‖u‖_ψ^{q+1}` at the solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Ray and path data of the minimax search at the first `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct PassGeometry {
    pub eps: f64,
    pub t0: f64,
    pub t2: f64,
    pub energy_t0: f64,
    pub energy_t2: f64,
    /// Maximum of the energy on the straight segment `[t₀φ, t₂φ]`.
    pub straight_max: f64,
    /// Maximum on the deformed path, the estimate of `c_ε`.
    pub pass_level: f64,
    /// Energy of the critical point reached from the path maximum.
    pub critical_energy: f64,
    /// Critical energy strictly above both endpoint energies.
    pub saddle: bool,
    pub sweeps: usize,
    pub reparametrizations: usize,
    pub scan_points: usize,
}

/// Radius and rim of the energy barrier, in the printed and in the
/// re-derived form, with the interval check for the pass level.
#[derive(Debug, Clone, Serialize)]
pub struct CritBound {
    pub b_norm_exponent: f64,
    pub b_norm: f64,
    pub r0_printed: f64,
    pub rim_printed: f64,
    pub energy_r0_printed: f64,
    pub printed_ok: bool,
    pub r0_derived: f64,
    pub rim_derived: f64,
    pub energy_r0_derived: f64,
    /// `rim_derived ≤ c_ε ≤ straight_max`.
    pub derived_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MountainPassReport {
    pub report: SolverReport,
    /// `B ≡ 0`: solved as the absorption problem instead.
    pub routed_to_absorption: bool,
    pub eps_steps: Vec<EpsStep>,
    pub geometry: Option<PassGeometry>,
    pub crit_bound: Option<CritBound>,
    pub cond: Option<ConditionReport>,
    pub s_psi: Option<f64>,
    /// Energy of the final solution.
    pub solution_energy: f64,
    pub energy_identity: Option<EnergyIdentity>,
    pub estimate_path: Option<EstimatePath>,
    pub sobolev_bound: Option<SobolevBoundCheck>,
    /// `min G(x*, ·) · ∫f(u)` at the minimum point `x*` of `u`.
    pub green_lower_bound: Option<f64>,
    pub green_ok: Option<bool>,
    pub warnings: Vec<String>,
}

/// Mountain pass at `ε₀`, then the default schedule below `ε₀`, then `ε = 0`.
pub fn mountain_pass_solve(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    phi: &ScalarField,
    eps0: f64,
) -> Result<MountainPassReport> {
    let mut cfg = MountainPassConfig::default();
    let mut schedule = vec![eps0];
    schedule.extend(cfg.eps_schedule.iter().copied().filter(|&e| e < eps0));
    cfg.eps_schedule = schedule;
    mountain_pass_solve_with(op, prob, phi, &cfg)
}

pub fn mountain_pass_solve_with(
    op: &PaneitzOperator,
    prob: &ProblemSpec,
    phi: &ScalarField,
    cfg: &MountainPassConfig,
) -> Result<MountainPassReport> {
    if prob.mode() != Mode::Source {
        return Err(Error::InvalidProblem("the mountain pass applies to the source problem".into()));
    }
    phi.same_grid(prob.a())?;
    if phi.min() <= 0.0 {
        return Err(Error::PositivityViolation {
            what: "mountain-pass direction".into(),
            min: phi.min(),
        });
    }
    let schedule = validated_schedule(&cfg.eps_schedule)?;
    if prob.b_is_zero() {
        return absorption_route(op, prob);
    }
    if cfg.nodes < 3 {
        return Err(Error::InvalidProblem("the path needs at least 3 nodes".into()));
    }

    let (p, q) = (prob.p(), prob.q());
    let two_sharp = op.params().two_sharp;
    let mut warnings = prob.warnings().to_vec();
    let s_psi = match cfg.s_psi {
        Some(s) => s,
        None => sobolev_estimate(op, &cfg.sobolev)?.value,
    };
    let borderline = q >= two_sharp - 1.0 - 1e-12;
    let cond = if borderline {
        warnings.push("q = 2# - 1: energy condition skipped, B measured in the sup norm".into());
        None
    } else {
        let c = check_existence_cond(op, prob, phi, s_psi)?;
        if cfg.require_cond && !c.satisfied {
            return Err(Error::ConditionNotSatisfied {
                lhs: c.lhs,
                threshold: c.rhs,
            });
        }
        Some(c)
    };

    let phi_hat = phi.scale(1.0 / energy_norm(op, phi)?);
    let eps0 = schedule[0];
    let e_ray = |t: f64| energy(op, prob, eps0, &phi_hat.scale(t));

    // ray scan: first local minimum, then the first return below it
    let ratio = cfg.scan_ratio;
    let mut t = 1e-6;
    let mut prev = e_ray(t)?;
    let mut scan_points = 1;
    let mut valley = None;
    while scan_points < 4000 {
        let next = e_ray(t * ratio)?;
        scan_points += 1;
        if next > prev {
            valley = Some(t);
            break;
        }
        t *= ratio;
        prev = next;
    }
    let Some(tv) = valley else {
        return Err(Error::NoMountainPass("energy decreases along the whole ray".into()));
    };
    let lo = (tv / ratio).max(1e-300);
    let t0 = golden(|s| e_ray(s).unwrap_or(f64::INFINITY), lo, tv * ratio, false).0;
    let e0 = e_ray(t0)?;
    let mut t2 = tv * ratio;
    loop {
        let e = e_ray(t2)?;
        scan_points += 1;
        if e < e0 - 1e-12 * e0.abs() {
            break;
        }
        if scan_points >= 8000 || !e.is_finite() {
            return Err(Error::NoMountainPass("energy does not return below the valley along the ray".into()));
        }
        t2 *= ratio;
    }
    let e2 = e_ray(t2)?;
    let (_, straight_max) = golden(|s| e_ray(s).unwrap_or(f64::NEG_INFINITY), t0, t2, true);

    // path deformation between the two endpoints
    let n = cfg.nodes;
    let mut path: Vec<ScalarField> = (0..n)
        .map(|i| phi_hat.scale(t0 + (t2 - t0) * i as f64 / (n - 1) as f64))
        .collect();
    let mut energies = path.iter().map(|u| energy(op, prob, eps0, u)).collect::<Result<Vec<_>>>()?;
    let c_pre = op.preconditioner_shift(0.0).max(op.params().beta.abs()).max(1.0);
    let mut history = vec![max_interior(&energies).1];
    let mut reparams = 0;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let (i, e_max) = max_interior(&energies);
        let g = energy_gradient(op, prob, eps0, &path[i])?;
        let d = ScalarField::from_raw(op.grid().clone(), op.precondition_raw(g.values(), c_pre));
        let slope = g.inner(&d);
        if slope.sqrt() <= 1e-12 * (1.0 + e_max.abs()).sqrt() {
            break;
        }
        let mut s = 1.0;
        let mut moved = false;
        while s >= 1e-12 {
            let cand = path[i].add_scaled(-s, &d);
            if eps0 > 0.0 || cand.min() > 0.0 {
                let ec = energy(op, prob, eps0, &cand)?;
                if ec <= e_max - 1e-4 * s * slope {
                    path[i] = cand;
                    energies[i] = ec;
                    moved = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !moved {
            break;
        }
        if sweeps % cfg.reparam_every == 0 {
            path = reparametrize(op, &path)?;
            energies = path.iter().map(|u| energy(op, prob, eps0, u)).collect::<Result<Vec<_>>>()?;
            reparams += 1;
        }
        history.push(max_interior(&energies).1);
        let k = history.len();
        if k > cfg.reparam_every {
            let old = history[k - 1 - cfg.reparam_every];
            let now = history[k - 1];
            if old - now <= 1e-10 * (1.0 + now.abs()) {
                break;
            }
        }
    }

    // the polyline joins the endpoints, so its maximum bounds the pass level
    // from above; refine it on every segment
    path = reparametrize(op, &path)?;
    let mut u_peak = path[0].clone();
    let mut pass_level = f64::NEG_INFINITY;
    for w in path.windows(2) {
        let seg = |s: f64| w[0].scale(1.0 - s).add_scaled(s, &w[1]);
        let (s, e) = golden(|s| energy(op, prob, eps0, &seg(s)).unwrap_or(f64::NEG_INFINITY), 0.0, 1.0, true);
        if e > pass_level {
            pass_level = e;
            u_peak = seg(s);
        }
    }

    // Newton from the pass point, then down the schedule
    let floor = 1e-3 * u_peak.max().max(f64::MIN_POSITIVE);
    let mut u = u_peak.map(|v| v.max(floor));
    let mut eps_steps = Vec::new();
    let mut newton_total = 0;
    let mut trace = Vec::new();
    let mut critical_energy = f64::NAN;
    for (k, &eps) in schedule.iter().enumerate() {
        let out = newton_solve(op, prob, eps, &u, &cfg.newton)?;
        u = out.solution;
        newton_total += out.iterations;
        let e = energy(op, prob, eps, &u)?;
        if k == 0 {
            critical_energy = e;
        }
        if u.min() < 1e-8 {
            return Err(Error::LowerBoundCollapse {
                min: u.min(),
                detail: format!("mountain pass at eps = {eps:.3e}; {}", green_detail(op, prob, &u)),
            });
        }
        eps_steps.push(EpsStep {
            eps,
            energy: e,
            residual: out.residual,
            min_u: u.min(),
            max_u: u.max(),
            newton_iterations: out.iterations,
            singular_integral: prob
                .a()
                .zip_map(&u, |a, v| a * (eps + v * v).powf(-(p + 1.0) / 2.0))
                .integral(),
        });
        trace.push(TraceRow {
            time: eps,
            residual: out.residual,
            min_u: u.min(),
            max_u: u.max(),
            energy: e,
        });
    }
    let residual = prob.residual(op, &u)?;
    if residual > cfg.residual_tol {
        return Err(Error::NoConvergence {
            what: "mountain-pass polish",
            iterations: newton_total,
            residual,
        });
    }

    // barrier radius and rim
    let s_exp = if borderline { f64::INFINITY } else { b_norm_exponent(two_sharp, q) };
    let b_norm = prob.b().lp_norm(s_exp);
    let r0_printed = b_norm.powf(-1.0 / (q - 1.0)) * s_psi.powf(-(q + 1.0) / (2.0 * (q - 1.0)));
    let rim_printed = b_norm.powf(-2.0 / (q - 1.0)) * s_psi.powf(-(q + 1.0) / (q - 1.0)) * (q - 1.0) / 2.0;
    let r0_derived = b_norm.powf(-1.0 / (q - 1.0)) * s_psi.powf((q + 1.0) / (2.0 * (q - 1.0)));
    let rim_derived = r0_derived * r0_derived * (q - 1.0) / (2.0 * (q + 1.0));
    let energy_r0_printed = e_ray(r0_printed)?;
    let energy_r0_derived = e_ray(r0_derived)?;
    let slack = 1e-12 * (1.0 + pass_level.abs());
    let crit_bound = CritBound {
        b_norm_exponent: s_exp,
        b_norm,
        r0_printed,
        rim_printed,
        energy_r0_printed,
        printed_ok: rim_printed < pass_level && pass_level < energy_r0_printed,
        r0_derived,
        rim_derived,
        energy_r0_derived,
        derived_ok: rim_derived <= pass_level + slack && pass_level <= straight_max + slack,
    };

    let identity = energy_identity(op, prob, 0.0, &u)?;
    let estimate_path = if (q + 1.0) / (p - 1.0) - 1.0 > 1e-12 {
        EstimatePath::EnergyIdentity
    } else {
        EstimatePath::SobolevBound
    };
    let sob_lhs = prob.b().zip_map(&u, |b, v| b * v.powf(q + 1.0)).integral();
    let sob_rhs = b_norm * s_psi.powf(-(q + 1.0) / 2.0) * energy_norm(op, &u)?.powf(q + 1.0);
    let sobolev_bound = SobolevBoundCheck {
        lhs: sob_lhs,
        rhs: sob_rhs,
        holds: sob_lhs <= sob_rhs * (1.0 + 1e-9),
    };
    let green_lower = green_lower_bound(op, prob, &u)?;

    let geometry = PassGeometry {
        eps: eps0,
        t0,
        t2,
        energy_t0: e0,
        energy_t2: e2,
        straight_max,
        pass_level,
        critical_energy,
        saddle: critical_energy > e0.max(e2),
        sweeps,
        reparametrizations: reparams,
        scan_points,
    };
    Ok(MountainPassReport {
        report: SolverReport {
            method: "mountain_pass".into(),
            converged: true,
            residual,
            iterations: sweeps + newton_total,
            monotone_ok: true,
            confined_ok: true,
            worst_order_violation: 0.0,
            bracket: None,
            shift: 0.0,
            min_u: u.min(),
            max_u: u.max(),
            trace,
            solution: u.clone(),
        },
        routed_to_absorption: false,
        eps_steps,
        geometry: Some(geometry),
        crit_bound: Some(crit_bound),
        cond,
        s_psi: Some(s_psi),
        solution_energy: energy(op, prob, 0.0, &u)?,
        energy_identity: Some(identity),
        estimate_path: Some(estimate_path),
        sobolev_bound: Some(sobolev_bound),
        green_lower_bound: Some(green_lower),
        green_ok: Some(u.min() >= green_lower * (1.0 - 1e-8)),
        warnings,
    })
}

fn validated_schedule(schedule: &[f64]) -> Result<Vec<f64>> {
    if schedule.iter().any(|e| !(*e >= 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidProblem("schedule must be nonnegative and strictly decreasing".into()));
    }
    let mut s = schedule.to_vec();
    if s.last().map_or(true, |&e| e > 0.0) {
        s.push(0.0);
    }
    Ok(s)
}

fn absorption_route(op: &PaneitzOperator, prob: &ProblemSpec) -> Result<MountainPassReport> {
    let abs = prob.with_mode(Mode::Absorption);
    let mut report = monotone_solve(op, &abs, &find_sub_super(op, &abs)?)?;
    report.method = "mountain_pass/absorption_route".into();
    let solution_energy = energy(op, prob, 0.0, &report.solution)?;
    Ok(MountainPassReport {
        report,
        routed_to_absorption: true,
        eps_steps: Vec::new(),
        geometry: None,
        crit_bound: None,
        cond: None,
        s_psi: None,
        solution_energy,
        energy_identity: None,
        estimate_path: None,
        sobolev_bound: None,
        green_lower_bound: None,
        green_ok: None,
        warnings: vec!["B vanishes identically: solved as the absorption problem".into()],
    })
}

/// `u(x*) = ∫G(x*, y) f(y) dy ≥ min_y G(x*, y) · ∫f`.
fn green_lower_bound(op: &PaneitzOperator, prob: &ProblemSpec, u: &ScalarField) -> Result<f64> {
    let col = green_column(op, u.argmin())?;
    Ok(col.min() * prob.rhs(u)?.integral())
}

fn green_detail(op: &PaneitzOperator, prob: &ProblemSpec, u: &ScalarField) -> String {
    match (u.min() > 0.0).then(|| green_lower_bound(op, prob, u)) {
        Some(Ok(g)) => format!("Green lower bound {g:.3e}"),
        Some(Err(e)) => format!("Green lower bound unavailable: {e}"),
        None => "iterate not positive".into(),
    }
}

fn max_interior(e: &[f64]) -> (usize, f64) {
    (1..e.len() - 1).fold((1, f64::NEG_INFINITY), |(bi, be), i| if e[i] > be { (i, e[i]) } else { (bi, be) })
}

/// Redistributes the nodes at equal energy-norm arc length.
fn reparametrize(op: &PaneitzOperator, path: &[ScalarField]) -> Result<Vec<ScalarField>> {
    let mut cum = vec![0.0];
    for w in path.windows(2) {
        let d = op.quadratic_form(&w[1].sub(&w[0]))?.max(0.0).sqrt();
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return Ok(path.to_vec());
    }
    let n = path.len();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for j in 0..n {
        let target = total * j as f64 / (n - 1) as f64;
        while seg + 1 < n - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let s = if len > 0.0 { ((target - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(path[seg].scale(1.0 - s).add_scaled(s, &path[seg + 1]));
    }
    out[0] = path[0].clone();
    out[n - 1] = path[n - 1].clone();
    Ok(out)
}

/// Golden-section search on `[a, b]`; returns the argument and value of the
/// minimum, or of the maximum when `maximize` is set.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> (f64, f64) {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |x: f64| sign * f(x);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeometryParams, SpectralGrid};

    fn scalar_roots(beta: f64, b: f64, p: f64, q: f64) -> Vec<f64> {
        let h = |u: f64| beta * u - u.powf(-p) - b * u.powf(q);
        let mut roots = Vec::new();
        let mut x = 1e-3;
        while x < 1e7 {
            let y = x * 1.001;
            if h(x).signum() != h(y).signum() {
                let (mut lo, mut hi) = (x, y);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if h(m).signum() == h(lo).signum() {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x = y;
        }
        roots
    }

    fn setup(b: f64, p: f64, q: f64) -> (GeometryParams, PaneitzOperator, ProblemSpec) {
        let par = GeometryParams::derive(5, 20.0).unwrap();
        let g = SpectralGrid::cube(1, 32, 2.0).unwrap();
        let prob = ProblemSpec::constants(&g, 1.0, b, p, q, Mode::Source, &par).unwrap();
        (par, PaneitzOperator::new(par, &g), prob)
    }

    #[test]
    fn constant_fixture_lands_on_a_scalar_root() {
        let (par, op, prob) = setup(0.5, 3.0, 2.0);
        let cfg = MountainPassConfig {
            require_cond: false,
            ..MountainPassConfig::default()
        };
        let one = ScalarField::constant(op.grid(), 1.0);
        let r = mountain_pass_solve_with(&op, &prob, &one, &cfg).unwrap();
        assert!(r.report.residual <= 1e-6);
        let roots = scalar_roots(par.beta, 0.5, 3.0, 2.0);
        assert_eq!(roots.len(), 2);
        let u = &r.report.solution;
        assert!((u.max() - roots[1]).abs() < 1e-6 && (u.min() - roots[1]).abs() < 1e-6);
        let geo = r.geometry.unwrap();
        assert!(geo.saddle);
        let cb = r.crit_bound.clone().unwrap();
        assert!(cb.derived_ok, "{cb:?} {geo:?}");
        assert!(r.energy_identity.unwrap().relative_gap < 1e-6);
        assert!(r.green_ok.unwrap());
    }

    #[test]
    fn refuses_when_condition_fails() {
        let (_, op, prob) = setup(0.5, 3.0, 2.0);
        let one = ScalarField::constant(op.grid(), 1.0);
        let r = mountain_pass_solve(&op, &prob, &one, 0.1);
        assert!(matches!(r, Err(Error::ConditionNotSatisfied { .. })));
    }

    #[test]
    fn zero_b_is_routed() {
        let (par, op, prob) = setup(0.0, 3.0, 2.0);
        let one = ScalarField::constant(op.grid(), 1.0);
        let r = mountain_pass_solve(&op, &prob, &one, 0.1).unwrap();
        assert!(r.routed_to_absorption);
        assert!((r.report.solution.max() - par.beta.powf(-0.25)).abs() < 1e-8);
    }

    #[test]
    fn beyond_the_fold_has_no_pass() {
        let (_, op, prob) = setup(20.0, 3.0, 2.0);
        let cfg = MountainPassConfig {
            require_cond: false,
            ..MountainPassConfig::default()
        };
        let one = ScalarField::constant(op.grid(), 1.0);
        assert!(mountain_pass_solve_with(&op, &prob, &one, &cfg).is_err());
    }
}
