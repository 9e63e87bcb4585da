//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the table.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paneitz_lab::cli::{parse_config_in, run};
use paneitz_lab::conditions::{
    check_existence_cond, check_existence_ineq, check_nonexistence, lambda_star_bisect,
    lambda_star_bracket, tangent_slope_root, tangency_constant,
};
use paneitz_lab::geometry::{GeometryParams, ScalarField, SpectralGrid};
use paneitz_lab::operator::PaneitzOperator;
use paneitz_lab::solvers::{
    epsilon_continuation, find_sub_super, monotone_solve, monotone_solve_with, mountain_pass_solve_with,
    parabolic_flow, Direction, Mode, MonotoneConfig, MountainPassConfig, ProblemSpec,
};
use paneitz_lab::spectral_analysis::{principal_eigenpair, positivity_check, sobolev_estimate, SobolevConfig};

const COEFF_REL: f64 = 1e-12;
const ALGEBRA_TOL: f64 = 1e-10;
const ORACLE_ROOT_TOL: f64 = 1e-12;
const CONSTANT_SOLVE_TOL: f64 = 1e-8;
const ORDER_SLACK: f64 = 1e-12;
const UNIQUENESS_TOL: f64 = 1e-6;
const CONTINUATION_TOL: f64 = 1e-6;
const FLOW_TOL: f64 = 1e-6;
const EIGEN_TOL: f64 = 1e-8;
const EIGEN_CONST_TOL: f64 = 1e-10;
const TANGENCY_TOL: f64 = 1e-10;
const MP_RESIDUAL: f64 = 1e-6;
const MP_ROOT_TOL: f64 = 1e-6;
const MP_BUDGET: Duration = Duration::from_secs(60);
const LAMBDA_TOL: f64 = 1e-3;
const LAMBDA_BUDGET: Duration = Duration::from_secs(300);
const CONFORMAL_TOL: f64 = 1e-10;
const GREEN_SLACK: f64 = 1e-12;

/// Sub-checks whose printed formulas are known not to hold; they must keep
/// failing, and do not fail the suite.
const KNOWN_DIVERGENT: &[&str] = &["11b"];

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

fn reference_params() -> GeometryParams {
    GeometryParams::derive(5, 20.0).unwrap()
}

fn grid1(n: usize, l: f64) -> Arc<SpectralGrid> {
    SpectralGrid::cube(1, n, l).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Bisection to machine precision of a sign change on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All positive roots of `g` on a log grid over `[lo, hi]`, refined by bisection.
fn scalar_roots(g: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ts: Vec<f64> = (0..=points)
        .map(|i| lo * (hi / lo).powf(i as f64 / points as f64))
        .collect();
    ts.windows(2)
        .filter(|w| g(w[0]) * g(w[1]) < 0.0)
        .map(|w| bisect(g, w[0], w[1]))
        .collect()
}

fn c1_coefficients() -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    for (n, r, alpha, beta, q, roots) in [
        (5, 20.0, 5.5, 6.5625, 13.125, (1.75, 3.75)),
        (6, 30.0, 10.0, 24.0, 24.0, (4.0, 6.0)),
    ] {
        let p = GeometryParams::derive(n, r).unwrap();
        let (c1, c2) = p.factor_constants().unwrap();
        for (got, want) in [
            (p.alpha, alpha),
            (p.beta, beta),
            (p.q_curvature, q),
            (c1, roots.0),
            (c2, roots.1),
        ] {
            worst = worst.max(rel(got, want));
        }
    }
    ok &= worst <= COEFF_REL;
    let mut worst_id = 0.0f64;
    for n in 5..=10i64 {
        for r in [1.0, (n * (n - 1)) as f64] {
            let p = GeometryParams::derive(n, r).unwrap();
            worst_id = worst_id.max(rel(p.beta, (n as f64 - 4.0) / 2.0 * p.q_curvature));
        }
    }
    ok &= worst_id <= COEFF_REL;
    outcome(
        "1",
        "coefficients and factorization",
        ok,
        format!("max rel err {worst:.1e}, Einstein identity {worst_id:.1e}"),
    )
}

fn random_field(g: &Arc<SpectralGrid>, rng: &mut ChaCha8Rng) -> ScalarField {
    let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField::new(g.clone(), v).unwrap()
}

fn band_limited(g: &Arc<SpectralGrid>, rng: &mut ChaCha8Rng, modes: i32) -> ScalarField {
    let coef: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0..=modes) as f64,
                rng.gen_range(0..=modes) as f64,
                rng.gen_range(0.0..TAU),
            )
        })
        .collect();
    let l = g.lengths().to_vec();
    ScalarField::from_fn(g, |x| {
        coef.iter()
            .map(|(a, m0, m1, ph)| a * (TAU * (m0 * x[0] / l[0] + m1 * x[1] / l[1]) + ph).cos())
            .sum()
    })
    .unwrap()
}

fn c2_operator_algebra() -> Outcome {
    let par = reference_params();
    let g = SpectralGrid::new(&[16, 16], &[TAU, TAU]).unwrap();
    let psi = ScalarField::from_fn(&g, |x| 0.2 * x[0].cos() + 0.1 * (x[0] + 2.0 * x[1]).sin()).unwrap();
    let op = PaneitzOperator::with_psi(par, &psi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut lin, mut adj, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let u = random_field(&g, &mut rng);
        let v = random_field(&g, &mut rng);
        let (pu, pv) = (op.apply(&u).unwrap(), op.apply(&v).unwrap());
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combo = op.apply(&u.scale(a).add_scaled(b, &v)).unwrap();
        let expect = pu.scale(a).add_scaled(b, &pv);
        lin = lin.max(combo.sub(&expect).norm_inf() / expect.norm_inf());
        let (l, r) = (pu.inner(&v), u.inner(&pv));
        adj = adj.max((l - r).abs() / l.abs().max(r.abs()).max(1.0));
    }
    for lambda in [0.0, 0.5, 3.0] {
        for _ in 0..10 {
            let u = band_limited(&g, &mut rng, 3);
            let rhs = op.apply(&u).unwrap().add_scaled(lambda, &u);
            let back = op.solve_shifted(lambda, &rhs).unwrap();
            inv = inv.max(back.sub(&u).norm_inf() / u.norm_inf());
        }
    }
    outcome(
        "2",
        "operator algebra",
        lin <= ALGEBRA_TOL && adj <= ALGEBRA_TOL && inv <= ALGEBRA_TOL,
        format!("linearity {lin:.1e}, self-adjointness {adj:.1e}, shifted inverse {inv:.1e}"),
    )
}

fn reference_problem(g: &Arc<SpectralGrid>, mode: Mode, b: f64) -> ProblemSpec {
    ProblemSpec::constants(g, 1.0, b, 3.0, 2.0, mode, &reference_params()).unwrap()
}

fn c3_constant_data() -> Outcome {
    let beta = reference_params().beta;
    let g_scalar = |u: f64| beta * u - u.powi(-3) + u * u;
    let root = bisect(g_scalar, 0.1, 2.0);
    // Newton polish as a second opinion on the oracle itself
    let dg = |u: f64| beta + 3.0 * u.powi(-4) + 2.0 * u;
    let polished = root - g_scalar(root) / dg(root);
    let oracle_ok = (polished - root).abs() <= ORACLE_ROOT_TOL;
    let g = grid1(32, 2.0);
    let op = PaneitzOperator::new(reference_params(), &g);
    let prob = reference_problem(&g, Mode::Absorption, 1.0);
    let br = find_sub_super(&op, &prob).unwrap();
    let rep = monotone_solve(&op, &prob, &br).unwrap();
    let err = rep.solution.map(|u| u - root).norm_inf();
    outcome(
        "3",
        "constant-data equivalence",
        oracle_ok && err <= CONSTANT_SOLVE_TOL && rep.solution.is_constant(),
        format!(
            "oracle root {root:.16} (quoted ≈0.6106 is {:.1e} off), sup error {err:.1e}",
            (root - 0.6106).abs()
        ),
    )
}

struct Fixture {
    op: PaneitzOperator,
    prob: ProblemSpec,
}

/// Seeded absorption fixtures on `[0, 2π)`, N = 32, with a mild gauge field.
fn random_fixtures(count: usize) -> Vec<Fixture> {
    let par = reference_params();
    let g = grid1(32, TAU);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..count)
        .map(|_| {
            let (a1, a2) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.15..0.15));
            let psi = ScalarField::from_fn(&g, |x| a1 * x[0].cos() + a2 * (2.0 * x[0]).sin()).unwrap();
            let op = PaneitzOperator::with_psi(par, &psi).unwrap();
            let (ka, kb) = (rng.gen_range(1..4) as f64, rng.gen_range(1..4) as f64);
            let (sa, sb) = (rng.gen_range(0.0..0.8), rng.gen_range(0.0..0.8));
            let (ma, mb) = (rng.gen_range(0.5..2.0), rng.gen_range(0.2..2.0));
            let ph = rng.gen_range(0.0..TAU);
            let a = ScalarField::from_fn(&g, |x| ma * (1.0 + sa * (ka * x[0]).cos())).unwrap();
            let b = ScalarField::from_fn(&g, |x| mb * (1.0 + sb * (kb * x[0] + ph).sin())).unwrap();
            let (p, q) = (rng.gen_range(1.5..4.0), rng.gen_range(1.5..4.0));
            let prob = ProblemSpec::new(a, b, p, q, Mode::Absorption, &par).unwrap();
            Fixture { op, prob }
        })
        .collect()
}

fn c4_c5_monotone(fixtures: &[Fixture]) -> (Outcome, Outcome) {
    let cfg = MonotoneConfig::default();
    let (mut inv_ok, mut worst, mut gap) = (true, 0.0f64, 0.0f64);
    for f in fixtures {
        let br = find_sub_super(&f.op, &f.prob).unwrap();
        let up = monotone_solve_with(&f.op, &f.prob, &br, Direction::Upward, &cfg).unwrap();
        let down = monotone_solve_with(&f.op, &f.prob, &br, Direction::Downward, &cfg).unwrap();
        let (lo, hi) = (br.lower(), br.upper());
        let scale = ORDER_SLACK * hi.norm_inf().max(1.0);
        let confined = up.solution.sub(&lo).min() >= -scale && hi.sub(&up.solution).min() >= -scale;
        let mins_rise = up.trace.windows(2).all(|w| w[1].min_u >= w[0].min_u - scale);
        let maxs_fall = down.trace.windows(2).all(|w| w[1].max_u <= w[0].max_u + scale);
        inv_ok &= up.monotone_ok && up.confined_ok && down.monotone_ok && down.confined_ok;
        inv_ok &= confined && mins_rise && maxs_fall && up.converged && down.converged;
        worst = worst.max(up.worst_order_violation).max(down.worst_order_violation);
        gap = gap.max(up.solution.sub(&down.solution).norm_inf());
    }
    (
        outcome(
            "4",
            "monotone iteration invariants",
            inv_ok && worst <= ORDER_SLACK,
            format!("{} fixtures, worst order violation {worst:.1e}", fixtures.len()),
        ),
        outcome(
            "5",
            "uniqueness from both sides",
            gap <= UNIQUENESS_TOL,
            format!("max |upward - downward| {gap:.1e}"),
        ),
    )
}

fn c6_continuation() -> Outcome {
    let par = reference_params();
    let g = grid1(32, 2.0);
    let op = PaneitzOperator::new(par, &g);
    let prob = reference_problem(&g, Mode::Absorption, 0.0);
    let rep = epsilon_continuation(&op, &prob, &[1.0, 0.1, 0.01, 0.001, 0.0]).unwrap();
    let target = par.beta.powf(-0.25);
    let err = rep.report.solution.map(|u| u - target).norm_inf();
    // independent order check on the recorded extremes
    let ordered = rep.steps.windows(2).all(|w| w[1].min_u >= w[0].max_u - 1e-12);
    outcome(
        "6",
        "epsilon continuation",
        err <= CONTINUATION_TOL && rep.ordered && ordered,
        format!("limit error {err:.1e} against beta^(-1/(p+1)) = {target:.12}, {} steps", rep.steps.len()),
    )
}

fn c7_flow(fixtures: &[Fixture]) -> Outcome {
    let mut gap = 0.0f64;
    let mut steady = true;
    for f in fixtures {
        let br = find_sub_super(&f.op, &f.prob).unwrap();
        let mono = monotone_solve(&f.op, &f.prob, &br).unwrap();
        let u0 = ScalarField::constant(f.op.grid(), 1.0);
        let fl = parabolic_flow(&f.op, &f.prob, &u0, 0.05, 50.0).unwrap();
        steady &= fl.steady;
        gap = gap.max(fl.report.solution.sub(&mono.solution).norm_inf());
    }
    outcome(
        "7",
        "flow and steady state agree",
        steady && gap <= FLOW_TOL,
        format!("{} fixtures, max gap {gap:.1e}", fixtures.len()),
    )
}

/// Dense `P = K² + αK + diag(W)` with `K` the circulant spectral Laplacian.
fn dense_operator(par: &GeometryParams, n: usize, l: f64, v: &[f64]) -> DMatrix<f64> {
    let t = |m: i64| (TAU * m as f64 / l).powi(2);
    let modes: Vec<i64> = (0..n as i64).map(|k| if k <= n as i64 / 2 { k } else { k - n as i64 }).collect();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d = i as f64 - j as f64;
        modes.iter().map(|&m| t(m) * (TAU * m as f64 * d / n as f64).cos()).sum::<f64>() / n as f64
    });
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        v.iter().map(|vi| par.b_n * (par.q_curvature - vi)),
    ));
    &k * &k + &k * par.alpha + w
}

fn c8_eigen() -> Outcome {
    let par = reference_params();
    let (n, l) = (32, TAU);
    let g = grid1(n, l);
    let v = ScalarField::from_fn(&g, |x| 0.5 * (1.0 + x[0].cos())).unwrap();
    let op = PaneitzOperator::with_potential(par, v.clone()).unwrap();
    let eig = principal_eigenpair(&op).unwrap();
    let dense = SymmetricEigen::new(dense_operator(&par, n, l, v.values()));
    let (imin, lmin) = dense
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
    let err = (eig.lambda1 - lmin).abs();
    let vec = dense.eigenvectors.column(imin);
    let vmax = vec.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
    let phi_err = vec
        .iter()
        .zip(eig.phi1.values())
        .map(|(d, p)| (d / vmax - p).abs())
        .fold(0.0f64, f64::max);
    let positive = eig.phi1.min() > 0.0;
    let flat = PaneitzOperator::new(par, &g);
    let flat_err = (principal_eigenpair(&flat).unwrap().lambda1 - par.beta).abs();
    outcome(
        "8",
        "principal eigenpair",
        err <= EIGEN_TOL && phi_err <= 1e-6 && positive && flat_err <= EIGEN_CONST_TOL,
        format!("dense oracle gap {err:.1e}, eigenvector gap {phi_err:.1e}, psi = 0 gap {flat_err:.1e}"),
    )
}

fn c9_tangency() -> Outcome {
    let par = reference_params();
    let g = grid1(16, 2.0);
    let op = PaneitzOperator::new(par, &g);
    let eig = principal_eigenpair(&op).unwrap();
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0, 5.0, 8.0] {
        for q in [1.5, 2.0, 3.0, 4.0, 6.0] {
            let prob = ProblemSpec::constants(&g, 1.0, -1.0, p, q, Mode::Absorption, &par).unwrap();
            let r = check_existence_ineq(&op, &prob, &eig).unwrap();
            let denom = r.ingredients["kappa"];
            let tan = tangent_slope_root(1.0, 1.0, p, q).unwrap();
            // brute-force slope of the tangent from the origin to f(t) = t^{-p} + t^q
            let f = |t: f64| t.powf(-p) + t.powf(q);
            let slope = |t: f64| f(t) / t;
            let tstar = bisect(|t| -p * t.powf(-p - 1.0) + q * t.powf(q - 1.0) - slope(t), 1e-3, 1e3);
            worst = worst.max(rel(denom, tan.lambda_c)).max(rel(tangency_constant(p, q), slope(tstar)));
        }
    }
    outcome(
        "9",
        "tangency identity",
        worst <= TANGENCY_TOL,
        format!("25 (p, q) pairs, max rel gap {worst:.1e}"),
    )
}

fn c10_nonexistence() -> Outcome {
    let par = reference_params();
    let g = grid1(16, 2.0);
    let op = PaneitzOperator::new(par, &g);
    let (mut certified, mut agree, mut max_disc) = (0, 0, 0.0f64);
    let mut total = 0;
    for i in 0..10 {
        let lambda = 0.5 * 100f64.powf(i as f64 / 9.0);
        for j in 0..10 {
            let q = 1.2 + 3.8 * j as f64 / 9.0;
            let prob = ProblemSpec::constants(&g, 1.0, lambda, 3.0, q, Mode::Source, &par).unwrap();
            let r = check_nonexistence(&op, &prob).unwrap();
            // β u = u^{-3} + λ u^q has a positive root iff this changes sign
            let h = |u: f64| par.beta * u - u.powi(-3) - lambda * u.powf(q);
            let has_root = !scalar_roots(h, 1e-6, 1e3, 20_000).is_empty();
            total += 1;
            if r.satisfied {
                certified += 1;
                if !has_root {
                    agree += 1;
                }
            }
            if let Some(d) = r.discrepancy {
                max_disc = max_disc.max(d.abs() / r.rhs.abs().max(1.0));
            }
        }
    }
    outcome(
        "10",
        "non-existence soundness",
        certified > 0 && agree == certified,
        format!("{total} points, {certified} certified, {agree} confirmed root-free; printed-form rel discrepancy up to {max_disc:.2e} (not load-bearing)"),
    )
}

/// The energy condition needs a discrete Sobolev constant below one. It
/// scales like `R²`, so the fixtures use a weakly curved background on the
/// reference box.
fn c11_mountain_pass() -> (Outcome, Outcome) {
    let par = GeometryParams::derive(5, 2.0).unwrap();
    let g = grid1(64, 2.0);
    let cfg = MountainPassConfig::default();
    let one = ScalarField::constant(&g, 1.0);
    let constants = |b: f64| ProblemSpec::constants(&g, 1.0, b, 3.0, 2.0, Mode::Source, &par).unwrap();
    let mut fixtures: Vec<(String, PaneitzOperator, ProblemSpec, Option<f64>)> = Vec::new();
    for b in [0.005, 0.01] {
        fixtures.push((format!("B = {b}"), PaneitzOperator::new(par, &g), constants(b), Some(b)));
    }
    let bvar = ScalarField::from_fn(&g, |x| 0.01 * (1.0 + 0.5 * (PI * x[0]).cos())).unwrap();
    let prob = ProblemSpec::new(ScalarField::constant(&g, 1.0), bvar, 3.0, 2.0, Mode::Source, &par).unwrap();
    fixtures.push(("B = 0.01(1 + cos/2)".into(), PaneitzOperator::new(par, &g), prob, None));
    let psi = ScalarField::from_fn(&g, |x| 0.05 * (PI * x[0]).sin()).unwrap();
    let op = PaneitzOperator::with_psi(par, &psi).unwrap();
    fixtures.push(("psi mode, B = 0.01".into(), op, constants(0.01), None));

    let (mut ok, mut printed_ok, mut notes) = (true, true, Vec::new());
    for (label, op, prob, scalar_b) in &fixtures {
        let start = Instant::now();
        let r = match mountain_pass_solve_with(op, prob, &one, &cfg) {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                notes.push(format!("{label}: {e}"));
                continue;
            }
        };
        let elapsed = start.elapsed();
        let cond_ok = r.cond.as_ref().is_some_and(|c| c.satisfied);
        let cb = r.crit_bound.as_ref().expect("crit bound");
        let fine = r.report.residual <= MP_RESIDUAL && r.report.min_u > 0.0 && cb.derived_ok && cond_ok && elapsed <= MP_BUDGET;
        let root_gap = scalar_b.map(|b| {
            let h = |u: f64| par.beta * u - u.powi(-3) - b * u * u;
            scalar_roots(h, 1e-6, 1e6, 50_000)
                .iter()
                .map(|r0| r.report.solution.map(|u| u - r0).norm_inf())
                .fold(f64::INFINITY, f64::min)
        });
        ok &= fine && root_gap.is_none_or(|gap| gap <= MP_ROOT_TOL);
        printed_ok &= cb.printed_ok;
        notes.push(format!(
            "{label}: res {:.1e}, root gap {}, {:.2}s",
            r.report.residual,
            root_gap.map_or("n/a".into(), |g| format!("{g:.1e}")),
            elapsed.as_secs_f64()
        ));
    }
    (
        outcome("11", "mountain-pass contract (derived bound)", ok, notes.join("; ")),
        outcome(
            "11b",
            "mountain-pass level inside the printed interval",
            printed_ok,
            "printed rim radius uses the reciprocal Sobolev power".into(),
        ),
    )
}

fn c12_lambda_star() -> Outcome {
    let par = reference_params();
    let op = PaneitzOperator::new(par, &grid1(64, 2.0));
    let start = Instant::now();
    let br = lambda_star_bracket(&op, 3.0, 2.0).unwrap();
    let r = lambda_star_bisect(&op, 3.0, 2.0, LAMBDA_TOL).unwrap();
    let elapsed = start.elapsed();
    let emp = r.empirical.unwrap_or(f64::NAN);
    let width = r.interval.map_or(f64::INFINITY, |(a, b)| b - a);
    outcome(
        "12",
        "critical coupling bracket",
        br.lower <= emp && emp <= br.upper && width <= LAMBDA_TOL && r.anomalies.is_empty() && elapsed <= LAMBDA_BUDGET,
        format!(
            "lower {:.6e} <= empirical {emp:.6e} <= upper {:.6e}, {} probes, {:.1}s",
            br.lower,
            br.upper,
            r.evaluations.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c13_conformal() -> Outcome {
    let mut worst = 0.0f64;
    for n in 5..=8 {
        let par = GeometryParams::sphere(n).unwrap();
        let g = SpectralGrid::new(&[8, 8], &[1.0, 2.0]).unwrap();
        let op = PaneitzOperator::new(par, &g);
        for c in [1.0, 0.5, 2.0, 3.7] {
            let qc = op.conformal_q(&ScalarField::constant(&g, c)).unwrap();
            let want = c.powf(-8.0 / (n as f64 - 4.0)) * par.q_curvature;
            worst = worst.max(qc.map(|x| x - want).norm_inf() / want);
        }
    }
    outcome("13", "conformal transform", worst <= CONFORMAL_TOL, format!("max rel err {worst:.1e}"))
}

fn c14_positivity() -> Outcome {
    let par = reference_params();
    let g = grid1(32, 2.0);
    let op = PaneitzOperator::new(par, &g);
    let rep = positivity_check(&op, 8, 14).unwrap();
    let green_ok = rep.pass && rep.green_min >= -GREEN_SLACK * rep.scale;
    let bad = PaneitzOperator::with_potential(par, ScalarField::constant(&g, par.q_curvature + 1.0)).unwrap();
    let engineered = positivity_check(&bad, 8, 14);
    let fails_cleanly = matches!(&engineered, Ok(r) if !r.pass);
    outcome(
        "14",
        "positivity diagnostics",
        green_ok && fails_cleanly,
        format!(
            "green min {:.3e} (scale {:.3e}); engineered fixture reported {}",
            rep.green_min,
            rep.scale,
            if fails_cleanly { "FAIL" } else { "unexpectedly" }
        ),
    )
}

fn run_twice(text: &str, base: &Path, workers: [usize; 2]) -> bool {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let manifests: Vec<_> = dirs
        .iter()
        .zip(workers)
        .map(|(d, w)| {
            let cfg = parse_config_in(text, base)
                .unwrap()
                .with_overrides(Some(d.path().to_path_buf()), Some(w), None)
                .unwrap();
            run(&cfg).unwrap()
        })
        .collect();
    let same = manifests[0].artifacts == manifests[1].artifacts && manifests[0].exit_code == 0;
    let bytes_equal = manifests[0].artifacts.iter().all(|a| {
        std::fs::read(dirs[0].path().join(&a.path)).unwrap() == std::fs::read(dirs[1].path().join(&a.path)).unwrap()
    });
    same && bytes_equal && manifests[0].verify(dirs[0].path()).unwrap()
}

fn c15_determinism() -> Outcome {
    let base = Path::new(".");
    let solve = "n = 5\nR = 20\nsizes = 32\nL = 2\naction = solve\n";
    let sobolev = "n = 5\nR = 20\nd = 2\nsizes = 8\naction = sobolev\npsi = mode\npsi_wavevector = 1,1\nseed = 7\n";
    let sweep = "n = 5\nR = 20\nsizes = 16\nL = 0.05\nmode = source\naction = sweep\nsweep_action = mountain-pass\nsweep_key = b\nsweep_values = 0.5,1,2\nsweep_key2 = q\nsweep_values2 = 2,2.5\n";
    let runs = [
        ("solve", run_twice(solve, base, [1, 1])),
        ("sobolev", run_twice(sobolev, base, [1, 1])),
        ("sweep 1 vs 3 workers", run_twice(sweep, base, [1, 3])),
    ];
    let failed: Vec<&str> = runs.iter().filter(|r| !r.1).map(|r| r.0).collect();
    outcome(
        "15",
        "end-to-end determinism",
        failed.is_empty(),
        if failed.is_empty() {
            "solve, seeded sobolev and a 6-cell sweep reproduce byte for byte".into()
        } else {
            format!("differs: {}", failed.join(", "))
        },
    )
}

#[test]
fn acceptance() {
    let fixtures = random_fixtures(20);
    let (c4, c5) = c4_c5_monotone(&fixtures);
    let (c11, c11b) = c11_mountain_pass();
    let results = vec![
        c1_coefficients(),
        c2_operator_algebra(),
        c3_constant_data(),
        c4,
        c5,
        c6_continuation(),
        c7_flow(&fixtures[..8]),
        c8_eigen(),
        c9_tangency(),
        c10_nonexistence(),
        c11,
        c11b,
        c12_lambda_star(),
        c13_conformal(),
        c14_positivity(),
        c15_determinism(),
    ];
    // straight to the handle so the table survives libtest's output capture
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    let mut unexpected = Vec::new();
    for r in &results {
        let known = KNOWN_DIVERGENT.contains(&r.id);
        let tag = if r.pass { "PASS" } else { "FAIL" };
        let suffix = if known { " [known divergent]" } else { "" };
        writeln!(out, "{tag} {:>3} {}: {}{suffix}", r.id, r.name, r.detail).unwrap();
        if r.pass == known {
            unexpected.push(r.id);
        }
    }
    assert!(unexpected.is_empty(), "unexpected outcomes: {unexpected:?}");
}

#[test]
fn sobolev_constant_of_the_small_box_is_below_one() {
    let par = reference_params();
    let op = PaneitzOperator::new(par, &grid1(64, 0.05));
    let s = sobolev_estimate(&op, &SobolevConfig::default()).unwrap().value;
    // constants are the minimizers on such a box: S = β V^{1 − 2/2♯}
    let want = par.beta * 0.05f64.powf(1.0 - 2.0 / par.two_sharp);
    assert!((s - want).abs() <= 1e-8 * want, "{s} vs {want}");
    let prob = reference_problem(op.grid(), Mode::Source, 1.0);
    let one = ScalarField::constant(op.grid(), 1.0);
    assert!(check_existence_cond(&op, &prob, &one, s).unwrap().satisfied);
}
