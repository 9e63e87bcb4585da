use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{GridSignature, ScalarField};
use crate::operator::PaneitzOperator;

#[derive(Debug, Clone, Copy)]
pub struct SobolevConfig {
    /// Random starts in addition to the constant and bump starts.
    pub random_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the preconditioned squared gradient drops below
    /// `tol · |quotient|`.
    pub tol: f64,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        Self {
            random_starts: 4,
            seed: 0x5eed,
            max_iter: 4000,
            tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StartRecord {
    pub label: String,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest value of `⟨u, P u⟩ / ‖u‖²_{L^r}` found by multi-start descent.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevEstimate {
    pub value: f64,
    pub exponent: f64,
    pub grid: GridSignature,
    pub starts: Vec<StartRecord>,
    #[serde(skip)]
    pub minimizer: ScalarField,
}

/// `⟨u, P u⟩ / ‖u‖²_{L^r}`.
pub fn rayleigh_quotient(op: &PaneitzOperator, u: &ScalarField, r: f64) -> Result<f64> {
    let n = u.lp_norm(r);
    if n == 0.0 {
        return Err(Error::InvalidProblem("quotient of the zero field".into()));
    }
    Ok(op.quadratic_form(u)? / (n * n))
}

/// Discrete best Sobolev constant `S_ψ` at the critical exponent `2♯`.
pub fn sobolev_constant(op: &PaneitzOperator) -> Result<f64> {
    Ok(sobolev_estimate(op, &SobolevConfig::default())?.value)
}

pub fn sobolev_estimate(op: &PaneitzOperator, cfg: &SobolevConfig) -> Result<SobolevEstimate> {
    let witness = op.coercivity_witness(0.0);
    if witness <= 0.0 {
        return Err(Error::NotCoercive { witness });
    }
    minimize_quotient(op, op.params().two_sharp, cfg)
}

/// Minimum of the `L²` Rayleigh quotient. No coercivity is required, so the
/// sign of the result can be compared with the principal eigenvalue.
pub fn rayleigh_minimum(op: &PaneitzOperator, cfg: &SobolevConfig) -> Result<SobolevEstimate> {
    minimize_quotient(op, 2.0, cfg)
}

fn minimize_quotient(op: &PaneitzOperator, r: f64, cfg: &SobolevConfig) -> Result<SobolevEstimate> {
    let starts = initial_fields(op, cfg);
    let outcomes: Vec<Result<(StartRecord, ScalarField)>> = starts
        .into_par_iter()
        .map(|(label, u0)| descend(op, r, u0, cfg).map(|(v, it, conv, u)| {
            (
                StartRecord {
                    label,
                    value: v,
                    iterations: it,
                    converged: conv,
                },
                u,
            )
        }))
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    let mut best: Option<(f64, ScalarField)> = None;
    let mut first_err = None;
    for out in outcomes {
        match out {
            Ok((rec, u)) => {
                if best.as_ref().map_or(true, |(b, _)| rec.value < *b) {
                    best = Some((rec.value, u));
                }
                records.push(rec);
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let (value, minimizer) = match (best, first_err) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one start is always generated"),
    };
    Ok(SobolevEstimate {
        value,
        exponent: r,
        grid: op.grid().signature().clone(),
        starts: records,
        minimizer,
    })
}

/// Start fields anchored at the minimum of `W`, so that translating the
/// potential translates every start the same way.
fn initial_fields(op: &PaneitzOperator, cfg: &SobolevConfig) -> Vec<(String, ScalarField)> {
    let grid = op.grid().clone();
    let anchor = grid.unravel(op.weight().argmin());
    let back: Vec<isize> = anchor.iter().map(|&a| -(a as isize)).collect();
    let sizes = grid.sizes().to_vec();

    let mut out = vec![("constant".to_string(), ScalarField::constant(&grid, 1.0))];

    let bump: Vec<f64> = (0..grid.len())
        .map(|i| {
            let rel = grid.unravel(grid.translate(i, &back));
            let d2: f64 = rel
                .iter()
                .zip(&sizes)
                .map(|(&m, &n)| {
                    let k = m.min(n - m) as f64 / n as f64;
                    k * k
                })
                .sum();
            0.05 + (-d2 / (2.0 * 0.125f64.powi(2))).exp()
        })
        .collect();
    out.push(("bump".to_string(), ScalarField::from_raw(grid.clone(), bump)));

    for k in 0..cfg.random_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
        let raw: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.5..1.5)).collect();
        let vals = (0..grid.len()).map(|i| raw[grid.translate(i, &back)]).collect();
        out.push((format!("random-{k}"), ScalarField::from_raw(grid.clone(), vals)));
    }
    out
}

/// Preconditioned gradient descent on the quotient with Armijo backtracking,
/// renormalizing to the unit `L^r` sphere after every step.
fn descend(
    op: &PaneitzOperator,
    r: f64,
    u0: ScalarField,
    cfg: &SobolevConfig,
) -> Result<(f64, usize, bool, ScalarField)> {
    let c = op
        .weight()
        .norm_inf()
        .max(op.params().beta.abs())
        .max(1.0);
    let mut u = u0.scale(1.0 / u0.lp_norm(r));
    let mut pu = op.apply(&u)?;
    let mut value = u.inner(&pu);
    let mut step = 1.0f64;
    for it in 1..=cfg.max_iter {
        let np = power_term(&u, r);
        let grad: Vec<f64> = pu
            .values()
            .iter()
            .zip(np.values())
            .map(|(a, b)| 2.0 * (a - value * b))
            .collect();
        let dir = op.precondition_raw(&grad, c);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>() * op.grid().cell_weight();
        if !slope.is_finite() || !value.is_finite() {
            return Err(Error::NonFinite("Sobolev descent".into()));
        }
        if slope <= cfg.tol * value.abs().max(1e-300) {
            return Ok((value, it - 1, true, u));
        }
        let dir = ScalarField::from_raw(op.grid().clone(), dir);
        let mut t = (2.0 * step).min(1e6);
        let accepted = loop {
            let cand = u.add_scaled(-t, &dir);
            let n = cand.lp_norm(r);
            if n > 0.0 && n.is_finite() {
                let cand = cand.scale(1.0 / n);
                let pc = op.apply(&cand)?;
                let v = cand.inner(&pc);
                if v <= value - 1e-4 * t * slope {
                    break Some((cand, pc, v));
                }
            }
            t *= 0.5;
            if t < 1e-18 {
                break None;
            }
        };
        match accepted {
            Some((cand, pc, v)) => {
                let drop = value - v;
                u = cand;
                pu = pc;
                value = v;
                step = t;
                if drop <= 1e-16 * value.abs() {
                    return Ok((value, it, true, u));
                }
            }
            // no descent left at machine precision
            None => return Ok((value, it, true, u)),
        }
    }
    Ok((value, cfg.max_iter, false, u))
}

/// `|u|^{r−2} u`, half the gradient of `‖u‖_r²` on the unit sphere.
fn power_term(u: &ScalarField, r: f64) -> ScalarField {
    if r == 2.0 {
        return u.clone();
    }
    u.map(|v| v.abs().powf(r - 2.0) * v)
}
