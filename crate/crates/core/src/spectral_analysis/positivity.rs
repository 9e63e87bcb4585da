use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::ScalarField;
use crate::operator::{LinearSolverConfig, PaneitzOperator};

use super::eigen::principal_eigenpair;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSummary {
    /// Flat grid index of the impulse, or the seed offset of a random field.
    pub index: usize,
    pub min: f64,
    pub max: f64,
}

/// Empirical maximum-principle check for `P⁻¹`.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub pass: bool,
    pub green_min: f64,
    pub random_min: f64,
    /// Largest magnitude seen across all probes; the pass threshold is
    /// `−1e−12 · scale`.
    pub scale: f64,
    pub columns: Vec<ProbeSummary>,
    pub random: Vec<ProbeSummary>,
    pub lambda1: Option<f64>,
    pub note: Option<String>,
}

/// Green's function column `G(·, x_idx)`, the solution of `P u = δ_idx` with the
/// impulse normalized to unit integral.
pub fn green_column(op: &PaneitzOperator, idx: usize) -> Result<ScalarField> {
    let grid = op.grid();
    let rhs = ScalarField::delta(grid, idx).scale(1.0 / grid.cell_weight());
    Ok(op.solve_spd(0.0, &rhs, &LinearSolverConfig::default())?.solution)
}

/// Applies `P⁻¹` to impulses at `samples` evenly spaced points and to as many
/// seeded random nonnegative fields, and reports the smallest values.
///
/// An operator without a positive principal eigenvalue fails without
/// raising an error.
pub fn positivity_check(op: &PaneitzOperator, samples: usize, seed: u64) -> Result<PositivityReport> {
    let mut lambda1 = None;
    if op.coercivity_witness(0.0) <= 0.0 {
        let reason = match principal_eigenpair(op) {
            Ok(e) if e.lambda1 > 0.0 => {
                lambda1 = Some(e.lambda1);
                None
            }
            Ok(e) => {
                lambda1 = Some(e.lambda1);
                Some(format!("principal eigenvalue {:.6e} is not positive", e.lambda1))
            }
            Err(e) => Some(format!("principal eigenpair unavailable: {e}")),
        };
        if let Some(note) = reason {
            return Ok(PositivityReport {
                pass: false,
                green_min: f64::NAN,
                random_min: f64::NAN,
                scale: f64::NAN,
                columns: Vec::new(),
                random: Vec::new(),
                lambda1,
                note: Some(note),
            });
        }
    }

    let grid = op.grid().clone();
    let len = grid.len();
    let samples = samples.clamp(1, len);
    let points: Vec<usize> = (0..samples).map(|k| k * len / samples).collect();
    let columns = points
        .par_iter()
        .map(|&idx| {
            let g = green_column(op, idx)?;
            Ok(ProbeSummary {
                index: idx,
                min: g.min(),
                max: g.max(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let random = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let f: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
            let f = ScalarField::new(grid.clone(), f)?;
            let u = op.solve_spd(0.0, &f, &LinearSolverConfig::default())?.solution;
            Ok(ProbeSummary {
                index: k,
                min: u.min(),
                max: u.max(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fold_min = |v: &[ProbeSummary]| v.iter().fold(f64::INFINITY, |m, s| m.min(s.min));
    let green_min = fold_min(&columns);
    let random_min = fold_min(&random);
    let scale = columns
        .iter()
        .chain(&random)
        .fold(0.0f64, |m, s| m.max(s.min.abs()).max(s.max.abs()));
    let pass = green_min.min(random_min) >= -1e-12 * scale;
    Ok(PositivityReport {
        pass,
        green_min,
        random_min,
        scale,
        columns,
        random,
        lambda1,
        note: None,
    })
}
