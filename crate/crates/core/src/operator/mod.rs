//! The discrete operator `P_{g,ψ} u = Δ²u + αΔu + W u` with `W = b_n (Q − |∇ψ|²)`.
//!
//! The constant-coefficient part acts diagonally on Fourier modes through
//! `σ(t) = t² + αt`; the potential acts pointwise.

pub mod krylov;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{gradient_squared, GeometryParams, ScalarField, SpectralGrid};

pub use krylov::KrylovOutcome;

/// Stopping rule for the shifted linear solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearSolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub solution: ScalarField,
    pub iterations: usize,
    /// `‖(P + λ)u − rhs‖∞` of the returned field.
    pub residual_inf: f64,
}

#[derive(Debug, Clone)]
pub struct PaneitzOperator {
    params: GeometryParams,
    grid: Arc<SpectralGrid>,
    potential: ScalarField,
    weight: ScalarField,
    symbol: Vec<f64>,
    min_symbol: f64,
}

impl PaneitzOperator {
    /// Operator with `ψ = 0`, so `W ≡ β`.
    pub fn new(params: GeometryParams, grid: &Arc<SpectralGrid>) -> Self {
        Self::build(params, ScalarField::zeros(grid))
    }

    /// Operator whose potential is `|∇ψ|²` of the given scalar field.
    pub fn with_psi(params: GeometryParams, psi: &ScalarField) -> Result<Self> {
        Ok(Self::build(params, gradient_squared(psi)?))
    }

    /// Operator with an explicitly supplied nonnegative potential `V` in
    /// place of `|∇ψ|²`.
    pub fn with_potential(params: GeometryParams, potential: ScalarField) -> Result<Self> {
        potential.check_finite("potential")?;
        if potential.min() < 0.0 {
            return Err(Error::InvalidProblem(format!(
                "potential must be nonnegative (min {:.3e})",
                potential.min()
            )));
        }
        Ok(Self::build(params, potential))
    }

    fn build(params: GeometryParams, potential: ScalarField) -> Self {
        let grid = potential.grid().clone();
        let weight = potential.map(|v| params.b_n * (params.q_curvature - v));
        let symbol: Vec<f64> = grid
            .laplacian_eigenvalues()
            .iter()
            .map(|&t| params.symbol(t))
            .collect();
        let min_symbol = symbol.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            params,
            grid,
            potential,
            weight,
            symbol,
            min_symbol,
        }
    }

    pub fn params(&self) -> &GeometryParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    /// `V`, the gradient-energy potential.
    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    /// `W = b_n (Q − V)`, the full zeroth-order multiplier.
    pub fn weight(&self) -> &ScalarField {
        &self.weight
    }

    /// `Q_ψ = Q − V`.
    pub fn q_psi(&self) -> ScalarField {
        self.potential.map(|v| self.params.q_curvature - v)
    }

    /// `σ(t(k))` per Fourier mode.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn is_geometric(&self) -> bool {
        self.potential.values().iter().all(|&v| v == 0.0)
    }

    /// `min σ + min W + λ`; positive values certify `P + λ` is positive definite.
    pub fn coercivity_witness(&self, lambda: f64) -> f64 {
        self.min_symbol + self.weight.min() + lambda
    }

    pub(crate) fn apply_raw(&self, u: &[f64], shift: f64) -> Vec<f64> {
        let mut out = self.grid.apply_multiplier(u, &self.symbol);
        for ((o, &w), &ui) in out.iter_mut().zip(self.weight.values()).zip(u) {
            *o += (w + shift) * ui;
        }
        out
    }

    /// Applies `(σ(t) + c)⁻¹` in frequency space.
    pub(crate) fn precondition_raw(&self, r: &[f64], c: f64) -> Vec<f64> {
        let inv: Vec<f64> = self.symbol.iter().map(|&s| 1.0 / (s + c)).collect();
        self.grid.apply_multiplier(r, &inv)
    }

    /// Positive constant standing in for the potential plus shift in the
    /// preconditioner.
    pub(crate) fn preconditioner_shift(&self, lambda: f64) -> f64 {
        let c = self.weight.mean() + lambda;
        let floor = 1e-3 * (self.weight.norm_inf() + lambda.abs()).max(1.0);
        c.max(floor)
    }

    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField> {
        u.same_grid(&self.weight)?;
        u.check_finite("operator input")?;
        Ok(ScalarField::from_raw(self.grid.clone(), self.apply_raw(u.values(), 0.0)))
    }

    /// `⟨u, P u⟩` with the grid quadrature.
    pub fn quadratic_form(&self, u: &ScalarField) -> Result<f64> {
        Ok(u.inner(&self.apply(u)?))
    }

    /// Solves `(P + λ) u = rhs` after checking the coercivity witness.
    pub fn solve_shifted(&self, lambda: f64, rhs: &ScalarField) -> Result<ScalarField> {
        Ok(self
            .solve_shifted_with(lambda, rhs, &LinearSolverConfig::default())?
            .solution)
    }

    pub fn solve_shifted_with(
        &self,
        lambda: f64,
        rhs: &ScalarField,
        cfg: &LinearSolverConfig,
    ) -> Result<LinearSolve> {
        let witness = self.coercivity_witness(lambda);
        if witness <= 0.0 {
            return Err(Error::NotCoercive { witness });
        }
        self.solve_spd(lambda, rhs, cfg)
    }

    /// Shifted solve without the witness check, for operators known to be
    /// positive definite by other means (e.g. a positive principal
    /// eigenvalue). Indefiniteness surfaces as a CG breakdown.
    pub fn solve_spd(
        &self,
        lambda: f64,
        rhs: &ScalarField,
        cfg: &LinearSolverConfig,
    ) -> Result<LinearSolve> {
        rhs.same_grid(&self.weight)?;
        rhs.check_finite("right-hand side")?;
        let c = self.preconditioner_shift(lambda);
        let out = krylov::pcg(
            |x| self.apply_raw(x, lambda),
            |r| self.precondition_raw(r, c),
            rhs.values(),
            cfg.tol,
            cfg.max_iter,
        )?;
        let solution = ScalarField::from_raw(self.grid.clone(), out.solution);
        let au = self.apply_raw(solution.values(), lambda);
        let residual_inf = au
            .iter()
            .zip(rhs.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(LinearSolve {
            solution,
            iterations: out.iterations,
            residual_inf,
        })
    }

    /// Q-curvature of the conformal metric `u^{4/(n−4)} g`:
    /// `(2/(n−4)) u^{−(n+4)/(n−4)} P u`, normalized so that `u ≡ 1` returns `Q`.
    pub fn conformal_q(&self, u: &ScalarField) -> Result<ScalarField> {
        if !self.is_geometric() {
            return Err(Error::InvalidProblem(
                "conformal Q-curvature needs the geometric operator (psi = 0)".into(),
            ));
        }
        let min = u.min();
        if min <= 0.0 {
            return Err(Error::PositivityViolation {
                what: "conformal factor".into(),
                min,
            });
        }
        let n = self.params.n as f64;
        let expo = -(n + 4.0) / (n - 4.0);
        let pu = self.apply(u)?;
        Ok(pu.zip_map(u, |p, v| 2.0 / (n - 4.0) * v.powf(expo) * p))
    }
}
