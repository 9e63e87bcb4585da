use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{GeometryParams, ScalarField, SpectralGrid};
use crate::operator::PaneitzOperator;

/// Sign of the power nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `P u = A/u^p − B u^q`
    Absorption,
    /// `P u = A/u^p + B u^q`
    Source,
}

impl Mode {
    pub fn sign(self) -> f64 {
        match self {
            Mode::Absorption => -1.0,
            Mode::Source => 1.0,
        }
    }
}

/// Coefficients, exponents and sign of `P u = A/u^p ± B u^q`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    a: ScalarField,
    b: ScalarField,
    p: f64,
    q: f64,
    mode: Mode,
    warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    pub p: f64,
    pub q: f64,
    pub mode: Mode,
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub warnings: Vec<String>,
}

impl ProblemSpec {
    /// Validates `A > 0`, `p > 1`, `q > 1`; in source mode also `B ≥ 0` and
    /// `q ≤ 2♯ − 1`, where equality is accepted with a warning.
    pub fn new(
        a: ScalarField,
        b: ScalarField,
        p: f64,
        q: f64,
        mode: Mode,
        params: &GeometryParams,
    ) -> Result<Self> {
        a.same_grid(&b)?;
        a.check_finite("A")?;
        b.check_finite("B")?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidProblem(format!("need p > 1, got {p}")));
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidProblem(format!("need q > 1, got {q}")));
        }
        if a.min() <= 0.0 {
            return Err(Error::InvalidProblem(format!(
                "A must be positive (min {:.3e})",
                a.min()
            )));
        }
        let mut warnings = Vec::new();
        if mode == Mode::Source {
            if b.min() < 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "source mode needs B >= 0 (min {:.3e})",
                    b.min()
                )));
            }
            let critical = params.two_sharp - 1.0;
            if q > critical + 1e-12 {
                return Err(Error::InvalidProblem(format!(
                    "source mode needs q <= 2# - 1 = {critical}, got {q}"
                )));
            }
            if (q - critical).abs() <= 1e-12 {
                warnings.push(format!(
                    "q = 2# - 1 = {critical} is the borderline exponent; the B-norm is taken in L^inf"
                ));
            }
        }
        Ok(Self {
            a,
            b,
            p,
            q,
            mode,
            warnings,
        })
    }

    pub fn constants(
        grid: &Arc<SpectralGrid>,
        a: f64,
        b: f64,
        p: f64,
        q: f64,
        mode: Mode,
        params: &GeometryParams,
    ) -> Result<Self> {
        Self::new(
            ScalarField::constant(grid, a),
            ScalarField::constant(grid, b),
            p,
            q,
            mode,
            params,
        )
    }

    pub fn a(&self) -> &ScalarField {
        &self.a
    }

    pub fn b(&self) -> &ScalarField {
        &self.b
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn b_is_zero(&self) -> bool {
        self.b.values().iter().all(|&v| v == 0.0)
    }

    /// Same problem with `B` replaced; validation is not repeated beyond the
    /// grid check, so callers keep the sign constraints themselves.
    pub fn with_b(&self, b: ScalarField) -> Result<Self> {
        self.a.same_grid(&b)?;
        b.check_finite("B")?;
        Ok(Self { b, ..self.clone() })
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self { mode, ..self.clone() }
    }

    /// `f(x, u) = A/u^p ± B u^q` at one point.
    #[inline]
    pub fn f_at(&self, i: usize, u: f64) -> f64 {
        self.a.values()[i] / u.powf(self.p) + self.mode.sign() * self.b.values()[i] * u.powf(self.q)
    }

    /// `∂f/∂u` at one point.
    #[inline]
    pub fn df_at(&self, i: usize, u: f64) -> f64 {
        -self.p * self.a.values()[i] / u.powf(self.p + 1.0)
            + self.mode.sign() * self.q * self.b.values()[i] * u.powf(self.q - 1.0)
    }

    /// Right-hand side field; requires `u > 0`.
    pub fn rhs(&self, u: &ScalarField) -> Result<ScalarField> {
        u.same_grid(&self.a)?;
        let min = u.min();
        if min <= 0.0 {
            return Err(Error::PositivityViolation {
                what: "argument of the singular nonlinearity".into(),
                min,
            });
        }
        let vals = u
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| self.f_at(i, v))
            .collect();
        Ok(ScalarField::from_raw(u.grid().clone(), vals))
    }

    /// `‖P u − f(u)‖∞`.
    pub fn residual(&self, op: &PaneitzOperator, u: &ScalarField) -> Result<f64> {
        let pu = op.apply(u)?;
        Ok(pu.sub(&self.rhs(u)?).norm_inf())
    }

    pub fn summary(&self) -> ProblemSummary {
        ProblemSummary {
            p: self.p,
            q: self.q,
            mode: self.mode,
            a_min: self.a.min(),
            a_max: self.a.max(),
            b_min: self.b.min(),
            b_max: self.b.max(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Bound on `−∂f/∂u` over `[delta, m]`:
/// `p·max A/δ^{p+1} + q·max|B|·M^{q−1}`.
pub fn lipschitz_shift(prob: &ProblemSpec, delta: f64, m: f64) -> f64 {
    let a_max = prob.a.max().max(0.0);
    let b_max = prob.b.norm_inf();
    let mut lam = 0.0;
    if a_max > 0.0 {
        lam += prob.p * a_max / delta.powf(prob.p + 1.0);
    }
    if b_max > 0.0 {
        lam += prob.q * b_max * m.powf(prob.q - 1.0);
    }
    lam
}
