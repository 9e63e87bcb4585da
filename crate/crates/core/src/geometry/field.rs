use std::sync::Arc;

use crate::error::{Error, Result};

use super::grid::SpectralGrid;

/// Real grid function on a [`SpectralGrid`], stored row-major.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl ScalarField {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be finite and sized.
    pub(crate) fn from_raw(grid: Arc<SpectralGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: &Arc<SpectralGrid>, c: f64) -> Self {
        Self::from_raw(grid.clone(), vec![c; grid.len()])
    }

    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at the physical coordinates of every grid point.
    pub fn from_fn(grid: &Arc<SpectralGrid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coordinates(i))).collect();
        Self::new(grid.clone(), values)
    }

    /// Unit impulse at a flat offset.
    pub fn delta(grid: &Arc<SpectralGrid>, idx: usize) -> Self {
        let mut v = vec![0.0; grid.len()];
        v[idx] = 1.0;
        Self::from_raw(grid.clone(), v)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::from_raw(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c·other`
    pub fn add_scaled(&self, c: f64, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ u` with the grid quadrature.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_weight()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Quadrature inner product `∫ u v`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_weight()
    }

    /// `(∫ |u|^s)^{1/s}`; `s = ∞` gives the sup norm.
    pub fn lp_norm(&self, s: f64) -> f64 {
        if s.is_infinite() {
            return self.norm_inf();
        }
        let w = self.grid.cell_weight();
        let scale = self.norm_inf();
        if scale == 0.0 {
            return 0.0;
        }
        // factor out the sup norm so large exponents do not overflow
        let sum: f64 = self.values.iter().map(|v| (v.abs() / scale).powf(s)).sum();
        scale * (sum * w).powf(1.0 / s)
    }

    pub fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first)
    }

    /// Periodic translation by whole grid steps along each axis.
    pub fn translated(&self, shift: &[isize]) -> Self {
        let mut out = vec![0.0; self.len()];
        for (i, &v) in self.values.iter().enumerate() {
            out[self.grid.translate(i, shift)] = v;
        }
        Self::from_raw(self.grid.clone(), out)
    }
}
