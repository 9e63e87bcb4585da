use serde::Serialize;

use crate::error::{Error, Result};

/// Constants of the Paneitz-Branson operator on an Einstein manifold of
/// dimension `n` with scalar curvature `r`.
///
/// On such a background the operator has constant coefficients,
/// `P u = Δ²u + α Δu + β u` with `Δ` the nonnegative Laplacian, and the
/// zeroth-order coefficient is `β = b_n Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryParams {
    pub n: u32,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q_curvature: f64,
    /// `(n − 4)/2`, the weight of the Q-curvature in `P`.
    pub b_n: f64,
    /// `(n − 4)/4`, only used for the action normalization.
    pub a_n: f64,
    /// Critical exponent `2n/(n − 4)`.
    pub two_sharp: f64,
}

impl GeometryParams {
    pub fn derive(n: i64, r: f64) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidDimension(n));
        }
        if !r.is_finite() {
            return Err(Error::NonFinite("scalar curvature".into()));
        }
        let nf = n as f64;
        let nm1 = nf - 1.0;
        let alpha = (nf * nf - 2.0 * nf - 4.0) * r / (2.0 * nf * nm1);
        let beta = (nf - 4.0) * (nf * nf - 4.0) * r * r / (16.0 * nf * nm1 * nm1);
        let q_curvature = (nf * nf - 4.0) * r * r / (8.0 * nf * nm1 * nm1);
        Ok(Self {
            n: n as u32,
            r,
            alpha,
            beta,
            q_curvature,
            b_n: (nf - 4.0) / 2.0,
            a_n: (nf - 4.0) / 4.0,
            two_sharp: 2.0 * nf / (nf - 4.0),
        })
    }

    /// Unit-sphere normalization `R = n(n − 1)`.
    pub fn sphere(n: i64) -> Result<Self> {
        Self::derive(n, (n * (n - 1)) as f64)
    }

    pub fn discriminant(&self) -> f64 {
        self.alpha * self.alpha - 4.0 * self.beta
    }

    /// Constants `c1 <= c2` with `t² + αt + β = (t + c1)(t + c2)`, i.e. the
    /// factorization `P = (Δ + c1)(Δ + c2)` into second-order operators.
    pub fn factor_constants(&self) -> Option<(f64, f64)> {
        let disc = self.discriminant();
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // stable pair: larger root directly, smaller through the product
        let c2 = 0.5 * (self.alpha + s);
        let c1 = if c2 != 0.0 { self.beta / c2 } else { 0.0 };
        Some((c1, c2))
    }

    /// `σ(t) = t² + αt`, the constant-coefficient symbol without `β`.
    #[inline]
    pub fn symbol(&self, t: f64) -> f64 {
        t * t + self.alpha * t
    }
}
