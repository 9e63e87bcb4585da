//! Einstein-model operator constants and the periodic computational grid.

mod field;
mod grid;
pub mod io;
mod params;

pub use field::ScalarField;
pub use grid::{GridSignature, SpectralGrid};
pub use params::GeometryParams;

use rustfft::num_complex::Complex64;

use crate::error::Result;

/// Pointwise `|∇ψ|²` by spectral differentiation.
///
/// The Nyquist bin of each axis is dropped from the derivative so that the
/// result stays real for real input.
pub fn gradient_squared(psi: &ScalarField) -> Result<ScalarField> {
    psi.check_finite("psi")?;
    let grid = psi.grid();
    let spec = grid.forward(psi.values());
    let mut out = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let n = grid.sizes()[axis];
        let stride = grid.strides()[axis];
        let k = grid.wavenumbers(axis);
        let mut d = spec.clone();
        for (idx, c) in d.iter_mut().enumerate() {
            let m = (idx / stride) % n;
            let kk = if n % 2 == 0 && m == n / 2 { 0.0 } else { k[m] };
            *c *= Complex64::new(0.0, kk);
        }
        let deriv = grid.inverse_real(d);
        for (o, g) in out.iter_mut().zip(deriv) {
            *o += g * g;
        }
    }
    Ok(ScalarField::from_raw(grid.clone(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_has_zero_gradient() {
        let g = SpectralGrid::cube(2, 16, 3.0).unwrap();
        let v = gradient_squared(&ScalarField::constant(&g, 4.2)).unwrap();
        assert!(v.norm_inf() < 1e-24);
    }

    #[test]
    fn single_sine_matches_analytic() {
        let l = 1.7;
        let g = SpectralGrid::cube(1, 32, l).unwrap();
        let w = 2.0 * PI / l;
        let psi = ScalarField::from_fn(&g, |x| (w * x[0]).sin()).unwrap();
        let v = gradient_squared(&psi).unwrap();
        for i in 0..32 {
            let x = g.coordinates(i)[0];
            let expect = w * w * (w * x).cos().powi(2);
            assert!((v.values()[i] - expect).abs() < 1e-11);
        }
    }

    /// Fourth-order centered differences as an independent check.
    #[test]
    fn two_modes_match_finite_differences() {
        let l = 2.0 * PI;
        let n = 256;
        let g = SpectralGrid::cube(1, n, l).unwrap();
        let h = l / n as f64;
        let f = |x: f64| (2.0 * PI * x / l).sin() + (4.0 * PI * x / l).sin();
        let psi = ScalarField::from_fn(&g, |x| f(x[0])).unwrap();
        let v = gradient_squared(&psi).unwrap();
        for i in 0..n {
            let x = i as f64 * h;
            let d = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
            assert!((v.values()[i] - d * d).abs() < 10.0 * h * h, "i={i}");
        }
    }

    #[test]
    fn homogeneous_of_degree_two() {
        let g = SpectralGrid::new(&[16, 8], &[1.0, 2.0]).unwrap();
        let psi = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).cos() * (PI * x[1]).sin()).unwrap();
        let a = gradient_squared(&psi).unwrap();
        let b = gradient_squared(&psi.scale(-3.0)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((9.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}
