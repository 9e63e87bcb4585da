use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

/// Shape of a periodic lattice: point counts and box lengths per axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSignature {
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
}

impl fmt::Display for GridSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        let lengths: Vec<String> = self.lengths.iter().map(|l| format!("{l}")).collect();
        write!(f, "{} on [{}]", sizes.join("x"), lengths.join(", "))
    }
}

/// Periodic box `∏ [0, L_i)` sampled on a uniform power-of-two lattice.
///
/// The box stands in for the closed manifold: integrals become weighted
/// sums with a constant cell weight and the Laplacian is diagonal in the
/// discrete Fourier basis with eigenvalue `t(k) = Σ (2π m_i / L_i)²`.
pub struct SpectralGrid {
    sig: GridSignature,
    strides: Vec<usize>,
    len: usize,
    cell_weight: f64,
    /// Signed wavenumber `2π m / L` per axis, indexed by the FFT bin.
    wavenumbers: Vec<Vec<f64>>,
    laplacian: Vec<f64>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("signature", &self.sig).finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.sig == other.sig
    }
}

impl SpectralGrid {
    pub fn new(sizes: &[usize], lengths: &[f64]) -> Result<Arc<Self>> {
        if sizes.is_empty() || sizes.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension {} outside 1..=3",
                sizes.len()
            )));
        }
        if sizes.len() != lengths.len() {
            return Err(Error::InvalidGrid("sizes and lengths differ in length".into()));
        }
        for &s in sizes {
            if s < 2 || !s.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("size {s} is not a power of two >= 2")));
            }
        }
        for &l in lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("box length {l} must be positive")));
            }
        }

        let d = sizes.len();
        let mut strides = vec![1; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * sizes[a + 1];
        }
        let len: usize = sizes.iter().product();
        let cell_weight = sizes
            .iter()
            .zip(lengths)
            .map(|(&n, &l)| l / n as f64)
            .product();

        let wavenumbers: Vec<Vec<f64>> = sizes
            .iter()
            .zip(lengths)
            .map(|(&n, &l)| {
                (0..n)
                    .map(|m| {
                        let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                        2.0 * PI * signed / l
                    })
                    .collect()
            })
            .collect();

        let mut laplacian = vec![0.0; len];
        for (idx, t) in laplacian.iter_mut().enumerate() {
            let mut rem = idx;
            for a in 0..d {
                let m = rem / strides[a];
                rem %= strides[a];
                let k = wavenumbers[a][m];
                *t += k * k;
            }
        }

        let mut planner = FftPlanner::<f64>::new();
        let forward = sizes.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = sizes.iter().map(|&n| planner.plan_fft_inverse(n)).collect();

        Ok(Arc::new(Self {
            sig: GridSignature {
                sizes: sizes.to_vec(),
                lengths: lengths.to_vec(),
            },
            strides,
            len,
            cell_weight,
            wavenumbers,
            laplacian,
            forward,
            inverse,
        }))
    }

    /// Uniform grid of dimension `d` with `size` points and length `length` per axis.
    pub fn cube(d: usize, size: usize, length: f64) -> Result<Arc<Self>> {
        Self::new(&vec![size; d], &vec![length; d])
    }

    pub fn signature(&self) -> &GridSignature {
        &self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sig.sizes
    }

    pub fn lengths(&self) -> &[f64] {
        &self.sig.lengths
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    pub fn volume(&self) -> f64 {
        self.sig.lengths.iter().product()
    }

    /// Laplacian eigenvalue per Fourier mode, in FFT storage order.
    pub fn laplacian_eigenvalues(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Multi-index of a flat row-major offset.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let m = idx / s;
                idx %= s;
                m
            })
            .collect()
    }

    /// Physical coordinates of a flat offset.
    pub fn coordinates(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx)
            .into_iter()
            .zip(self.sig.sizes.iter().zip(&self.sig.lengths))
            .map(|(m, (&n, &l))| m as f64 * l / n as f64)
            .collect()
    }

    /// Flat offset of `idx` translated by `shift` points along each axis.
    pub fn translate(&self, idx: usize, shift: &[isize]) -> usize {
        let mi = self.unravel(idx);
        mi.iter()
            .zip(shift)
            .zip(&self.sig.sizes)
            .zip(&self.strides)
            .map(|(((&m, &s), &n), &st)| {
                let n = n as isize;
                (((m as isize + s) % n + n) % n) as usize * st
            })
            .sum()
    }

    fn transform_axes(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let d = self.dim();
        for a in 0..d {
            let n = self.sig.sizes[a];
            let stride = self.strides[a];
            if stride == 1 {
                plans[a].process(data);
                continue;
            }
            let mut line = vec![Complex64::default(); n];
            let block = n * stride;
            for start in 0..self.len / block {
                let base = start * block;
                for inner in 0..stride {
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + inner + m * stride];
                    }
                    plans[a].process(&mut line);
                    for (m, v) in line.iter().enumerate() {
                        data[base + inner + m * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward DFT of a real field.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len);
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_axes(&mut data, &self.forward);
        data
    }

    /// Inverse DFT (normalized) returning the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform_axes(&mut spectrum, &self.inverse);
        let scale = 1.0 / self.len as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a real even Fourier multiplier `m(t)` given per mode.
    pub fn apply_multiplier(&self, values: &[f64], multiplier: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (c, &m) in spec.iter_mut().zip(multiplier) {
            *c *= m;
        }
        self.inverse_real(spec)
    }
}
