use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paneitz_lab::geometry::{GeometryParams, ScalarField, SpectralGrid};
use paneitz_lab::operator::PaneitzOperator;
use paneitz_lab::spectral_analysis::{
    green_column, principal_eigenpair, rayleigh_minimum, sobolev_estimate, SobolevConfig,
};

/// Spectral Laplacian on a periodic 1-D lattice as a dense circulant.
fn dense_laplacian(n: usize, l: f64) -> DMatrix<f64> {
    let modes: Vec<f64> = (0..n as i64)
        .map(|k| if k <= n as i64 / 2 { k } else { k - n as i64 } as f64)
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let d = i as f64 - j as f64;
        modes
            .iter()
            .map(|&m| (TAU * m / l).powi(2) * (TAU * m * d / n as f64).cos())
            .sum::<f64>()
            / n as f64
    })
}

fn dense_operator(par: &GeometryParams, n: usize, l: f64, v: &[f64]) -> DMatrix<f64> {
    let k = dense_laplacian(n, l);
    let w = DVector::from_iterator(n, v.iter().map(|x| par.b_n * (par.q_curvature - x)));
    &k * &k + &k * par.alpha + DMatrix::from_diagonal(&w)
}

fn setup(n: usize) -> (GeometryParams, PaneitzOperator, DMatrix<f64>, f64) {
    let par = GeometryParams::derive(5, 20.0).unwrap();
    let l = TAU;
    let g = SpectralGrid::cube(1, n, l).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.5 * (1.0 + x[0].cos())).unwrap();
    let dense = dense_operator(&par, n, l, v.values());
    let op = PaneitzOperator::with_potential(par, v).unwrap();
    (par, op, dense, l / n as f64)
}

#[test]
fn apply_matches_the_dense_matrix() {
    let (_, op, dense, _) = setup(32);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let got = op.apply(&ScalarField::new(op.grid().clone(), u.clone()).unwrap()).unwrap();
    let want = &dense * DVector::from_vec(u);
    let scale = want.amax();
    for (a, b) in got.values().iter().zip(want.iter()) {
        assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
    }
}

#[test]
fn green_columns_invert_the_dense_matrix() {
    let (_, op, dense, h) = setup(16);
    let inv = dense.try_inverse().unwrap();
    for idx in [0, 5, 11] {
        let col = green_column(&op, idx).unwrap();
        for (i, v) in col.values().iter().enumerate() {
            let want = inv[(i, idx)] / h;
            assert!((v - want).abs() <= 1e-9 * want.abs().max(1e-3), "{i}: {v} vs {want}");
        }
    }
}

#[test]
fn principal_eigenpair_on_a_two_dimensional_grid() {
    let par = GeometryParams::derive(6, 30.0).unwrap();
    let g = SpectralGrid::new(&[8, 8], &[TAU, 3.0]).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.3 * (1.0 + x[0].sin() * (TAU * x[1] / 3.0).cos())).unwrap();
    let op = PaneitzOperator::with_potential(par, v).unwrap();
    let n = g.len();
    let dense = DMatrix::from_fn(n, n, |i, j| op.apply(&ScalarField::delta(&g, j)).unwrap().values()[i]);
    let sym = (&dense - dense.transpose()).amax();
    assert!(sym <= 1e-9 * dense.amax());
    let lmin = SymmetricEigen::new(dense).eigenvalues.min();
    let eig = principal_eigenpair(&op).unwrap();
    assert!((eig.lambda1 - lmin).abs() <= 1e-8 * lmin.abs().max(1.0));
    assert!(eig.phi1.min() > 0.0);
}

/// `⟨u, P u⟩ / ‖u‖²_{L^r}` from the dense matrix and plain sums.
fn dense_quotient(dense: &DMatrix<f64>, u: &[f64], h: f64, r: f64) -> f64 {
    let x = DVector::from_column_slice(u);
    let quad = h * x.dot(&(dense * &x));
    let lr = (h * u.iter().map(|v| v.abs().powf(r)).sum::<f64>()).powf(1.0 / r);
    quad / (lr * lr)
}

/// Random-search upper bound on the Sobolev quotient: greedy single-point
/// perturbations with a shrinking step from several starts.
fn random_search(dense: &DMatrix<f64>, n: usize, h: f64, r: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for start in 0..6 {
        let mut u: Vec<f64> = if start == 0 {
            vec![1.0; n]
        } else {
            (0..n).map(|_| rng.gen_range(0.2..1.0)).collect()
        };
        let mut cur = dense_quotient(dense, &u, h, r);
        let mut step = 0.3;
        for it in 0..20_000 {
            let i = rng.gen_range(0..n);
            let delta = rng.gen_range(-step..step);
            u[i] += delta;
            let cand = dense_quotient(dense, &u, h, r);
            if cand < cur {
                cur = cand;
            } else {
                u[i] -= delta;
            }
            if it % 2000 == 1999 {
                step *= 0.5;
            }
        }
        best = best.min(cur);
    }
    best
}

#[test]
fn sobolev_estimate_agrees_with_random_search() {
    let (par, op, dense, h) = setup(16);
    let est = sobolev_estimate(&op, &SobolevConfig::default()).unwrap().value;
    let oracle = random_search(&dense, 16, h, par.two_sharp, 3);
    // descent should never do worse than a blind search, and not much better
    assert!(est <= oracle * (1.0 + 1e-9), "{est} vs {oracle}");
    assert!(est >= oracle * 0.98, "{est} vs {oracle}");
}

#[test]
fn rayleigh_minimum_is_the_smallest_eigenvalue() {
    let (_, op, dense, _) = setup(16);
    let lmin = SymmetricEigen::new(dense).eigenvalues.min();
    let m = rayleigh_minimum(&op, &SobolevConfig::default()).unwrap().value;
    assert!((m - lmin).abs() <= 1e-6 * lmin, "{m} vs {lmin}");
}
