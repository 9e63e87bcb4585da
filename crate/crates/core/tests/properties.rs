use std::f64::consts::TAU;

use proptest::prelude::*;

use paneitz_lab::cli::parse_config;
use paneitz_lab::conditions::{nonexistence_minimizer, tangency_constant, tangent_slope_root};
use paneitz_lab::geometry::{GeometryParams, ScalarField, SpectralGrid};
use paneitz_lab::operator::PaneitzOperator;
use paneitz_lab::solvers::{energy, energy_gradient, find_sub_super, monotone_solve, Mode, ProblemSpec};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn operator_is_symmetric(
        u in prop::collection::vec(-1.0f64..1.0, 16),
        v in prop::collection::vec(-1.0f64..1.0, 16),
        amp in 0.0f64..0.4,
    ) {
        let par = GeometryParams::derive(7, 42.0).unwrap();
        let g = SpectralGrid::cube(1, 16, TAU).unwrap();
        let psi = ScalarField::from_fn(&g, |x| amp * (2.0 * x[0]).sin()).unwrap();
        let op = PaneitzOperator::with_psi(par, &psi).unwrap();
        let u = ScalarField::new(g.clone(), u).unwrap();
        let v = ScalarField::new(g.clone(), v).unwrap();
        let l = op.apply(&u).unwrap().inner(&v);
        let r = u.inner(&op.apply(&v).unwrap());
        prop_assert!((l - r).abs() <= 1e-10 * l.abs().max(r.abs()).max(1.0));
    }

    #[test]
    fn constant_data_gives_the_scalar_root(a in 0.2f64..3.0, b in 0.0f64..3.0, p in 1.5f64..5.0, q in 1.5f64..5.0) {
        let par = GeometryParams::derive(5, 20.0).unwrap();
        let g = SpectralGrid::cube(1, 8, 2.0).unwrap();
        let op = PaneitzOperator::new(par, &g);
        let prob = ProblemSpec::constants(&g, a, b, p, q, Mode::Absorption, &par).unwrap();
        let br = find_sub_super(&op, &prob).unwrap();
        let u = monotone_solve(&op, &prob, &br).unwrap().solution;
        prop_assert!(u.is_constant());
        let x = u.values()[0];
        let h = par.beta * x - a * x.powf(-p) + b * x.powf(q);
        prop_assert!(h.abs() <= 1e-7 * (par.beta * x).max(1.0), "scalar residual {h}");
    }

    #[test]
    fn tangency_slope_is_the_minimum_secant(p in 1.1f64..8.0, q in 1.1f64..8.0) {
        let f = |t: f64| t.powf(-p - 1.0) + t.powf(q - 1.0);
        let k = tangency_constant(p, q);
        let tan = tangent_slope_root(1.0, 1.0, p, q).unwrap();
        prop_assert!((tan.lambda_c - k).abs() <= 1e-12 * k);
        // the slope f(t)/t of the secant through the origin never drops below κ
        for i in 0..200 {
            let t = 10f64.powf(-2.0 + 4.0 * i as f64 / 199.0);
            prop_assert!(f(t) >= k * (1.0 - 1e-12));
        }
    }

    #[test]
    fn nonexistence_minimizer_is_a_minimum(k in 0.1f64..10.0, p in 1.1f64..6.0, q in 1.1f64..6.0) {
        let h = |x: f64| x.powf((q - 1.0) / q) + k.powf((p + q) / q) * x.powf(-(p + 1.0) / q);
        let xs = nonexistence_minimizer(k, p, q);
        for s in [0.9, 0.99, 1.01, 1.1] {
            prop_assert!(h(xs * s) >= h(xs) * (1.0 - 1e-13));
        }
    }

    #[test]
    fn energy_gradient_matches_differences(c in 0.5f64..2.0, w in 0.0f64..0.3, b in 0.0f64..1.0) {
        let par = GeometryParams::derive(5, 20.0).unwrap();
        let g = SpectralGrid::cube(1, 16, TAU).unwrap();
        let op = PaneitzOperator::new(par, &g);
        let prob = ProblemSpec::constants(&g, 1.0, b, 3.0, 2.0, Mode::Source, &par).unwrap();
        let u = ScalarField::from_fn(&g, |x| c + w * x[0].cos()).unwrap();
        let dir = ScalarField::from_fn(&g, |x| (2.0 * x[0]).sin() + 0.5).unwrap();
        let eps = 1e-2;
        let grad = energy_gradient(&op, &prob, eps, &u).unwrap();
        let h = 1e-5;
        let fd = (energy(&op, &prob, eps, &u.add_scaled(h, &dir)).unwrap()
            - energy(&op, &prob, eps, &u.add_scaled(-h, &dir)).unwrap())
            / (2.0 * h);
        let an = grad.inner(&dir);
        prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
    }

    #[test]
    fn config_echo_reparses_to_itself(n in 5i64..12, seed in 0u64..1000, b in 0.0f64..4.0) {
        let text = format!("n = {n}\nR = 20\naction = solve\nseed = {seed}\nb = {b:?}\n");
        let c = parse_config(&text).unwrap();
        let echo: String = c.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let again = parse_config(&echo).unwrap();
        prop_assert_eq!(c.echo(), again.echo());
    }
}
