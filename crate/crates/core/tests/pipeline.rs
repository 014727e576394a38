use fracvar_core::fracops::{FracOp, OpKind};
use fracvar_core::lagrangian::{action, builtin_wave, MaterialParams};
use fracvar_core::noether::{classical_current_divergence, noether_sum, Generator};
use fracvar_core::solver::{manufacture_source, solve, LinearProblem, ProblemKind};
use fracvar_core::variational::{el_residual, gradient_check};
use fracvar_core::{Field, FracOrder, Grid};
use proptest::prelude::*;

fn cube(n: usize) -> Grid {
    Grid::new(&[0.0; 3], &[1.0; 3], &[n; 3]).unwrap()
}

fn cosine_boundary(grid: &Grid) -> Field {
    Field::sample_scalar(grid, |x| 1.0 + 0.5 * x.iter().map(|t| (std::f64::consts::PI * t).cos()).sum::<f64>()).unwrap()
}

#[test]
fn wave_solve_feeds_noether_identity() {
    let g = cube(7);
    let order = FracOrder::uniform(0.75, 3).unwrap();
    let params = MaterialParams::new(1.0, 1.0).unwrap();
    let p = LinearProblem::wave(ProblemKind::WaveFracSpace, order.clone(), params, cosine_boundary(&g)).unwrap();
    let out = solve(&p, 1e-12, 100).unwrap();
    assert!(out.converged);
    assert!(out.residual_norm < 1e-9, "{}", out.residual_norm);

    let density = builtin_wave(params, true, 3).unwrap();
    let xi = Generator::power_kernel(&g, &order).unwrap();
    let report = noether_sum(&density, &order, &out.u, &xi).unwrap();
    assert!(report.identity_holds());
    assert!(report.conservation_norm <= report.corollary_bound() * (1.0 + 1e-10) + report.identity_defect);
}

#[test]
fn classical_pipeline_current_matches_sum() {
    let g = cube(7);
    let order = FracOrder::uniform(1.0, 3).unwrap();
    let params = MaterialParams::new(1.0, 1.0).unwrap();
    let p = LinearProblem::wave(ProblemKind::WaveFracSpace, order.clone(), params, cosine_boundary(&g)).unwrap();
    let out = solve(&p, 1e-12, 100).unwrap();
    let density = builtin_wave(params, true, 3).unwrap();
    let xi = Generator::power_kernel(&g, &order).unwrap();
    assert!(xi.xi.values().iter().all(|&v| v == 1.0));
    let report = noether_sum(&density, &order, &out.u, &xi).unwrap();
    let div = classical_current_divergence(&density, &order, &out.u, &xi).unwrap();
    for n in g.interior_nodes() {
        let (a, b) = (div.values()[n], report.noether_sum.values()[n]);
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())));
    }
}

#[test]
fn solved_field_is_stationary() {
    let g = Grid::new(&[0.0, 0.0], &[1.0, 2.0], &[11, 13]).unwrap();
    let order = FracOrder::new(vec![0.4, 0.9]).unwrap();
    let target = Field::sample_scalar(&g, |x| x[0] * x[0] - x[1]).unwrap();
    let f = manufacture_source(ProblemKind::Poisson, &order, None, &target).unwrap();
    let p = LinearProblem::poisson(order.clone(), f, target.clone()).unwrap();
    let out = solve(&p, 1e-13, 1000).unwrap();
    let density = p.density().unwrap();
    let r = el_residual(density.as_ref(), &order, &out.u).unwrap();
    assert_eq!(r.interior_norm, out.residual_norm);

    // directional derivatives vanish at the extremal
    let h = Field::sample_scalar(&g, |x| (3.0 * x[0]).sin() * x[1] * (2.0 - x[1]) * x[0] * (1.0 - x[0])).unwrap();
    let report = gradient_check(density.as_ref(), &order, &out.u, &h, 1e-4).unwrap();
    let j = action(density.as_ref(), &order, &out.u).unwrap();
    assert!(report.pairing.abs() < 1e-9 * (1.0 + j.abs()), "{report:?}");
    assert!(report.quotient.abs() < 1e-8 * (1.0 + j.abs()), "{report:?}");
}

fn pinned(values: Vec<f64>) -> Vec<f64> {
    let n = values.len();
    values.into_iter().enumerate().map(|(i, v)| if i == 0 || i + 1 == n { 0.0 } else { v }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn left_and_right_are_transposes(
        alpha in 0.05f64..=1.0,
        f in prop::collection::vec(-1.0f64..1.0, 40),
        g in prop::collection::vec(-1.0f64..1.0, 40),
    ) {
        let (f, g) = (pinned(f), pinned(g));
        let grid = Grid::new(&[0.0], &[1.0], &[40]).unwrap();
        let left = FracOp::for_grid(OpKind::LeftDerivative, alpha, 0, &grid).unwrap();
        let lf = left.apply_values(&grid, &f).unwrap();
        let rg = left.adjoint().apply_values(&grid, &g).unwrap();
        let a: f64 = g.iter().zip(&lf).map(|(x, y)| x * y).sum();
        let b: f64 = f.iter().zip(&rg).map(|(x, y)| x * y).sum();
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + 1.0));
    }

    #[test]
    fn operators_are_linear(
        alpha in 0.05f64..=1.0,
        c in -3.0f64..3.0,
        f in prop::collection::vec(-1.0f64..1.0, 25),
        g in prop::collection::vec(-1.0f64..1.0, 25),
    ) {
        let grid = Grid::new(&[0.0], &[2.0], &[25]).unwrap();
        for kind in [OpKind::LeftDerivative, OpKind::RightDerivative, OpKind::LeftIntegral, OpKind::RightIntegral] {
            let op = FracOp::for_grid(kind, alpha, 0, &grid).unwrap();
            let comb: Vec<f64> = f.iter().zip(&g).map(|(x, y)| c * x + y).collect();
            let lhs = op.apply_values(&grid, &comb).unwrap();
            let (of, og) = (op.apply_values(&grid, &f).unwrap(), op.apply_values(&grid, &g).unwrap());
            for i in 0..25 {
                let rhs = c * of[i] + og[i];
                prop_assert!((lhs[i] - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
            }
        }
    }

    #[test]
    fn manufactured_poisson_round_trips(alpha in 0.2f64..=1.0, seed in 0u64..1000) {
        let grid = Grid::new(&[0.0, 0.0], &[1.0, 1.0], &[9, 9]).unwrap();
        let order = FracOrder::uniform(alpha, 2).unwrap();
        let s = seed as f64;
        let target = Field::sample_scalar(&grid, |x| (s + 3.0 * x[0]).sin() * (x[1] - s * 1e-3).cos()).unwrap();
        let f = manufacture_source(ProblemKind::Poisson, &order, None, &target).unwrap();
        let out = solve(&LinearProblem::poisson(order, f, target.clone()).unwrap(), 1e-13, 500).unwrap();
        let err = out.u.values().iter().zip(target.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9);
    }
}
