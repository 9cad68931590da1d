use proptest::prelude::*;
use vanish_core::belief::{self, BeliefGrid};
use vanish_core::diffgame::StateGrid;
use vanish_core::game::{random_instance, random_rate_matrix, GameSpec};
use vanish_core::harness::fit_slope;
use vanish_core::kernel::{self, PayoffMode};
use vanish_core::linalg::Matrix;
use vanish_core::observed::{self, DiscretizedOperator};
use vanish_core::par::Execution;
use vanish_core::{matgame, Settings};

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c)
            .prop_map(move |v| Matrix::from_fn(r, c, |i, j| v[i * c + j]))
    })
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_instances_validate(seed in any::<u64>(), s in 1usize..6, a in 1usize..4, b in 1usize..4, scale in 0.0f64..5.0) {
        let spec = random_instance(seed, s, a, b, scale);
        prop_assert!(GameSpec::new(spec.to_parts()).is_ok());
    }

    #[test]
    fn matgame_certificate_brackets_value(m in matrix()) {
        let sol = matgame::solve(&m).unwrap();
        let (lo, hi) = sol.certificate(&m);
        prop_assert!(hi - lo <= 1e-9, "gap {}", hi - lo);
        prop_assert!(lo - 1e-9 <= sol.value && sol.value <= hi + 1e-9);
        for p in [&sol.x, &sol.y] {
            prop_assert!(p.iter().all(|x| *x >= -1e-12));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn matgame_between_pure_bounds(m in matrix()) {
        let v = matgame::value(&m).unwrap();
        let ((maxmin, _), (minmax, _)) = matgame::pure_bounds(&m);
        prop_assert!(maxmin - 1e-9 <= v && v <= minmax + 1e-9);
    }

    #[test]
    fn matgame_affine_equivariant(m in matrix(), a in 0.1f64..5.0, c in -5.0f64..5.0) {
        let v = matgame::value(&m).unwrap();
        let shifted = Matrix::from_fn(m.rows(), m.cols(), |i, j| a * m[(i, j)] + c);
        prop_assert!((matgame::value(&shifted).unwrap() - (a * v + c)).abs() <= 1e-8);
    }

    #[test]
    fn matgame_monotone(m in matrix(), bumps in prop::collection::vec(0.0f64..3.0, 64)) {
        let bigger = Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] + bumps[(i * 8 + j) % 64]);
        prop_assert!(matgame::value(&m).unwrap() <= matgame::value(&bigger).unwrap() + 1e-9);
    }

    #[test]
    fn kernel_is_stochastic_semigroup(seed in any::<u64>(), s in 1usize..8, a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let q = random_rate_matrix(seed, s, 2.0);
        let pa = kernel::transition(&q, a).unwrap();
        let pb = kernel::transition(&q, b).unwrap();
        let pab = kernel::transition(&q, a + b).unwrap();
        prop_assert!(pab.matrix().sub(&pa.matrix().mul(pb.matrix())).norm_inf() <= 1e-9);
        for z in 0..s {
            prop_assert!((pa.row(z).iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            prop_assert!(pa.row(z).iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn belief_step_stays_in_simplex(seed in any::<u64>(), w in prop::collection::vec(0.01f64..1.0, 3), d in 0.01f64..1.0) {
        let spec = random_instance(seed, 3, 2, 2, 1.5);
        let total: f64 = w.iter().sum();
        let zeta: Vec<f64> = w.iter().map(|x| x / total).collect();
        let next = belief::belief_step(&spec, &zeta, 1, 0, d).unwrap();
        prop_assert!(next.iter().all(|p| *p >= 0.0));
        prop_assert!((next.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stage_operator_contracts(seed in any::<u64>(), d in 0.02f64..0.5,
                                u in prop::collection::vec(-5.0f64..5.0, 3),
                                v in prop::collection::vec(-5.0f64..5.0, 3)) {
        let spec = random_instance(seed, 3, 2, 2, 1.0);
        let op = DiscretizedOperator::new(&spec, 1.0, d, PayoffMode::Flow).unwrap();
        let tu = op.apply(&u, Execution::Sequential).unwrap();
        let tv = op.apply(&v, Execution::Sequential).unwrap();
        prop_assert!(sup_dist(&tu, &tv) <= op.beta() * sup_dist(&u, &v) + 1e-12);
    }

    #[test]
    fn values_shift_with_payoffs(seed in any::<u64>(), c in -3.0f64..3.0) {
        let spec = random_instance(seed, 3, 2, 2, 1.0);
        let s = Settings::default().with_tol(1e-11);
        let w = observed::solve_limit_equation(&spec, 1.0, None, &s).unwrap();
        let ws = observed::solve_limit_equation(&spec.with_payoff_shift(c), 1.0, None, &s).unwrap();
        let expect: Vec<f64> = w.w.iter().map(|x| x + c).collect();
        prop_assert!(sup_dist(&ws.w, &expect) <= 1e-8);
        let nu = observed::solve_stationary_uniform(&spec, 1.0, 0.1, &s).unwrap();
        let nus = observed::solve_stationary_uniform(&spec.with_payoff_shift(c), 1.0, 0.1, &s).unwrap();
        let expect: Vec<f64> = nu.w.iter().map(|x| x + c).collect();
        prop_assert!(sup_dist(&nus.w, &expect) <= 1e-8);
    }

    #[test]
    fn belief_interpolation_exact_on_affine(states in 1usize..=4, m in 1usize..10,
                                            coef in prop::collection::vec(-3.0f64..3.0, 4),
                                            w in prop::collection::vec(0.0f64..1.0, 4)) {
        let grid = BeliefGrid::new(states, m).unwrap();
        let f = |p: &[f64]| p.iter().zip(&coef).map(|(x, c)| x * c).sum::<f64>();
        let values: Vec<f64> = grid.points().iter().map(|p| f(p)).collect();
        let total: f64 = w[..states].iter().sum::<f64>() + 1e-9;
        let zeta: Vec<f64> = w[..states].iter().map(|x| (x + 1e-9 / states as f64) / total).collect();
        prop_assert!((grid.interpolate(&values, &zeta) - f(&zeta)).abs() <= 1e-10);
    }

    #[test]
    fn state_interpolation_exact_on_affine(n0 in 2usize..12, n1 in 2usize..12,
                                           a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
                                           x in -1.0f64..1.0, y in 0.0f64..3.0) {
        let grid = StateGrid::new(vec![-1.0, 0.0], vec![1.0, 3.0], vec![n0, n1]).unwrap();
        let f = |z: &[f64]| a + b * z[0] + c * z[1];
        let values: Vec<f64> = grid.nodes().iter().map(|z| f(z)).collect();
        prop_assert!((grid.interpolate(&values, &[x, y]) - f(&[x, y])).abs() <= 1e-12);
    }

    #[test]
    fn slope_recovers_power_laws(p in 0.5f64..3.0, k in 0.01f64..10.0, n in 3usize..8) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let d = 0.4 / 2f64.powi(i as i32);
            (d, k * d.powf(p))
        }).collect();
        prop_assert!((fit_slope(&pts).unwrap() - p).abs() <= 1e-9);
    }
}
