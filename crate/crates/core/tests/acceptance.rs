//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! with its measured numbers and wall time; the test fails if any criterion
//! fails or overruns its time budget.
//!
//! Run with `cargo test --release -p vanish-core --test acceptance`.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vanish_core::belief::{self, BeliefGrid};
use vanish_core::diffgame::{
    self, DiffGameParts, DiffGameSpec, Dynamics, RelaxedOptions, Side, StateGrid,
};
use vanish_core::game::{random_instance, random_rate_matrix, Evaluation, GameSpec, Partition};
use vanish_core::kernel::{self, PayoffMode};
use vanish_core::linalg::Matrix;
use vanish_core::{matgame, observed, Settings};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, u64);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` on `ln x`.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Dense Gaussian elimination with partial pivoting, kept apart from the
/// library's own solver.
#[allow(clippy::needless_range_loop)]
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = a[r][r + 1..]
            .iter()
            .zip(&x[r + 1..])
            .map(|(p, q)| p * q)
            .sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn tight() -> Settings {
    Settings::default().with_tol(1e-12)
}

// 1. Matrix-game duality.
fn c1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let rows = 2 + k % 7;
        let cols = 2 + (k / 7) % 7;
        let m = Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-10.0..10.0));
        let sol = matgame::solve(&m).map_err(|e| e.to_string())?;
        let (lo, hi) = sol.certificate(&m);
        worst = worst.max(hi - lo).max(lo - sol.value).max(sol.value - hi);
    }
    // Interior saddle of [[a, b], [c, d]] with a, d > b, c.
    let mut closed = 0.0f64;
    for k in 0..50 {
        let a = 1.0 + rng.gen_range(0.0..5.0);
        let d = 1.0 + rng.gen_range(0.0..5.0);
        let b = -rng.gen_range(0.0..5.0);
        let c = -rng.gen_range(0.0..5.0) - 0.01 * k as f64;
        let m = Matrix::from_rows(&[vec![a, b], vec![c, d]]).unwrap();
        let v = (a * d - b * c) / (a + d - b - c);
        closed = closed.max((matgame::value(&m).map_err(|e| e.to_string())? - v).abs());
    }
    check(
        worst <= 1e-9 && closed <= 1e-10,
        format!("max certificate gap {worst:.2e}, 2x2 closed-form error {closed:.2e}"),
    )
}

// 2. Kernel semigroup.
fn c2() -> Outcome {
    let mut worst_semi = 0.0f64;
    let mut worst_row = 0.0f64;
    let times = [0.1, 0.5, 1.0];
    for seed in 0..50u64 {
        let s = 1 + (seed as usize % 10);
        let q = random_rate_matrix(seed, s, 1.0 + (seed % 4) as f64);
        for &a in &times {
            for &b in &times {
                let pa = kernel::transition(&q, a).unwrap();
                let pb = kernel::transition(&q, b).unwrap();
                let pab = kernel::transition(&q, a + b).unwrap();
                let prod = pa.matrix().mul(pb.matrix());
                worst_semi = worst_semi.max(pab.matrix().sub(&prod).norm_inf());
                for p in [&pa, &pb, &pab] {
                    for z in 0..s {
                        worst_row = worst_row.max((p.row(z).iter().sum::<f64>() - 1.0).abs());
                    }
                }
            }
        }
    }
    check(
        worst_semi <= 1e-9 && worst_row <= 1e-10,
        format!("semigroup defect {worst_semi:.2e}, row-sum defect {worst_row:.2e}"),
    )
}

// 3. Uncontrolled chain against a direct resolvent solve.
fn c3() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let s = 1 + (seed as usize % 10);
        let rho = 0.5 + (seed % 3) as f64;
        let spec = random_instance(seed, s, 1, 1, 1.5).restrict_to_first_actions();
        let q = spec.rates(0, 0).matrix();
        let g = spec.payoff_vector(0, 0);
        let a: Vec<Vec<f64>> = (0..s)
            .map(|r| {
                (0..s)
                    .map(|c| if r == c { rho } else { 0.0 } - q[(r, c)])
                    .collect()
            })
            .collect();
        let b: Vec<f64> = g.iter().map(|x| rho * x).collect();
        let oracle = gauss(a, b);
        let w = observed::solve_limit_equation(&spec, rho, None, &tight())
            .map_err(|e| e.to_string())?;
        worst = worst.max(sup_dist(&w.w, &oracle));
    }
    check(worst <= 1e-8, format!("max error vs resolvent {worst:.2e}"))
}

// 4. Uniqueness of the limit equation.
fn c4() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let s = 1 + seed as usize % 5;
        let a = 1 + seed as usize % 3;
        let b = 1 + (seed as usize / 3) % 3;
        let spec = random_instance(100 + seed, s, a, b, 2.0);
        let d0 = observed::ShapleyReduction::default_delta(&spec, 1.0);
        let w1 = observed::solve_limit_equation(&spec, 1.0, Some(d0), &tight())
            .map_err(|e| e.to_string())?;
        let w2 = observed::solve_limit_equation(&spec, 1.0, Some(0.37 * d0), &tight())
            .map_err(|e| e.to_string())?;
        worst = worst.max(sup_dist(&w1.w, &w2.w));
    }
    check(
        worst <= 1e-7,
        format!("max difference between reductions {worst:.2e}"),
    )
}

const SEEDED_GAME: u64 = 0;

fn seeded_three_state() -> GameSpec {
    random_instance(SEEDED_GAME, 3, 2, 2, 1.0)
}

// 5. Vanishing-duration convergence.
fn c5() -> Outcome {
    let spec = seeded_three_state();
    let s = Settings::default();
    let w =
        observed::solve_limit_equation(&spec, 1.0, None, &tight()).map_err(|e| e.to_string())?;
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let mut errs = Vec::new();
    for &d in &deltas {
        let nu =
            observed::solve_stationary_uniform(&spec, 1.0, d, &s).map_err(|e| e.to_string())?;
        errs.push(sup_dist(&nu.w, &w.w));
    }
    let monotone = errs.windows(2).all(|p| p[1] < p[0]);
    let slope = loglog_slope(&deltas, &errs);
    check(
        monotone && (0.8..=1.2).contains(&slope),
        format!("errors {}, slope {slope:.3}", sci(&errs)),
    )
}

// 6. Stationary factorization.
fn c6() -> Outcome {
    let s = tight();
    let delta = 0.1;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let e = Evaluation::exponential(1.0)
            .unwrap()
            .with_tail_tolerance(1e-9)
            .unwrap();
        let spec =
            random_instance(seed, 2 + seed as usize % 3, 2, 2, 1.0).with_evaluation(e.clone());
        let part = Partition::covering(delta, &e).map_err(|e| e.to_string())?;
        let v = observed::solve_general(&spec, &part, &s).map_err(|e| e.to_string())?;
        let nu =
            observed::solve_stationary_uniform(&spec, 1.0, delta, &s).map_err(|e| e.to_string())?;
        for (n, &t) in part.times().iter().enumerate() {
            let scaled: Vec<f64> = nu.w.iter().map(|x| (-t).exp() * x).collect();
            worst = worst.max(sup_dist(v.at_node(n), &scaled));
        }
    }
    check(
        worst <= 1e-7,
        format!("max |v(t_n) - e^(-t_n) nu| {worst:.2e}"),
    )
}

// 7. Guarantee check.
fn c7() -> Outcome {
    let spec = seeded_three_state();
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let mut gaps = Vec::new();
    for &d in &deltas {
        let g = observed::guarantee_check(&spec, 1.0, d, &tight()).map_err(|e| e.to_string())?;
        gaps.push(g.gap);
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|p| p[1] / p[0]).collect();
    let per_delta: Vec<f64> = gaps.iter().zip(&deltas).map(|(g, d)| g / d).collect();
    let bounded = per_delta.iter().all(|c| *c <= 1.5 * per_delta[0]);
    check(
        bounded && ratios.iter().all(|r| (0.3..=0.7).contains(r)),
        format!(
            "gaps {}, ratios {ratios:.3?}, gap/delta {per_delta:.3?}",
            sci(&gaps)
        ),
    )
}

// 8. Belief-game oracles.
fn c8() -> Outcome {
    let s = tight();
    let delta = 0.1;
    // (a) one state: the belief game is the observed game.
    let mut a_err = 0.0f64;
    for seed in 0..5u64 {
        let spec = random_instance(seed, 1, 3, 2, 1.0);
        let grid = BeliefGrid::new(1, 4).map_err(|e| e.to_string())?;
        let b = belief::solve_belief_stationary(&spec, 1.0, delta, &grid, &s)
            .map_err(|e| e.to_string())?;
        let o =
            observed::solve_stationary_uniform(&spec, 1.0, delta, &s).map_err(|e| e.to_string())?;
        a_err = a_err.max(
            b.values
                .iter()
                .map(|v| (v - o.w[0]).abs())
                .fold(0.0, f64::max),
        );
    }
    // (b) no control: the value is linear in the belief.
    let mut b_err = 0.0f64;
    for seed in 0..5u64 {
        let spec = random_instance(seed, 2, 1, 1, 1.0);
        let grid = BeliefGrid::new(2, 32).map_err(|e| e.to_string())?;
        let b = belief::solve_belief_stationary(&spec, 1.0, delta, &grid, &s)
            .map_err(|e| e.to_string())?;
        let w = observed::solve_limit_equation(&spec, 1.0, None, &s).map_err(|e| e.to_string())?;
        for (k, p) in grid.points().iter().enumerate() {
            let lin: f64 = p.iter().zip(&w.w).map(|(x, y)| x * y).sum();
            b_err = b_err.max((b.values[k] - lin).abs());
        }
    }
    // (c) payoff independent of the state: the value is constant.
    let mut c_err = 0.0f64;
    for seed in 0..5u64 {
        let base = random_instance(seed, 3, 2, 2, 1.0);
        let mut parts = base.to_parts();
        for z in 1..parts.payoff.len() {
            parts.payoff[z] = parts.payoff[0].clone();
        }
        let spec = GameSpec::new(parts).map_err(|e| e.to_string())?;
        let grid = BeliefGrid::new(3, 8).map_err(|e| e.to_string())?;
        let b = belief::solve_belief_stationary(&spec, 1.0, delta, &grid, &s)
            .map_err(|e| e.to_string())?;
        let oracle = matgame::value(&spec.payoff_matrix(0)).map_err(|e| e.to_string())?;
        c_err = c_err.max(
            b.values
                .iter()
                .map(|v| (v - oracle).abs())
                .fold(0.0, f64::max),
        );
    }
    check(
        a_err <= 1e-8 && b_err <= 1e-7 && c_err <= 1e-7,
        format!("(a) {a_err:.2e}, (b) {b_err:.2e}, (c) {c_err:.2e}"),
    )
}

// 9. Belief-game refinement ladder.
fn c9() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..4u64 {
        let spec = random_instance(seed, 2, 2, 2, 1.0);
        let r = belief::refine_and_compare(
            &spec,
            1.0,
            &[0.1, 0.05, 0.025],
            &[16, 32, 64],
            &Settings::default(),
        )
        .map_err(|e| e.to_string())?;
        ok &= r.gaps_decrease();
        lines.push(format!("seed {seed} {}", sci(&r.cauchy_gaps)));
    }
    check(ok, lines.join("; "))
}

fn matching_pennies() -> DiffGameSpec {
    DiffGameSpec::new(DiffGameParts {
        bounds: vec![(-1.0, 1.0)],
        dynamics: Dynamics::Zero,
        payoff: vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
        payoff_gradient: None,
        lipschitz_f: None,
        lipschitz_g: None,
        evaluation: tent(),
    })
    .unwrap()
}

fn tent() -> Evaluation {
    Evaluation::tabulated(vec![0.0, 1.0], vec![2.0, 0.0]).unwrap()
}

fn drift_game() -> DiffGameSpec {
    DiffGameSpec::new(DiffGameParts {
        bounds: vec![(-30.0, 30.0)],
        dynamics: Dynamics::SeparableControl {
            matrix: vec![vec![0.0]],
            row_drift: vec![vec![-1.0], vec![0.0], vec![1.0]],
            col_drift: vec![vec![1.0], vec![0.0], vec![-1.0]],
        },
        payoff: vec![vec![0.0; 3]; 3],
        payoff_gradient: Some(vec![vec![vec![1.0]; 3]; 3]),
        lipschitz_f: None,
        lipschitz_g: None,
        evaluation: Evaluation::exponential(1.0).unwrap(),
    })
    .unwrap()
}

/// Largest violation of `lower <= middle <= upper`.
fn sandwich(lower: &[f64], middle: &[f64], upper: &[f64]) -> f64 {
    lower
        .iter()
        .zip(middle)
        .zip(upper)
        .map(|((l, m), u)| (l - m).max(m - u))
        .fold(f64::NEG_INFINITY, f64::max)
}

// 10. Differential games.
fn c10() -> Outcome {
    let s = Settings::default();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut sandwich_worst = f64::NEG_INFINITY;
    let mut isaacs_worst = 0.0f64;

    // (b) matching pennies with f = 0.
    let mp = matching_pennies();
    let part = Partition::uniform(1.0, 10).unwrap();
    let grid = StateGrid::for_spec(&mp, 5).unwrap();
    let r = diffgame::solve_random(&mp, &part, &grid, &s).map_err(|e| e.to_string())?;
    let lo =
        diffgame::solve_pure(&mp, &part, &grid, Side::MaxMin, &s).map_err(|e| e.to_string())?;
    let hi =
        diffgame::solve_pure(&mp, &part, &grid, Side::MinMax, &s).map_err(|e| e.to_string())?;
    let zero_err = r
        .table
        .initial()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let mass = mp.evaluation().mass(0.0, 1.0);
    let gap_err = hi
        .table
        .initial()
        .iter()
        .zip(lo.table.initial())
        .map(|(h, l)| (h - l - 2.0 * mass).abs())
        .fold(0.0, f64::max);
    sandwich_worst = sandwich_worst.max(sandwich(
        lo.table.initial(),
        r.table.initial(),
        hi.table.initial(),
    ));
    ok &= zero_err <= 1e-8 && gap_err <= 1e-8;
    notes.push(format!(
        "(b) value {zero_err:.1e}, pure gap - 2 mass {gap_err:.1e}"
    ));

    // (d) f = i - j, g = z: the value is z.
    let dg = drift_game();
    let mut d_err = 0.0;
    let mut d_res = 0.0;
    for (d, n) in [(0.1, 241), (0.05, 481)] {
        let part = Partition::covering(d, dg.evaluation()).unwrap();
        let grid = StateGrid::for_spec(&dg, n).unwrap();
        let v = diffgame::solve_random(&dg, &part, &grid, &s).map_err(|e| e.to_string())?;
        d_err = [-1.0, -0.5, 0.0, 0.5, 1.0]
            .iter()
            .map(|&z| (v.value_at(&grid, &[z]) - z).abs())
            .fold(0.0, f64::max);
        d_res = [-1.0, 0.0, 1.0]
            .iter()
            .map(|&z| diffgame::hji_residual(&v.table, &grid, &dg, 1.0, &[z]))
            .collect::<vanish_core::Result<Vec<f64>>>()
            .map_err(|e| e.to_string())?
            .into_iter()
            .fold(0.0, f64::max);
        if d == 0.1 {
            let lo = diffgame::solve_pure(&dg, &part, &grid, Side::MaxMin, &s)
                .map_err(|e| e.to_string())?;
            let hi = diffgame::solve_pure(&dg, &part, &grid, Side::MinMax, &s)
                .map_err(|e| e.to_string())?;
            sandwich_worst = sandwich_worst.max(sandwich(
                lo.table.initial(),
                v.table.initial(),
                hi.table.initial(),
            ));
        }
    }
    ok &= d_err <= 1e-2 && d_res <= 1e-3;
    notes.push(format!("(d) |v - z| {d_err:.1e}, HJI residual {d_res:.1e}"));

    // (e) relaxed against randomized on a seeded linear game.
    let lg = diffgame::random_linear_game(0, 2, 2, 2.0, tent());
    let grid = StateGrid::for_spec(&lg, 81).unwrap();
    let mut diffs = Vec::new();
    for d in [0.2, 0.1, 0.05] {
        let part = Partition::uniform(1.0, (1.0f64 / d).round() as usize).unwrap();
        let r = diffgame::solve_random(&lg, &part, &grid, &s).map_err(|e| e.to_string())?;
        let lo =
            diffgame::solve_pure(&lg, &part, &grid, Side::MaxMin, &s).map_err(|e| e.to_string())?;
        let hi =
            diffgame::solve_pure(&lg, &part, &grid, Side::MinMax, &s).map_err(|e| e.to_string())?;
        sandwich_worst = sandwich_worst.max(sandwich(
            lo.table.initial(),
            r.table.initial(),
            hi.table.initial(),
        ));
        let rel = diffgame::solve_relaxed(&lg, &part, &grid, &RelaxedOptions::default(), &s)
            .map_err(|e| e.to_string())?;
        let mut diff = 0.0f64;
        for k in 0..grid.len() {
            if grid.node(k)[0].abs() <= 1.0 + 1e-9 {
                let rv = r.table.initial()[k];
                diff = diff
                    .max((rel.lower.initial()[k] - rv).abs())
                    .max((rel.upper.initial()[k] - rv).abs());
            }
        }
        diffs.push(diff);
    }
    let ratios: Vec<f64> = diffs.windows(2).map(|p| p[1] / p[0]).collect();
    ok &= ratios.iter().all(|r| *r < 0.7);
    notes.push(format!(
        "(e) |relaxed - random| {}, ratios {ratios:.2?}",
        sci(&diffs)
    ));

    // (a) and (c) over every problem above.
    ok &= sandwich_worst <= 1e-9;
    notes.push(format!("(a) worst sandwich violation {sandwich_worst:.1e}"));
    for spec in [&mp, &dg, &lg] {
        let samples = diffgame::isaacs_samples(spec, 100, 2.0, 11);
        let rep = diffgame::isaacs_check(spec, &samples).map_err(|e| e.to_string())?;
        isaacs_worst = isaacs_worst.max(rep.max_mixed_gap);
    }
    ok &= isaacs_worst <= 1e-9;
    notes.push(format!("(c) mixed Isaacs gap {isaacs_worst:.1e}"));
    check(ok, notes.join("; "))
}

// 11. Lifted-game cross-check.
fn c11() -> Outcome {
    let spec = random_instance(0, 2, 2, 2, 1.0);
    let s = Settings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let beliefs: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let a: f64 = rng.gen();
            vec![a, 1.0 - a]
        })
        .collect();
    let mut worst = Vec::new();
    for (d, m) in [(0.1, 32), (0.05, 64)] {
        let part = Partition::covering(d, spec.evaluation()).unwrap();
        let cmp = observed::LiftComparison::new(&spec, &part, m, &s).map_err(|e| e.to_string())?;
        let mut g = 0.0f64;
        for z in &beliefs {
            g = g.max(cmp.check(z).map_err(|e| e.to_string())?.gap);
        }
        worst.push(g);
    }
    check(
        worst[1] <= 5e-2 && worst[1] < worst[0],
        format!(
            "max gap at (0.1, 1/32) {:.3e}, at (0.05, 1/64) {:.3e}",
            worst[0], worst[1]
        ),
    )
}

// 12. Flow against frozen payoffs.
fn c12() -> Outcome {
    let s = Settings::default();
    let frozen = s.with_payoff_mode(PayoffMode::Frozen);
    let deltas = [0.2, 0.1, 0.05];
    let mut ok = true;
    let mut worst_growth = 0.0f64;
    let mut worst_c = 0.0f64;
    for seed in 0..10u64 {
        let spec = random_instance(seed, 3, 2, 2, 1.0);
        let mut cs = Vec::new();
        for &d in &deltas {
            let part = Partition::covering(d, spec.evaluation()).unwrap();
            let a = observed::solve_general(&spec, &part, &s).map_err(|e| e.to_string())?;
            let b = observed::solve_general(&spec, &part, &frozen).map_err(|e| e.to_string())?;
            cs.push(a.sup_diff(&b).map_err(|e| e.to_string())? / d);
        }
        for p in cs.windows(2) {
            worst_growth = worst_growth.max(p[1] / p[0]);
        }
        worst_c = worst_c.max(cs[0]);
        ok &= cs.windows(2).all(|p| p[1] <= 1.25 * p[0]);
    }
    check(
        ok,
        format!("C = diff/delta at most {worst_c:.3}, largest growth factor {worst_growth:.3}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        ("1 matrix-game duality", c1, 5),
        ("2 kernel semigroup", c2, 5),
        ("3 uncontrolled oracle", c3, 5),
        ("4 limit-equation uniqueness", c4, 30),
        ("5 vanishing-duration convergence", c5, 60),
        ("6 stationary factorization", c6, 60),
        ("7 guarantee check", c7, 60),
        ("8 belief-game oracles", c8, 120),
        ("9 belief-game refinement", c9, 300),
        ("10 differential games", c10, 300),
        ("11 lifted-game cross-check", c11, 300),
        ("12 flow vs frozen payoff", c12, 60),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let (ok, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let status = if ok { "PASS" } else { "FAIL" };
        let time_note = if in_time {
            String::new()
        } else {
            format!(" over budget {budget}s")
        };
        writeln!(
            out,
            "{status} criterion {name}: {detail} [{:.2}s{time_note}]",
            took.as_secs_f64()
        )
        .unwrap();
        if !ok {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
