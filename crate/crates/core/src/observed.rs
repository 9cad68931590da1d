//! Games in which both players observe the state of the chain.
//!
//! - [`solve_general`]: backward induction along any partition and evaluation.
//! - [`solve_stationary_uniform`]: exponential evaluation on a uniform
//!   partition, where the value factors as `e^{-ρt} ν_{δ,ρ}(z)`.
//! - [`solve_limit_equation`]: the vanishing-duration limit
//!   `ρ W(z) = val[ρ g(z,·,·) + q(·,·)[z,·] ∘ W]`, computed as the value of a
//!   discrete discounted game with transitions `I + δq/(1 − δρ)`.
//! - [`guarantee_check`]: what the stationary strategy optimal in the limit
//!   equation secures in the discretized game.

use std::collections::HashMap;

use crate::diffgame::{self, LiftedGame, StateGrid};
use crate::error::{Error, Result};
use crate::game::{Evaluation, GameSpec, Partition};
use crate::kernel::{PayoffMode, StageKernel};
use crate::linalg::{self, Matrix};
use crate::matgame::{self, MatrixGameSolution};
use crate::par::{self, Execution};
use crate::settings::Settings;
use crate::table::ValueTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationaryMethod {
    /// Fixed point of the uniform-δ discretized game.
    FixedPoint { delta: f64 },
    /// Limit equation, reduced to a discrete game with step `delta_reduction`.
    LimitEquation { delta_reduction: f64 },
}

/// Stationary value per state, with optimal stationary strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryValue {
    pub w: Vec<f64>,
    pub rho: f64,
    pub method: StationaryMethod,
    /// Player 1's optimal mixed action at each state.
    pub x: Vec<Vec<f64>>,
    /// Player 2's optimal mixed action at each state.
    pub y: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Iterates a β-contraction from `init` until the step guarantees a distance
/// of at most `tol` to the fixed point: `‖T v − v‖ ≤ tol (1 − β) / β`.
pub(crate) fn iterate_contraction<F>(
    what: &'static str,
    beta: f64,
    settings: &Settings,
    init: Vec<f64>,
    mut apply: F,
) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let threshold = if beta > 0.0 {
        settings.tol * (1.0 - beta) / beta
    } else {
        f64::INFINITY
    };
    let mut v = init;
    let mut last_step = f64::INFINITY;
    for k in 1..=settings.max_iterations {
        let next = apply(&v)?;
        last_step = linalg::sup_dist(&next, &v);
        v = next;
        if last_step <= threshold {
            return Ok((v, k));
        }
    }
    Err(Error::NonConvergence {
        what,
        iterations: settings.max_iterations,
        last_step,
    })
}

fn solve_states(
    exec: Execution,
    states: usize,
    build: impl Fn(usize) -> Matrix + Sync + Send,
) -> Result<Vec<MatrixGameSolution>> {
    par::try_map_indices(exec, states, |z| matgame::solve(&build(z)))
}

fn key(delta: f64) -> u64 {
    delta.to_bits()
}

/// Backward induction
/// `v(t_n, z) = val[ stage(z, i, j, t_n, δ_n) + P^{δ_n}(i, j)[z, ·] ∘ v(t_{n+1}, ·) ]`
/// from `v(horizon, ·) = 0`. Evaluation mass past the horizon is dropped.
pub fn solve_general(
    spec: &GameSpec,
    partition: &Partition,
    settings: &Settings,
) -> Result<ValueTable> {
    let (s, a, b) = (spec.num_states(), spec.num_actions1(), spec.num_actions2());
    let endpoints = partition.endpoints();
    let stages = partition.stages();
    let mut values = vec![vec![0.0; s]; stages + 1];
    let mut kernels: HashMap<u64, StageKernel> = HashMap::new();
    for n in (0..stages).rev() {
        let delta = partition.duration(n);
        if let std::collections::hash_map::Entry::Vacant(e) = kernels.entry(key(delta)) {
            e.insert(StageKernel::new(spec, delta, settings.payoff_mode)?);
        }
        let kernel = &kernels[&key(delta)];
        let payoffs = kernel.payoffs(spec, endpoints[n]);
        let next = &values[n + 1];
        let conts: Vec<Vec<f64>> = (0..a * b)
            .map(|p| {
                kernel
                    .pair(p / b, p % b)
                    .transition()
                    .matrix()
                    .mul_vec(next)
            })
            .collect();
        let sols = solve_states(settings.execution, s, |z| {
            Matrix::from_fn(a, b, |i, j| payoffs[i * b + j][z] + conts[i * b + j][z])
        })?;
        values[n] = sols.into_iter().map(|sol| sol.value).collect();
    }
    ValueTable::new(endpoints, values)
}

/// One application of the uniform-δ stationary operator
/// `ν ↦ val[ stage(·, i, j, 0, δ) + e^{−ρδ} P^δ(i, j) ∘ ν ]`.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    spec: GameSpec,
    kernel: StageKernel,
    payoffs: Vec<Vec<f64>>,
    beta: f64,
}

impl DiscretizedOperator {
    pub fn new(spec: &GameSpec, rho: f64, delta: f64, mode: PayoffMode) -> Result<Self> {
        let spec = spec.with_evaluation(Evaluation::exponential(rho)?);
        let kernel = StageKernel::new(&spec, delta, mode)?;
        let payoffs = kernel.payoffs(&spec, 0.0);
        Ok(DiscretizedOperator {
            beta: (-rho * delta).exp(),
            spec,
            kernel,
            payoffs,
        })
    }

    /// Contraction factor `e^{−ρδ}`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kernel(&self) -> &StageKernel {
        &self.kernel
    }

    /// Stage payoff vector of pair `(i, j)` for a stage starting at `t = 0`.
    pub fn stage_payoff(&self, i: usize, j: usize) -> &[f64] {
        &self.payoffs[i * self.spec.num_actions2() + j]
    }

    fn matrices(&self, exec: Execution, nu: &[f64]) -> Result<Vec<MatrixGameSolution>> {
        let (s, a, b) = (
            self.spec.num_states(),
            self.spec.num_actions1(),
            self.spec.num_actions2(),
        );
        if nu.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: nu.len(),
            });
        }
        let conts: Vec<Vec<f64>> = (0..a * b)
            .map(|p| {
                self.kernel
                    .pair(p / b, p % b)
                    .transition()
                    .matrix()
                    .mul_vec(nu)
            })
            .collect();
        solve_states(exec, s, |z| {
            Matrix::from_fn(a, b, |i, j| {
                self.payoffs[i * b + j][z] + self.beta * conts[i * b + j][z]
            })
        })
    }

    pub fn apply(&self, nu: &[f64], exec: Execution) -> Result<Vec<f64>> {
        Ok(self
            .matrices(exec, nu)?
            .into_iter()
            .map(|s| s.value)
            .collect())
    }
}

/// Fixed point `ν_{δ,ρ}` of the uniform-δ discretized stationary game,
/// iterated from zero.
pub fn solve_stationary_uniform(
    spec: &GameSpec,
    rho: f64,
    delta: f64,
    settings: &Settings,
) -> Result<StationaryValue> {
    check_positive("rho", rho)?;
    check_positive("delta", delta)?;
    let op = DiscretizedOperator::new(spec, rho, delta, settings.payoff_mode)?;
    let (w, iterations) = iterate_contraction(
        "stationary fixed point",
        op.beta(),
        settings,
        vec![0.0; spec.num_states()],
        |v| op.apply(v, settings.execution),
    )?;
    let sols = op.matrices(settings.execution, &w)?;
    let (x, y) = sols.into_iter().map(|s| (s.x, s.y)).unzip();
    Ok(StationaryValue {
        w,
        rho,
        method: StationaryMethod::FixedPoint { delta },
        x,
        y,
        iterations,
    })
}

/// Shapley operator of the discrete discounted game with transitions
/// `P(i, j) = I + δ q(i, j) / (1 − δρ)` and stage weight `δρ`:
/// `W ↦ val[ δρ g + (1 − δρ) P ∘ W ]`.
#[derive(Debug, Clone)]
pub struct ShapleyReduction {
    spec: GameSpec,
    rho: f64,
    delta: f64,
    transitions: Vec<Matrix>,
}

impl ShapleyReduction {
    /// Uses `delta`, halved until every `P(i, j)` is stochastic.
    pub fn new(spec: &GameSpec, rho: f64, delta: f64) -> Result<Self> {
        check_positive("rho", rho)?;
        check_positive("delta", delta)?;
        let lambda = spec.max_exit_rate();
        let mut d = delta;
        while !(d * rho < 1.0 && d * lambda / (1.0 - d * rho) <= 1.0) {
            d *= 0.5;
        }
        let (s, a, b) = (spec.num_states(), spec.num_actions1(), spec.num_actions2());
        let scale = d / (1.0 - d * rho);
        let mut transitions = Vec::with_capacity(a * b);
        for i in 0..a {
            for j in 0..b {
                let mut p = Matrix::identity(s).add(&spec.rates(i, j).matrix().scale(scale));
                for z in 0..s {
                    for x in p.row_mut(z) {
                        *x = x.max(0.0);
                    }
                }
                transitions.push(p);
            }
        }
        Ok(ShapleyReduction {
            spec: spec.clone(),
            rho,
            delta: d,
            transitions,
        })
    }

    /// Default reduction step `0.5 / (Λ + ρ)`.
    pub fn default_delta(spec: &GameSpec, rho: f64) -> f64 {
        0.5 / (spec.max_exit_rate() + rho)
    }

    /// The step actually used after any shrinking.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Contraction factor `1 − δρ`.
    pub fn beta(&self) -> f64 {
        1.0 - self.delta * self.rho
    }

    pub fn transition(&self, i: usize, j: usize) -> &Matrix {
        &self.transitions[i * self.spec.num_actions2() + j]
    }

    pub fn apply(&self, w: &[f64], exec: Execution) -> Result<Vec<f64>> {
        let spec = &self.spec;
        let (s, a, b) = (spec.num_states(), spec.num_actions1(), spec.num_actions2());
        if w.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: w.len(),
            });
        }
        let dr = self.delta * self.rho;
        let conts: Vec<Vec<f64>> = self.transitions.iter().map(|p| p.mul_vec(w)).collect();
        let sols = solve_states(exec, s, |z| {
            Matrix::from_fn(a, b, |i, j| {
                dr * spec.payoff(z, i, j) + (1.0 - dr) * conts[i * b + j][z]
            })
        })?;
        Ok(sols.into_iter().map(|s| s.value).collect())
    }
}

/// The stage game `ρ g(z, ·, ·) + q(·, ·)[z, ·] ∘ W` of the limit equation.
pub fn limit_stage_matrix(spec: &GameSpec, rho: f64, w: &[f64], z: usize) -> Matrix {
    Matrix::from_fn(spec.num_actions1(), spec.num_actions2(), |i, j| {
        rho * spec.payoff(z, i, j) + linalg::dot(spec.rates(i, j).matrix().row(z), w)
    })
}

/// `|ρ W(z) − val[ρ g(z,·,·) + q(·,·)[z,·] ∘ W]|` per state.
pub fn limit_residual(spec: &GameSpec, rho: f64, w: &[f64]) -> Result<Vec<f64>> {
    (0..spec.num_states())
        .map(|z| Ok((rho * w[z] - matgame::value(&limit_stage_matrix(spec, rho, w, z))?).abs()))
        .collect()
}

/// Solution `W_ρ` of the limit equation. `delta_reduction` defaults to
/// `0.5 / (Λ + ρ)`; the result does not depend on it.
pub fn solve_limit_equation(
    spec: &GameSpec,
    rho: f64,
    delta_reduction: Option<f64>,
    settings: &Settings,
) -> Result<StationaryValue> {
    check_positive("rho", rho)?;
    let delta = delta_reduction.unwrap_or_else(|| ShapleyReduction::default_delta(spec, rho));
    let op = ShapleyReduction::new(spec, rho, delta)?;
    let (w, iterations) = iterate_contraction(
        "limit equation",
        op.beta(),
        settings,
        vec![0.0; spec.num_states()],
        |v| op.apply(v, settings.execution),
    )?;
    let sols = solve_states(settings.execution, spec.num_states(), |z| {
        limit_stage_matrix(spec, rho, &w, z)
    })?;
    let (x, y) = sols.into_iter().map(|s| (s.x, s.y)).unzip();
    Ok(StationaryValue {
        w,
        rho,
        method: StationaryMethod::LimitEquation {
            delta_reduction: op.delta(),
        },
        x,
        y,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteeReport {
    pub delta: f64,
    /// Limit value `W_ρ`.
    pub limit: Vec<f64>,
    /// Value of Player 2's best response to the stationary strategy `x*`.
    pub lower_bound: Vec<f64>,
    /// `max_z |W_ρ(z) − lower_bound(z)|`.
    pub gap: f64,
}

/// Player 1 plays at every state the mixed action optimal in the limit
/// equation; Player 2 best-responds in the uniform-δ discretized game, which
/// for Player 2 is a discounted Markov decision problem solved by value
/// iteration.
pub fn guarantee_check(
    spec: &GameSpec,
    rho: f64,
    delta: f64,
    settings: &Settings,
) -> Result<GuaranteeReport> {
    let limit = solve_limit_equation(spec, rho, None, settings)?;
    let lower_bound = best_response_value(spec, rho, delta, &limit.x, settings)?;
    let gap = linalg::sup_dist(&limit.w, &lower_bound);
    Ok(GuaranteeReport {
        delta,
        limit: limit.w,
        lower_bound,
        gap,
    })
}

/// Minimal discounted payoff Player 2 can force against the stationary
/// strategy `x[z]` in the uniform-δ discretized game.
pub fn best_response_value(
    spec: &GameSpec,
    rho: f64,
    delta: f64,
    x: &[Vec<f64>],
    settings: &Settings,
) -> Result<Vec<f64>> {
    let (s, a, b) = (spec.num_states(), spec.num_actions1(), spec.num_actions2());
    if x.len() != s || x.iter().any(|xz| xz.len() != a) {
        return Err(Error::DimensionMismatch {
            expected: s * a,
            got: x.iter().map(Vec::len).sum(),
        });
    }
    let op = DiscretizedOperator::new(spec, rho, delta, settings.payoff_mode)?;
    // Per (z, j): expected stage cost and transition row under x[z].
    let mut cost = vec![vec![0.0; b]; s];
    let mut rows = vec![vec![vec![0.0; s]; b]; s];
    for z in 0..s {
        for j in 0..b {
            for (i, &xi) in x[z].iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                cost[z][j] += xi * op.stage_payoff(i, j)[z];
                let p = op.kernel().pair(i, j).transition();
                for (r, &pz) in rows[z][j].iter_mut().zip(p.row(z)) {
                    *r += xi * pz;
                }
            }
        }
    }
    let beta = op.beta();
    let (u, _) = iterate_contraction("best response", beta, settings, vec![0.0; s], |u| {
        Ok((0..s)
            .map(|z| {
                (0..b)
                    .map(|j| cost[z][j] + beta * linalg::dot(&rows[z][j], u))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect())
    })?;
    Ok(u)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )));
    }
    Ok(())
}

/// Both sides of the lift identity at one belief.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftPoint {
    pub belief: Vec<f64>,
    /// `<ζ, v_Π(0, ·)>` from the observed-state recursion.
    pub lhs: f64,
    /// Random-action value of the lifted differential game at `ζ`.
    pub rhs: f64,
    pub gap: f64,
}

/// Observed-state and lifted values on one partition and belief grid,
/// reusable across beliefs.
#[derive(Debug, Clone)]
pub struct LiftComparison {
    observed: ValueTable,
    lifted: LiftedGame,
    grid: StateGrid,
    lifted_value: ValueTable,
}

impl LiftComparison {
    /// `resolution` is the number of grid cells per axis of the lifted state.
    pub fn new(
        spec: &GameSpec,
        partition: &Partition,
        resolution: usize,
        settings: &Settings,
    ) -> Result<Self> {
        let observed = solve_general(spec, partition, settings)?;
        let lifted = LiftedGame::new(spec)?;
        // With one state the lifted box has no axes and a single node.
        let grid = lifted.grid(resolution)?;
        let lifted_value = diffgame::solve_random(&lifted.spec, partition, &grid, settings)?.table;
        Ok(LiftComparison {
            observed,
            lifted,
            grid,
            lifted_value,
        })
    }

    pub fn observed(&self) -> &ValueTable {
        &self.observed
    }

    pub fn lifted_value(&self) -> &ValueTable {
        &self.lifted_value
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn check(&self, zeta: &[f64]) -> Result<LiftPoint> {
        if zeta.len() != self.lifted.states {
            return Err(Error::DimensionMismatch {
                expected: self.lifted.states,
                got: zeta.len(),
            });
        }
        crate::kernel::check_simplex(zeta)?;
        let lhs = linalg::dot(zeta, self.observed.initial());
        let rhs = self
            .grid
            .interpolate(self.lifted_value.initial(), &self.lifted.coordinates(zeta));
        Ok(LiftPoint {
            belief: zeta.to_vec(),
            lhs,
            rhs,
            gap: (lhs - rhs).abs(),
        })
    }
}

/// `<ζ, v_Π(0, ·)>` against the value at `ζ` of the lifted differential
/// game on the belief simplex, solved on a grid with `resolution` cells per
/// axis.
pub fn lift_check(
    spec: &GameSpec,
    partition: &Partition,
    zeta: &[f64],
    resolution: usize,
    settings: &Settings,
) -> Result<LiftPoint> {
    LiftComparison::new(spec, partition, resolution, settings)?.check(zeta)
}
