//! Hidden state, public actions: the game on beliefs `ζ ∈ Δ(Ω)`.
//!
//! After actions `(i, j)` are played for `δ`, the common belief moves to
//! `ζ * P^δ(i, j)`. Values are tabulated on a regular grid of the simplex
//! and read between grid points through the Freudenthal triangulation,
//! which is affine-exact and averages with nonnegative weights.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::game::{Evaluation, GameSpec, Partition};
use crate::kernel::{self, StageKernel};
use crate::linalg::{self, Matrix};
use crate::matgame;
use crate::observed::iterate_contraction;
use crate::par;
use crate::settings::Settings;
use crate::table::{Stencil, ValueTable};

/// Largest number of states the belief grid supports.
pub const MAX_STATES: usize = 4;

/// Points of the simplex whose coordinates are multiples of `1/m`.
#[derive(Debug, Clone)]
pub struct BeliefGrid {
    states: usize,
    resolution: usize,
    points: Vec<Vec<f64>>,
    /// Dense lookup from cumulative coordinates to point index.
    lookup: Vec<usize>,
}

impl BeliefGrid {
    pub fn new(states: usize, resolution: usize) -> Result<Self> {
        if states == 0 || states > MAX_STATES {
            return Err(Error::InvalidArgument(format!(
                "belief grids support 1..={MAX_STATES} states, got {states}"
            )));
        }
        if resolution == 0 {
            return Err(Error::InvalidArgument(
                "grid resolution must be positive".into(),
            ));
        }
        let m = resolution;
        let dims = states - 1;
        let side = m + 1;
        let mut lookup = vec![usize::MAX; side.pow(dims as u32)];
        let mut points = Vec::new();
        // Cumulative coordinates c_1 ≥ c_2 ≥ ... ≥ c_{S-1}, c_k = m Σ_{l≥k} ζ_l.
        let mut cum = vec![0usize; dims];
        loop {
            let non_increasing = cum.windows(2).all(|w| w[0] >= w[1]);
            if non_increasing && cum.first().is_none_or(|&c| c <= m) {
                lookup[flat(&cum, side)] = points.len();
                points.push(counts_to_belief(&cum, m));
            }
            // Odometer over {0..=m}^dims.
            let mut k = 0;
            loop {
                if k == dims {
                    return Ok(BeliefGrid {
                        states,
                        resolution,
                        points,
                        lookup,
                    });
                }
                cum[k] += 1;
                if cum[k] <= m {
                    break;
                }
                cum[k] = 0;
                k += 1;
            }
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k]
    }

    /// Index of the grid point at the Dirac mass on `state`.
    pub fn vertex(&self, state: usize) -> usize {
        let mut z = vec![0.0; self.states];
        z[state] = 1.0;
        self.points
            .iter()
            .position(|p| linalg::sup_dist(p, &z) < 1e-12)
            .expect("vertices belong to every grid")
    }

    /// Freudenthal (Kuhn) cell containing `zeta` and its barycentric weights.
    pub fn stencil(&self, zeta: &[f64]) -> Stencil {
        let m = self.resolution as f64;
        let dims = self.states - 1;
        if dims == 0 {
            return Stencil {
                indices: vec![0],
                weights: vec![1.0],
            };
        }
        let side = self.resolution + 1;
        // x_k = m Σ_{l ≥ k} ζ_l for k = 1..S-1.
        let mut x = vec![0.0; dims];
        let mut acc = 0.0;
        for k in (1..self.states).rev() {
            acc += zeta[k].max(0.0);
            x[k - 1] = (m * acc).clamp(0.0, m);
        }
        let base: Vec<usize> = x
            .iter()
            .map(|&v| (v.floor() as usize).min(self.resolution.saturating_sub(1)))
            .collect();
        let frac: Vec<f64> = x.iter().zip(&base).map(|(&v, &b)| v - b as f64).collect();
        let mut order: Vec<usize> = (0..dims).collect();
        // Decreasing fractional parts; ties broken by index so the walk is deterministic.
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));

        let mut indices = Vec::with_capacity(dims + 1);
        let mut weights = Vec::with_capacity(dims + 1);
        let mut vertex = base.clone();
        indices.push(self.lookup[flat(&vertex, side)]);
        weights.push(1.0 - frac[order[0]]);
        for step in 0..dims {
            vertex[order[step]] += 1;
            let w = if step + 1 < dims {
                frac[order[step]] - frac[order[step + 1]]
            } else {
                frac[order[step]]
            };
            indices.push(self.lookup[flat(&vertex, side)]);
            weights.push(w);
        }
        debug_assert!(indices.iter().all(|&k| k != usize::MAX));
        Stencil { indices, weights }
    }

    /// Piecewise-linear interpolation of grid values at `zeta`.
    pub fn interpolate(&self, values: &[f64], zeta: &[f64]) -> f64 {
        self.stencil(zeta).apply(values)
    }
}

fn flat(cum: &[usize], side: usize) -> usize {
    cum.iter().rev().fold(0, |acc, &c| acc * side + c)
}

fn counts_to_belief(cum: &[usize], m: usize) -> Vec<f64> {
    let s = cum.len() + 1;
    let c = |k: usize| -> usize {
        match k {
            0 => m,
            k if k < s => cum[k - 1],
            _ => 0,
        }
    };
    (0..s)
        .map(|k| (c(k) - c(k + 1)) as f64 / m as f64)
        .collect()
}

/// `ζ * P^δ(i, j)`.
pub fn belief_step(
    spec: &GameSpec,
    zeta: &[f64],
    i: usize,
    j: usize,
    delta: f64,
) -> Result<Vec<f64>> {
    let p = kernel::transition(spec.rates(i, j), delta)?;
    kernel::push_belief(zeta, &p)
}

/// Per-δ data: for every grid point and action pair, the interpolation
/// stencil of the next belief.
struct BeliefStage {
    kernel: StageKernel,
    next: Vec<Vec<Stencil>>,
}

impl BeliefStage {
    fn new(spec: &GameSpec, grid: &BeliefGrid, delta: f64, settings: &Settings) -> Result<Self> {
        let kernel = StageKernel::new(spec, delta, settings.payoff_mode)?;
        let (a, b) = (spec.num_actions1(), spec.num_actions2());
        let next = par::try_map_indices(settings.execution, grid.len(), |k| {
            (0..a * b)
                .map(|p| {
                    let tr = kernel.pair(p / b, p % b).transition();
                    kernel::push_belief(grid.point(k), tr).map(|z| grid.stencil(&z))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(BeliefStage { kernel, next })
    }

    /// Belief-averaged stage payoffs, `[point][pair]`.
    fn payoffs(&self, spec: &GameSpec, grid: &BeliefGrid, t: f64) -> Vec<Vec<f64>> {
        let per_pair = self.kernel.payoffs(spec, t);
        grid.points()
            .iter()
            .map(|zeta| per_pair.iter().map(|v| linalg::dot(zeta, v)).collect())
            .collect()
    }

    fn sweep(
        &self,
        spec: &GameSpec,
        payoffs: &[Vec<f64>],
        beta: f64,
        cont: &[f64],
        settings: &Settings,
    ) -> Result<Vec<f64>> {
        let (a, b) = (spec.num_actions1(), spec.num_actions2());
        par::try_map_indices(settings.execution, payoffs.len(), |k| {
            let m = Matrix::from_fn(a, b, |i, j| {
                payoffs[k][i * b + j] + beta * self.next[k][i * b + j].apply(cont)
            });
            matgame::value(&m)
        })
    }
}

fn check_grid(spec: &GameSpec, grid: &BeliefGrid) -> Result<()> {
    if grid.states() != spec.num_states() {
        return Err(Error::DimensionMismatch {
            expected: spec.num_states(),
            got: grid.states(),
        });
    }
    Ok(())
}

/// Backward induction on the grid:
/// `V(t_n, ζ) = val[ Σ_z ζ(z) stage(z, i, j, t_n, δ_n) + V(t_{n+1}, ζ * P^{δ_n}(i, j)) ]`.
pub fn solve_belief_general(
    spec: &GameSpec,
    partition: &Partition,
    grid: &BeliefGrid,
    settings: &Settings,
) -> Result<ValueTable> {
    check_grid(spec, grid)?;
    let endpoints = partition.endpoints();
    let stages = partition.stages();
    let mut values = vec![vec![0.0; grid.len()]; stages + 1];
    let mut cache: HashMap<u64, BeliefStage> = HashMap::new();
    for n in (0..stages).rev() {
        let delta = partition.duration(n);
        let stage = match cache.entry(delta.to_bits()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(BeliefStage::new(spec, grid, delta, settings)?)
            }
        };
        let payoffs = stage.payoffs(spec, grid, endpoints[n]);
        values[n] = stage.sweep(spec, &payoffs, 1.0, &values[n + 1], settings)?;
    }
    ValueTable::new(endpoints, values)
}

/// Stationary belief value: the fixed point of
/// `v ↦ [ζ ↦ val( stage at ζ + e^{−ρδ} v(ζ * P^δ(i, j)) )]` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefValue {
    pub delta: f64,
    pub resolution: usize,
    pub values: Vec<f64>,
    pub iterations: usize,
}

pub fn solve_belief_stationary(
    spec: &GameSpec,
    rho: f64,
    delta: f64,
    grid: &BeliefGrid,
    settings: &Settings,
) -> Result<BeliefValue> {
    check_grid(spec, grid)?;
    if !(rho > 0.0 && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho and delta must be positive, got {rho} and {delta}"
        )));
    }
    let spec = spec.with_evaluation(Evaluation::exponential(rho)?);
    let stage = BeliefStage::new(&spec, grid, delta, settings)?;
    let payoffs = stage.payoffs(&spec, grid, 0.0);
    let beta = (-rho * delta).exp();
    let (values, iterations) = iterate_contraction(
        "belief fixed point",
        beta,
        settings,
        vec![0.0; grid.len()],
        |v| stage.sweep(&spec, &payoffs, beta, v, settings),
    )?;
    Ok(BeliefValue {
        delta,
        resolution: grid.resolution(),
        values,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    /// Every `(δ, m)` of the Cartesian sweep with its solution.
    pub levels: Vec<BeliefValue>,
    /// Ladder `(δ_k, m_k)` pairs, in order.
    pub ladder: Vec<(f64, usize)>,
    /// Sup-norm distance between consecutive ladder levels, measured at the
    /// points of the coarser grid.
    pub cauchy_gaps: Vec<f64>,
}

impl RefinementReport {
    pub fn level(&self, delta: f64, resolution: usize) -> Option<&BeliefValue> {
        self.levels
            .iter()
            .find(|l| l.delta == delta && l.resolution == resolution)
    }

    pub fn gaps_decrease(&self) -> bool {
        self.cauchy_gaps.windows(2).all(|w| w[1] < w[0])
    }
}

/// Solves every `(δ, m)` in `deltas × resolutions` and measures the gaps
/// along the diagonal ladder `(deltas[k], resolutions[k])`.
pub fn refine_and_compare(
    spec: &GameSpec,
    rho: f64,
    deltas: &[f64],
    resolutions: &[usize],
    settings: &Settings,
) -> Result<RefinementReport> {
    let mut grids = HashMap::new();
    for &m in resolutions {
        grids.insert(m, BeliefGrid::new(spec.num_states(), m)?);
    }
    let mut levels = Vec::new();
    for &d in deltas {
        for &m in resolutions {
            levels.push(solve_belief_stationary(spec, rho, d, &grids[&m], settings)?);
        }
    }
    let ladder: Vec<(f64, usize)> = deltas
        .iter()
        .copied()
        .zip(resolutions.iter().copied())
        .collect();
    let find = |d: f64, m: usize| {
        levels
            .iter()
            .find(|l| l.delta == d && l.resolution == m)
            .expect("solved above")
    };
    let cauchy_gaps = ladder
        .windows(2)
        .map(|w| {
            let (coarse, fine) = (find(w[0].0, w[0].1), find(w[1].0, w[1].1));
            let (gc, gf) = (&grids[&w[0].1], &grids[&w[1].1]);
            gc.points()
                .iter()
                .enumerate()
                .map(|(k, z)| (coarse.values[k] - gf.interpolate(&fine.values, z)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(RefinementReport {
        levels,
        ladder,
        cauchy_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::random_instance;
    use crate::observed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_belief(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..s).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / sum).collect()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(BeliefGrid::new(1, 5).unwrap().len(), 1);
        assert_eq!(BeliefGrid::new(2, 32).unwrap().len(), 33);
        assert_eq!(BeliefGrid::new(3, 16).unwrap().len(), 153);
        assert_eq!(BeliefGrid::new(4, 4).unwrap().len(), 35);
        assert!(BeliefGrid::new(5, 4).is_err());
        for p in BeliefGrid::new(3, 7).unwrap().points() {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(p.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn grid_points_interpolate_to_themselves() {
        let grid = BeliefGrid::new(3, 5).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| (k as f64).sin()).collect();
        for (k, p) in grid.points().iter().enumerate() {
            assert!((grid.interpolate(&vals, p) - vals[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_exact_and_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in 2..=4 {
            let grid = BeliefGrid::new(s, 6).unwrap();
            for _ in 0..50 {
                let c: Vec<f64> = (0..s).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let vals: Vec<f64> = grid.points().iter().map(|p| linalg::dot(p, &c)).collect();
                let z = random_belief(&mut rng, s);
                assert!((grid.interpolate(&vals, &z) - linalg::dot(&z, &c)).abs() < 1e-12);
                let st = grid.stencil(&z);
                assert!(st.weights.iter().all(|w| *w >= -1e-15));
                assert!((st.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn frozen_belief() {
        let spec = random_instance(2, 3, 2, 2, 0.0);
        let z = [0.2, 0.5, 0.3];
        assert_eq!(belief_step(&spec, &z, 1, 0, 0.4).unwrap(), z.to_vec());
    }

    #[test]
    fn dirac_belief_moves_to_row() {
        let spec = random_instance(2, 3, 2, 2, 1.0);
        let p = kernel::transition(spec.rates(0, 1), 0.3).unwrap();
        let out = belief_step(&spec, &[0.0, 1.0, 0.0], 0, 1, 0.3).unwrap();
        assert!(linalg::sup_dist(&out, p.row(1)) < 1e-15);
    }

    #[test]
    fn symmetric_chain_belief() {
        let rows = vec![vec![-1.0, 1.0], vec![1.0, -1.0]];
        let spec = GameSpec::from_tables(
            vec![vec![vec![1.0]], vec![vec![0.0]]],
            vec![vec![rows]],
            Evaluation::exponential(1.0).unwrap(),
        )
        .unwrap();
        let h = std::f64::consts::LN_2 / 2.0;
        let out = belief_step(&spec, &[1.0, 0.0], 0, 0, h).unwrap();
        // e^{-2h} = 1/2
        assert!((out[0] - 0.75).abs() < 1e-12 && (out[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn single_state_matches_observed() {
        let spec = random_instance(4, 1, 2, 3, 1.0);
        let part = Partition::uniform(2.0, 8).unwrap();
        let grid = BeliefGrid::new(1, 1).unwrap();
        let b = solve_belief_general(&spec, &part, &grid, &Settings::default()).unwrap();
        let o = observed::solve_general(&spec, &part, &Settings::default()).unwrap();
        assert!((b.initial()[0] - o.initial()[0]).abs() < 1e-8);
    }

    #[test]
    fn state_blind_payoff() {
        let base = random_instance(6, 2, 2, 2, 1.0);
        let g: Vec<Vec<f64>> = base.payoff_matrix(0).to_rows();
        let spec = GameSpec::from_tables(
            vec![g.clone(), g],
            base.to_parts().rates,
            base.evaluation().clone(),
        )
        .unwrap();
        let part = Partition::uniform(3.0, 15).unwrap();
        let grid = BeliefGrid::new(2, 8).unwrap();
        let table = solve_belief_general(&spec, &part, &grid, &Settings::default()).unwrap();
        let val = matgame::value(&spec.payoff_matrix(0)).unwrap();
        for (n, &t) in table.times().iter().enumerate() {
            let expected = val * spec.evaluation().mass(t, 3.0);
            for v in table.at_node(n) {
                assert!((v - expected).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn uncontrolled_is_affine() {
        let spec = random_instance(13, 3, 1, 1, 1.0);
        let part = Partition::uniform(2.0, 10).unwrap();
        let grid = BeliefGrid::new(3, 4).unwrap();
        let b = solve_belief_general(&spec, &part, &grid, &Settings::default()).unwrap();
        let o = observed::solve_general(&spec, &part, &Settings::default()).unwrap();
        for (k, p) in grid.points().iter().enumerate() {
            assert!((b.initial()[k] - linalg::dot(p, o.initial())).abs() < 1e-7);
        }
    }

    #[test]
    fn stationary_single_state() {
        let spec = random_instance(9, 1, 3, 3, 0.0);
        let grid = BeliefGrid::new(1, 1).unwrap();
        let v = solve_belief_stationary(&spec, 1.0, 0.1, &grid, &Settings::default()).unwrap();
        let val = matgame::value(&spec.payoff_matrix(0)).unwrap();
        assert!((v.values[0] - val).abs() < 1e-8);
    }

    #[test]
    fn grid_must_match_states() {
        let spec = random_instance(9, 2, 2, 2, 1.0);
        let grid = BeliefGrid::new(3, 4).unwrap();
        assert!(solve_belief_stationary(&spec, 1.0, 0.1, &grid, &Settings::default()).is_err());
    }
}
