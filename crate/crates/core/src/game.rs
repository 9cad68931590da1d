//! Game data: payoffs, controlled rate matrices, evaluations and partitions.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Row sums of a rate matrix must vanish within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// A tabulated density must integrate to one within this tolerance.
pub const DENSITY_MASS_TOL: f64 = 1e-9;
/// Default residual evaluation mass left after truncating an infinite horizon.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

/// First invariant broken by a game description.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty(&'static str),
    Shape {
        what: String,
        expected: usize,
        got: usize,
    },
    NonFinite {
        what: String,
    },
    NegativeOffDiagonal {
        pair: Option<(usize, usize)>,
        row: usize,
        col: usize,
        value: f64,
    },
    RowSum {
        pair: Option<(usize, usize)>,
        row: usize,
        sum: f64,
    },
    Evaluation(String),
    Domain(String),
    Lipschitz {
        what: &'static str,
        declared: f64,
        observed: f64,
    },
}

impl Violation {
    fn in_pair(self, i: usize, j: usize) -> Self {
        match self {
            Violation::NegativeOffDiagonal {
                row, col, value, ..
            } => Violation::NegativeOffDiagonal {
                pair: Some((i, j)),
                row,
                col,
                value,
            },
            Violation::RowSum { row, sum, .. } => Violation::RowSum {
                pair: Some((i, j)),
                row,
                sum,
            },
            Violation::NonFinite { what } => Violation::NonFinite {
                what: format!("rates({i},{j}) {what}"),
            },
            Violation::Shape {
                what,
                expected,
                got,
            } => Violation::Shape {
                what: format!("rates({i},{j}) {what}"),
                expected,
                got,
            },
            other => other,
        }
    }

    /// Action pair and matrix row the violation points at, when it has one.
    pub fn rate_location(&self) -> Option<((usize, usize), usize)> {
        match self {
            Violation::NegativeOffDiagonal {
                pair: Some(p), row, ..
            }
            | Violation::RowSum {
                pair: Some(p), row, ..
            } => Some((*p, *row)),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = |pair: &Option<(usize, usize)>| match pair {
            Some((i, j)) => format!("rates({i},{j}): "),
            None => String::new(),
        };
        match self {
            Violation::Empty(what) => write!(f, "{what} must not be empty"),
            Violation::Shape {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected length {expected}, got {got}"),
            Violation::NonFinite { what } => write!(f, "{what} is not finite"),
            Violation::NegativeOffDiagonal {
                pair,
                row,
                col,
                value,
            } => write!(
                f,
                "{}negative off-diagonal at ({row},{col}): {value}",
                prefix(pair)
            ),
            Violation::RowSum { pair, row, sum } => {
                write!(f, "{}row {row} sums to {sum}", prefix(pair))
            }
            Violation::Evaluation(msg) => write!(f, "evaluation: {msg}"),
            Violation::Domain(msg) => write!(f, "state box: {msg}"),
            Violation::Lipschitz {
                what,
                declared,
                observed,
            } => write!(
                f,
                "{what} has sampled difference quotient {observed} above the declared Lipschitz bound {declared}"
            ),
        }
    }
}

impl std::error::Error for Violation {}

/// Generator of a continuous-time Markov chain: nonnegative off-diagonal
/// entries, rows summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix(Matrix);

impl RateMatrix {
    pub fn new(m: Matrix) -> std::result::Result<Self, Violation> {
        check_rates(&m)?;
        Ok(RateMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> std::result::Result<Self, Violation> {
        let n = rows.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Violation::Shape {
                    what: format!("row {r}"),
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let m = Matrix::from_rows(rows).expect("row lengths checked");
        RateMatrix::new(m)
    }

    pub fn zero(n: usize) -> Self {
        RateMatrix(Matrix::zeros(n, n))
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Largest exit rate `max_z |q[z][z]|`.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.size()).fold(0.0, |m, z| m.max(self.0[(z, z)].abs()))
    }
}

fn check_rates(m: &Matrix) -> std::result::Result<(), Violation> {
    if !m.is_square() {
        return Err(Violation::Shape {
            what: "rate matrix columns".into(),
            expected: m.rows(),
            got: m.cols(),
        });
    }
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m[(r, c)];
            if !v.is_finite() {
                return Err(Violation::NonFinite {
                    what: format!("entry ({r},{c})"),
                });
            }
            if r != c && v < 0.0 {
                return Err(Violation::NegativeOffDiagonal {
                    pair: None,
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
    }
    for r in 0..m.rows() {
        let sum: f64 = m.row(r).iter().sum();
        if sum.abs() > ROW_SUM_TOL {
            return Err(Violation::RowSum {
                pair: None,
                row: r,
                sum,
            });
        }
    }
    Ok(())
}

/// Probability density on `[0, +inf)` weighting the payoff flow.
#[derive(Debug, Clone, PartialEq)]
pub enum EvaluationKind {
    /// `k(t) = rho e^{-rho t}`.
    Exponential { rho: f64 },
    /// Piecewise-linear density through `(knots[n], densities[n])`, zero past
    /// the last knot.
    Tabulated {
        knots: Vec<f64>,
        densities: Vec<f64>,
        lipschitz_bound: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    kind: EvaluationKind,
    tail_tolerance: f64,
}

impl Evaluation {
    pub fn exponential(rho: f64) -> std::result::Result<Self, Violation> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Violation::Evaluation(format!(
                "rho must be positive, got {rho}"
            )));
        }
        Ok(Evaluation {
            kind: EvaluationKind::Exponential { rho },
            tail_tolerance: DEFAULT_TAIL_TOL,
        })
    }

    /// Piecewise-linear density; rejected unless it integrates to one.
    pub fn tabulated(knots: Vec<f64>, densities: Vec<f64>) -> std::result::Result<Self, Violation> {
        if knots.len() < 2 {
            return Err(Violation::Evaluation("need at least two knots".into()));
        }
        if knots.len() != densities.len() {
            return Err(Violation::Evaluation(format!(
                "{} knots but {} densities",
                knots.len(),
                densities.len()
            )));
        }
        if knots[0] != 0.0 {
            return Err(Violation::Evaluation("first knot must be 0".into()));
        }
        if knots.iter().chain(&densities).any(|x| !x.is_finite()) {
            return Err(Violation::Evaluation("non-finite knot or density".into()));
        }
        if let Some(w) = knots.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Violation::Evaluation(format!(
                "knots must be strictly increasing (index {})",
                w + 1
            )));
        }
        if let Some(n) = densities.iter().position(|d| *d < 0.0) {
            return Err(Violation::Evaluation(format!(
                "negative density at knot {n}"
            )));
        }
        let mass: f64 = knots
            .windows(2)
            .zip(densities.windows(2))
            .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1]))
            .sum();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Violation::Evaluation(format!(
                "density integrates to {mass}, expected 1"
            )));
        }
        let lipschitz_bound = knots
            .windows(2)
            .zip(densities.windows(2))
            .map(|(t, d)| ((d[1] - d[0]) / (t[1] - t[0])).abs())
            .fold(0.0, f64::max);
        Ok(Evaluation {
            kind: EvaluationKind::Tabulated {
                knots,
                densities,
                lipschitz_bound,
            },
            tail_tolerance: DEFAULT_TAIL_TOL,
        })
    }

    pub fn with_tail_tolerance(mut self, eps: f64) -> std::result::Result<Self, Violation> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Violation::Evaluation(format!(
                "tail tolerance must lie in (0, 1), got {eps}"
            )));
        }
        self.tail_tolerance = eps;
        Ok(self)
    }

    pub fn kind(&self) -> &EvaluationKind {
        &self.kind
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// Discount rate of an exponential evaluation.
    pub fn rho(&self) -> Option<f64> {
        match self.kind {
            EvaluationKind::Exponential { rho } => Some(rho),
            EvaluationKind::Tabulated { .. } => None,
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        match &self.kind {
            EvaluationKind::Exponential { rho } => {
                if t < 0.0 {
                    0.0
                } else {
                    rho * (-rho * t).exp()
                }
            }
            EvaluationKind::Tabulated {
                knots, densities, ..
            } => {
                if t < 0.0 || t > *knots.last().unwrap() {
                    return 0.0;
                }
                let k = knots.partition_point(|&x| x <= t).clamp(1, knots.len() - 1);
                let (t0, t1) = (knots[k - 1], knots[k]);
                let (d0, d1) = (densities[k - 1], densities[k]);
                d0 + (d1 - d0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Evaluation mass of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// Mass left after time `t`.
    pub fn tail_mass(&self, t: f64) -> f64 {
        match &self.kind {
            EvaluationKind::Exponential { rho } => (-rho * t.max(0.0)).exp(),
            EvaluationKind::Tabulated { .. } => (1.0 - self.cumulative(t)).max(0.0),
        }
    }

    fn cumulative(&self, t: f64) -> f64 {
        match &self.kind {
            EvaluationKind::Exponential { rho } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-rho * t).exp_m1()
                }
            }
            EvaluationKind::Tabulated {
                knots, densities, ..
            } => {
                if t <= 0.0 {
                    return 0.0;
                }
                let mut acc = 0.0;
                for (w, d) in knots.windows(2).zip(densities.windows(2)) {
                    if t >= w[1] {
                        acc += 0.5 * (w[1] - w[0]) * (d[0] + d[1]);
                    } else {
                        let dt = t - w[0];
                        let dt_end = d[0] + (d[1] - d[0]) * dt / (w[1] - w[0]);
                        acc += 0.5 * dt * (d[0] + dt_end);
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Horizon after which at most `tail_tolerance` mass remains.
    pub fn truncation_horizon(&self) -> f64 {
        match &self.kind {
            EvaluationKind::Exponential { rho } => (1.0 / self.tail_tolerance).ln() / rho,
            EvaluationKind::Tabulated { knots, .. } => *knots.last().unwrap(),
        }
    }

    pub fn lipschitz_bound(&self) -> f64 {
        match &self.kind {
            EvaluationKind::Exponential { rho } => rho * rho,
            EvaluationKind::Tabulated {
                lipschitz_bound, ..
            } => *lipschitz_bound,
        }
    }
}

/// Decision times `0 = t_1 < t_2 < ... < t_N` of a truncated partition, with
/// the truncation horizon closing the last stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
    horizon: f64,
}

impl Partition {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::InvalidArgument(
                "partition must start at t = 0".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) || !horizon.is_finite() {
            return Err(Error::InvalidArgument("non-finite partition time".into()));
        }
        if let Some(n) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "partition times must increase strictly (index {})",
                n + 1
            )));
        }
        if horizon <= *times.last().unwrap() {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} must exceed the last decision time"
            )));
        }
        Ok(Partition { times, horizon })
    }

    /// `n` equal stages covering `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one stage".into()));
        }
        let times = (0..n).map(|k| horizon * k as f64 / n as f64).collect();
        Ok(Partition { times, horizon })
    }

    /// Uniform partition of mesh `delta` whose horizon is the first multiple
    /// of `delta` reaching `min_horizon`.
    pub fn uniform_mesh(delta: f64, min_horizon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "stage duration must be positive, got {delta}"
            )));
        }
        let n = ((min_horizon / delta) - 1e-9).ceil().max(1.0) as usize;
        let times = (0..n).map(|k| k as f64 * delta).collect();
        Ok(Partition {
            times,
            horizon: n as f64 * delta,
        })
    }

    /// Uniform partition of mesh `delta` covering the truncation horizon of `eval`.
    pub fn covering(delta: f64, eval: &Evaluation) -> Result<Self> {
        Partition::uniform_mesh(delta, eval.truncation_horizon())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn stages(&self) -> usize {
        self.times.len()
    }

    /// Decision times followed by the horizon.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut v = self.times.clone();
        v.push(self.horizon);
        v
    }

    pub fn duration(&self, n: usize) -> f64 {
        let next = self.times.get(n + 1).copied().unwrap_or(self.horizon);
        next - self.times[n]
    }

    pub fn durations(&self) -> Vec<f64> {
        (0..self.stages()).map(|n| self.duration(n)).collect()
    }

    pub fn mesh(&self) -> f64 {
        self.durations().into_iter().fold(0.0, f64::max)
    }
}

/// Unvalidated game description, as read from a file or assembled in code.
#[derive(Debug, Clone, PartialEq)]
pub struct GameParts {
    pub states: Vec<String>,
    pub actions1: Vec<String>,
    pub actions2: Vec<String>,
    /// `payoff[z][i][j]`.
    pub payoff: Vec<Vec<Vec<f64>>>,
    /// `rates[i][j]` is an S×S generator.
    pub rates: Vec<Vec<Vec<Vec<f64>>>>,
    pub evaluation: Evaluation,
}

/// Checks every invariant of a game description and reports the first
/// violation found.
pub fn validate(parts: &GameParts) -> std::result::Result<(), Violation> {
    let s = parts.states.len();
    let a = parts.actions1.len();
    let b = parts.actions2.len();
    if s == 0 {
        return Err(Violation::Empty("states"));
    }
    if a == 0 {
        return Err(Violation::Empty("actions1"));
    }
    if b == 0 {
        return Err(Violation::Empty("actions2"));
    }
    shape("payoff", s, parts.payoff.len())?;
    for (z, pz) in parts.payoff.iter().enumerate() {
        shape(&format!("payoff[{z}]"), a, pz.len())?;
        for (i, pzi) in pz.iter().enumerate() {
            shape(&format!("payoff[{z}][{i}]"), b, pzi.len())?;
            if let Some(j) = pzi.iter().position(|x| !x.is_finite()) {
                return Err(Violation::NonFinite {
                    what: format!("payoff[{z}][{i}][{j}]"),
                });
            }
        }
    }
    shape("rates", a, parts.rates.len())?;
    for (i, ri) in parts.rates.iter().enumerate() {
        shape(&format!("rates[{i}]"), b, ri.len())?;
        for (j, q) in ri.iter().enumerate() {
            shape(&format!("rates[{i}][{j}]"), s, q.len())?;
            RateMatrix::from_rows(q).map_err(|v| v.in_pair(i, j))?;
        }
    }
    Ok(())
}

fn shape(what: &str, expected: usize, got: usize) -> std::result::Result<(), Violation> {
    if expected != got {
        return Err(Violation::Shape {
            what: what.to_string(),
            expected,
            got,
        });
    }
    Ok(())
}

/// A validated game: finite states Ω, actions I and J, payoff flow g and
/// action-controlled generators q, with an evaluation k.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    states: Vec<String>,
    actions1: Vec<String>,
    actions2: Vec<String>,
    payoff: Vec<f64>,
    rates: Vec<RateMatrix>,
    evaluation: Evaluation,
    payoff_norm: f64,
}

impl GameSpec {
    pub fn new(parts: GameParts) -> std::result::Result<Self, Violation> {
        validate(&parts)?;
        let GameParts {
            states,
            actions1,
            actions2,
            payoff,
            rates,
            evaluation,
        } = parts;
        let payoff: Vec<f64> = payoff.into_iter().flatten().flatten().collect();
        let rates = rates
            .into_iter()
            .flatten()
            .map(|q| RateMatrix::from_rows(&q).expect("validated"))
            .collect();
        let payoff_norm = payoff.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        Ok(GameSpec {
            states,
            actions1,
            actions2,
            payoff,
            rates,
            evaluation,
            payoff_norm,
        })
    }

    /// Convenience constructor with generated names.
    pub fn from_tables(
        payoff: Vec<Vec<Vec<f64>>>,
        rates: Vec<Vec<Vec<Vec<f64>>>>,
        evaluation: Evaluation,
    ) -> std::result::Result<Self, Violation> {
        let s = payoff.len();
        let a = payoff.first().map_or(0, Vec::len);
        let b = payoff.first().and_then(|p| p.first()).map_or(0, Vec::len);
        GameSpec::new(GameParts {
            states: (0..s).map(|k| format!("z{k}")).collect(),
            actions1: (0..a).map(|k| format!("i{k}")).collect(),
            actions2: (0..b).map(|k| format!("j{k}")).collect(),
            payoff,
            rates,
            evaluation,
        })
    }

    pub fn to_parts(&self) -> GameParts {
        let (s, a, b) = (self.num_states(), self.num_actions1(), self.num_actions2());
        GameParts {
            states: self.states.clone(),
            actions1: self.actions1.clone(),
            actions2: self.actions2.clone(),
            payoff: (0..s)
                .map(|z| {
                    (0..a)
                        .map(|i| (0..b).map(|j| self.payoff(z, i, j)).collect())
                        .collect()
                })
                .collect(),
            rates: (0..a)
                .map(|i| {
                    (0..b)
                        .map(|j| self.rates(i, j).matrix().to_rows())
                        .collect()
                })
                .collect(),
            evaluation: self.evaluation.clone(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions1(&self) -> usize {
        self.actions1.len()
    }

    pub fn num_actions2(&self) -> usize {
        self.actions2.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn action1_names(&self) -> &[String] {
        &self.actions1
    }

    pub fn action2_names(&self) -> &[String] {
        &self.actions2
    }

    pub fn payoff(&self, z: usize, i: usize, j: usize) -> f64 {
        let (a, b) = (self.num_actions1(), self.num_actions2());
        self.payoff[(z * a + i) * b + j]
    }

    /// Payoff column `g(·, i, j)` over states.
    pub fn payoff_vector(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.num_states())
            .map(|z| self.payoff(z, i, j))
            .collect()
    }

    /// The A×B stage matrix `g(z, ·, ·)`.
    pub fn payoff_matrix(&self, z: usize) -> Matrix {
        Matrix::from_fn(self.num_actions1(), self.num_actions2(), |i, j| {
            self.payoff(z, i, j)
        })
    }

    pub fn rates(&self, i: usize, j: usize) -> &RateMatrix {
        &self.rates[i * self.num_actions2() + j]
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }

    /// Sup norm ‖g‖ of the payoff tensor.
    pub fn payoff_norm(&self) -> f64 {
        self.payoff_norm
    }

    /// Largest exit rate over all action pairs.
    pub fn max_exit_rate(&self) -> f64 {
        self.rates
            .iter()
            .map(RateMatrix::max_exit_rate)
            .fold(0.0, f64::max)
    }

    pub fn with_evaluation(&self, evaluation: Evaluation) -> GameSpec {
        GameSpec {
            evaluation,
            ..self.clone()
        }
    }

    /// Same game with `c` added to every payoff entry.
    pub fn with_payoff_shift(&self, c: f64) -> GameSpec {
        let payoff: Vec<f64> = self.payoff.iter().map(|x| x + c).collect();
        let payoff_norm = payoff.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        GameSpec {
            payoff,
            payoff_norm,
            ..self.clone()
        }
    }

    /// The uncontrolled game obtained by freezing both players on their first
    /// actions.
    pub fn restrict_to_first_actions(&self) -> GameSpec {
        let mut parts = self.to_parts();
        parts.actions1.truncate(1);
        parts.actions2.truncate(1);
        for pz in &mut parts.payoff {
            pz.truncate(1);
            pz[0].truncate(1);
        }
        parts.rates.truncate(1);
        parts.rates[0].truncate(1);
        GameSpec::new(parts).expect("restriction of a valid game")
    }
}

/// Seeded random game: payoffs uniform in `[-1, 1]`, off-diagonal rates
/// uniform in `[0, rate_scale]`, exponential evaluation with `rho = 1`.
pub fn random_instance(seed: u64, states: usize, a: usize, b: usize, rate_scale: f64) -> GameSpec {
    assert!(states >= 1 && a >= 1 && b >= 1, "sizes must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payoff = (0..states)
        .map(|_| {
            (0..a)
                .map(|_| (0..b).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect()
        })
        .collect();
    let rates = (0..a)
        .map(|_| {
            (0..b)
                .map(|_| random_rate_rows(&mut rng, states, rate_scale))
                .collect()
        })
        .collect();
    GameSpec::from_tables(payoff, rates, Evaluation::exponential(1.0).unwrap())
        .expect("generated instances satisfy every invariant")
}

/// Seeded generator with off-diagonal entries uniform in `[0, rate_scale]`.
pub fn random_rate_matrix(seed: u64, states: usize, rate_scale: f64) -> RateMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RateMatrix::from_rows(&random_rate_rows(&mut rng, states, rate_scale)).expect("valid generator")
}

fn random_rate_rows(rng: &mut ChaCha8Rng, n: usize, rate_scale: f64) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; n]; n];
    for (r, row) in rows.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            if r != c && rate_scale > 0.0 {
                *x = rng.gen_range(0.0..=rate_scale);
            }
        }
        let off: f64 = row.iter().sum();
        row[r] = -off;
    }
    rows
}
