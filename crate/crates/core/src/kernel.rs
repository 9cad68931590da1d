//! Transition semigroup `P^h = exp(h q)` of the controlled chain, its action
//! on beliefs and functions, and the payoff collected during one stage.

use crate::error::{Error, Result};
use crate::game::{EvaluationKind, GameSpec, RateMatrix};
use crate::linalg::{self, Matrix};
use crate::quad;

/// Mass of the Poisson weights left out of the uniformization series.
const POISSON_TAIL: f64 = 1e-14;
/// Condition estimates above this are reported as errors.
const MAX_CONDITION: f64 = 1e12;
const SIMPLEX_TOL: f64 = 1e-10;
/// Quadrature panels per stage for tabulated evaluations.
const STAGE_PANELS: usize = 4;

/// Row-stochastic matrix `P^h`, remembering the `h` that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    matrix: Matrix,
    horizon: f64,
}

impl StochasticMatrix {
    pub fn identity(n: usize) -> Self {
        StochasticMatrix {
            matrix: Matrix::identity(n),
            horizon: 0.0,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn row(&self, z: usize) -> &[f64] {
        self.matrix.row(z)
    }
}

impl AsRef<Matrix> for StochasticMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.matrix
    }
}

impl AsRef<Matrix> for RateMatrix {
    fn as_ref(&self) -> &Matrix {
        self.matrix()
    }
}

/// `exp(h q)` by uniformization.
///
/// With `Λ = max_z |q[z][z]|` and `U = I + q/Λ`,
/// `exp(hq) = Σ_k e^{-Λh} (Λh)^k / k! · U^k`. Every term is stochastic, so the
/// result stays stochastic. When `Λh > 1` the series is evaluated at
/// `h / 2^s` and squared `s` times, which keeps the Poisson weights away from
/// underflow.
pub fn transition(q: &RateMatrix, h: f64) -> Result<StochasticMatrix> {
    if h < 0.0 || h.is_nan() {
        return Err(Error::NegativeDuration(h));
    }
    let n = q.size();
    let lambda = q.max_exit_rate();
    if lambda == 0.0 || h == 0.0 {
        return Ok(StochasticMatrix {
            matrix: Matrix::identity(n),
            horizon: h,
        });
    }
    let mut a = lambda * h;
    let mut squarings = 0;
    while a > 1.0 {
        a *= 0.5;
        squarings += 1;
    }
    let u = Matrix::identity(n).add(&q.matrix().scale(1.0 / lambda));

    let mut weight = (-a).exp();
    let mut total_weight = weight;
    let mut power = Matrix::identity(n);
    let mut sum = power.scale(weight);
    let mut k = 0usize;
    while 1.0 - total_weight > POISSON_TAIL && k < 200 {
        k += 1;
        weight *= a / k as f64;
        power = power.mul(&u);
        sum = sum.add(&power.scale(weight));
        total_weight += weight;
    }
    let mut p = sum.scale(1.0 / total_weight);
    for _ in 0..squarings {
        p = p.mul(&p);
    }
    for z in 0..n {
        for x in p.row_mut(z) {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
    }
    Ok(StochasticMatrix {
        matrix: p,
        horizon: h,
    })
}

/// `ζ * P`: law after one transition, starting from law `ζ`.
pub fn push_belief(zeta: &[f64], p: &StochasticMatrix) -> Result<Vec<f64>> {
    check_simplex(zeta)?;
    if zeta.len() != p.size() {
        return Err(Error::DimensionMismatch {
            expected: p.size(),
            got: zeta.len(),
        });
    }
    let mut out = p.matrix.left_mul_vec(zeta);
    for x in &mut out {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Ok(out)
}

pub(crate) fn check_simplex(zeta: &[f64]) -> Result<()> {
    let sum: f64 = zeta.iter().sum();
    let neg = zeta.iter().fold(0.0f64, |m, x| m.max(-x));
    let deviation = (sum - 1.0).abs().max(neg);
    if deviation > SIMPLEX_TOL || zeta.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotInSimplex { deviation });
    }
    Ok(())
}

/// `μ ∘ f`: `(μ ∘ f)[z] = Σ_{z'} μ[z, z'] f(z')`.
pub fn act_on_function<M: AsRef<Matrix>>(mu: &M, f: &[f64]) -> Result<Vec<f64>> {
    let m = mu.as_ref();
    if m.cols() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: m.cols(),
            got: f.len(),
        });
    }
    Ok(m.mul_vec(f))
}

/// How the payoff flow is collected during a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffMode {
    /// `∫ g(Z_s, i, j) k(s) ds` along the moving state.
    #[default]
    Flow,
    /// `g(Ẑ_n, i, j) ∫ k(s) ds` with the state frozen at the decision time.
    Frozen,
}

/// `E_z ∫_{t_n}^{t_n+δ} g(Z_s, i, j) k(s) ds`.
pub fn stage_payoff(
    spec: &GameSpec,
    z: usize,
    i: usize,
    j: usize,
    t_n: f64,
    delta: f64,
) -> Result<f64> {
    let kernel = PairKernel::new(spec, i, j, delta, PayoffMode::Flow)?;
    Ok(kernel.payoff(spec, t_n)[z])
}

/// `g(z, i, j) ∫_{t_n}^{t_n+δ} k(s) ds`.
pub fn stage_payoff_frozen(
    spec: &GameSpec,
    z: usize,
    i: usize,
    j: usize,
    t_n: f64,
    delta: f64,
) -> Result<f64> {
    check_duration(delta)?;
    Ok(spec.payoff(z, i, j) * spec.evaluation().mass(t_n, t_n + delta))
}

/// Stage payoff by composite order-8 quadrature of `k(t_n + s) [e^{sq} g](z)`,
/// whatever the evaluation.
pub fn stage_payoff_by_quadrature(
    spec: &GameSpec,
    z: usize,
    i: usize,
    j: usize,
    t_n: f64,
    delta: f64,
) -> Result<f64> {
    check_duration(delta)?;
    let g = spec.payoff_vector(i, j);
    let q = spec.rates(i, j);
    let mut acc = 0.0;
    for (s, w) in quad::composite_rule(0.0, delta, STAGE_PANELS) {
        let p = transition(q, s)?;
        acc += w * spec.evaluation().density(t_n + s) * linalg::dot(p.row(z), &g);
    }
    Ok(acc)
}

fn check_duration(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stage duration must be positive, got {delta}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum StagePayoff {
    /// Payoff vector of a stage starting at `t = 0`; later stages scale by
    /// `e^{-ρ t_n}`.
    Exponential {
        rho: f64,
        at_zero: Vec<f64>,
    },
    /// `(s, w, e^{sq} g)` for each quadrature node of `[0, δ]`.
    Nodes(Vec<(f64, f64, Vec<f64>)>),
    Frozen(Vec<f64>),
}

/// Everything one action pair needs for a stage of duration `δ`.
#[derive(Debug, Clone)]
pub struct PairKernel {
    delta: f64,
    transition: StochasticMatrix,
    payoff: StagePayoff,
}

impl PairKernel {
    pub fn new(spec: &GameSpec, i: usize, j: usize, delta: f64, mode: PayoffMode) -> Result<Self> {
        check_duration(delta)?;
        let q = spec.rates(i, j);
        let p = transition(q, delta)?;
        let g = spec.payoff_vector(i, j);
        let payoff = match (mode, spec.evaluation().kind()) {
            (PayoffMode::Frozen, _) => StagePayoff::Frozen(g),
            (PayoffMode::Flow, EvaluationKind::Exponential { rho }) => {
                // ρ (ρI − q)^{-1} (I − e^{−ρδ} P^δ) g
                let rho = *rho;
                let n = spec.num_states();
                let pg = p.matrix().mul_vec(&g);
                let decay = (-rho * delta).exp();
                let rhs: Vec<f64> = g
                    .iter()
                    .zip(&pg)
                    .map(|(a, b)| rho * (a - decay * b))
                    .collect();
                let lhs = Matrix::identity(n).scale(rho).sub(q.matrix());
                let (sol, cond) = linalg::solve(&lhs, &rhs)?;
                if cond > MAX_CONDITION {
                    return Err(Error::IllConditioned(cond));
                }
                StagePayoff::Exponential { rho, at_zero: sol }
            }
            (PayoffMode::Flow, EvaluationKind::Tabulated { .. }) => {
                let mut nodes = Vec::with_capacity(8 * STAGE_PANELS);
                for (s, w) in quad::composite_rule(0.0, delta, STAGE_PANELS) {
                    let ps = transition(q, s)?;
                    nodes.push((s, w, ps.matrix().mul_vec(&g)));
                }
                StagePayoff::Nodes(nodes)
            }
        };
        Ok(PairKernel {
            delta,
            transition: p,
            payoff,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn transition(&self) -> &StochasticMatrix {
        &self.transition
    }

    /// Stage payoff vector over initial states for a stage starting at `t_n`.
    pub fn payoff(&self, spec: &GameSpec, t_n: f64) -> Vec<f64> {
        match &self.payoff {
            StagePayoff::Exponential { rho, at_zero } => {
                let scale = (-rho * t_n).exp();
                at_zero.iter().map(|x| x * scale).collect()
            }
            StagePayoff::Nodes(nodes) => {
                let eval = spec.evaluation();
                let mut out = vec![0.0; spec.num_states()];
                for (s, w, v) in nodes {
                    let c = w * eval.density(t_n + s);
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += c * x;
                    }
                }
                out
            }
            StagePayoff::Frozen(g) => {
                let mass = spec.evaluation().mass(t_n, t_n + self.delta);
                g.iter().map(|x| x * mass).collect()
            }
        }
    }
}

/// Per-pair kernels for one stage duration, indexed `i * B + j`.
#[derive(Debug, Clone)]
pub struct StageKernel {
    delta: f64,
    pairs: Vec<PairKernel>,
    actions2: usize,
}

impl StageKernel {
    pub fn new(spec: &GameSpec, delta: f64, mode: PayoffMode) -> Result<Self> {
        let (a, b) = (spec.num_actions1(), spec.num_actions2());
        let mut pairs = Vec::with_capacity(a * b);
        for i in 0..a {
            for j in 0..b {
                pairs.push(PairKernel::new(spec, i, j, delta, mode)?);
            }
        }
        Ok(StageKernel {
            delta,
            pairs,
            actions2: b,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairKernel {
        &self.pairs[i * self.actions2 + j]
    }

    /// Stage payoff vectors at `t_n` for every pair, indexed `i * B + j`.
    pub fn payoffs(&self, spec: &GameSpec, t_n: f64) -> Vec<Vec<f64>> {
        self.pairs.iter().map(|p| p.payoff(spec, t_n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{random_instance, random_rate_matrix, Evaluation};

    fn symmetric() -> RateMatrix {
        RateMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn zero_rates_give_identity() {
        let p = transition(&RateMatrix::zero(3), 2.0).unwrap();
        assert_eq!(p.matrix(), &Matrix::identity(3));
    }

    #[test]
    fn symmetric_two_state_closed_form() {
        for h in [0.01, 0.3, 1.0, 4.0, 25.0] {
            let p = transition(&symmetric(), h).unwrap();
            let e = (-2.0 * h).exp();
            let stay = (1.0 + e) / 2.0;
            let go = (1.0 - e) / 2.0;
            assert!((p.matrix()[(0, 0)] - stay).abs() < 1e-12, "h = {h}");
            assert!((p.matrix()[(0, 1)] - go).abs() < 1e-12);
            assert!((p.matrix()[(1, 0)] - go).abs() < 1e-12);
            assert!((p.matrix()[(1, 1)] - stay).abs() < 1e-12);
        }
    }

    #[test]
    fn absorbing_chain() {
        let q = RateMatrix::from_rows(&[vec![-2.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let p = transition(&q, 0.5).unwrap();
        assert!((p.matrix()[(0, 0)] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((p.matrix()[(0, 0)] - 0.367_879).abs() < 1e-6);
        assert_eq!(p.matrix()[(1, 1)], 1.0);
    }

    #[test]
    fn negative_horizon_rejected() {
        assert!(matches!(
            transition(&symmetric(), -0.1),
            Err(Error::NegativeDuration(_))
        ));
    }

    #[test]
    fn first_order_expansion() {
        let q = random_rate_matrix(5, 4, 2.0);
        for h in [1e-3, 1e-4] {
            let p = transition(&q, h).unwrap();
            let lin = Matrix::identity(4).add(&q.matrix().scale(h));
            let err = p.matrix().sub(&lin).max_abs();
            assert!(
                err < 10.0 * h * h * q.max_exit_rate().powi(2),
                "h = {h}, err = {err}"
            );
        }
    }

    #[test]
    fn belief_push() {
        let p = transition(&symmetric(), 1.0).unwrap();
        let id = StochasticMatrix::identity(2);
        assert_eq!(push_belief(&[0.3, 0.7], &id).unwrap(), vec![0.3, 0.7]);
        assert_eq!(push_belief(&[1.0, 0.0], &p).unwrap(), p.row(0).to_vec());
        let mid = push_belief(&[0.5, 0.5], &p).unwrap();
        assert!((mid[0] - 0.5).abs() < 1e-15 && (mid[1] - 0.5).abs() < 1e-15);
        assert!(matches!(
            push_belief(&[0.6, 0.6], &p),
            Err(Error::NotInSimplex { .. })
        ));
    }

    #[test]
    fn function_action() {
        let p = transition(&random_rate_matrix(1, 3, 1.0), 0.7).unwrap();
        let f = [1.0, -2.0, 0.5];
        assert_eq!(
            act_on_function(&StochasticMatrix::identity(3), &f).unwrap(),
            f.to_vec()
        );
        for v in act_on_function(&p, &[4.0; 3]).unwrap() {
            assert!((v - 4.0).abs() < 1e-12);
        }
        let q = random_rate_matrix(2, 3, 1.0);
        for v in act_on_function(&q, &[4.0; 3]).unwrap() {
            assert!(v.abs() < 1e-12);
        }
        assert!(matches!(
            act_on_function(&p, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frozen_state_payoff() {
        let spec =
            random_instance(4, 3, 2, 2, 0.0).with_evaluation(Evaluation::exponential(0.7).unwrap());
        let (t, d): (f64, f64) = (0.4, 0.3);
        for z in 0..3 {
            let expected = spec.payoff(z, 1, 0) * (-0.7 * t).exp() * (1.0 - (-0.7 * d).exp());
            let flow = stage_payoff(&spec, z, 1, 0, t, d).unwrap();
            let frozen = stage_payoff_frozen(&spec, z, 1, 0, t, d).unwrap();
            assert!((flow - expected).abs() < 1e-14);
            assert!((frozen - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let spec =
            random_instance(9, 2, 2, 2, 1.5).with_evaluation(Evaluation::exponential(1.3).unwrap());
        for (t, d) in [(0.0, 0.2), (1.7, 0.05), (0.3, 1.0)] {
            for z in 0..2 {
                let a = stage_payoff(&spec, z, 0, 1, t, d).unwrap();
                let b = stage_payoff_by_quadrature(&spec, z, 0, 1, t, d).unwrap();
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn small_stage_limit() {
        let spec = random_instance(21, 3, 2, 2, 1.0);
        let t = 0.5;
        let k = spec.evaluation().density(t);
        for d in [1e-2, 1e-3] {
            let v = stage_payoff(&spec, 1, 1, 1, t, d).unwrap() / d;
            assert!((v - k * spec.payoff(1, 1, 1)).abs() < 5.0 * d, "d = {d}");
        }
    }

    #[test]
    fn zero_duration_rejected() {
        let spec = random_instance(1, 2, 1, 1, 1.0);
        assert!(stage_payoff(&spec, 0, 0, 0, 0.0, 0.0).is_err());
    }
}
