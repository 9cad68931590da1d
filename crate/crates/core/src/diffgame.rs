//! Deterministic zero-sum differential games on a box of `R^d`, `d ≤ 2`.
//!
//! The state follows `ż = f(z, i, j)` between decision times and the payoff
//! flow is `g(z, i, j)` weighted by the evaluation density. Dynamics and
//! payoffs are affine in the state for every action pair, which covers the
//! built-in families (zero, constant, linear, separable control) and the
//! lift of a finite game to the belief simplex.
//!
//! Three discretizations are solved by backward induction on a state grid:
//! pure sup-inf / inf-sup, the relaxed extension where the players commit to
//! mixed actions that average the vector field (`Γ^I`), and the random
//! extension where pure actions are drawn and the state follows the realized
//! pair (`Γ^II`).

use std::cell::Cell;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{Evaluation, GameSpec, Partition, Violation};
use crate::linalg::{self, Matrix};
use crate::matgame;
use crate::par;
use crate::quad;
use crate::settings::Settings;
use crate::table::{Stencil, ValueTable};

pub const MAX_DIM: usize = 2;

/// RK4 substeps are chosen so that `h L` stays below this.
const STEP_SCALE: f64 = 0.02;
/// Gauss-Legendre panels per stage for the payoff integral.
const STAGE_PANELS: usize = 2;
/// Sampled pairs per action pair when validating Lipschitz bounds.
const LIPSCHITZ_SAMPLES: usize = 256;
const LIPSCHITZ_SLACK: f64 = 1.01;
/// Lifted games enumerate action profiles; this caps `A^S B^S`.
const MAX_LIFTED_PAIRS: usize = 4096;

/// Named dynamics families. Matrices are given as rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// `f ≡ 0`.
    Zero,
    /// `f(z, i, j) = v[i][j]`.
    Constant { velocity: Vec<Vec<Vec<f64>>> },
    /// `f(z, i, j) = M[i][j] z + c[i][j]`.
    Linear {
        matrix: Vec<Vec<Vec<Vec<f64>>>>,
        offset: Vec<Vec<Vec<f64>>>,
    },
    /// `f(z, i, j) = M z + u[i] + w[j]`.
    SeparableControl {
        matrix: Vec<Vec<f64>>,
        row_drift: Vec<Vec<f64>>,
        col_drift: Vec<Vec<f64>>,
    },
}

impl Dynamics {
    pub fn family(&self) -> &'static str {
        match self {
            Dynamics::Zero => "zero",
            Dynamics::Constant { .. } => "constant",
            Dynamics::Linear { .. } => "linear",
            Dynamics::SeparableControl { .. } => "separable-control",
        }
    }
}

/// Unvalidated description of a differential game.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffGameParts {
    /// Per-axis `(lower, upper)`.
    pub bounds: Vec<(f64, f64)>,
    pub dynamics: Dynamics,
    /// `g(z, i, j) = payoff[i][j] + payoff_gradient[i][j] · z`.
    pub payoff: Vec<Vec<f64>>,
    pub payoff_gradient: Option<Vec<Vec<Vec<f64>>>>,
    pub lipschitz_f: Option<f64>,
    pub lipschitz_g: Option<f64>,
    pub evaluation: Evaluation,
}

/// `z ↦ M z + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField {
    pub matrix: Matrix,
    pub offset: Vec<f64>,
}

impl AffineField {
    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.offset[k] + linalg::dot(self.matrix.row(k), z);
        }
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.eval_into(z, &mut out);
        out
    }
}

/// `z ↦ c + d · z`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePayoff {
    pub constant: f64,
    pub gradient: Vec<f64>,
}

impl AffinePayoff {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + linalg::dot(&self.gradient, z)
    }
}

#[derive(Debug, Clone)]
pub struct DiffGameSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    actions1: usize,
    actions2: usize,
    family: &'static str,
    fields: Vec<AffineField>,
    payoffs: Vec<AffinePayoff>,
    lipschitz_f: f64,
    lipschitz_g: f64,
    evaluation: Evaluation,
}

fn shape(
    what: impl Into<String>,
    expected: usize,
    got: usize,
) -> std::result::Result<(), Violation> {
    if expected == got {
        Ok(())
    } else {
        Err(Violation::Shape {
            what: what.into(),
            expected,
            got,
        })
    }
}

fn finite(what: impl Fn() -> String, values: &[f64]) -> std::result::Result<(), Violation> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Violation::NonFinite { what: what() })
    }
}

fn matrix_from(what: &str, rows: &[Vec<f64>], d: usize) -> std::result::Result<Matrix, Violation> {
    shape(format!("{what} rows"), d, rows.len())?;
    for (r, row) in rows.iter().enumerate() {
        shape(format!("{what} row {r}"), d, row.len())?;
        finite(|| format!("{what} row {r}"), row)?;
    }
    Ok(Matrix::from_fn(d, d, |r, c| rows[r][c]))
}

fn vector_from(what: &str, v: &[f64], d: usize) -> std::result::Result<Vec<f64>, Violation> {
    shape(what, d, v.len())?;
    finite(|| what.to_string(), v)?;
    Ok(v.to_vec())
}

impl DiffGameSpec {
    pub fn new(parts: DiffGameParts) -> std::result::Result<Self, Violation> {
        let d = parts.bounds.len();
        if d > MAX_DIM {
            return Err(Violation::Domain(format!(
                "at most {MAX_DIM} dimensions are supported, got {d}"
            )));
        }
        for (k, &(lo, hi)) in parts.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Violation::Domain(format!(
                    "axis {k} needs finite bounds with lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        let a = parts.payoff.len();
        if a == 0 {
            return Err(Violation::Empty("payoff"));
        }
        let b = parts.payoff[0].len();
        if b == 0 {
            return Err(Violation::Empty("payoff row"));
        }
        for (i, row) in parts.payoff.iter().enumerate() {
            shape(format!("payoff[{i}]"), b, row.len())?;
            finite(|| format!("payoff[{i}]"), row)?;
        }

        let mut payoffs = Vec::with_capacity(a * b);
        for i in 0..a {
            for j in 0..b {
                let gradient = match &parts.payoff_gradient {
                    None => vec![0.0; d],
                    Some(grad) => {
                        shape("payoff_gradient", a, grad.len())?;
                        shape(format!("payoff_gradient[{i}]"), b, grad[i].len())?;
                        vector_from(&format!("payoff_gradient[{i}][{j}]"), &grad[i][j], d)?
                    }
                };
                payoffs.push(AffinePayoff {
                    constant: parts.payoff[i][j],
                    gradient,
                });
            }
        }

        let mut fields = Vec::with_capacity(a * b);
        for i in 0..a {
            for j in 0..b {
                let field = match &parts.dynamics {
                    Dynamics::Zero => AffineField {
                        matrix: Matrix::zeros(d, d),
                        offset: vec![0.0; d],
                    },
                    Dynamics::Constant { velocity } => {
                        shape("velocity", a, velocity.len())?;
                        shape(format!("velocity[{i}]"), b, velocity[i].len())?;
                        AffineField {
                            matrix: Matrix::zeros(d, d),
                            offset: vector_from(
                                &format!("velocity[{i}][{j}]"),
                                &velocity[i][j],
                                d,
                            )?,
                        }
                    }
                    Dynamics::Linear { matrix, offset } => {
                        shape("matrix", a, matrix.len())?;
                        shape(format!("matrix[{i}]"), b, matrix[i].len())?;
                        shape("offset", a, offset.len())?;
                        shape(format!("offset[{i}]"), b, offset[i].len())?;
                        AffineField {
                            matrix: matrix_from(&format!("matrix[{i}][{j}]"), &matrix[i][j], d)?,
                            offset: vector_from(&format!("offset[{i}][{j}]"), &offset[i][j], d)?,
                        }
                    }
                    Dynamics::SeparableControl {
                        matrix,
                        row_drift,
                        col_drift,
                    } => {
                        shape("row_drift", a, row_drift.len())?;
                        shape("col_drift", b, col_drift.len())?;
                        let u = vector_from(&format!("row_drift[{i}]"), &row_drift[i], d)?;
                        let w = vector_from(&format!("col_drift[{j}]"), &col_drift[j], d)?;
                        AffineField {
                            matrix: matrix_from("matrix", matrix, d)?,
                            offset: u.iter().zip(&w).map(|(x, y)| x + y).collect(),
                        }
                    }
                };
                fields.push(field);
            }
        }

        let exact_f = fields
            .iter()
            .map(|f| f.matrix.norm_inf())
            .fold(0.0, f64::max);
        let exact_g = payoffs
            .iter()
            .map(|p| p.gradient.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let declared = |what: &'static str, v: Option<f64>, exact: f64| match v {
            Some(l) if !(l > 0.0 && l.is_finite()) => Err(Violation::Lipschitz {
                what,
                declared: l,
                observed: exact,
            }),
            Some(l) => Ok(l),
            // Positive even for state-independent data.
            None => Ok(exact.max(1e-12)),
        };
        let lipschitz_f = declared("dynamics", parts.lipschitz_f, exact_f)?;
        let lipschitz_g = declared("payoff", parts.lipschitz_g, exact_g)?;

        let spec = DiffGameSpec {
            lower: parts.bounds.iter().map(|b| b.0).collect(),
            upper: parts.bounds.iter().map(|b| b.1).collect(),
            actions1: a,
            actions2: b,
            family: parts.dynamics.family(),
            fields,
            payoffs,
            lipschitz_f,
            lipschitz_g,
            evaluation: parts.evaluation,
        };
        spec.check_lipschitz_by_sampling()?;
        Ok(spec)
    }

    /// Largest sampled difference quotients `(f, g)` over random pairs of
    /// points in the box, in the sup norm.
    pub fn sampled_lipschitz(&self) -> (f64, f64) {
        let d = self.dim();
        if d == 0 {
            return (0.0, 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x11f5);
        let (mut qf, mut qg) = (0.0f64, 0.0f64);
        for p in 0..self.fields.len() {
            for _ in 0..LIPSCHITZ_SAMPLES {
                let z1 = self.sample_point(&mut rng);
                let z2 = self.sample_point(&mut rng);
                let dz = linalg::sup_dist(&z1, &z2);
                if dz == 0.0 {
                    continue;
                }
                let df = linalg::sup_dist(&self.fields[p].eval(&z1), &self.fields[p].eval(&z2));
                let dg = (self.payoffs[p].eval(&z1) - self.payoffs[p].eval(&z2)).abs();
                qf = qf.max(df / dz);
                qg = qg.max(dg / dz);
            }
        }
        (qf, qg)
    }

    fn check_lipschitz_by_sampling(&self) -> std::result::Result<(), Violation> {
        let (qf, qg) = self.sampled_lipschitz();
        if qf > self.lipschitz_f * LIPSCHITZ_SLACK {
            return Err(Violation::Lipschitz {
                what: "dynamics",
                declared: self.lipschitz_f,
                observed: qf,
            });
        }
        if qg > self.lipschitz_g * LIPSCHITZ_SLACK {
            return Err(Violation::Lipschitz {
                what: "payoff",
                declared: self.lipschitz_g,
                observed: qg,
            });
        }
        Ok(())
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn num_actions1(&self) -> usize {
        self.actions1
    }

    pub fn num_actions2(&self) -> usize {
        self.actions2
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn lipschitz_f(&self) -> f64 {
        self.lipschitz_f
    }

    pub fn lipschitz_g(&self) -> f64 {
        self.lipschitz_g
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }

    pub fn with_evaluation(&self, evaluation: Evaluation) -> DiffGameSpec {
        DiffGameSpec {
            evaluation,
            ..self.clone()
        }
    }

    pub fn field(&self, i: usize, j: usize) -> &AffineField {
        &self.fields[i * self.actions2 + j]
    }

    pub fn payoff_fn(&self, i: usize, j: usize) -> &AffinePayoff {
        &self.payoffs[i * self.actions2 + j]
    }

    pub fn velocity(&self, z: &[f64], i: usize, j: usize) -> Vec<f64> {
        self.field(i, j).eval(z)
    }

    pub fn payoff(&self, z: &[f64], i: usize, j: usize) -> f64 {
        self.payoff_fn(i, j).eval(z)
    }

    /// `Σ x_i y_j f(·, i, j)`: the averaged field, still affine.
    pub fn mixed_field(&self, x: &[f64], y: &[f64]) -> AffineField {
        let d = self.dim();
        let mut matrix = Matrix::zeros(d, d);
        let mut offset = vec![0.0; d];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &yj) in y.iter().enumerate() {
                let w = xi * yj;
                if w == 0.0 {
                    continue;
                }
                let f = self.field(i, j);
                matrix = matrix.add(&f.matrix.scale(w));
                for (o, c) in offset.iter_mut().zip(&f.offset) {
                    *o += w * c;
                }
            }
        }
        AffineField { matrix, offset }
    }

    pub fn mixed_payoff(&self, x: &[f64], y: &[f64]) -> AffinePayoff {
        let mut out = AffinePayoff {
            constant: 0.0,
            gradient: vec![0.0; self.dim()],
        };
        for (i, &xi) in x.iter().enumerate() {
            for (j, &yj) in y.iter().enumerate() {
                let w = xi * yj;
                let g = self.payoff_fn(i, j);
                out.constant += w * g.constant;
                for (o, c) in out.gradient.iter_mut().zip(&g.gradient) {
                    *o += w * c;
                }
            }
        }
        out
    }

    /// `sup |g|` over the box; attained at a corner since `g` is affine.
    pub fn payoff_bound(&self) -> f64 {
        let d = self.dim();
        let mut best = 0.0f64;
        for corner in 0..(1usize << d) {
            let z: Vec<f64> = (0..d)
                .map(|k| {
                    if corner >> k & 1 == 1 {
                        self.upper[k]
                    } else {
                        self.lower[k]
                    }
                })
                .collect();
            for p in &self.payoffs {
                best = best.max(p.eval(&z).abs());
            }
        }
        best
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim()
            && z.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Projects onto the box; true when any coordinate moved.
    pub fn clamp(&self, z: &mut [f64]) -> bool {
        let mut moved = false;
        for (k, v) in z.iter_mut().enumerate() {
            let c = v.clamp(self.lower[k], self.upper[k]);
            if c != *v {
                moved = true;
                *v = c;
            }
        }
        moved
    }
}

/// Classical RK4 for an affine autonomous field, without clamping.
fn integrate(field: &AffineField, z: &[f64], h: f64, lipschitz: f64) -> Vec<f64> {
    let d = z.len();
    if d == 0 || h <= 0.0 {
        return z.to_vec();
    }
    let n = ((h * lipschitz / STEP_SCALE).ceil() as usize).max(1);
    let dt = h / n as f64;
    let mut y = z.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
    );
    for _ in 0..n {
        field.eval_into(&y, &mut k1);
        for k in 0..d {
            tmp[k] = y[k] + 0.5 * dt * k1[k];
        }
        field.eval_into(&tmp, &mut k2);
        for k in 0..d {
            tmp[k] = y[k] + 0.5 * dt * k2[k];
        }
        field.eval_into(&tmp, &mut k3);
        for k in 0..d {
            tmp[k] = y[k] + dt * k3[k];
        }
        field.eval_into(&tmp, &mut k4);
        for k in 0..d {
            y[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
    }
    y
}

/// `Φ^h(z; i, j)` and whether the box clamped it.
pub fn flow_with_clamp(
    spec: &DiffGameSpec,
    z: &[f64],
    i: usize,
    j: usize,
    h: f64,
) -> (Vec<f64>, bool) {
    debug_assert!(h >= 0.0);
    let mut out = integrate(spec.field(i, j), z, h, spec.lipschitz_f);
    let clamped = spec.clamp(&mut out);
    (out, clamped)
}

/// `Φ^h(z; i, j)`: the state after playing `(i, j)` for `h`.
pub fn flow(spec: &DiffGameSpec, z: &[f64], i: usize, j: usize, h: f64) -> Vec<f64> {
    flow_with_clamp(spec, z, i, j, h).0
}

/// `Φ̄^h(z; x, y)`: the state under the averaged field. This is not the
/// average of the pure flows.
pub fn flow_relaxed(spec: &DiffGameSpec, z: &[f64], x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let mut out = integrate(&spec.mixed_field(x, y), z, h, spec.lipschitz_f);
    spec.clamp(&mut out);
    out
}

/// Trajectory of an affine field from `z`: payoff integral against the
/// evaluation from `t`, end state, and whether anything clamped.
fn run_stage(
    spec: &DiffGameSpec,
    field: &AffineField,
    payoff: &AffinePayoff,
    z: &[f64],
    t: f64,
    rule: &[(f64, f64)],
    delta: f64,
) -> (f64, Vec<f64>, bool) {
    let mut state = z.to_vec();
    let mut s_prev = 0.0;
    let mut acc = 0.0;
    let mut clamped = false;
    let mut probe = state.clone();
    for &(s, w) in rule {
        state = integrate(field, &state, s - s_prev, spec.lipschitz_f);
        s_prev = s;
        probe.copy_from_slice(&state);
        clamped |= spec.clamp(&mut probe);
        acc += w * spec.evaluation.density(t + s) * payoff.eval(&probe);
    }
    state = integrate(field, &state, delta - s_prev, spec.lipschitz_f);
    clamped |= spec.clamp(&mut state);
    (acc, state, clamped)
}

/// `∫_0^δ k(t + s) g(Φ^s(z; i, j), i, j) ds` by composite Gauss-Legendre.
pub fn stage_payoff(spec: &DiffGameSpec, z: &[f64], i: usize, j: usize, t: f64, delta: f64) -> f64 {
    let rule = quad::composite_rule(0.0, delta, STAGE_PANELS);
    run_stage(
        spec,
        spec.field(i, j),
        spec.payoff_fn(i, j),
        z,
        t,
        &rule,
        delta,
    )
    .0
}

/// Regular tensor grid over the box, read by multilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
}

impl StateGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: counts.len(),
            });
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::InvalidArgument(
                "every grid axis needs at least 2 nodes".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument(
                "grid bounds must satisfy lower < upper".into(),
            ));
        }
        Ok(StateGrid {
            lower,
            upper,
            counts,
        })
    }

    /// Grid covering the box of `spec` with `nodes` per axis.
    pub fn for_spec(spec: &DiffGameSpec, nodes: usize) -> Result<Self> {
        StateGrid::new(
            spec.lower.clone(),
            spec.upper.clone(),
            vec![nodes; spec.dim()],
        )
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.counts[axis] - 1) as f64
    }

    /// Axis indices of node `k`, first axis fastest.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let r = k % c;
                k /= c;
                r
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .rev()
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        self.multi_index(k)
            .into_iter()
            .enumerate()
            .map(|(a, i)| {
                if i + 1 == self.counts[a] {
                    self.upper[a]
                } else {
                    self.lower[a] + i as f64 * self.spacing(a)
                }
            })
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Index of the node nearest to `z`.
    pub fn nearest(&self, z: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let x = ((z[a] - self.lower[a]) / self.spacing(a)).round();
                (x.max(0.0) as usize).min(self.counts[a] - 1)
            })
            .collect();
        self.flat_index(&idx)
    }

    /// Multilinear weights of the cell containing `z` (clamped to the grid).
    pub fn stencil(&self, z: &[f64]) -> Stencil {
        let d = self.dim();
        let mut base = Vec::with_capacity(d);
        let mut frac = Vec::with_capacity(d);
        for (a, &za) in z.iter().enumerate().take(d) {
            let x =
                ((za - self.lower[a]) / self.spacing(a)).clamp(0.0, (self.counts[a] - 1) as f64);
            let c = (x.floor() as usize).min(self.counts[a] - 2);
            base.push(c);
            frac.push(x - c as f64);
        }
        let mut indices = Vec::with_capacity(1 << d);
        let mut weights = Vec::with_capacity(1 << d);
        let mut idx = base.clone();
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    idx[a] = base[a] + 1;
                    w *= frac[a];
                } else {
                    idx[a] = base[a];
                    w *= 1.0 - frac[a];
                }
            }
            indices.push(self.flat_index(&idx));
            weights.push(w);
        }
        Stencil { indices, weights }
    }

    pub fn interpolate(&self, values: &[f64], z: &[f64]) -> f64 {
        self.stencil(z).apply(values)
    }
}

/// Largest difference quotient of any time slice of `table` between
/// neighbouring grid nodes.
pub fn spatial_quotient(grid: &StateGrid, table: &ValueTable) -> f64 {
    let mut best = 0.0f64;
    for slice in table.values() {
        for k in 0..grid.len() {
            let idx = grid.multi_index(k);
            for a in 0..grid.dim() {
                if idx[a] + 1 < grid.counts[a] {
                    let mut nb = idx.clone();
                    nb[a] += 1;
                    let q = (slice[grid.flat_index(&nb)] - slice[k]).abs() / grid.spacing(a);
                    best = best.max(q);
                }
            }
        }
    }
    best
}

/// Which pure discretized value to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `sup_I inf_J`: Player 1 moves first and is observed.
    MaxMin,
    /// `inf_J sup_I`.
    MinMax,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Number of (stage duration, node, action pair) trajectories that
    /// touched the box boundary.
    pub clamped_flows: usize,
    /// `(stage, node)` cells whose inner optimization hit its budget.
    pub flagged_cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffGameValue {
    pub table: ValueTable,
    pub diagnostics: Diagnostics,
}

impl DiffGameValue {
    pub fn value_at(&self, grid: &StateGrid, z: &[f64]) -> f64 {
        grid.interpolate(self.table.initial(), z)
    }
}

/// Per-δ data for pure action pairs: weighted payoff samples at the
/// quadrature nodes and the stencil of the end state.
struct PureStage {
    rule: Vec<(f64, f64)>,
    /// `[node][pair][q] = w_q g(Φ^{s_q} z)`.
    samples: Vec<Vec<Vec<f64>>>,
    ends: Vec<Vec<Stencil>>,
    clamped: usize,
}

impl PureStage {
    fn new(spec: &DiffGameSpec, grid: &StateGrid, delta: f64, settings: &Settings) -> PureStage {
        let rule = quad::composite_rule(0.0, delta, STAGE_PANELS);
        let pairs = spec.actions1 * spec.actions2;
        let per_node = par::map_indices(settings.execution, grid.len(), |k| {
            let z = grid.node(k);
            let mut samples = Vec::with_capacity(pairs);
            let mut ends = Vec::with_capacity(pairs);
            let mut clamped = 0;
            for p in 0..pairs {
                let (field, payoff) = (&spec.fields[p], &spec.payoffs[p]);
                let mut state = z.clone();
                let mut probe = z.clone();
                let mut s_prev = 0.0;
                let mut row = Vec::with_capacity(rule.len());
                let mut hit = false;
                for &(s, w) in &rule {
                    state = integrate(field, &state, s - s_prev, spec.lipschitz_f);
                    s_prev = s;
                    probe.copy_from_slice(&state);
                    hit |= spec.clamp(&mut probe);
                    row.push(w * payoff.eval(&probe));
                }
                state = integrate(field, &state, delta - s_prev, spec.lipschitz_f);
                hit |= spec.clamp(&mut state);
                clamped += hit as usize;
                samples.push(row);
                ends.push(grid.stencil(&state));
            }
            (samples, ends, clamped)
        });
        let mut out = PureStage {
            rule,
            samples: Vec::with_capacity(grid.len()),
            ends: Vec::with_capacity(grid.len()),
            clamped: 0,
        };
        for (s, e, c) in per_node {
            out.samples.push(s);
            out.ends.push(e);
            out.clamped += c;
        }
        out
    }

    fn matrix(&self, spec: &DiffGameSpec, k: usize, t: f64, next: &[f64]) -> Matrix {
        let dens: Vec<f64> = self
            .rule
            .iter()
            .map(|(s, _)| spec.evaluation.density(t + s))
            .collect();
        Matrix::from_fn(spec.actions1, spec.actions2, |i, j| {
            let p = i * spec.actions2 + j;
            linalg::dot(&self.samples[k][p], &dens) + self.ends[k][p].apply(next)
        })
    }
}

fn check_grid(spec: &DiffGameSpec, grid: &StateGrid) -> Result<()> {
    if grid.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: grid.dim(),
        });
    }
    Ok(())
}

fn backward_pure(
    spec: &DiffGameSpec,
    partition: &Partition,
    grid: &StateGrid,
    settings: &Settings,
    reduce: impl Fn(&Matrix) -> Result<f64> + Sync + Send,
) -> Result<DiffGameValue> {
    check_grid(spec, grid)?;
    let endpoints = partition.endpoints();
    let stages = partition.stages();
    let mut values = vec![vec![0.0; grid.len()]; stages + 1];
    let mut cache: HashMap<u64, PureStage> = HashMap::new();
    let mut diagnostics = Diagnostics::default();
    for n in (0..stages).rev() {
        let delta = partition.duration(n);
        let stage = cache.entry(delta.to_bits()).or_insert_with(|| {
            let s = PureStage::new(spec, grid, delta, settings);
            diagnostics.clamped_flows += s.clamped;
            s
        });
        let next = &values[n + 1];
        let t = endpoints[n];
        values[n] = par::try_map_indices(settings.execution, grid.len(), |k| {
            reduce(&stage.matrix(spec, k, t, next))
        })?;
    }
    Ok(DiffGameValue {
        table: ValueTable::new(endpoints, values)?,
        diagnostics,
    })
}

fn pure_value(m: &Matrix, side: Side) -> f64 {
    let ((maxmin, _), (minmax, _)) = matgame::pure_bounds(m);
    match side {
        Side::MaxMin => maxmin,
        Side::MinMax => minmax,
    }
}

/// Discretized pure values `w^-_Π` (max-min) or `w^+_Π` (min-max).
pub fn solve_pure(
    spec: &DiffGameSpec,
    partition: &Partition,
    grid: &StateGrid,
    side: Side,
    settings: &Settings,
) -> Result<DiffGameValue> {
    backward_pure(spec, partition, grid, settings, |m| Ok(pure_value(m, side)))
}

/// Random-action extension `Γ^II`: the stage game at `(t_n, z)` pays the
/// stage payoff along the realized pure flow plus the continuation at the
/// realized end state, and its mixed value is taken.
pub fn solve_random(
    spec: &DiffGameSpec,
    partition: &Partition,
    grid: &StateGrid,
    settings: &Settings,
) -> Result<DiffGameValue> {
    backward_pure(spec, partition, grid, settings, matgame::value)
}

/// Controls for the `Γ^I` inner search over mixed strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedOptions {
    /// Mesh resolution of the initial scan of each simplex.
    pub initial_resolution: usize,
    /// Pattern-search step at which a search stops.
    pub refine_to: f64,
    /// Objective evaluations allowed per one-player search.
    pub max_evaluations: usize,
}

impl Default for RelaxedOptions {
    fn default() -> Self {
        RelaxedOptions {
            initial_resolution: 8,
            refine_to: 1e-6,
            max_evaluations: 20_000,
        }
    }
}

struct SearchOutcome {
    point: Vec<f64>,
    value: f64,
    converged: bool,
}

fn simplex_mesh(n: usize, r: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / r as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(n, left - c, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, r, r, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Optimizes `f` over the simplex of dimension `n - 1`: a mesh scan seeded
/// with `warm`, then compass search along mass-transfer directions
/// `e_k - e_l` with step halving.
fn search_simplex(
    n: usize,
    maximize: bool,
    warm: &[f64],
    opts: &RelaxedOptions,
    f: impl Fn(&[f64]) -> f64,
) -> SearchOutcome {
    let sign = if maximize { 1.0 } else { -1.0 };
    if n == 1 {
        return SearchOutcome {
            value: f(&[1.0]),
            point: vec![1.0],
            converged: true,
        };
    }
    let mut r = opts.initial_resolution.max(1);
    while r > 1 && binomial(r + n - 1, n - 1) > 64 {
        r /= 2;
    }
    let mut evals = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |x: Vec<f64>, evals: &mut usize, best: &mut Option<(Vec<f64>, f64)>| {
        let v = f(&x);
        *evals += 1;
        if best.as_ref().is_none_or(|(_, b)| sign * v > sign * b) {
            *best = Some((x, v));
        }
    };
    consider(warm.to_vec(), &mut evals, &mut best);
    for x in simplex_mesh(n, r) {
        consider(x, &mut evals, &mut best);
    }
    let (mut x, mut fx) = best.expect("mesh is nonempty");
    let mut step = 1.0 / r as f64;
    let mut converged = true;
    let mut cand = x.clone();
    'outer: while step >= opts.refine_to {
        let mut improved = false;
        for k in 0..n {
            for l in 0..n {
                if k == l || x[l] <= 0.0 {
                    continue;
                }
                let mv = step.min(x[l]);
                cand.copy_from_slice(&x);
                cand[k] += mv;
                cand[l] -= mv;
                let v = f(&cand);
                evals += 1;
                if sign * v > sign * fx + 1e-15 * (1.0 + fx.abs()) {
                    x.copy_from_slice(&cand);
                    fx = v;
                    improved = true;
                }
                if evals >= opts.max_evaluations {
                    converged = false;
                    break 'outer;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    SearchOutcome {
        point: x,
        value: fx,
        converged,
    }
}

/// Result of the relaxed extension: both sides of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedValue {
    /// `sup_X inf_Y` recursion.
    pub lower: ValueTable,
    /// `inf_Y sup_X` recursion.
    pub upper: ValueTable,
    pub diagnostics: Diagnostics,
}

impl RelaxedValue {
    /// `sup (upper - lower)` over all times and nodes.
    pub fn side_gap(&self) -> f64 {
        self.upper
            .values()
            .iter()
            .zip(self.lower.values())
            .flat_map(|(u, l)| u.iter().zip(l).map(|(a, b)| a - b))
            .fold(0.0, f64::max)
    }

    pub fn midpoint(&self) -> Result<ValueTable> {
        let values = self
            .upper
            .values()
            .iter()
            .zip(self.lower.values())
            .map(|(u, l)| u.iter().zip(l).map(|(a, b)| 0.5 * (a + b)).collect())
            .collect();
        ValueTable::new(self.lower.times().to_vec(), values)
    }
}

/// One `Γ^I` cell: `(value, converged)` for the requested side of
/// `F(x, y) = ∫ k g(Φ̄^s(z; x, y), x, y) ds + V(Φ̄^δ(z; x, y))`.
#[allow(clippy::too_many_arguments)]
fn relaxed_cell(
    spec: &DiffGameSpec,
    grid: &StateGrid,
    z: &[f64],
    t: f64,
    delta: f64,
    rule: &[(f64, f64)],
    next: &[f64],
    maximizer_first: bool,
    opts: &RelaxedOptions,
) -> Result<(f64, bool)> {
    let objective = |x: &[f64], y: &[f64]| {
        let field = spec.mixed_field(x, y);
        let payoff = spec.mixed_payoff(x, y);
        let (stage, end, _) = run_stage(spec, &field, &payoff, z, t, rule, delta);
        stage + grid.interpolate(next, &end)
    };
    let (a, b) = (spec.actions1, spec.actions2);
    let dirac = |n: usize, k: usize| {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        v
    };
    // Warm start: the bilinear game on pure corners.
    let corners = Matrix::from_fn(a, b, |i, j| objective(&dirac(a, i), &dirac(b, j)));
    let warm = matgame::solve(&corners)?;
    let ok = Cell::new(true);
    let outcome = if maximizer_first {
        search_simplex(a, true, &warm.x, opts, |x| {
            let inner = search_simplex(b, false, &warm.y, opts, |y| objective(x, y));
            ok.set(ok.get() && inner.converged);
            inner.value
        })
    } else {
        search_simplex(b, false, &warm.y, opts, |y| {
            let inner = search_simplex(a, true, &warm.x, opts, |x| objective(x, y));
            ok.set(ok.get() && inner.converged);
            inner.value
        })
    };
    let _ = &outcome.point;
    Ok((outcome.value, ok.get() && outcome.converged))
}

/// Relaxed-control extension `Γ^I`: players commit to mixed actions for a
/// whole stage and the state follows the averaged field. The stage objective
/// is nonlinear in `(x, y)`, so both the sup-inf and the inf-sup recursions
/// are computed; cells whose inner search ran out of budget are flagged.
pub fn solve_relaxed(
    spec: &DiffGameSpec,
    partition: &Partition,
    grid: &StateGrid,
    opts: &RelaxedOptions,
    settings: &Settings,
) -> Result<RelaxedValue> {
    check_grid(spec, grid)?;
    let endpoints = partition.endpoints();
    let stages = partition.stages();
    let mut lower = vec![vec![0.0; grid.len()]; stages + 1];
    let mut upper = lower.clone();
    let mut diagnostics = Diagnostics::default();
    let nodes = grid.nodes();
    for n in (0..stages).rev() {
        let delta = partition.duration(n);
        let rule = quad::composite_rule(0.0, delta, STAGE_PANELS);
        let t = endpoints[n];
        let (next_lo, next_hi) = (&lower[n + 1], &upper[n + 1]);
        let cells = par::try_map_indices(settings.execution, grid.len(), |k| {
            let lo = relaxed_cell(spec, grid, &nodes[k], t, delta, &rule, next_lo, true, opts)?;
            let hi = relaxed_cell(spec, grid, &nodes[k], t, delta, &rule, next_hi, false, opts)?;
            Ok::<_, Error>((lo, hi))
        })?;
        for (k, ((lo, c1), (hi, c2))) in cells.into_iter().enumerate() {
            lower[n][k] = lo;
            upper[n][k] = hi;
            if !(c1 && c2) {
                diagnostics.flagged_cells.push((n, k));
            }
        }
    }
    Ok(RelaxedValue {
        lower: ValueTable::new(endpoints.clone(), lower)?,
        upper: ValueTable::new(endpoints, upper)?,
        diagnostics,
    })
}

/// Stage matrix of the Hamiltonian `g(z, i, j) k(t) + <f(z, i, j), p>`.
pub fn hamiltonian_matrix(spec: &DiffGameSpec, t: f64, z: &[f64], p: &[f64]) -> Matrix {
    let k = spec.evaluation.density(t);
    Matrix::from_fn(spec.actions1, spec.actions2, |i, j| {
        spec.payoff(z, i, j) * k + linalg::dot(&spec.velocity(z, i, j), p)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsaacsReport {
    pub samples: usize,
    /// `max (h^+ - h^-)` over pure actions.
    pub max_pure_gap: f64,
    /// `max (H^+ - H^-)` from the certificate of the mixed solution.
    pub max_mixed_gap: f64,
}

/// Seeded sample points `(t, z, p)`: `t` in the truncation horizon, `z` in
/// the box and `p` in `[-p_scale, p_scale]^d`.
pub fn isaacs_samples(
    spec: &DiffGameSpec,
    n: usize,
    p_scale: f64,
    seed: u64,
) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = spec.evaluation.truncation_horizon();
    (0..n)
        .map(|_| {
            let t = rng.gen_range(0.0..horizon);
            let z = spec.sample_point(&mut rng);
            let p = (0..spec.dim())
                .map(|_| rng.gen_range(-p_scale..=p_scale))
                .collect();
            (t, z, p)
        })
        .collect()
}

pub fn isaacs_check(
    spec: &DiffGameSpec,
    samples: &[(f64, Vec<f64>, Vec<f64>)],
) -> Result<IsaacsReport> {
    let mut report = IsaacsReport {
        samples: samples.len(),
        max_pure_gap: 0.0,
        max_mixed_gap: 0.0,
    };
    for (t, z, p) in samples {
        if z.len() != spec.dim() || p.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: z.len().min(p.len()),
            });
        }
        let m = hamiltonian_matrix(spec, *t, z, p);
        let ((lo, _), (hi, _)) = matgame::pure_bounds(&m);
        let sol = matgame::solve(&m)?;
        let (cl, cu) = sol.certificate(&m);
        report.max_pure_gap = report.max_pure_gap.max(hi - lo);
        report.max_mixed_gap = report.max_mixed_gap.max(cu - cl);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjiDiagnostic {
    pub residual: f64,
    /// Largest second difference quotient in space; large values mark kinks
    /// where the residual says nothing.
    pub curvature: f64,
}

/// Central-difference residual of `∂_t W + val[g k(t) + <f, ∇W>]` at an
/// interior `(t, z)`. The time step is the local stage length and the space
/// step the grid spacing.
pub fn hji_diagnostic(
    table: &ValueTable,
    grid: &StateGrid,
    spec: &DiffGameSpec,
    t: f64,
    z: &[f64],
) -> Result<HjiDiagnostic> {
    check_grid(spec, grid)?;
    let times = table.times();
    let n = times.partition_point(|&s| s <= t);
    if n < 2 || n >= times.len() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} is not interior to the partition"
        )));
    }
    let ht = (times[n] - times[n - 1]).min(times[n - 1] - times[n - 2]);
    let w = |s: f64, x: &[f64]| grid.interpolate(&table.slice_at(s), x);
    let dt = (w(t + ht, z) - w(t - ht, z)) / (2.0 * ht);
    let mut grad = vec![0.0; grid.dim()];
    let mut curvature = 0.0f64;
    let centre = w(t, z);
    for a in 0..grid.dim() {
        let h = grid.spacing(a);
        if z[a] - h < grid.lower[a] - 1e-12 || z[a] + h > grid.upper[a] + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "z[{a}] = {} is on the grid boundary",
                z[a]
            )));
        }
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[a] += h;
        zm[a] -= h;
        let (wp, wm) = (w(t, &zp), w(t, &zm));
        grad[a] = (wp - wm) / (2.0 * h);
        curvature = curvature.max((wp - 2.0 * centre + wm).abs() / (h * h));
    }
    let h = matgame::value(&hamiltonian_matrix(spec, t, z, &grad))?;
    Ok(HjiDiagnostic {
        residual: (dt + h).abs(),
        curvature,
    })
}

pub fn hji_residual(
    table: &ValueTable,
    grid: &StateGrid,
    spec: &DiffGameSpec,
    t: f64,
    z: &[f64],
) -> Result<f64> {
    hji_diagnostic(table, grid, spec, t, z).map(|d| d.residual)
}

/// Seeded 1-D instance `f = a_ij z + b_ij`, `g = c_ij + d_ij z` on
/// `[-bound, bound]` with `a_ij ∈ [-1, 0]`, `b_ij, c_ij, d_ij` uniform in
/// `[-1/2, 1/2]`, `[-1, 1]`, `[-1, 1]`.
pub fn random_linear_game(
    seed: u64,
    a: usize,
    b: usize,
    bound: f64,
    evaluation: Evaluation,
) -> DiffGameSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = |lo: f64, hi: f64| -> Vec<Vec<f64>> {
        (0..a)
            .map(|_| (0..b).map(|_| rng.gen_range(lo..=hi)).collect())
            .collect()
    };
    let slope = gen(-1.0, 0.0);
    let offset = gen(-0.5, 0.5);
    let constant = gen(-1.0, 1.0);
    let gradient = gen(-1.0, 1.0);
    let wrap3 = |m: &Vec<Vec<f64>>| -> Vec<Vec<Vec<f64>>> {
        m.iter()
            .map(|r| r.iter().map(|&v| vec![v]).collect())
            .collect()
    };
    let matrix = slope
        .iter()
        .map(|r| r.iter().map(|&v| vec![vec![v]]).collect())
        .collect();
    DiffGameSpec::new(DiffGameParts {
        bounds: vec![(-bound, bound)],
        dynamics: Dynamics::Linear {
            matrix,
            offset: wrap3(&offset),
        },
        payoff: constant,
        payoff_gradient: Some(wrap3(&gradient)),
        lipschitz_f: None,
        lipschitz_g: None,
        evaluation,
    })
    .expect("generated instance is valid")
}

/// A finite game with observed state lifted to the belief simplex: the state
/// is `p = (ζ_0, ..., ζ_{S-2})` in `[0, 1]^{S-1}`, actions are per-state
/// profiles, and for profiles `(𝐢, 𝐣)`
/// `ζ̇ = Σ_ω ζ(ω) q(𝐢(ω), 𝐣(ω))[ω, ·]`, `g = Σ_ω ζ(ω) g(ω, 𝐢(ω), 𝐣(ω))`.
#[derive(Debug, Clone)]
pub struct LiftedGame {
    pub spec: DiffGameSpec,
    pub states: usize,
}

/// Digit `state` of `profile` in base `base`.
pub fn profile_action(profile: usize, state: usize, base: usize) -> usize {
    profile / base.pow(state as u32) % base
}

impl LiftedGame {
    pub fn new(game: &GameSpec) -> Result<Self> {
        let s = game.num_states();
        let (a, b) = (game.num_actions1(), game.num_actions2());
        if s - 1 > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "lifted games need at most {} states, got {s}",
                MAX_DIM + 1
            )));
        }
        let pa = a.pow(s as u32);
        let pb = b.pow(s as u32);
        if pa.saturating_mul(pb) > MAX_LIFTED_PAIRS {
            return Err(Error::InvalidArgument(format!(
                "{pa} x {pb} action profiles exceed the lifted-game limit"
            )));
        }
        let d = s - 1;
        let last = s - 1;
        let mut matrix = vec![vec![Vec::new(); pb]; pa];
        let mut offset = vec![vec![Vec::new(); pb]; pa];
        let mut constant = vec![vec![0.0; pb]; pa];
        let mut gradient = vec![vec![Vec::new(); pb]; pa];
        for pi in 0..pa {
            for pj in 0..pb {
                let act = |w: usize| (profile_action(pi, w, a), profile_action(pj, w, b));
                // Row ω of the profile generator is row ω of q(𝐢(ω), 𝐣(ω)).
                let q = |w: usize, k: usize| {
                    let (i, j) = act(w);
                    game.rates(i, j).matrix()[(w, k)]
                };
                let g = |w: usize| {
                    let (i, j) = act(w);
                    game.payoff(w, i, j)
                };
                matrix[pi][pj] = (0..d)
                    .map(|k| (0..d).map(|w| q(w, k) - q(last, k)).collect())
                    .collect();
                offset[pi][pj] = (0..d).map(|k| q(last, k)).collect();
                constant[pi][pj] = g(last);
                gradient[pi][pj] = (0..d).map(|w| g(w) - g(last)).collect();
            }
        }
        let spec = DiffGameSpec::new(DiffGameParts {
            bounds: vec![(0.0, 1.0); d],
            dynamics: Dynamics::Linear { matrix, offset },
            payoff: constant,
            payoff_gradient: Some(gradient),
            lipschitz_f: None,
            lipschitz_g: None,
            evaluation: game.evaluation().clone(),
        })?;
        Ok(LiftedGame { spec, states: s })
    }

    /// Coordinates of a belief in the lifted state space.
    pub fn coordinates(&self, zeta: &[f64]) -> Vec<f64> {
        zeta[..self.states - 1].to_vec()
    }

    /// Grid with `resolution + 1` nodes per axis (spacing `1 / resolution`).
    pub fn grid(&self, resolution: usize) -> Result<StateGrid> {
        StateGrid::for_spec(&self.spec, resolution + 1)
    }
}
