//! Experiment orchestration: parameter sweeps, convergence reports, CSV
//! output and a reproducibility manifest.
//!
//! A run reads an experiment config (TOML), loads the problem file, solves
//! every parameter tuple of the sweep and, when an output directory is set,
//! writes
//!
//! - `<solver>.csv`: one row per tuple with the report metric,
//! - `<solver>_values.csv` (and for some solvers extra detail files),
//! - `<solver>_timings.csv`: runtimes, kept apart so the other files are
//!   byte-identical between runs,
//! - `manifest.toml`: hashes of the inputs, library version and, for every
//!   file, the operation and parameter tuples that produced it,
//! - `<solver>.gp` on request: a gnuplot script for the log-log curve.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::belief::{self, BeliefGrid};
use crate::diffgame::{self, DiffGameSpec, RelaxedOptions, Side, StateGrid};
use crate::error::{Error, Result};
use crate::game::{random_instance, Evaluation, GameSpec, Partition};
use crate::kernel::PayoffMode;
use crate::linalg::{self, Matrix};
use crate::matgame;
use crate::observed;
use crate::par::Execution;
use crate::settings::Settings;
use crate::specfile;
use crate::table::ValueTable;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Matgame,
    SolveObserved,
    SolveStationary,
    LimitEq,
    Guarantee,
    SolveBelief,
    BeliefSweep,
    DiffgamePure,
    DiffgameRelaxed,
    DiffgameRandom,
    Isaacs,
    HjiResidual,
}

/// What kind of problem file a solver reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    Matrix,
    Game,
    DiffGame,
}

impl Solver {
    pub const ALL: [Solver; 12] = [
        Solver::Matgame,
        Solver::SolveObserved,
        Solver::SolveStationary,
        Solver::LimitEq,
        Solver::Guarantee,
        Solver::SolveBelief,
        Solver::BeliefSweep,
        Solver::DiffgamePure,
        Solver::DiffgameRelaxed,
        Solver::DiffgameRandom,
        Solver::Isaacs,
        Solver::HjiResidual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Matgame => "matgame",
            Solver::SolveObserved => "solve-observed",
            Solver::SolveStationary => "solve-stationary",
            Solver::LimitEq => "limit-eq",
            Solver::Guarantee => "guarantee",
            Solver::SolveBelief => "solve-belief",
            Solver::BeliefSweep => "belief-sweep",
            Solver::DiffgamePure => "diffgame-pure",
            Solver::DiffgameRelaxed => "diffgame-relaxed",
            Solver::DiffgameRandom => "diffgame-random",
            Solver::Isaacs => "isaacs",
            Solver::HjiResidual => "hji-residual",
        }
    }

    /// `(module, operation)` producing the numbers.
    pub fn operation(self) -> (&'static str, &'static str) {
        match self {
            Solver::Matgame => ("matgame", "solve"),
            Solver::SolveObserved => ("observed", "solve_general"),
            Solver::SolveStationary => ("observed", "solve_stationary_uniform"),
            Solver::LimitEq => ("observed", "solve_limit_equation"),
            Solver::Guarantee => ("observed", "guarantee_check"),
            Solver::SolveBelief => ("belief", "solve_belief_stationary|solve_belief_general"),
            Solver::BeliefSweep => ("belief", "refine_and_compare"),
            Solver::DiffgamePure => ("diffgame", "solve_pure"),
            Solver::DiffgameRelaxed => ("diffgame", "solve_relaxed"),
            Solver::DiffgameRandom => ("diffgame", "solve_random"),
            Solver::Isaacs => ("diffgame", "isaacs_check"),
            Solver::HjiResidual => ("diffgame", "hji_residual"),
        }
    }

    pub fn spec_kind(self) -> SpecKind {
        match self {
            Solver::Matgame => SpecKind::Matrix,
            Solver::DiffgamePure
            | Solver::DiffgameRelaxed
            | Solver::DiffgameRandom
            | Solver::Isaacs
            | Solver::HjiResidual => SpecKind::DiffGame,
            _ => SpecKind::Game,
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Solver::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver `{s}`")))
    }
}

/// Parameters of a generated game instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub states: usize,
    pub actions1: usize,
    pub actions2: usize,
    #[serde(default = "one")]
    pub rate_scale: f64,
    #[serde(default = "one")]
    pub rho: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: Option<PathBuf>,
    pub solver: Option<Solver>,
    /// Stage durations, strictly decreasing.
    pub deltas: Vec<f64>,
    /// Belief-grid resolutions `m`, or state-grid nodes per axis.
    pub resolutions: Vec<usize>,
    /// Discount rates; empty means the rate of the problem's evaluation.
    pub rhos: Vec<f64>,
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub payoff_mode: PayoffMode,
    pub execution: Execution,
    /// Fixed horizon for the general solvers; default is the truncation
    /// horizon of the evaluation.
    pub horizon: Option<f64>,
    /// Isaacs samples and the half-width of the costate box.
    pub samples: usize,
    pub p_scale: f64,
    pub probe_time: Option<f64>,
    pub probe_points: Vec<Vec<f64>>,
    pub relaxed: RelaxedOptions,
    pub instance: Option<InstanceConfig>,
    pub gnuplot: bool,
    /// Text the config was parsed from; hashed into the manifest.
    pub source: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = Settings::default();
        ExperimentConfig {
            spec: None,
            solver: None,
            deltas: Vec::new(),
            resolutions: Vec::new(),
            rhos: Vec::new(),
            tol: s.tol,
            max_iterations: s.max_iterations,
            seed: 0,
            out: None,
            payoff_mode: PayoffMode::Flow,
            execution: Execution::default(),
            horizon: None,
            samples: 100,
            p_scale: 1.0,
            probe_time: None,
            probe_points: Vec::new(),
            relaxed: RelaxedOptions::default(),
            instance: None,
            gnuplot: false,
            source: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    spec: Option<PathBuf>,
    solver: Option<Spanned<String>>,
    #[serde(default)]
    deltas: Option<Spanned<Vec<f64>>>,
    #[serde(default)]
    resolutions: Option<Spanned<Vec<usize>>>,
    #[serde(default)]
    rhos: Option<Spanned<Vec<f64>>>,
    tol: Option<Spanned<f64>>,
    max_iterations: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    payoff_mode: Option<PayoffMode>,
    execution: Option<Execution>,
    horizon: Option<Spanned<f64>>,
    samples: Option<usize>,
    p_scale: Option<f64>,
    probe_time: Option<f64>,
    probe_points: Option<Vec<Vec<f64>>>,
    relaxed_resolution: Option<usize>,
    relaxed_refine_to: Option<f64>,
    relaxed_max_evaluations: Option<usize>,
    instance: Option<InstanceConfig>,
    gnuplot: Option<bool>,
}

/// Which field a config check failed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Deltas,
    Resolutions,
    Rhos,
    Tol,
    Horizon,
    Other,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let line = |span: Option<std::ops::Range<usize>>| {
            span.map_or(1, |s| {
                text[..s.start.min(text.len())].matches('\n').count() + 1
            })
        };
        let parse_err = |span, message: String| Error::Parse {
            path: path.to_string(),
            line: line(span),
            message,
        };
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| parse_err(e.span(), e.message().trim().to_string()))?;
        let d = ExperimentConfig::default();
        let solver = match &raw.solver {
            Some(s) => Some(
                s.get_ref()
                    .parse::<Solver>()
                    .map_err(|e| parse_err(Some(s.span()), e.to_string()))?,
            ),
            None => None,
        };
        let mut relaxed = d.relaxed;
        if let Some(r) = raw.relaxed_resolution {
            relaxed.initial_resolution = r;
        }
        if let Some(r) = raw.relaxed_refine_to {
            relaxed.refine_to = r;
        }
        if let Some(r) = raw.relaxed_max_evaluations {
            relaxed.max_evaluations = r;
        }
        let cfg = ExperimentConfig {
            spec: raw.spec.clone(),
            solver,
            deltas: raw
                .deltas
                .as_ref()
                .map(|v| v.get_ref().clone())
                .unwrap_or_default(),
            resolutions: raw
                .resolutions
                .as_ref()
                .map(|v| v.get_ref().clone())
                .unwrap_or_default(),
            rhos: raw
                .rhos
                .as_ref()
                .map(|v| v.get_ref().clone())
                .unwrap_or_default(),
            tol: raw.tol.as_ref().map_or(d.tol, |t| *t.get_ref()),
            max_iterations: raw.max_iterations.unwrap_or(d.max_iterations),
            seed: raw.seed.unwrap_or(0),
            out: raw.out.clone(),
            payoff_mode: raw.payoff_mode.unwrap_or_default(),
            execution: raw.execution.unwrap_or_default(),
            horizon: raw.horizon.as_ref().map(|h| *h.get_ref()),
            samples: raw.samples.unwrap_or(d.samples),
            p_scale: raw.p_scale.unwrap_or(d.p_scale),
            probe_time: raw.probe_time,
            probe_points: raw.probe_points.clone().unwrap_or_default(),
            relaxed,
            instance: raw.instance.clone(),
            gnuplot: raw.gnuplot.unwrap_or(false),
            source: Some(text.to_string()),
        };
        cfg.check().map_err(|(field, msg)| {
            let span = match field {
                Field::Deltas => raw.deltas.as_ref().map(|s| s.span()),
                Field::Resolutions => raw.resolutions.as_ref().map(|s| s.span()),
                Field::Rhos => raw.rhos.as_ref().map(|s| s.span()),
                Field::Tol => raw.tol.as_ref().map(|s| s.span()),
                Field::Horizon => raw.horizon.as_ref().map(|s| s.span()),
                Field::Other => None,
            };
            parse_err(span, msg)
        })?;
        Ok(cfg)
    }

    fn check(&self) -> std::result::Result<(), (Field, String)> {
        if let Some(k) = self
            .deltas
            .iter()
            .position(|d| !(d.is_finite() && *d > 0.0))
        {
            return Err((Field::Deltas, format!("deltas[{k}] must be positive")));
        }
        if let Some(k) = self.deltas.windows(2).position(|w| w[1] >= w[0]) {
            return Err((
                Field::Deltas,
                format!(
                    "deltas must decrease strictly (deltas[{}] >= deltas[{k}])",
                    k + 1
                ),
            ));
        }
        if self.resolutions.contains(&0) {
            return Err((Field::Resolutions, "resolutions must be positive".into()));
        }
        if let Some(k) = self.rhos.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            return Err((Field::Rhos, format!("rhos[{k}] must be positive")));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err((Field::Tol, "tol must be positive".into()));
        }
        if let Some(h) = self.horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err((Field::Horizon, "horizon must be positive".into()));
            }
        }
        if !(self.p_scale.is_finite() && self.p_scale > 0.0) || self.samples == 0 {
            return Err((Field::Other, "samples and p_scale must be positive".into()));
        }
        if !(self.relaxed.refine_to > 0.0) || self.relaxed.max_evaluations == 0 {
            return Err((
                Field::Other,
                "relaxed search controls must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Checks the invariants a config read from a file is subject to.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, m)| Error::InvalidArgument(m))
    }

    pub fn settings(&self) -> Settings {
        Settings {
            execution: self.execution,
            tol: self.tol,
            max_iterations: self.max_iterations,
            payoff_mode: self.payoff_mode,
        }
    }

    /// The text the config was parsed from, when it came from a file.
    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    fn require_deltas(&self, solver: Solver) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{solver} needs a nonempty `deltas` list"
            )));
        }
        Ok(())
    }

    fn require_resolutions(&self, solver: Solver) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{solver} needs a nonempty `resolutions` list"
            )));
        }
        Ok(())
    }

    /// Diffgame and belief-sweep ladders pair `deltas[k]` with `resolutions[k]`.
    fn ladder(&self, solver: Solver) -> Result<Vec<(f64, usize)>> {
        self.require_deltas(solver)?;
        self.require_resolutions(solver)?;
        if self.deltas.len() != self.resolutions.len() {
            return Err(Error::InvalidArgument(format!(
                "{solver} pairs deltas with resolutions; got {} and {}",
                self.deltas.len(),
                self.resolutions.len()
            )));
        }
        Ok(self
            .deltas
            .iter()
            .copied()
            .zip(self.resolutions.iter().copied())
            .collect())
    }

    fn partition(&self, delta: f64, eval: &Evaluation) -> Result<Partition> {
        match self.horizon {
            Some(h) => Partition::uniform_mesh(delta, h),
            None => Partition::covering(delta, eval),
        }
    }
}

/// A parameter tuple of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Params {
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub resolution: Option<usize>,
}

impl Params {
    fn key(&self) -> (Option<u64>, Option<u64>, Option<usize>) {
        (
            self.rho.map(f64::to_bits),
            self.delta.map(f64::to_bits),
            self.resolution,
        )
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(r) = self.rho {
            parts.push(format!("rho={r}"));
        }
        if let Some(d) = self.delta {
            parts.push(format!("delta={d}"));
        }
        if let Some(m) = self.resolution {
            parts.push(format!("resolution={m}"));
        }
        if parts.is_empty() {
            f.write_str("()")
        } else {
            write!(f, "({})", parts.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub params: Params,
    /// The report metric; NaN where it is undefined (first Cauchy level).
    pub metric: f64,
    /// The computed value vector at `t = 0` (per state, grid point or node).
    pub values: Vec<f64>,
    pub runtime_secs: f64,
    /// Solver diagnostics, recorded in the manifest.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub solver: Solver,
    pub metric: &'static str,
    /// Sorted by δ descending.
    pub rows: Vec<ReportRow>,
    /// Least-squares slope of `ln metric` against `ln δ`.
    pub slope: Option<f64>,
}

/// Least-squares slope of `ln y` on `ln x` over the finest
/// `max(3, ⌈n/2⌉)` usable points (largest δ first in `points`); `None`
/// with fewer than three.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
        .collect();
    let n = usable.len();
    if n < 3 {
        return None;
    }
    let take = 3.max(n.div_ceil(2));
    let tail = &usable[n - take..];
    let lx: Vec<f64> = tail.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / take as f64;
    let my = ly.iter().sum::<f64>() / take as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl ConvergenceReport {
    fn new(solver: Solver, metric: &'static str, mut rows: Vec<ReportRow>) -> Self {
        // Stable: ties keep sweep order. Rows without δ go last.
        rows.sort_by(|a, b| match (a.params.delta, b.params.delta) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.params.delta.map(|d| (d, r.metric)))
            .collect();
        // Mixed ρ sweeps do not form one curve.
        let distinct_rho = {
            let mut r: Vec<u64> = rows
                .iter()
                .filter_map(|r| r.params.rho.map(f64::to_bits))
                .collect();
            r.sort_unstable();
            r.dedup();
            r.len()
        };
        // Neither do Cartesian sweeps that repeat a δ.
        let repeated_delta = points.windows(2).any(|w| w[0].0 == w[1].0);
        let slope = if distinct_rho <= 1 && !repeated_delta {
            fit_slope(&points)
        } else {
            None
        };
        ConvergenceReport {
            solver,
            metric,
            rows,
            slope,
        }
    }

    pub fn metrics(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.metric).collect()
    }
}

/// A CSV table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn with_header(name: impl Into<String>, header: Vec<String>) -> Self {
        Table {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(&self.name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Shortest round-trip representation; empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

fn opt_int(x: Option<usize>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn param_cells(p: &Params) -> Vec<String> {
    vec![opt_num(p.rho), opt_num(p.delta), opt_int(p.resolution)]
}

/// Everything a run produced, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub report: ConvergenceReport,
    pub details: Vec<Table>,
}

/// The problem a solver reads.
pub enum Problem {
    Matrix(Matrix),
    Game(GameSpec),
    DiffGame(DiffGameSpec),
}

impl Problem {
    pub fn load(kind: SpecKind, path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::InvalidArgument(format!(
                "{}: no such file",
                path.display()
            )));
        }
        Ok(match kind {
            SpecKind::Matrix => Problem::Matrix(specfile::load_matrix(path)?),
            SpecKind::Game => Problem::Game(specfile::load_game(path)?),
            SpecKind::DiffGame => Problem::DiffGame(specfile::load_diffgame(path)?),
        })
    }
}

fn with_context<T>(r: Result<T>, solver: Solver, p: &Params) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{solver} at {p}: {m}")),
        other => other,
    })
}

fn rhos_for(cfg: &ExperimentConfig, eval: &Evaluation, solver: Solver) -> Result<Vec<f64>> {
    if !cfg.rhos.is_empty() {
        return Ok(cfg.rhos.clone());
    }
    eval.rho().map(|r| vec![r]).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{solver} needs `rhos` in the config or an exponential evaluation"
        ))
    })
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn row(params: Params, metric: f64, values: Vec<f64>, runtime_secs: f64) -> ReportRow {
    ReportRow {
        params,
        metric,
        values,
        runtime_secs,
        notes: Vec::new(),
    }
}

/// Solves every tuple of the sweep; nothing is written.
pub fn execute(cfg: &ExperimentConfig, solver: Solver, problem: &Problem) -> Result<Experiment> {
    cfg.validate()?;
    let settings = cfg.settings();
    let name = solver.name();
    match (solver, problem) {
        (Solver::Matgame, Problem::Matrix(m)) => {
            let (sol, secs) = timed(|| matgame::solve(m))?;
            let mut t = Table::new(
                format!("{name}_values.csv"),
                &["player", "action", "probability"],
            );
            for (k, p) in sol.x.iter().enumerate() {
                t.push(vec!["1".into(), k.to_string(), num(*p)]);
            }
            for (k, p) in sol.y.iter().enumerate() {
                t.push(vec!["2".into(), k.to_string(), num(*p)]);
            }
            let (lo, hi) = sol.certificate(m);
            let mut r = row(Params::default(), sol.value, vec![sol.value], secs);
            r.notes
                .push(format!("certificate [{}, {}]", num(lo), num(hi)));
            Ok(Experiment {
                report: ConvergenceReport::new(solver, "value", vec![r]),
                details: vec![t],
            })
        }
        (Solver::SolveObserved, Problem::Game(spec)) => run_observed(cfg, solver, spec, &settings),
        (Solver::SolveStationary, Problem::Game(spec)) => {
            cfg.require_deltas(solver)?;
            let mut rows = Vec::new();
            let mut t = Table::new(
                format!("{name}_values.csv"),
                &["rho", "delta", "state", "value", "limit"],
            );
            for rho in rhos_for(cfg, spec.evaluation(), solver)? {
                let limit = observed::solve_limit_equation(spec, rho, None, &settings)?;
                for &delta in &cfg.deltas {
                    let p = Params {
                        rho: Some(rho),
                        delta: Some(delta),
                        resolution: None,
                    };
                    let (nu, secs) = with_context(
                        timed(|| observed::solve_stationary_uniform(spec, rho, delta, &settings)),
                        solver,
                        &p,
                    )?;
                    for (z, (v, w)) in nu.w.iter().zip(&limit.w).enumerate() {
                        t.push(vec![
                            num(rho),
                            num(delta),
                            spec.state_names()[z].clone(),
                            num(*v),
                            num(*w),
                        ]);
                    }
                    rows.push(row(p, linalg::sup_dist(&nu.w, &limit.w), nu.w, secs));
                }
            }
            Ok(Experiment {
                report: ConvergenceReport::new(solver, "error_vs_limit", rows),
                details: vec![t],
            })
        }
        (Solver::LimitEq, Problem::Game(spec)) => {
            let mut rows = Vec::new();
            let mut t = Table::new(format!("{name}_values.csv"), &["rho", "state", "value"]);
            for rho in rhos_for(cfg, spec.evaluation(), solver)? {
                let p = Params {
                    rho: Some(rho),
                    ..Params::default()
                };
                let (w, secs) = with_context(
                    timed(|| observed::solve_limit_equation(spec, rho, None, &settings)),
                    solver,
                    &p,
                )?;
                let res = linalg::sup_norm(&observed::limit_residual(spec, rho, &w.w)?);
                for (z, v) in w.w.iter().enumerate() {
                    t.push(vec![num(rho), spec.state_names()[z].clone(), num(*v)]);
                }
                let mut r = row(p, res, w.w.clone(), secs);
                r.notes.push(format!("iterations {}", w.iterations));
                rows.push(r);
            }
            Ok(Experiment {
                report: ConvergenceReport::new(solver, "residual", rows),
                details: vec![t],
            })
        }
        (Solver::Guarantee, Problem::Game(spec)) => {
            cfg.require_deltas(solver)?;
            let mut rows = Vec::new();
            let mut t = Table::new(
                format!("{name}_values.csv"),
                &["rho", "delta", "state", "limit", "lower_bound"],
            );
            for rho in rhos_for(cfg, spec.evaluation(), solver)? {
                for &delta in &cfg.deltas {
                    let p = Params {
                        rho: Some(rho),
                        delta: Some(delta),
                        resolution: None,
                    };
                    let (g, secs) = with_context(
                        timed(|| observed::guarantee_check(spec, rho, delta, &settings)),
                        solver,
                        &p,
                    )?;
                    for z in 0..spec.num_states() {
                        t.push(vec![
                            num(rho),
                            num(delta),
                            spec.state_names()[z].clone(),
                            num(g.limit[z]),
                            num(g.lower_bound[z]),
                        ]);
                    }
                    rows.push(row(p, g.gap, g.lower_bound.clone(), secs));
                }
            }
            Ok(Experiment {
                report: ConvergenceReport::new(solver, "gap", rows),
                details: vec![t],
            })
        }
        (Solver::SolveBelief, Problem::Game(spec)) => run_belief(cfg, solver, spec, &settings),
        (Solver::BeliefSweep, Problem::Game(spec)) => {
            let ladder = cfg.ladder(solver)?;
            let rho = rhos_for(cfg, spec.evaluation(), solver)?[0];
            let deltas: Vec<f64> = ladder.iter().map(|l| l.0).collect();
            let ms: Vec<usize> = ladder.iter().map(|l| l.1).collect();
            let (rep, secs) =
                timed(|| belief::refine_and_compare(spec, rho, &deltas, &ms, &settings))?;
            let mut t = Table::with_header(format!("{name}_values.csv"), belief_header(spec));
            for level in &rep.levels {
                let grid = BeliefGrid::new(spec.num_states(), level.resolution)?;
                push_belief_values(&mut t, &grid, level.delta, level.resolution, &level.values);
            }
            let rows = ladder
                .iter()
                .enumerate()
                .map(|(k, &(d, m))| {
                    let gap = if k == 0 {
                        f64::NAN
                    } else {
                        rep.cauchy_gaps[k - 1]
                    };
                    let values = rep.level(d, m).expect("solved").values.clone();
                    row(
                        Params {
                            rho: Some(rho),
                            delta: Some(d),
                            resolution: Some(m),
                        },
                        gap,
                        values,
                        secs / ladder.len() as f64,
                    )
                })
                .collect();
            Ok(Experiment {
                report: ConvergenceReport::new(solver, "cauchy_gap", rows),
                details: vec![t],
            })
        }
        (
            Solver::DiffgamePure | Solver::DiffgameRelaxed | Solver::DiffgameRandom,
            Problem::DiffGame(spec),
        ) => run_diffgame(cfg, solver, spec, &settings),
        (Solver::Isaacs, Problem::DiffGame(spec)) => {
            let samples = diffgame::isaacs_samples(spec, cfg.samples, cfg.p_scale, cfg.seed);
            let d = spec.dim();
            let mut header = vec!["sample".to_string(), "t".to_string()];
            header.extend((0..d).map(|k| format!("z{k}")));
            header.extend((0..d).map(|k| format!("p{k}")));
            header.extend(["pure_gap".to_string(), "mixed_gap".to_string()]);
            let mut t = Table::with_header(format!("{name}_values.csv"), header);
            let start = Instant::now();
            for (k, s) in samples.iter().enumerate() {
                let r = diffgame::isaacs_check(spec, std::slice::from_ref(s))?;
                let mut cells = vec![k.to_string(), num(s.0)];
                cells.extend(s.1.iter().map(|x| num(*x)));
                cells.extend(s.2.iter().map(|x| num(*x)));
                cells.extend([num(r.max_pure_gap), num(r.max_mixed_gap)]);
                t.push(cells);
            }
            let r = diffgame::isaacs_check(spec, &samples)?;
            let secs = start.elapsed().as_secs_f64();
            let mut rr = row(
                Params::default(),
                r.max_mixed_gap,
                vec![r.max_pure_gap, r.max_mixed_gap],
                secs,
            );
            rr.notes
                .push(format!("samples {} seed {}", r.samples, cfg.seed));
            Ok(Experiment {
                report: ConvergenceReport::new(solver, "mixed_gap", vec![rr]),
                details: vec![t],
            })
        }
        (Solver::HjiResidual, Problem::DiffGame(spec)) => {
            let ladder = cfg.ladder(solver)?;
            let d = spec.dim();
            let probe_time = cfg
                .probe_time
                .unwrap_or(0.5 * spec.evaluation().truncation_horizon());
            let points = if cfg.probe_points.is_empty() {
                vec![spec
                    .lower()
                    .iter()
                    .zip(spec.upper())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect()]
            } else {
                cfg.probe_points.clone()
            };
            let mut header = vec!["delta".to_string(), "nodes".to_string(), "t".to_string()];
            header.extend((0..d).map(|k| format!("z{k}")));
            header.extend(["residual".to_string(), "curvature".to_string()]);
            let mut t = Table::with_header(format!("{name}_values.csv"), header);
            let mut rows = Vec::new();
            for (delta, nodes) in ladder {
                let p = Params {
                    rho: None,
                    delta: Some(delta),
                    resolution: Some(nodes),
                };
                let part = cfg.partition(delta, spec.evaluation())?;
                let grid = StateGrid::for_spec(spec, nodes)?;
                let (v, secs) = with_context(
                    timed(|| diffgame::solve_random(spec, &part, &grid, &settings)),
                    solver,
                    &p,
                )?;
                let mut worst = 0.0f64;
                let mut residuals = Vec::new();
                for z in &points {
                    let h = with_context(
                        diffgame::hji_diagnostic(&v.table, &grid, spec, probe_time, z),
                        solver,
                        &p,
                    )?;
                    let mut cells = vec![num(delta), nodes.to_string(), num(probe_time)];
                    cells.extend(z.iter().map(|x| num(*x)));
                    cells.extend([num(h.residual), num(h.curvature)]);
                    t.push(cells);
                    worst = worst.max(h.residual);
                    residuals.push(h.residual);
                }
                rows.push(row(p, worst, residuals, secs));
            }
            Ok(Experiment {
                report: ConvergenceReport::new(solver, "max_residual", rows),
                details: vec![t],
            })
        }
        (solver, _) => Err(Error::InvalidArgument(format!(
            "{solver} was given the wrong kind of problem file"
        ))),
    }
}

fn run_observed(
    cfg: &ExperimentConfig,
    solver: Solver,
    spec: &GameSpec,
    settings: &Settings,
) -> Result<Experiment> {
    cfg.require_deltas(solver)?;
    let name = solver.name();
    let limit = match spec.evaluation().rho() {
        Some(rho) => Some(observed::solve_limit_equation(spec, rho, None, settings)?.w),
        None => None,
    };
    let mut t = Table::new(
        format!("{name}_values.csv"),
        &["delta", "time", "state", "value"],
    );
    let mut rows: Vec<ReportRow> = Vec::new();
    for &delta in &cfg.deltas {
        let p = Params {
            rho: spec.evaluation().rho(),
            delta: Some(delta),
            resolution: None,
        };
        let part = cfg.partition(delta, spec.evaluation())?;
        let (table, secs) = with_context(
            timed(|| observed::solve_general(spec, &part, settings)),
            solver,
            &p,
        )?;
        push_table(&mut t, delta, &table, spec.state_names());
        let v0 = table.initial().to_vec();
        let metric = match (&limit, rows.last()) {
            (Some(w), _) => linalg::sup_dist(&v0, w),
            (None, Some(prev)) => linalg::sup_dist(&v0, &prev.values),
            (None, None) => f64::NAN,
        };
        rows.push(row(p, metric, v0, secs));
    }
    let metric = if limit.is_some() {
        "error_vs_limit"
    } else {
        "cauchy_gap"
    };
    Ok(Experiment {
        report: ConvergenceReport::new(solver, metric, rows),
        details: vec![t],
    })
}

fn push_table(t: &mut Table, delta: f64, table: &ValueTable, names: &[String]) {
    for (n, &time) in table.times().iter().enumerate() {
        for (z, v) in table.at_node(n).iter().enumerate() {
            t.push(vec![num(delta), num(time), names[z].clone(), num(*v)]);
        }
    }
}

fn belief_header(spec: &GameSpec) -> Vec<String> {
    let mut h = vec!["delta".to_string(), "m".to_string()];
    h.extend(spec.state_names().iter().map(|s| format!("belief_{s}")));
    h.push("value".to_string());
    h
}

fn push_belief_values(t: &mut Table, grid: &BeliefGrid, delta: f64, m: usize, values: &[f64]) {
    for (k, p) in grid.points().iter().enumerate() {
        let mut cells = vec![num(delta), m.to_string()];
        cells.extend(p.iter().map(|x| num(*x)));
        cells.push(num(values[k]));
        t.push(cells);
    }
}

fn run_belief(
    cfg: &ExperimentConfig,
    solver: Solver,
    spec: &GameSpec,
    settings: &Settings,
) -> Result<Experiment> {
    cfg.require_deltas(solver)?;
    let name = solver.name();
    let resolutions = if cfg.resolutions.is_empty() {
        vec![if spec.num_states() <= 2 { 32 } else { 16 }]
    } else {
        cfg.resolutions.clone()
    };
    let rho = spec.evaluation().rho();
    let limit = match rho {
        Some(r) => Some(observed::solve_limit_equation(spec, r, None, settings)?.w),
        None => None,
    };
    let mut values = Table::with_header(format!("{name}_values.csv"), belief_header(spec));
    let mut vertices = Table::new(
        format!("{name}_vertex_gaps.csv"),
        &[
            "delta",
            "m",
            "state",
            "belief_value",
            "observed_value",
            "signed_gap",
        ],
    );
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        for &m in &resolutions {
            let p = Params {
                rho,
                delta: Some(delta),
                resolution: Some(m),
            };
            let grid = BeliefGrid::new(spec.num_states(), m)?;
            let (v, secs) = with_context(
                timed(|| match rho {
                    Some(r) => belief::solve_belief_stationary(spec, r, delta, &grid, settings)
                        .map(|b| b.values),
                    None => {
                        let part = cfg.partition(delta, spec.evaluation())?;
                        belief::solve_belief_general(spec, &part, &grid, settings)
                            .map(|t| t.initial().to_vec())
                    }
                }),
                solver,
                &p,
            )?;
            push_belief_values(&mut values, &grid, delta, m, &v);
            if let Some(w) = &limit {
                for (z, wz) in w.iter().enumerate() {
                    let bv = v[grid.vertex(z)];
                    vertices.push(vec![
                        num(delta),
                        m.to_string(),
                        spec.state_names()[z].clone(),
                        num(bv),
                        num(*wz),
                        num(bv - wz),
                    ]);
                }
            }
            rows.push(row(p, linalg::sup_norm(&v), v, secs));
        }
    }
    let mut details = vec![values];
    if limit.is_some() {
        details.push(vertices);
    }
    Ok(Experiment {
        report: ConvergenceReport::new(solver, "sup_value", rows),
        details,
    })
}

fn run_diffgame(
    cfg: &ExperimentConfig,
    solver: Solver,
    spec: &DiffGameSpec,
    settings: &Settings,
) -> Result<Experiment> {
    let ladder = cfg.ladder(solver)?;
    let name = solver.name();
    let d = spec.dim();
    let mut header = vec!["delta".to_string(), "nodes".to_string()];
    header.extend((0..d).map(|k| format!("z{k}")));
    match solver {
        Solver::DiffgameRandom => header.push("value".into()),
        _ => header.extend(["lower".to_string(), "upper".to_string()]),
    }
    let mut t = Table::with_header(format!("{name}_values.csv"), header);
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut prev: Option<(StateGrid, Vec<f64>)> = None;
    for (delta, nodes) in ladder {
        let p = Params {
            rho: None,
            delta: Some(delta),
            resolution: Some(nodes),
        };
        let part = cfg.partition(delta, spec.evaluation())?;
        let grid = StateGrid::for_spec(spec, nodes)?;
        let (lower, upper, notes, secs) = match solver {
            Solver::DiffgamePure => {
                let ((lo, hi), secs) = with_context(
                    timed(|| {
                        Ok((
                            diffgame::solve_pure(spec, &part, &grid, Side::MaxMin, settings)?,
                            diffgame::solve_pure(spec, &part, &grid, Side::MinMax, settings)?,
                        ))
                    }),
                    solver,
                    &p,
                )?;
                let notes = vec![format!("clamped_flows {}", lo.diagnostics.clamped_flows)];
                (
                    lo.table.initial().to_vec(),
                    hi.table.initial().to_vec(),
                    notes,
                    secs,
                )
            }
            Solver::DiffgameRelaxed => {
                let (r, secs) = with_context(
                    timed(|| diffgame::solve_relaxed(spec, &part, &grid, &cfg.relaxed, settings)),
                    solver,
                    &p,
                )?;
                let notes = vec![
                    format!("flagged_cells {}", r.diagnostics.flagged_cells.len()),
                    format!("side_gap {}", num(r.side_gap())),
                ];
                (
                    r.lower.initial().to_vec(),
                    r.upper.initial().to_vec(),
                    notes,
                    secs,
                )
            }
            _ => {
                let (r, secs) = with_context(
                    timed(|| diffgame::solve_random(spec, &part, &grid, settings)),
                    solver,
                    &p,
                )?;
                let v = r.table.initial().to_vec();
                let notes = vec![format!("clamped_flows {}", r.diagnostics.clamped_flows)];
                (v.clone(), v, notes, secs)
            }
        };
        for (k, z) in grid.nodes().iter().enumerate() {
            let mut cells = vec![num(delta), nodes.to_string()];
            cells.extend(z.iter().map(|x| num(*x)));
            if solver == Solver::DiffgameRandom {
                cells.push(num(lower[k]));
            } else {
                cells.extend([num(lower[k]), num(upper[k])]);
            }
            t.push(cells);
        }
        let metric = match solver {
            Solver::DiffgameRandom => match &prev {
                Some((g, v)) => g
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(k, z)| (v[k] - grid.interpolate(&lower, z)).abs())
                    .fold(0.0, f64::max),
                None => f64::NAN,
            },
            _ => upper
                .iter()
                .zip(&lower)
                .map(|(u, l)| u - l)
                .fold(0.0, f64::max),
        };
        prev = Some((grid, lower.clone()));
        let mut r = row(p, metric, lower, secs);
        r.notes = notes;
        rows.push(r);
    }
    let metric = match solver {
        Solver::DiffgamePure => "pure_gap",
        Solver::DiffgameRelaxed => "side_gap",
        _ => "cauchy_gap",
    };
    Ok(Experiment {
        report: ConvergenceReport::new(solver, metric, rows),
        details: vec![t],
    })
}

/// Row-aligned differences of two reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `(params, sup |values_a - values_b|, |metric_a - metric_b|)`.
    pub rows: Vec<(Params, f64, f64)>,
}

impl Comparison {
    pub fn max_value_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(
            "compare.csv",
            &[
                "rho",
                "delta",
                "resolution",
                "value_sup_diff",
                "metric_diff",
            ],
        );
        for (p, v, m) in &self.rows {
            let mut cells = param_cells(p);
            cells.extend([num(*v), num(*m)]);
            t.push(cells);
        }
        t
    }
}

/// Aligns the rows of two reports on their parameter tuples.
pub fn compare(a: &ConvergenceReport, b: &ConvergenceReport) -> Result<Comparison> {
    if a.rows.len() != b.rows.len() {
        return Err(Error::ReportMismatch(format!(
            "{} rows against {}",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let index: HashMap<_, &ReportRow> = b.rows.iter().map(|r| (r.params.key(), r)).collect();
    let mut rows = Vec::with_capacity(a.rows.len());
    for ra in &a.rows {
        let rb = index.get(&ra.params.key()).ok_or_else(|| {
            Error::ReportMismatch(format!("no row for {} in the second report", ra.params))
        })?;
        if ra.values.len() != rb.values.len() {
            return Err(Error::ReportMismatch(format!(
                "{}: {} values against {}",
                ra.params,
                ra.values.len(),
                rb.values.len()
            )));
        }
        let md = if ra.metric.is_nan() && rb.metric.is_nan() {
            0.0
        } else {
            (ra.metric - rb.metric).abs()
        };
        rows.push((ra.params, linalg::sup_dist(&ra.values, &rb.values), md));
    }
    Ok(Comparison { rows })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize)]
struct ManifestInput {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    name: String,
    module: String,
    operation: String,
    columns: Vec<String>,
    parameters: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    library: String,
    version: String,
    solver: String,
    seed: u64,
    execution: String,
    metric: String,
    slope: Option<f64>,
    spec: Option<ManifestInput>,
    config: ManifestInput,
    diagnostics: Vec<String>,
    files: Vec<ManifestFile>,
}

/// Result of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub experiment: Experiment,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    pub fn report(&self) -> &ConvergenceReport {
        &self.experiment.report
    }
}

/// The solver named on the command line wins over the config.
pub fn resolve_solver(cfg: &ExperimentConfig, solver: Option<Solver>) -> Result<Solver> {
    solver
        .or(cfg.solver)
        .ok_or_else(|| Error::InvalidArgument("no solver selected".into()))
}

/// Loads the problem, executes the sweep and writes the outputs when
/// `cfg.out` is set.
pub fn run(cfg: &ExperimentConfig, solver: Option<Solver>) -> Result<RunOutput> {
    let solver = resolve_solver(cfg, solver)?;
    let spec_path = cfg
        .spec
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no problem file given".into()))?;
    let problem = Problem::load(solver.spec_kind(), spec_path)?;
    let experiment = execute(cfg, solver, &problem)?;
    let files = match &cfg.out {
        Some(dir) => write_outputs(cfg, &experiment, dir)?,
        None => Vec::new(),
    };
    Ok(RunOutput { experiment, files })
}

pub fn report_table(report: &ConvergenceReport) -> Table {
    let mut t = Table::new(
        format!("{}.csv", report.solver.name()),
        &["rho", "delta", "resolution", report.metric],
    );
    for r in &report.rows {
        let mut cells = param_cells(&r.params);
        cells.push(num(r.metric));
        t.push(cells);
    }
    t
}

fn timings_table(report: &ConvergenceReport) -> Table {
    let mut t = Table::new(
        format!("{}_timings.csv", report.solver.name()),
        &["rho", "delta", "resolution", "runtime_seconds"],
    );
    for r in &report.rows {
        let mut cells = param_cells(&r.params);
        cells.push(format!("{:.6}", r.runtime_secs));
        t.push(cells);
    }
    t
}

pub fn gnuplot_script(report: &ConvergenceReport) -> String {
    let csv = format!("{}.csv", report.solver.name());
    let m = report.metric;
    format!(
        "set datafile separator ','\n\
         set logscale xy\n\
         set xlabel 'stage duration delta'\n\
         set ylabel '{m}'\n\
         set key top left\n\
         set grid\n\
         plot '{csv}' using 'delta':'{m}' with linespoints title '{m}'\n"
    )
}

/// Writes every table, the manifest and optionally the gnuplot script.
pub fn write_outputs(cfg: &ExperimentConfig, exp: &Experiment, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let report = &exp.report;
    let (module, operation) = report.solver.operation();
    let params: Vec<String> = report.rows.iter().map(|r| r.params.to_string()).collect();
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut tables = vec![report_table(report)];
    tables.extend(exp.details.iter().cloned());
    tables.push(timings_table(report));
    for t in &tables {
        files.push(t.write(dir)?);
        entries.push(ManifestFile {
            name: t.name.clone(),
            module: module.to_string(),
            operation: operation.to_string(),
            columns: t.header.clone(),
            parameters: params.clone(),
        });
    }
    if cfg.gnuplot {
        let path = dir.join(format!("{}.gp", report.solver.name()));
        std::fs::write(&path, gnuplot_script(report))?;
        entries.push(ManifestFile {
            name: format!("{}.gp", report.solver.name()),
            module: "harness".into(),
            operation: "gnuplot_script".into(),
            columns: Vec::new(),
            parameters: Vec::new(),
        });
        files.push(path);
    }
    let spec = match &cfg.spec {
        Some(p) => Some(ManifestInput {
            path: p.display().to_string(),
            sha256: sha256_hex(&std::fs::read(p)?),
        }),
        None => None,
    };
    let config_text = cfg.source.clone().unwrap_or_else(|| format!("{cfg:?}"));
    let manifest = Manifest {
        library: "vanish-core".into(),
        version: VERSION.into(),
        solver: report.solver.name().into(),
        seed: cfg.seed,
        execution: format!("{:?}", cfg.execution).to_lowercase(),
        metric: report.metric.into(),
        slope: report.slope,
        spec,
        config: ManifestInput {
            path: "<config>".into(),
            sha256: sha256_hex(config_text.as_bytes()),
        },
        diagnostics: report
            .rows
            .iter()
            .flat_map(|r| r.notes.iter().map(move |n| format!("{} {n}", r.params)))
            .collect(),
        files: entries,
    };
    let text =
        toml::to_string(&manifest).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
    let path = dir.join("manifest.toml");
    std::fs::write(&path, text)?;
    files.push(path);
    Ok(files)
}

/// Writes a seeded random game to `dir/instance.toml`.
pub fn write_random_instance(instance: &InstanceConfig, seed: u64, dir: &Path) -> Result<PathBuf> {
    if instance.states == 0 || instance.actions1 == 0 || instance.actions2 == 0 {
        return Err(Error::InvalidArgument(
            "instance sizes must be positive".into(),
        ));
    }
    if !(instance.rate_scale >= 0.0 && instance.rate_scale.is_finite()) {
        return Err(Error::InvalidArgument(
            "rate_scale must be nonnegative".into(),
        ));
    }
    let spec = random_instance(
        seed,
        instance.states,
        instance.actions1,
        instance.actions2,
        instance.rate_scale,
    )
    .with_evaluation(Evaluation::exponential(instance.rho)?);
    std::fs::create_dir_all(dir)?;
    let path = dir.join("instance.toml");
    std::fs::write(&path, specfile::game_to_toml(&spec))?;
    Ok(path)
}
