//! TOML problem files.
//!
//! A game file:
//!
//! ```toml
//! states = ["low", "high"]          # or a count
//! actions1 = 2
//! actions2 = ["l", "r"]
//! payoff = [                        # payoff[state][i][j]
//!   [[1.0, -1.0], [-1.0, 1.0]],
//!   [[0.0, 2.0], [1.0, 0.0]],
//! ]
//!
//! [evaluation]
//! kind = "exponential"              # or "tabulated" with knots, densities
//! rho = 1.0
//!
//! [[rates]]                         # omit i or j to cover every action
//! i = 0
//! j = "r"
//! matrix = [[-1.0, 1.0], [0.5, -0.5]]
//! ```
//!
//! A differential-game file has `actions1`, `actions2`, `[evaluation]` as
//! above, plus `[box]` (`lower`, `upper`), `[dynamics]` (`family` is one of
//! `zero`, `constant`, `linear`, `separable-control`) and `[payoff]`
//! (`constant[i][j]`, optional `gradient[i][j]`). A matrix file holds a
//! single `payoff = [[...]]`.
//!
//! Errors carry the line of the offending entry.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::diffgame::{DiffGameParts, DiffGameSpec, Dynamics};
use crate::error::{Error, Result};
use crate::game::{Evaluation, EvaluationKind, GameParts, GameSpec, Violation};
use crate::linalg::Matrix;

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

struct Source<'a> {
    text: &'a str,
    path: &'a str,
}

impl Source<'_> {
    fn error(&self, span: Option<Range<usize>>, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: span.map_or(1, |s| line_of(self.text, s)),
            message: message.into(),
        }
    }

    fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        toml::from_str(self.text).map_err(|e| self.error(e.span(), e.message().trim().to_string()))
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Names {
    Count(usize),
    List(Vec<String>),
}

impl Names {
    fn resolve(names: Option<&Names>, prefix: &str, inferred: usize) -> Vec<String> {
        match names {
            Some(Names::List(v)) => v.clone(),
            Some(Names::Count(n)) => (0..*n).map(|k| format!("{prefix}{k}")).collect(),
            None => (0..inferred).map(|k| format!("{prefix}{k}")).collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ActionRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    kind: String,
    rho: Option<f64>,
    knots: Option<Vec<f64>>,
    densities: Option<Vec<f64>>,
    tail_tolerance: Option<f64>,
}

fn evaluation(src: &Source, raw: &Spanned<RawEvaluation>) -> Result<Evaluation> {
    let span = Some(raw.span());
    let r = raw.get_ref();
    let invalid = |v: Violation| src.error(span.clone(), v.to_string());
    let mut e = match r.kind.as_str() {
        "exponential" => {
            let rho = r
                .rho
                .ok_or_else(|| src.error(span.clone(), "exponential evaluation needs rho"))?;
            Evaluation::exponential(rho).map_err(invalid)?
        }
        "tabulated" => {
            let (Some(k), Some(d)) = (&r.knots, &r.densities) else {
                return Err(src.error(span, "tabulated evaluation needs knots and densities"));
            };
            Evaluation::tabulated(k.clone(), d.clone()).map_err(invalid)?
        }
        other => {
            return Err(src.error(
                span,
                format!("unknown evaluation kind `{other}` (expected exponential or tabulated)"),
            ))
        }
    };
    if let Some(eps) = r.tail_tolerance {
        e = e
            .with_tail_tolerance(eps)
            .map_err(|v| src.error(span, v.to_string()))?;
    }
    Ok(e)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    i: Option<ActionRef>,
    j: Option<ActionRef>,
    matrix: Spanned<Vec<Spanned<Vec<f64>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    states: Option<Names>,
    actions1: Option<Names>,
    actions2: Option<Names>,
    evaluation: Spanned<RawEvaluation>,
    payoff: Spanned<Vec<Spanned<Vec<Vec<f64>>>>>,
    #[serde(default)]
    rates: Vec<Spanned<RawRates>>,
}

fn action_index(
    src: &Source,
    r: &ActionRef,
    names: &[String],
    span: Range<usize>,
) -> Result<usize> {
    let k = match r {
        ActionRef::Index(k) => Some(*k),
        ActionRef::Name(n) => names.iter().position(|m| m == n),
    };
    match k {
        Some(k) if k < names.len() => Ok(k),
        _ => Err(src.error(Some(span), format!("unknown action {r:?}"))),
    }
}

pub fn parse_game(text: &str, path: &str) -> Result<GameSpec> {
    let src = Source { text, path };
    let raw: RawGame = src.parse()?;
    let payoff: Vec<Vec<Vec<f64>>> = raw
        .payoff
        .get_ref()
        .iter()
        .map(|p| p.get_ref().clone())
        .collect();
    let states = Names::resolve(raw.states.as_ref(), "z", payoff.len());
    let a = payoff.first().map_or(0, Vec::len);
    let b = payoff.first().and_then(|p| p.first()).map_or(0, Vec::len);
    let actions1 = Names::resolve(raw.actions1.as_ref(), "i", a);
    let actions2 = Names::resolve(raw.actions2.as_ref(), "j", b);
    let evaluation = evaluation(&src, &raw.evaluation)?;

    let (na, nb) = (actions1.len(), actions2.len());
    let mut rates: Vec<Vec<Option<Vec<Vec<f64>>>>> = vec![vec![None; nb]; na];
    let mut row_spans: Vec<Vec<Vec<Range<usize>>>> = vec![vec![Vec::new(); nb]; na];
    let mut pair_spans: Vec<Vec<Option<Range<usize>>>> = vec![vec![None; nb]; na];
    for entry in &raw.rates {
        let span = entry.span();
        let r = entry.get_ref();
        let is: Vec<usize> = match &r.i {
            Some(x) => vec![action_index(&src, x, &actions1, span.clone())?],
            None => (0..na).collect(),
        };
        let js: Vec<usize> = match &r.j {
            Some(x) => vec![action_index(&src, x, &actions2, span.clone())?],
            None => (0..nb).collect(),
        };
        let rows: Vec<Vec<f64>> = r
            .matrix
            .get_ref()
            .iter()
            .map(|x| x.get_ref().clone())
            .collect();
        for &i in &is {
            for &j in &js {
                if rates[i][j].is_some() {
                    return Err(src.error(
                        Some(span.clone()),
                        format!("rates for ({}, {}) given twice", actions1[i], actions2[j]),
                    ));
                }
                rates[i][j] = Some(rows.clone());
                row_spans[i][j] = r.matrix.get_ref().iter().map(|x| x.span()).collect();
                pair_spans[i][j] = Some(r.matrix.span());
            }
        }
    }
    let mut full = Vec::with_capacity(na);
    for (i, ri) in rates.into_iter().enumerate() {
        let mut row = Vec::with_capacity(nb);
        for (j, q) in ri.into_iter().enumerate() {
            match q {
                Some(q) => row.push(q),
                None => {
                    return Err(src.error(
                        None,
                        format!("missing rates for ({}, {})", actions1[i], actions2[j]),
                    ))
                }
            }
        }
        full.push(row);
    }

    let parts = GameParts {
        states,
        actions1,
        actions2,
        payoff,
        rates: full,
        evaluation,
    };
    GameSpec::new(parts).map_err(|v| {
        let span = if let Some(((i, j), row)) = v.rate_location() {
            row_spans[i][j]
                .get(row)
                .cloned()
                .or_else(|| pair_spans[i][j].clone())
        } else {
            match &v {
                Violation::Shape { what, .. } | Violation::NonFinite { what } => {
                    if let Some(z) = leading_index(what, "payoff[") {
                        raw.payoff.get_ref().get(z).map(|p| p.span())
                    } else if let Some((i, j)) = pair_index(what, "rates(") {
                        pair_spans.get(i).and_then(|r| r.get(j)).cloned().flatten()
                    } else {
                        Some(raw.payoff.span())
                    }
                }
                _ => None,
            }
        };
        src.error(span, v.to_string())
    })
}

fn leading_index(what: &str, prefix: &str) -> Option<usize> {
    let rest = what.strip_prefix(prefix)?;
    rest[..rest.find(']')?].parse().ok()
}

fn pair_index(what: &str, prefix: &str) -> Option<(usize, usize)> {
    let rest = what.strip_prefix(prefix)?;
    let inner = &rest[..rest.find(')')?];
    let (i, j) = inner.split_once(',')?;
    Some((i.trim().parse().ok()?, j.trim().parse().ok()?))
}

pub fn load_game(path: &Path) -> Result<GameSpec> {
    parse_game(&read(path)?, &path.display().to_string())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_vec(v: &[f64]) -> String {
    let inner: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", inner.join(", "))
}

fn fmt_names(v: &[String]) -> String {
    let inner: Vec<String> = v.iter().map(|s| format!("{s:?}")).collect();
    format!("[{}]", inner.join(", "))
}

/// Game file text that [`parse_game`] reads back to `spec`.
pub fn game_to_toml(spec: &GameSpec) -> String {
    let parts = spec.to_parts();
    let mut out = String::new();
    let _ = writeln!(out, "states = {}", fmt_names(&parts.states));
    let _ = writeln!(out, "actions1 = {}", fmt_names(&parts.actions1));
    let _ = writeln!(out, "actions2 = {}", fmt_names(&parts.actions2));
    out.push_str("payoff = [\n");
    for pz in &parts.payoff {
        let rows: Vec<String> = pz.iter().map(|r| fmt_vec(r)).collect();
        let _ = writeln!(out, "  [{}],", rows.join(", "));
    }
    out.push_str("]\n\n[evaluation]\n");
    match spec.evaluation().kind() {
        EvaluationKind::Exponential { rho } => {
            let _ = writeln!(out, "kind = \"exponential\"\nrho = {}", fmt_f64(*rho));
        }
        EvaluationKind::Tabulated {
            knots, densities, ..
        } => {
            let _ = writeln!(
                out,
                "kind = \"tabulated\"\nknots = {}\ndensities = {}",
                fmt_vec(knots),
                fmt_vec(densities)
            );
        }
    }
    let _ = writeln!(
        out,
        "tail_tolerance = {}",
        fmt_f64(spec.evaluation().tail_tolerance())
    );
    for (i, ri) in parts.rates.iter().enumerate() {
        for (j, q) in ri.iter().enumerate() {
            let rows: Vec<String> = q.iter().map(|r| fmt_vec(r)).collect();
            let _ = write!(
                out,
                "\n[[rates]]\ni = {i}\nj = {j}\nmatrix = [{}]\n",
                rows.join(", ")
            );
        }
    }
    out
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    family: String,
    lipschitz: Option<f64>,
    velocity: Option<Vec<Vec<Vec<f64>>>>,
    matrix: Option<toml::Value>,
    offset: Option<Vec<Vec<Vec<f64>>>>,
    row_drift: Option<Vec<Vec<f64>>>,
    col_drift: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPayoff {
    constant: Vec<Vec<f64>>,
    gradient: Option<Vec<Vec<Vec<f64>>>>,
    lipschitz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiffGame {
    actions1: Option<Names>,
    actions2: Option<Names>,
    evaluation: Spanned<RawEvaluation>,
    #[serde(rename = "box")]
    bounds: Spanned<RawBox>,
    dynamics: Spanned<RawDynamics>,
    payoff: Spanned<RawPayoff>,
}

pub fn parse_diffgame(text: &str, path: &str) -> Result<DiffGameSpec> {
    let src = Source { text, path };
    let raw: RawDiffGame = src.parse()?;
    let evaluation = evaluation(&src, &raw.evaluation)?;
    let bx = raw.bounds.get_ref();
    if bx.lower.len() != bx.upper.len() {
        return Err(src.error(
            Some(raw.bounds.span()),
            "box lower and upper differ in length",
        ));
    }
    let dspan = Some(raw.dynamics.span());
    let d = raw.dynamics.get_ref();
    let need = |what: &str| {
        src.error(
            dspan.clone(),
            format!("{} dynamics need `{what}`", d.family),
        )
    };
    let dynamics = match d.family.as_str() {
        "zero" => Dynamics::Zero,
        "constant" => Dynamics::Constant {
            velocity: d.velocity.clone().ok_or_else(|| need("velocity"))?,
        },
        "linear" => Dynamics::Linear {
            matrix: d
                .matrix
                .clone()
                .ok_or_else(|| need("matrix"))?
                .try_into()
                .map_err(|e: toml::de::Error| src.error(dspan.clone(), format!("matrix: {}", e.message())))?,
            offset: d.offset.clone().ok_or_else(|| need("offset"))?,
        },
        "separable-control" => Dynamics::SeparableControl {
            matrix: d
                .matrix
                .clone()
                .ok_or_else(|| need("matrix"))?
                .try_into()
                .map_err(|e: toml::de::Error| src.error(dspan.clone(), format!("matrix: {}", e.message())))?,
            row_drift: d.row_drift.clone().ok_or_else(|| need("row_drift"))?,
            col_drift: d.col_drift.clone().ok_or_else(|| need("col_drift"))?,
        },
        other => {
            return Err(src.error(
                dspan,
                format!("unknown dynamics family `{other}` (expected zero, constant, linear or separable-control)"),
            ))
        }
    };
    let p = raw.payoff.get_ref();
    let (a, b) = (p.constant.len(), p.constant.first().map_or(0, Vec::len));
    for (names, n, what) in [
        (&raw.actions1, a, "actions1"),
        (&raw.actions2, b, "actions2"),
    ] {
        let declared = names.as_ref().map(|x| Names::resolve(Some(x), "", 0).len());
        if let Some(k) = declared {
            if k != n {
                return Err(src.error(
                    Some(raw.payoff.span()),
                    format!("{what} declares {k} actions but payoff has {n}"),
                ));
            }
        }
    }
    let parts = DiffGameParts {
        bounds: bx
            .lower
            .iter()
            .copied()
            .zip(bx.upper.iter().copied())
            .collect(),
        dynamics,
        payoff: p.constant.clone(),
        payoff_gradient: p.gradient.clone(),
        lipschitz_f: d.lipschitz,
        lipschitz_g: p.lipschitz,
        evaluation,
    };
    DiffGameSpec::new(parts).map_err(|v| {
        let span = match &v {
            Violation::Domain(_) => raw.bounds.span(),
            Violation::Lipschitz { what: "payoff", .. } => raw.payoff.span(),
            Violation::Shape { what, .. } | Violation::NonFinite { what }
                if what.starts_with("payoff") =>
            {
                raw.payoff.span()
            }
            Violation::Empty(_) => raw.payoff.span(),
            _ => raw.dynamics.span(),
        };
        src.error(Some(span), v.to_string())
    })
}

pub fn load_diffgame(path: &Path) -> Result<DiffGameSpec> {
    parse_diffgame(&read(path)?, &path.display().to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    payoff: Spanned<Vec<Spanned<Vec<f64>>>>,
}

pub fn parse_matrix(text: &str, path: &str) -> Result<Matrix> {
    let src = Source { text, path };
    let raw: RawMatrix = src.parse()?;
    let rows = raw.payoff.get_ref();
    if rows.is_empty() || rows[0].get_ref().is_empty() {
        return Err(src.error(Some(raw.payoff.span()), "payoff matrix must not be empty"));
    }
    let width = rows[0].get_ref().len();
    for r in rows {
        if r.get_ref().len() != width {
            return Err(src.error(
                Some(r.span()),
                format!("row has {} entries, expected {width}", r.get_ref().len()),
            ));
        }
        if r.get_ref().iter().any(|x| !x.is_finite()) {
            return Err(src.error(Some(r.span()), "row has a non-finite entry"));
        }
    }
    let data: Vec<Vec<f64>> = rows.iter().map(|r| r.get_ref().clone()).collect();
    Matrix::from_rows(&data)
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(&read(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::random_instance;

    const GAME: &str = r#"states = ["low", "high"]
actions1 = 2
actions2 = ["l", "r"]
payoff = [
  [[1.0, -1.0], [-1.0, 1.0]],
  [[0.0, 2.0], [1.0, 0.0]],
]

[evaluation]
kind = "exponential"
rho = 1.0

[[rates]]
j = "l"
matrix = [[-1.0, 1.0], [0.5, -0.5]]

[[rates]]
j = 1
matrix = [[0.0, 0.0],
          [2.0, -2.0]]
"#;

    #[test]
    fn parses_game() {
        let spec = parse_game(GAME, "g.toml").unwrap();
        assert_eq!(spec.num_states(), 2);
        assert_eq!(spec.action1_names(), &["i0".to_string(), "i1".to_string()]);
        assert_eq!(spec.rates(1, 1).matrix()[(1, 0)], 2.0);
        assert_eq!(spec.payoff(1, 0, 1), 2.0);
    }

    #[test]
    fn bad_row_sum_points_at_row() {
        let text = GAME.replace("[2.0, -2.0]", "[2.0, -1.0]");
        match parse_game(&text, "g.toml") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 20, "{message}");
                assert!(message.contains("row 1 sums to 1"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_line() {
        let text = GAME.replace("rho = 1.0", "rho = ");
        match parse_game(&text, "g.toml") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_and_missing_rates() {
        let dup = GAME.replace("j = 1\n", "j = 0\n");
        let err = parse_game(&dup, "g").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 17, .. }), "{err}");
        let missing = GAME.replace("j = 1\n", "i = 0\nj = 1\n");
        let err = parse_game(&missing, "g").unwrap_err();
        assert!(err.to_string().contains("missing rates"), "{err}");
    }

    #[test]
    fn payoff_shape_points_at_state() {
        let text = GAME.replace("[[0.0, 2.0], [1.0, 0.0]]", "[[0.0, 2.0], [1.0]]");
        match parse_game(&text, "g") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 6, "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let spec = random_instance(21, 3, 2, 3, 1.5);
        let back = parse_game(&game_to_toml(&spec), "rt").unwrap();
        assert_eq!(back, spec);
        let tab =
            spec.with_evaluation(Evaluation::tabulated(vec![0.0, 1.0], vec![2.0, 0.0]).unwrap());
        assert_eq!(parse_game(&game_to_toml(&tab), "rt").unwrap(), tab);
    }

    const DIFF: &str = r#"actions1 = 3
actions2 = 3

[box]
lower = [-4.0]
upper = [4.0]

[dynamics]
family = "separable-control"
matrix = [[0.0]]
row_drift = [[-1.0], [0.0], [1.0]]
col_drift = [[1.0], [0.0], [-1.0]]

[payoff]
constant = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
gradient = [[[1.0], [1.0], [1.0]], [[1.0], [1.0], [1.0]], [[1.0], [1.0], [1.0]]]

[evaluation]
kind = "exponential"
rho = 1.0
"#;

    #[test]
    fn parses_diffgame() {
        let spec = parse_diffgame(DIFF, "d").unwrap();
        assert_eq!(spec.dim(), 1);
        assert_eq!(spec.velocity(&[0.0], 2, 0), vec![2.0]);
        assert_eq!(spec.payoff(&[0.5], 1, 1), 0.5);
        assert_eq!(spec.family(), "separable-control");
    }

    #[test]
    fn diffgame_errors() {
        let bad = DIFF.replace("separable-control", "quadratic");
        assert!(matches!(
            parse_diffgame(&bad, "d"),
            Err(Error::Parse { line: 8, .. })
        ));
        let bad = DIFF.replace("lower = [-4.0]", "lower = [5.0]");
        assert!(matches!(
            parse_diffgame(&bad, "d"),
            Err(Error::Parse { line: 4, .. })
        ));
        let bad = DIFF.replace("matrix = [[0.0]]", "matrix = [[-2.0]]\nlipschitz = 0.5");
        let err = parse_diffgame(&bad, "d").unwrap_err();
        assert!(err.is_validation());
        let linear = r#"actions1 = 1
actions2 = 1
[box]
lower = [-1.0]
upper = [1.0]
[dynamics]
family = "linear"
matrix = [[[[-1.0]]]]
offset = [[[0.0]]]
[payoff]
constant = [[1.0]]
[evaluation]
kind = "tabulated"
knots = [0.0, 1.0]
densities = [2.0, 0.0]
"#;
        let spec = parse_diffgame(linear, "l").unwrap();
        assert_eq!(spec.velocity(&[0.5], 0, 0), vec![-0.5]);
    }

    #[test]
    fn matrix_file() {
        let m = parse_matrix("payoff = [[3.0, 0.0], [1.0, 2.0]]\n", "m").unwrap();
        assert_eq!(m[(1, 1)], 2.0);
        let bad = "payoff = [\n  [1.0, 2.0],\n  [3.0],\n]\n";
        assert!(matches!(
            parse_matrix(bad, "m"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
