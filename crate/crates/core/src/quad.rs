//! Composite Gauss–Legendre quadrature of order 8.

const NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights of the order-8 rule on `[a, b]` split into `panels`
/// equal panels, sorted by node position.
pub fn composite_rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(8 * panels);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + 0.5 * width;
        let half = 0.5 * width;
        for k in (0..4).rev() {
            out.push((mid - half * NODES[k], half * WEIGHTS[k]));
        }
        for k in 0..4 {
            out.push((mid + half * NODES[k], half * WEIGHTS[k]));
        }
    }
    out
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    composite_rule(a, b, panels)
        .into_iter()
        .map(|(s, w)| w * f(s))
        .sum()
}
