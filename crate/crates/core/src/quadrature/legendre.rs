use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn try_integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (x, w) in self.mapped(a, b) {
            let v = f(x)?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "quadrature integrand",
                    t: x,
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularEnd {
    Left,
    Right,
}

/// Panel count and per-panel node count for [`graded_panel_quad`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PanelConfig {
    pub levels: usize,
    pub nodes: usize,
}

impl Default for PanelConfig {
    fn default() -> Self {
        PanelConfig {
            levels: 40,
            nodes: 16,
        }
    }
}

/// Composite Gauss–Legendre on panels that halve toward the singular end.
///
/// `levels` is an upper bound: halving stops once the panels get so close to
/// a nonzero endpoint that abscissae would round onto it. When the integrand
/// is naturally a function of the distance to the singular end, use
/// [`graded_distance_quad`], which has no such limit.
pub fn graded_panel_quad<F>(
    mut f: F,
    a: f64,
    b: f64,
    end: SingularEnd,
    levels: usize,
    nodes_per_panel: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a < b) {
        return Err(Error::Domain(format!("graded_panel_quad needs a < b, got [{a}, {b}]")));
    }
    let anchor = match end {
        SingularEnd::Left => a,
        SingularEnd::Right => b,
    };
    // keep the smallest distance sampled (about 1e-5 of the innermost width)
    // well above the spacing of floats near the anchor
    let floor = 1e6 * f64::EPSILON * anchor.abs();
    let mut levels_used = 0;
    let mut width = b - a;
    while levels_used < levels && 0.5 * width > floor {
        width *= 0.5;
        levels_used += 1;
    }
    let rule = GaussLegendre::new(nodes_per_panel.max(1));
    graded_with_rule(
        &mut |d| match end {
            SingularEnd::Left => f(a + d),
            SingularEnd::Right => f(b - d),
        },
        b - a,
        levels_used,
        &rule,
    )
}

/// `∫₀^len f(d) dd` for `f` singular at `d = 0`, on panels `[len/2^{k+1},
/// len/2^k]`. The innermost panel `[0, ε]` is integrated after the
/// substitution `d = ε v²`, so `f(0)` is never evaluated and inverse square
/// root singularities become smooth.
pub fn graded_distance_quad<F>(mut f: F, len: f64, levels: usize, nodes_per_panel: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(len > 0.0) {
        return Err(Error::Domain(format!("graded_distance_quad needs len > 0, got {len}")));
    }
    let rule = GaussLegendre::new(nodes_per_panel.max(1));
    graded_with_rule(&mut f, len, levels, &rule)
}

pub(crate) fn graded_with_rule<F>(
    f: &mut F,
    len: f64,
    levels: usize,
    rule: &GaussLegendre,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut total = 0.0;
    let mut outer = len;
    for _ in 0..levels {
        let inner = 0.5 * outer;
        total += rule.try_integrate(inner, outer, &mut *f)?;
        outer = inner;
    }
    let eps = outer;
    total += rule.try_integrate(0.0, 1.0, |v| Ok(f(eps * v * v)? * 2.0 * eps * v))?;
    Ok(total)
}
