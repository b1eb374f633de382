//! Product-integration solver for `d(t) u(t) + ∫₀ᵗ m(y, t-y) u(y) dy = r(t)`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, Mesh, PanelConfig};

use super::forcing::ScalarFn;

/// Memory kernel as a function of the source time `y` and the lag `t - y`.
///
/// Passing the lag rather than `t` keeps tiny lags exact on graded meshes.
pub type MemoryFn = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;

/// Right-hand side, either as a function or sampled on the solve mesh.
#[derive(Clone)]
pub enum Rhs {
    Function(ScalarFn),
    Sampled(Vec<f64>),
}

/// A second-kind Volterra equation `d(t) u(t) + ∫₀ᵗ m(y, t-y) u(y) dy = r(t)`.
#[derive(Clone)]
pub struct SecondKindProblem {
    pub diagonal: ScalarFn,
    /// `None` means `m ≡ 0`.
    pub memory: Option<MemoryFn>,
    pub rhs: Rhs,
    /// Blow-up exponent of `m` as the lag tends to 0; 0 for log-type.
    pub sigma: f64,
    /// Smallest admissible `|d(t)|`.
    pub diagonal_floor: f64,
    /// Graded panels for the panel next to the diagonal.
    pub panel: PanelConfig,
}

impl std::fmt::Debug for SecondKindProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecondKindProblem")
            .field("has_memory", &self.memory.is_some())
            .field("sigma", &self.sigma)
            .field("diagonal_floor", &self.diagonal_floor)
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_DIAGONAL_FLOOR: f64 = 1e-12;
pub const SELF_PANEL: PanelConfig = PanelConfig {
    levels: 20,
    nodes: 8,
};

impl SecondKindProblem {
    pub fn new(diagonal: ScalarFn, memory: Option<MemoryFn>, rhs: Rhs) -> Self {
        SecondKindProblem {
            diagonal,
            memory,
            rhs,
            sigma: 0.0,
            diagonal_floor: DEFAULT_DIAGONAL_FLOOR,
            panel: SELF_PANEL,
        }
    }

    /// Convenience constructor from plain closures.
    pub fn from_fns<D, M, R>(diagonal: D, memory: Option<M>, rhs: R) -> Self
    where
        D: Fn(f64) -> Result<f64> + Send + Sync + 'static,
        M: Fn(f64, f64) -> Result<f64> + Send + Sync + 'static,
        R: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        Self::new(
            Arc::new(diagonal),
            memory.map(|m| Arc::new(m) as MemoryFn),
            Rhs::Function(Arc::new(rhs)),
        )
    }
}

/// How a first-kind equation was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Transform to a second-kind equation; nodal values.
    SecondKind,
    /// Midpoint product rule on the undifferentiated equation; values at
    /// panel midpoints.
    FirstKindG,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::SecondKind => "second-kind",
            Strategy::FirstKindG => "first-kind-g",
        }
    }
}

/// Solution samples and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub mesh: Mesh,
    pub strategy: Strategy,
    /// Sample times: mesh nodes, or panel midpoints for `FirstKindG`.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `r(0)` was not available (a singular or indeterminate right-hand side
    /// at `t = 0`); `values[0]` is NaN and the first panel uses the value at `t_1`.
    pub singular_origin: bool,
    /// Equivalence residual at `times`, when computed.
    pub residuals: Option<Vec<f64>>,
}

impl SolveReport {
    pub fn max_residual(&self) -> Option<f64> {
        self.residuals
            .as_ref()
            .map(|r| r.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Max `|u - exact|` over finite samples.
    pub fn max_error<F: Fn(f64) -> f64>(&self, exact: F) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(_, u)| u.is_finite())
            .map(|(t, u)| (u - exact(*t)).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ h_i |u_i - e_i| / Σ h_i |e_i|` over `i >= 1`, with `h_i` the width
    /// of the panel ending at (or centred on) sample `i`.
    pub fn l1_relative_error<F: Fn(f64) -> f64>(&self, exact: F) -> f64 {
        let pts = self.mesh.points();
        let (mut num, mut den) = (0.0, 0.0);
        for (k, (t, u)) in self.times.iter().zip(&self.values).enumerate() {
            let h = match self.strategy {
                Strategy::SecondKind if k == 0 => continue,
                Strategy::SecondKind => pts[k] - pts[k - 1],
                Strategy::FirstKindG => pts[k + 1] - pts[k],
            };
            let e = exact(*t);
            num += h * (u - e).abs();
            den += h * e.abs();
        }
        num / den
    }

    /// Piecewise-linear interpolant of nodal values at `t`. The first panel
    /// is constant when the origin is singular.
    pub fn interpolate(&self, t: f64) -> f64 {
        interpolate(self.mesh.points(), &self.values, t)
    }

    /// CSV with columns `t,u,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u,residual\n");
        for (k, (t, u)) in self.times.iter().zip(&self.values).enumerate() {
            let r = self
                .residuals
                .as_ref()
                .and_then(|r| r.get(k))
                .filter(|v| v.is_finite())
                .map(|v| format!("{v:e}"))
                .unwrap_or_default();
            let u = if u.is_finite() { format!("{u:e}") } else { String::new() };
            let _ = writeln!(out, "{t:e},{u},{r}");
        }
        out
    }
}

pub(crate) fn interpolate(points: &[f64], values: &[f64], t: f64) -> f64 {
    let n = points.len() - 1;
    if t <= points[0] {
        return if values[0].is_finite() { values[0] } else { values[1] };
    }
    let j = match points.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
        Ok(i) => return if values[i].is_finite() { values[i] } else { values[(i + 1).min(n)] },
        Err(i) => i.min(n),
    };
    let (a, b) = (points[j - 1], points[j]);
    let left = if values[j - 1].is_finite() { values[j - 1] } else { values[j] };
    let theta = (t - a) / (b - a);
    left + theta * (values[j] - left)
}

/// `Σ w_j v_j`, replacing a non-finite first value by the second.
pub(crate) fn apply_weights(weights: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (j, (w, v)) in weights.iter().zip(values).enumerate() {
        let v = if j == 0 && !v.is_finite() && values.len() > 1 {
            values[1]
        } else {
            *v
        };
        acc += w * v;
    }
    acc
}

/// Panels this close to the diagonal (by index) are integrated with Gauss
/// nodes instead of the trapezoid rule, since a log-type kernel makes the
/// trapezoid error there first order.
pub const NEAR_PANELS: usize = 16;
const NEAR_NODES: usize = 6;

/// Row `i` of the memory operator: `weights[j]` multiplies `u_j` in
/// `∫₀^{t_i} m(y, t_i - y) û(y) dy` for the piecewise-linear `û`.
fn memory_row(m: &MemoryFn, points: &[f64], i: usize, panel: PanelConfig, near: &GaussLegendre) -> Result<Vec<f64>> {
    let t = points[i];
    let eval = |y: f64, lag: f64| -> Result<f64> {
        let v = m(y, lag)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "memory kernel",
                t: y,
            });
        }
        Ok(v)
    };
    let mut weights = vec![0.0; i + 1];
    let first_near = i.saturating_sub(NEAR_PANELS).max(1);
    let mut nodal_prev: Option<f64> = None;
    for p in 1..first_near {
        let (a, b) = (points[p - 1], points[p]);
        let h = b - a;
        let ma = match nodal_prev {
            Some(v) => v,
            None => eval(a, t - a)?,
        };
        let mb = eval(b, t - b)?;
        weights[p - 1] += 0.5 * h * ma;
        weights[p] += 0.5 * h * mb;
        nodal_prev = Some(mb);
    }
    for p in first_near..i {
        let (a, b) = (points[p - 1], points[p]);
        let h = b - a;
        // lag measured from t keeps the arguments exact near the diagonal
        for (x, w) in near.mapped(0.0, 1.0) {
            let y = a + x * h;
            let lag = (t - b) + (1.0 - x) * h;
            let v = w * h * eval(y, lag)?;
            weights[p - 1] += v * (1.0 - x);
            weights[p] += v * x;
        }
    }
    let h = points[i] - points[i - 1];
    let (total, left) = self_panel(&eval, t, h, panel)?;
    weights[i - 1] += left;
    weights[i] += total - left;
    Ok(weights)
}

/// `∫ m` and `∫ m·(d/h)` over lags `d ∈ (0, h]`, on panels halving toward 0.
fn self_panel<E>(eval: &E, t: f64, h: f64, panel: PanelConfig) -> Result<(f64, f64)>
where
    E: Fn(f64, f64) -> Result<f64>,
{
    let rule = GaussLegendre::new(panel.nodes.max(1));
    let mut total = 0.0;
    let mut left = 0.0;
    let mut outer = h;
    for _ in 0..panel.levels {
        let inner = 0.5 * outer;
        for (d, w) in rule.mapped(inner, outer) {
            let v = w * eval(t - d, d)?;
            total += v;
            left += v * d / h;
        }
        outer = inner;
    }
    let eps = outer;
    for (x, w) in rule.mapped(0.0, 1.0) {
        let d = eps * x * x;
        let v = w * 2.0 * eps * x * eval(t - d, d)?;
        total += v;
        left += v * d / h;
    }
    Ok((total, left))
}

fn sample_rhs(rhs: &Rhs, points: &[f64]) -> Result<Vec<f64>> {
    match rhs {
        Rhs::Sampled(v) => {
            if v.len() != points.len() {
                return Err(Error::Validation(format!(
                    "sampled right-hand side has {} values for {} mesh points",
                    v.len(),
                    points.len()
                )));
            }
            Ok(v.clone())
        }
        Rhs::Function(f) => points
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                if i == 0 {
                    Ok(f(t).unwrap_or(f64::NAN))
                } else {
                    f(t)
                }
            })
            .collect(),
    }
}

/// Solves on `mesh`. The memory rows do not depend on `u`, so they are
/// computed in parallel first; the time stepping itself is sequential and
/// sums in a fixed order, so results are bitwise reproducible.
pub fn solve_second_kind(problem: &SecondKindProblem, mesh: &Mesh) -> Result<SolveReport> {
    let points = mesh.points();
    let n = mesh.steps();
    let r = sample_rhs(&problem.rhs, points)?;
    for (i, v) in r.iter().enumerate().skip(1) {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "right-hand side",
                t: points[i],
            });
        }
    }
    let d = points
        .iter()
        .map(|&t| {
            let v = (problem.diagonal)(t)?;
            if !(v.abs() >= problem.diagonal_floor) {
                return Err(Error::DiagonalBreach {
                    t,
                    value: v,
                    floor: problem.diagonal_floor,
                });
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;

    let near = GaussLegendre::new(NEAR_NODES);
    let rows: Option<Vec<Vec<f64>>> = match &problem.memory {
        None => None,
        Some(m) => Some(
            (1..=n)
                .into_par_iter()
                .map(|i| memory_row(m, points, i, problem.panel, &near))
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    let singular = !r[0].is_finite();
    let mut u = vec![0.0; n + 1];
    u[0] = if singular { f64::NAN } else { r[0] / d[0] };
    for i in 1..=n {
        let (known, coeff) = match &rows {
            None => (0.0, d[i]),
            Some(rows) => {
                let w = &rows[i - 1];
                let mut known = 0.0;
                let mut coeff = d[i] + w[i];
                // With a singular origin u is taken equal to u_1 on the first
                // panel, so at i = 1 the u_0 term joins the unknown's coefficient.
                for j in 0..i {
                    if j == 0 && singular {
                        if i == 1 {
                            coeff += w[0];
                        } else {
                            known += w[0] * u[1];
                        }
                    } else {
                        known += w[j] * u[j];
                    }
                }
                (known, coeff)
            }
        };
        if coeff == 0.0 || !coeff.is_finite() {
            return Err(Error::SolveBreakdown { row: i });
        }
        let v = (r[i] - known) / coeff;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "solution",
                t: points[i],
            });
        }
        u[i] = v;
    }

    Ok(SolveReport {
        mesh: mesh.clone(),
        strategy: Strategy::SecondKind,
        times: points.to_vec(),
        values: u,
        singular_origin: singular,
        residuals: None,
    })
}
