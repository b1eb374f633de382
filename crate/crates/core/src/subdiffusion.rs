//! One-dimensional weighted subdiffusion with a variable exponent,
//!
//! `∫₀ᵗ w(s,t) k(t-s) ∂ₛu(x,s) ds - ∂ₓₓu = f` on `(0,1) × (0,T]`,
//!
//! solved in its transformed form
//!
//! `g(t,0) ∂ₜu + ∫₀ᵗ g₂(s,t-s) ∂ₛu ds - D_K[∂ₓₓu] = D_K[f]`, where
//! `D_K[φ](t) = d/dt ∫₀ᵗ K(t-s) φ(s) ds`,
//!
//! by the method of lines. The `1/g(t,0)` factor of the transformed model is
//! multiplied through, so it sits outside the `D_K` derivative.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::kernels::{gamma, KernelPair, Normalization, Weight};
use crate::quadrature::{graded_distance_quad, panel_weights, GaussLegendre, Mesh};
use crate::sonine::SonineData;
use crate::vie::{ensure_wsc1, ScalarFn};

/// Growth factor over the initial scale that counts as instability.
pub const INSTABILITY_FACTOR: f64 = 1e3;
const MEMORY_NODES: usize = 4;

/// L1 weights for `D_K[φ](t_i)` with `K(t) = t^{α0-1}/Γ(α0)` and `φ`
/// piecewise linear:
/// `D_K[φ](t_i) = K(t_i) φ_0 + Σ_p panel[i][p-1] (φ_p - φ_{p-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    pub boundary: Vec<f64>,
    /// `panel[i][p-1] = (1/τ_p) ∫_{t_{p-1}}^{t_p} K(t_i - s) ds` for `p <= i`.
    pub panel: Vec<Vec<f64>>,
}

impl L1Weights {
    pub fn apply(&self, i: usize, phi: &[f64]) -> f64 {
        let mut acc = self.boundary[i] * phi[0];
        for (p, w) in self.panel[i].iter().enumerate() {
            acc += w * (phi[p + 1] - phi[p]);
        }
        acc
    }
}

pub fn l1_weights(alpha0: f64, mesh: &Mesh) -> Result<L1Weights> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(Error::Domain(format!("L1 weights need 0 < alpha0 < 1, got {alpha0}")));
    }
    let scale = 1.0 / gamma(alpha0)?;
    let points = mesh.points();
    let beta = 1.0 - alpha0;
    let mut boundary = vec![f64::NAN; points.len()];
    let mut panel = vec![Vec::new(); points.len()];
    for i in 1..points.len() {
        let t = points[i];
        boundary[i] = scale * t.powf(alpha0 - 1.0);
        panel[i] = (1..=i)
            .map(|p| {
                let h = points[p] - points[p - 1];
                let (l, r) = panel_weights(beta, t - points[p], h);
                scale * (l + r) / h
            })
            .collect();
    }
    Ok(L1Weights { boundary, panel })
}

type FieldFn = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;

/// Right-hand side `f(x,t)`.
#[derive(Clone)]
pub struct PdeForcing {
    label: String,
    f: FieldFn,
    /// Per-time factors to evaluate once per time level: `f = Σ a_k(t) b_k(x)`.
    separable: Option<Vec<(ScalarFn, Expr)>>,
}

impl std::fmt::Debug for PdeForcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdeForcing").field("label", &self.label).finish_non_exhaustive()
    }
}

impl PdeForcing {
    pub fn from_expr(expr: &Expr) -> Result<Self> {
        if expr.depends_on(Var::S) {
            return Err(Error::Validation(format!("forcing `{expr}` may only depend on x and t")));
        }
        let e = expr.clone();
        Ok(PdeForcing {
            label: expr.to_string(),
            f: Arc::new(move |x, t| Ok(e.eval(&Bindings::xt(x, t))?)),
            separable: None,
        })
    }

    pub fn zero() -> Self {
        PdeForcing {
            label: "0".into(),
            f: Arc::new(|_, _| Ok(0.0)),
            separable: None,
        }
    }

    /// `f(x,t) = Σ a_k(t) b_k(x)`.
    pub fn separable(label: impl Into<String>, terms: Vec<(ScalarFn, Expr)>) -> Result<Self> {
        for (_, b) in &terms {
            if b.depends_on(Var::S) || b.depends_on(Var::T) {
                return Err(Error::Validation(format!("spatial factor `{b}` may only depend on x")));
            }
        }
        let t2 = terms.clone();
        Ok(PdeForcing {
            label: label.into(),
            f: Arc::new(move |x, t| {
                let mut acc = 0.0;
                for (a, b) in &t2 {
                    acc += a(t)? * b.eval(&Bindings::x(x))?;
                }
                Ok(acc)
            }),
            separable: Some(terms),
        })
    }

    /// Forcing that makes `u = T(t) X(x)` an exact solution:
    /// `f = X ∫₀ᵗ w(s,t) k(t-s) T'(s) ds - T X''`, the memory integral by
    /// graded quadrature.
    pub fn manufactured(pair: &KernelPair, weight: &Weight, time: &Expr, space: &Expr) -> Result<Self> {
        if time.depends_on(Var::S) || time.depends_on(Var::X) {
            return Err(Error::Validation(format!("time factor `{time}` may only depend on t")));
        }
        let dt = time.diff(Var::T);
        let space_xx = space.diff(Var::X).diff(Var::X);
        let (pair, weight, tt) = (pair.clone(), weight.clone(), time.clone());
        let memory: ScalarFn = Arc::new(move |t| {
            if t == 0.0 {
                return Ok(0.0);
            }
            graded_distance_quad(
                |v| Ok(weight.eval(t - v, t)? * pair.eval_k(v)? * dt.eval(&Bindings::t(t - v))?),
                t,
                60,
                16,
            )
        });
        let minus_t: ScalarFn = Arc::new(move |t| Ok(-tt.eval(&Bindings::t(t))?));
        Self::separable(
            format!("manufactured({time} * {space})"),
            vec![(memory, space.clone()), (minus_t, space_xx)],
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        (self.f)(x, t)
    }

    fn sample(&self, xs: &[f64], t: f64) -> Result<Vec<f64>> {
        match &self.separable {
            Some(terms) => {
                let mut out = vec![0.0; xs.len()];
                for (a, b) in terms {
                    let at = a(t)?;
                    for (o, &x) in out.iter_mut().zip(xs) {
                        *o += at * b.eval(&Bindings::x(x))?;
                    }
                }
                Ok(out)
            }
            None => xs.iter().map(|&x| (self.f)(x, t)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PdeConfig {
    /// Interior spatial nodes; spacing `1/(M+1)`.
    pub interior: usize,
    pub mesh: Mesh,
    /// Must use [`Normalization::Gamma`].
    pub pair: KernelPair,
    pub weight: Weight,
    pub forcing: PdeForcing,
    pub initial: Expr,
    /// Exact solution in `x, t` for the final-time error, when known.
    pub exact: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Max-norm residual of the tridiagonal solve.
    pub linear_residual: f64,
    /// Number of memory panel terms summed.
    pub memory_terms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    /// Grid including the boundary nodes.
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// `u[i][j] = u(x_j, t_i)`, boundary values included.
    pub u: Vec<Vec<f64>>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Relative discrete L² error at the final time.
    pub final_error: Option<f64>,
}

impl PdeSolution {
    /// CSV with columns `x,t,u`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,t,u\n");
        for (t, row) in self.t.iter().zip(&self.u) {
            for (x, u) in self.x.iter().zip(row) {
                let _ = writeln!(out, "{x:e},{t:e},{u:e}");
            }
        }
        out
    }

    pub fn final_state(&self) -> &[f64] {
        &self.u[self.u.len() - 1]
    }

    /// Relative discrete L² error against `exact(x, t)` at the final time.
    pub fn relative_l2_error<F: Fn(f64, f64) -> f64>(&self, exact: F) -> f64 {
        let t = self.t[self.t.len() - 1];
        let (mut num, mut den) = (0.0, 0.0);
        for (x, u) in self.x.iter().zip(self.final_state()) {
            let e = exact(*x, t);
            num += (u - e).powi(2);
            den += e * e;
        }
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    }
}

/// Thomas algorithm for a symmetric tridiagonal matrix with constant
/// diagonal `a` and off-diagonal `b`.
fn thomas(a: f64, b: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = a;
    for i in 0..n {
        if i > 0 {
            denom = a - b * c[i - 1];
        }
        if !(denom.abs() > 1e-300) || !denom.is_finite() {
            return Err(Error::SolveBreakdown { row: i });
        }
        c[i] = b / denom;
        d[i] = (rhs[i] - if i > 0 { b * d[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = d;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

fn laplacian(u: &[f64], h2: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|j| {
            let left = if j > 0 { u[j - 1] } else { 0.0 };
            let right = if j + 1 < n { u[j + 1] } else { 0.0 };
            (left - 2.0 * u[j] + right) / h2
        })
        .collect()
}

/// `M_ip = ∫_{t_{p-1}}^{t_p} g₂(s, t_i - s) ds` for `p = 1..=i`.
fn memory_weights(data: &SonineData, points: &[f64], i: usize, rule: &GaussLegendre) -> Result<Vec<f64>> {
    let t = points[i];
    let mut out = Vec::with_capacity(i);
    for p in 1..i {
        let (a, b) = (points[p - 1], points[p]);
        let h = b - a;
        let mut acc = 0.0;
        for (x, w) in rule.mapped(0.0, 1.0) {
            let lag = (t - b) + (1.0 - x) * h;
            acc += w * h * data.eval_g2(a + x * h, lag)?;
        }
        out.push(acc);
    }
    let h = points[i] - points[i - 1];
    out.push(graded_distance_quad(|d| data.eval_g2(t - d, d), h, 20, 8)?);
    Ok(out)
}

pub fn solve_subdiffusion(config: &PdeConfig) -> Result<PdeSolution> {
    if config.pair.normalization() != Normalization::Gamma {
        return Err(Error::Validation(
            "subdiffusion uses the Gamma-normalised kernel pair".into(),
        ));
    }
    if config.interior == 0 {
        return Err(Error::Validation("at least one interior node is needed".into()));
    }
    if config.initial.depends_on(Var::S) || config.initial.depends_on(Var::T) {
        return Err(Error::Validation("initial data may only depend on x".into()));
    }
    for edge in [0.0, 1.0] {
        let v = config.initial.eval(&Bindings::x(edge))?;
        if v.abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "initial data is {v:e} at x = {edge}, incompatible with the zero boundary values"
            )));
        }
    }
    let data = SonineData::new(config.pair.clone(), config.weight.clone())?;
    ensure_wsc1(&data, &config.mesh)?;

    let m = config.interior;
    let h = 1.0 / (m as f64 + 1.0);
    let h2 = h * h;
    let x: Vec<f64> = (0..m + 2).map(|j| j as f64 * h).collect();
    let xi = &x[1..=m];
    let points = config.mesh.points();
    let n = config.mesh.steps();

    let l1 = l1_weights(config.pair.alpha0(), &config.mesh)?;
    let forcing: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&t| config.forcing.sample(xi, t))
        .collect::<Result<_>>()?;
    let columns: Vec<Vec<f64>> = (0..m).map(|j| forcing.iter().map(|row| row[j]).collect()).collect();
    let diag: Vec<f64> = points.iter().map(|&t| data.eval_g(t, 0.0)).collect::<Result<_>>()?;
    let rule = GaussLegendre::new(MEMORY_NODES);
    let memory: Option<Vec<Vec<f64>>> = if data.is_trivial() {
        None
    } else {
        Some(
            (1..=n)
                .into_par_iter()
                .map(|i| memory_weights(&data, points, i, &rule))
                .collect::<Result<_>>()?,
        )
    };

    let u0: Vec<f64> = xi.iter().map(|&x| Ok(config.initial.eval(&Bindings::x(x))?)).collect::<Result<_>>()?;
    let scale = u0
        .iter()
        .chain(forcing.iter().flatten())
        .fold(1.0f64, |s, v| s.max(v.abs()));
    let limit = INSTABILITY_FACTOR * scale;

    let mut states = vec![u0.clone()];
    let mut laps = vec![laplacian(&u0, h2)];
    // backward differences (U^p - U^{p-1}) / τ_p
    let mut slopes: Vec<Vec<f64>> = vec![Vec::new()];
    let mut diagnostics = Vec::with_capacity(n);
    for i in 1..=n {
        let tau = points[i] - points[i - 1];
        let prev = &states[i - 1];
        let mem_i = memory.as_ref().map(|mw| &mw[i - 1]);
        let m_ii = mem_i.map_or(0.0, |w| w[i - 1]);
        let a_ii = l1.panel[i][i - 1];
        let g = diag[i];

        let rhs: Vec<f64> = (0..m)
            .map(|j| {
                let mut r = (g + m_ii) * prev[j] / tau;
                if let Some(w) = mem_i {
                    for p in 1..i {
                        r -= w[p - 1] * slopes[p][j];
                    }
                }
                // D_K[Δu] without the implicit newest term
                r += l1.boundary[i] * laps[0][j];
                for p in 1..i {
                    r += l1.panel[i][p - 1] * (laps[p][j] - laps[p - 1][j]);
                }
                r -= a_ii * laps[i - 1][j];
                r + l1.apply(i, &columns[j][..=i])
            })
            .collect();

        let a = (g + m_ii) / tau + 2.0 * a_ii / h2;
        let b = -a_ii / h2;
        let next = thomas(a, b, &rhs)?;
        let mut residual = 0.0f64;
        for j in 0..m {
            let left = if j > 0 { next[j - 1] } else { 0.0 };
            let right = if j + 1 < m { next[j + 1] } else { 0.0 };
            residual = residual.max((a * next[j] + b * (left + right) - rhs[j]).abs());
        }
        let norm = next.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if !norm.is_finite() || norm > limit {
            return Err(Error::Unstable {
                step: i,
                t: points[i],
                norm,
                limit,
            });
        }
        slopes.push(next.iter().zip(prev).map(|(u, v)| (u - v) / tau).collect());
        laps.push(laplacian(&next, h2));
        states.push(next);
        diagnostics.push(StepDiagnostics {
            linear_residual: residual,
            memory_terms: if memory.is_some() { i } else { 0 },
        });
    }

    let u: Vec<Vec<f64>> = states
        .into_iter()
        .map(|s| {
            let mut row = Vec::with_capacity(m + 2);
            row.push(0.0);
            row.extend(s);
            row.push(0.0);
            row
        })
        .collect();
    let mut solution = PdeSolution {
        x,
        t: points.to_vec(),
        u,
        diagnostics,
        final_error: None,
    };
    if let Some(exact) = &config.exact {
        let tf = points[n];
        let values: Vec<f64> = solution
            .x
            .iter()
            .map(|&x| Ok(exact.eval(&Bindings::xt(x, tf))?))
            .collect::<Result<_>>()?;
        let e = solution.relative_l2_error(|x, _| {
            let j = ((x / h).round() as usize).min(m + 1);
            values[j]
        });
        solution.final_error = Some(e);
    }
    Ok(solution)
}
