//! First-kind equations, the nonlocal ODE, and their second-kind forms.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{kappa, KernelPair, Weight};
use crate::quadrature::{jacobi_rule, power_weights_on, Mesh, DEFAULT_JACOBI_NODES};
use crate::sonine::{default_check_grid, eval_G2_with, eval_G_with, wsc1_report, SonineData, CONTINUITY_TOLERANCE};

use super::engine::{apply_weights, solve_second_kind, MemoryFn, Rhs, SecondKindProblem, SolveReport, Strategy};
use super::forcing::Forcing;

/// Which first-kind equation is posed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `∫₀ᵗ w(s,t) k(t-s) u(s) ds = f(t)`.
    Weighted,
    /// `∫₀ᵗ K(t-s) u(s) ds = f(t)`.
    KKernel,
}

#[derive(Debug, Clone)]
pub struct FirstKindProblem {
    pub pair: KernelPair,
    pub weight: Weight,
    pub forcing: Forcing,
    pub variant: Variant,
}

/// `d/dt ∫₀ᵗ w(s,t) k(t-s) u(s) ds = f(t)` with `∫₀ᵗ w k u ds → c` as `t → 0⁺`.
#[derive(Debug, Clone)]
pub struct NonlocalOdeProblem {
    pub pair: KernelPair,
    pub weight: Weight,
    pub forcing: Forcing,
    pub c: f64,
}

fn sample<F: Fn(f64) -> Result<f64>>(f: F, points: &[f64]) -> Result<Vec<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(i, &t)| if i == 0 { Ok(f(t).unwrap_or(f64::NAN)) } else { f(t) })
        .collect()
}

/// `r(t_i) = c·K(t_i) + ∫₀^{t_i} K(t_i - s) f(s) ds` on the mesh, with `f`
/// replaced by its piecewise-linear interpolant.
///
/// `r(0)` is NaN unless it is exactly 0 (`c = 0` and `f(0)` finite). A
/// non-finite `f(0)` is read as `f(s) ~ s^{-α0}` near the origin, the
/// behaviour of derivatives of forcings built from `k`.
#[allow(non_snake_case)]
pub fn rhs_K_conv<F>(pair: &KernelPair, f: F, c: f64, mesh: &Mesh) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let points = mesh.points();
    let values = sample(f, points)?;
    let beta = 1.0 - pair.alpha0();
    let scale = pair.assoc_scale();
    let mut r = Vec::with_capacity(points.len());
    r.push(if c == 0.0 && values[0].is_finite() { 0.0 } else { f64::NAN });
    for i in 1..points.len() {
        let conv = scale * power_conv_singular_start(beta, &points[..=i], &values[..=i])?;
        let boundary = if c == 0.0 { 0.0 } else { c * pair.eval_K(points[i])? };
        r.push(boundary + conv);
    }
    Ok(r)
}

/// `∫₀^{t_i} k(t_i - x) ψ(x) h(x) dx` by the `x^{-α0}` factorisation on the
/// nodes `t_0..t_i`, where `psi(j, t_i - t_j)` supplies the smooth part.
fn k_product<P>(pair: &KernelPair, mesh: &Mesh, i: usize, psi: P) -> Result<f64>
where
    P: Fn(usize, f64) -> Result<f64>,
{
    let points = &mesh.points()[..=i];
    let t = points[i];
    let values = points
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let lag = t - x;
            let v = pair.k_scale() * pair.smooth_factor(lag)? * psi(j, lag)?;
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    power_conv_singular_start(pair.alpha0(), points, &values)
}

/// `∫ (t-s)^{-β} v(s) ds` over `nodes` (last node `t`) with `v` piecewise
/// linear. A non-finite `v(0)` means `v(s) ≈ C s^{β-1}` near the origin: that
/// term, with `C` fitted at `t_1`, is integrated exactly and only the
/// remainder is interpolated.
fn power_conv_singular_start(beta: f64, nodes: &[f64], values: &[f64]) -> Result<f64> {
    if values[0].is_finite() || nodes.len() < 2 {
        return Ok(apply_weights(&power_weights_on(beta, nodes), values));
    }
    if nodes.len() > 2 && !looks_singular(beta, nodes, values) {
        let mut filled = values.to_vec();
        filled[0] = values[1];
        return Ok(apply_weights(&power_weights_on(beta, nodes), &filled));
    }
    let c = nodes[1].powf(1.0 - beta) * values[1];
    let remainder: Vec<f64> = nodes
        .iter()
        .zip(values)
        .enumerate()
        .map(|(j, (&s, &v))| if j <= 1 { 0.0 } else { v - c * s.powf(beta - 1.0) })
        .collect();
    Ok(c * kappa(beta)? + apply_weights(&power_weights_on(beta, nodes), &remainder))
}

// Local exponent from the first two nodes, compared with the s^{β-1} model.
fn looks_singular(beta: f64, nodes: &[f64], values: &[f64]) -> bool {
    let (v1, v2) = (values[1], values[2]);
    if v1 == 0.0 || v1.signum() != v2.signum() {
        return false;
    }
    let p = (v2 / v1).ln() / (nodes[2] / nodes[1]).ln();
    (p - (beta - 1.0)).abs() < p.abs()
}

/// Refuses data whose WSC1 report fails, or a mesh beyond the kernel horizon.
pub fn ensure_wsc1(data: &SonineData, mesh: &Mesh) -> Result<()> {
    if mesh.horizon() > data.pair().horizon() * (1.0 + 1e-12) {
        return Err(Error::Validation(format!(
            "mesh horizon {} exceeds the kernel horizon {}",
            mesh.horizon(),
            data.pair().horizon()
        )));
    }
    let grid = default_check_grid(data.pair().horizon(), 8);
    let report = wsc1_report(data, &grid, CONTINUITY_TOLERANCE)?;
    if !report.pass {
        return Err(Error::Validation(format!(
            "WSC1 check failed, refusing to transform: {}",
            report.summary()
        )));
    }
    Ok(())
}

fn weighted_memory(data: &SonineData) -> Option<MemoryFn> {
    if data.is_trivial() {
        return None;
    }
    let data = Arc::new(data.clone());
    Some(Arc::new(move |y, lag| data.eval_g2(y, lag)))
}

/// Weighted first-kind equation to `g(t,0) u + ∫ g₂(s,t-s) u ds = r`, with
/// `r = K(t) f(0) + ∫₀ᵗ K(t-s) f'(s) ds`.
pub fn transform_first_kind_weighted(
    problem: &FirstKindProblem,
    data: &SonineData,
    mesh: &Mesh,
) -> Result<SecondKindProblem> {
    ensure_wsc1(data, mesh)?;
    let rhs = weighted_rhs(problem, data, mesh)?;
    let weight = data.weight().clone();
    Ok(SecondKindProblem::new(
        Arc::new(move |t| weight.eval(t, t)),
        weighted_memory(data),
        Rhs::Sampled(rhs),
    ))
}

/// K-kernel first-kind equation to `g(0,0) u + ∫ g₂(0,t-s) u ds = r`, with
/// `r = f(0) w(0,t) k(t) + ∫₀ᵗ w(0,s) k(s) f'(t-s) ds`.
#[allow(non_snake_case)]
pub fn transform_first_kind_K(
    problem: &FirstKindProblem,
    data: &SonineData,
    mesh: &Mesh,
) -> Result<SecondKindProblem> {
    ensure_wsc1(data, mesh)?;
    let rhs = kernel_rhs(problem, data, mesh)?;
    let g00 = data.eval_g(0.0, 0.0)?;
    let memory: Option<MemoryFn> = if data.is_trivial() {
        None
    } else {
        let data = Arc::new(data.clone());
        Some(Arc::new(move |_y, lag| data.eval_g2(0.0, lag)))
    };
    Ok(SecondKindProblem::new(Arc::new(move |_| Ok(g00)), memory, Rhs::Sampled(rhs)))
}

fn weighted_rhs(problem: &FirstKindProblem, data: &SonineData, mesh: &Mesh) -> Result<Vec<f64>> {
    let f0 = problem.forcing.eval(0.0)?;
    rhs_K_conv(data.pair(), |t| problem.forcing.eval_prime(t), f0, mesh)
}

fn kernel_rhs(problem: &FirstKindProblem, data: &SonineData, mesh: &Mesh) -> Result<Vec<f64>> {
    let pair = data.pair();
    let weight = data.weight();
    let f0 = problem.forcing.eval(0.0)?;
    let points = mesh.points();
    let fprime = sample(|t| problem.forcing.eval_prime(t), points)?;
    let derivative_free = problem.forcing.as_constant().is_some();
    let mut rhs = vec![0.0; points.len()];
    rhs[0] = if f0 == 0.0 && fprime[0].is_finite() { 0.0 } else { f64::NAN };
    let rows: Vec<Result<f64>> = (1..points.len())
        .into_par_iter()
        .map(|i| {
            let t = points[i];
            let boundary = if f0 == 0.0 { 0.0 } else { f0 * weight.eval(0.0, t)? * pair.eval_k(t)? };
            if derivative_free {
                return Ok(boundary);
            }
            // x = t - s runs over the mesh nodes, so f' is only sampled there
            let conv = k_product(pair, mesh, i, |j, lag| Ok(weight.eval(0.0, lag)? * fprime[j]))?;
            Ok(boundary + conv)
        })
        .collect();
    for (i, v) in rows.into_iter().enumerate() {
        rhs[i + 1] = v?;
    }
    Ok(rhs)
}

/// Nonlocal ODE to `g(t,0) u + ∫ g₂(y,t-y) u dy = c K(t) + ∫₀ᵗ K(t-y) f(y) dy`.
pub fn transform_nonlocal_ode(
    problem: &NonlocalOdeProblem,
    data: &SonineData,
    mesh: &Mesh,
) -> Result<SecondKindProblem> {
    ensure_wsc1(data, mesh)?;
    let rhs = rhs_K_conv(data.pair(), |t| problem.forcing.eval(t), problem.c, mesh)?;
    let weight = data.weight().clone();
    Ok(SecondKindProblem::new(
        Arc::new(move |t| weight.eval(t, t)),
        weighted_memory(data),
        Rhs::Sampled(rhs),
    ))
}

/// Solves a first-kind problem with the chosen strategy. Second-kind
/// solutions carry the first-kind residual at the mesh nodes.
pub fn solve_first_kind(problem: &FirstKindProblem, mesh: &Mesh, strategy: Strategy) -> Result<SolveReport> {
    let data = SonineData::new(problem.pair.clone(), problem.weight.clone())?;
    solve_first_kind_with(problem, &data, mesh, strategy)
}

pub fn solve_first_kind_with(
    problem: &FirstKindProblem,
    data: &SonineData,
    mesh: &Mesh,
    strategy: Strategy,
) -> Result<SolveReport> {
    match strategy {
        Strategy::SecondKind => {
            let second = match problem.variant {
                Variant::Weighted => transform_first_kind_weighted(problem, data, mesh)?,
                Variant::KKernel => transform_first_kind_K(problem, data, mesh)?,
            };
            let mut report = solve_second_kind(&second, mesh)?;
            let mut residuals = vec![f64::NAN];
            residuals.extend(residual_first_kind(problem, &report, &mesh.points()[1..])?);
            report.residuals = Some(residuals);
            Ok(report)
        }
        Strategy::FirstKindG => {
            ensure_wsc1(data, mesh)?;
            solve_midpoint(problem, data, mesh)
        }
    }
}

/// Midpoint product rule for `∫₀ᵗ g(s, t-s) u(s) ds = R(t)` (weighted) or
/// `∫₀ᵗ g(0, t-s) u(s) ds = R(t)` (K-kernel), unknowns at panel midpoints.
/// `R` is `∫₀ᵗ K(t-s) f(s) ds`, resp. `∫₀ᵗ w(0,s) k(s) f(t-s) ds`.
fn solve_midpoint(problem: &FirstKindProblem, data: &SonineData, mesh: &Mesh) -> Result<SolveReport> {
    let points = mesh.points();
    let n = mesh.steps();
    let mids: Vec<f64> = points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let pair = data.pair();
    // R(t) = ∫₀ᵗ r with r the differentiated right-hand side. r(0) is
    // missing when f(0) != 0 (r blows up like a power of s) or when f' is
    // singular at 0 (r stays bounded and is taken constant on the first panel).
    let (r, gamma) = match problem.variant {
        Variant::Weighted => (weighted_rhs(problem, data, mesh)?, 1.0 - pair.alpha0()),
        Variant::KKernel => (kernel_rhs(problem, data, mesh)?, pair.alpha0()),
    };
    let mut target = Vec::with_capacity(n);
    let mut acc = if r[0].is_finite() {
        0.5 * points[1] * (r[0] + r[1])
    } else if problem.forcing.eval(0.0)? != 0.0 {
        points[1] * r[1] / (1.0 - gamma)
    } else {
        points[1] * r[1]
    };
    target.push(acc);
    for i in 2..=n {
        acc += 0.5 * (points[i] - points[i - 1]) * (r[i - 1] + r[i]);
        target.push(acc);
    }
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let t = points[i];
            (0..i)
                .map(|j| {
                    let s = mids[j];
                    let h = points[j + 1] - points[j];
                    let g = match problem.variant {
                        Variant::Weighted => data.eval_g(s, t - s)?,
                        Variant::KKernel => data.eval_g(0.0, t - s)?,
                    };
                    Ok(h * g)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut u = vec![0.0; n];
    for i in 0..n {
        let row = &rows[i];
        let known: f64 = (0..i).map(|j| row[j] * u[j]).sum();
        let diag = row[i];
        if !(diag.abs() > 0.0) {
            return Err(Error::SolveBreakdown { row: i + 1 });
        }
        u[i] = (target[i] - known) / diag;
        if !u[i].is_finite() {
            return Err(Error::NonFinite {
                context: "solution",
                t: mids[i],
            });
        }
    }
    Ok(SolveReport {
        mesh: mesh.clone(),
        strategy: Strategy::FirstKindG,
        times: mids,
        values: u,
        singular_origin: false,
        residuals: None,
    })
}

/// Checks that a nonzero initial constant comes with a graded mesh.
pub fn solve_nonlocal_ode(problem: &NonlocalOdeProblem, mesh: &Mesh) -> Result<SolveReport> {
    if problem.c != 0.0 && mesh.is_uniform() {
        return Err(Error::Validation(
            "c != 0 makes the solution singular at t = 0; use a graded mesh".into(),
        ));
    }
    let data = SonineData::new(problem.pair.clone(), problem.weight.clone())?;
    let second = transform_nonlocal_ode(problem, &data, mesh)?;
    solve_second_kind(&second, mesh)
}

/// First-kind residual `∫₀ᵗ w(s,t) k(t-s) û(s) ds - f(t)` (or with `K`) at
/// each checkpoint, where `û` interpolates the nodal solution.
pub fn residual_first_kind(problem: &FirstKindProblem, report: &SolveReport, checkpoints: &[f64]) -> Result<Vec<f64>> {
    if report.strategy != Strategy::SecondKind {
        return Err(Error::Unsupported("residuals need nodal solution values".into()));
    }
    let points = report.mesh.points();
    checkpoints
        .par_iter()
        .map(|&t| {
            if !(t > 0.0) || t > points[points.len() - 1] * (1.0 + 1e-12) {
                return Err(Error::Domain(format!("checkpoint {t} is outside the mesh")));
            }
            let last = points.partition_point(|p| *p < t);
            let mut nodes: Vec<f64> = points[..last].to_vec();
            nodes.push(t);
            let mut u: Vec<f64> = nodes.iter().map(|&s| report.interpolate(s)).collect();
            if report.singular_origin {
                u[0] = f64::NAN;
            }
            let integral = match problem.variant {
                Variant::Weighted => {
                    let pair = &problem.pair;
                    let values = nodes
                        .iter()
                        .zip(&u)
                        .map(|(&s, &us)| {
                            Ok(pair.k_scale() * pair.smooth_factor(t - s)? * problem.weight.eval(s, t)? * us)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    power_conv_singular_start(pair.alpha0(), &nodes, &values)?
                }
                Variant::KKernel => {
                    let beta = 1.0 - problem.pair.alpha0();
                    problem.pair.assoc_scale() * power_conv_singular_start(beta, &nodes, &u)?
                }
            };
            Ok(integral - problem.forcing.eval(t)?)
        })
        .collect()
}

/// Solution of the K-kernel equation with `f ≡ 1`, i.e. a kernel `u` with
/// `∫₀ᵗ K(t-s) u(s) ds = 1`, and that residual at the checkpoints.
#[derive(Debug, Clone)]
pub struct AssociateReport {
    pub solve: SolveReport,
    pub checkpoints: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn construct_csc_associate(data: &SonineData, mesh: &Mesh, checkpoints: &[f64]) -> Result<AssociateReport> {
    let problem = FirstKindProblem {
        pair: data.pair().clone(),
        weight: data.weight().clone(),
        forcing: Forcing::constant(1.0),
        variant: Variant::KKernel,
    };
    let second = transform_first_kind_K(&problem, data, mesh)?;
    let solve = solve_second_kind(&second, mesh)?;
    let residuals = residual_first_kind(&problem, &solve, checkpoints)?;
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(AssociateReport {
        solve,
        checkpoints: checkpoints.to_vec(),
        residuals,
        max_residual,
    })
}

/// Kernel `u` with `∫₀ᵗ G(0, t-y) u(y) dy = ∫₀ᵗ w(0,v) K(v) dv`, found from
/// `G(0,0) u + ∫₀ᵗ G₂(0, t-y) u dy = w(0,t) K(t)`, with the residual
/// `∫₀ᵗ k(t-s) u(s) ds - 1` at the checkpoints.
pub fn associate_from_wsc2(
    pair: &KernelPair,
    weight: &Weight,
    mesh: &Mesh,
    checkpoints: &[f64],
) -> Result<AssociateReport> {
    if !pair.is_constant() {
        return Err(Error::Unsupported("WSC2 associates need a constant exponent".into()));
    }
    if mesh.horizon() > pair.horizon() * (1.0 + 1e-12) {
        return Err(Error::Validation(format!(
            "mesh horizon {} exceeds the kernel horizon {}",
            mesh.horizon(),
            pair.horizon()
        )));
    }
    let rule = Arc::new(jacobi_rule(pair.alpha0(), DEFAULT_JACOBI_NODES)?);
    let g00 = eval_G_with(pair, weight, &rule, 0.0, 0.0)?;
    let points = mesh.points();
    let mut rhs = Vec::with_capacity(points.len());
    rhs.push(f64::NAN);
    for &t in &points[1..] {
        rhs.push(weight.eval(0.0, t)? * pair.eval_K(t)?);
    }
    let memory: Option<MemoryFn> = if weight.is_one() {
        None
    } else {
        let (pair, weight) = (pair.clone(), weight.clone());
        Some(Arc::new(move |_y, lag| eval_G2_with(&pair, &weight, &rule, 0.0, lag)))
    };
    let second = SecondKindProblem::new(Arc::new(move |_| Ok(g00)), memory, Rhs::Sampled(rhs));
    let solve = solve_second_kind(&second, mesh)?;
    let check = FirstKindProblem {
        pair: pair.clone(),
        weight: Weight::one(pair.horizon())?,
        forcing: Forcing::constant(1.0),
        variant: Variant::Weighted,
    };
    let residuals = residual_first_kind(&check, &solve, checkpoints)?;
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(AssociateReport {
        solve,
        checkpoints: checkpoints.to_vec(),
        residuals,
        max_residual,
    })
}
