//! The weighted Sonine functions `g`, `g₂` and `G`, and the checks built on
//! them.
//!
//! With `k(x) = c_k x^{-α0} φ(x)` and `K(x) = c_K x^{α0-1}`, the substitution
//! `τ = s + t z` turns
//!
//! ```text
//! g(s,t) = ∫_s^{s+t} w(s,τ) k(τ-s) K(s+t-τ) dτ
//! ```
//!
//! into `(1/κ) ∫₀¹ w(s, s+tz) φ(tz) (1-z)^{α0-1} z^{-α0} dz`, which the
//! Gauss–Jacobi rule integrates with both endpoint singularities absorbed.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{KernelPair, Weight};
use crate::quadrature::{graded_distance_quad, graded_jacobi_rule, jacobi_rule, JacobiRule, DEFAULT_JACOBI_NODES};

/// Offset used to probe continuity of `g(s,·)` and `G(s,·)` at 0.
pub const CONTINUITY_PROBE: f64 = 1e-6;
/// Default tolerance for exact identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;
/// Default tolerance for quantities produced by a solver.
pub const SOLVER_TOLERANCE: f64 = 1e-2;
/// Default tolerance on `|g(s, δ) - g(s, 0)|` with `δ = CONTINUITY_PROBE`.
pub const CONTINUITY_TOLERANCE: f64 = 1e-4;

const TIME_SLACK: f64 = 1e-9;
/// End-piece nodes, panel levels and nodes per panel of the composite rule.
const VARIABLE_RULE: (usize, usize, usize) = (12, 12, 6);
const L1_LEVELS: usize = 24;
const L1_NODES: usize = 8;

/// Kernel pair, weight and quadrature rule, with sampled bounds on the
/// diagonal `g(s,0) = w(s,s)` and on `|g₂|`.
#[derive(Debug, Clone)]
pub struct SonineData {
    pair: KernelPair,
    weight: Weight,
    jacobi: JacobiRule,
    inv_kappa: f64,
    nu_lower: f64,
    nu_upper: f64,
    g2_bound_sample: f64,
}

impl SonineData {
    pub fn new(pair: KernelPair, weight: Weight) -> Result<Self> {
        Self::with_rule_size(pair, weight, DEFAULT_JACOBI_NODES)
    }

    /// `n` is the Gauss–Jacobi node count for a constant exponent. A variable
    /// exponent makes the smooth factor behave like `1 + c·z ln z` near
    /// `z = 0`, where a plain Gauss rule converges only algebraically, so the
    /// graded composite rule is used instead.
    pub fn with_rule_size(pair: KernelPair, weight: Weight, n: usize) -> Result<Self> {
        let jacobi = if pair.is_constant() {
            jacobi_rule(pair.alpha0(), n)?
        } else {
            let (end, levels, panel) = VARIABLE_RULE;
            graded_jacobi_rule(pair.alpha0(), end, levels, panel)?
        };
        let inv_kappa = 1.0 / pair.kappa();
        let mut data = SonineData {
            pair,
            weight,
            jacobi,
            inv_kappa,
            nu_lower: f64::INFINITY,
            nu_upper: 0.0,
            g2_bound_sample: 0.0,
        };
        let b = data.pair.horizon();
        let side = 16;
        for i in 0..side {
            let s = b * i as f64 / (side - 1) as f64;
            let v = data.eval_g(s, 0.0)?.abs();
            data.nu_lower = data.nu_lower.min(v);
            data.nu_upper = data.nu_upper.max(v);
            for j in 1..side - i {
                let t = b * j as f64 / (side - 1) as f64;
                let g2 = data.eval_g2(s, t.min(b - s))?.abs();
                data.g2_bound_sample = data.g2_bound_sample.max(g2);
            }
        }
        Ok(data)
    }

    pub fn pair(&self) -> &KernelPair {
        &self.pair
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn jacobi(&self) -> &JacobiRule {
        &self.jacobi
    }

    /// Sampled `min |g(s,0)|`.
    pub fn nu_lower(&self) -> f64 {
        self.nu_lower
    }

    /// Sampled `max |g(s,0)|`.
    pub fn nu_upper(&self) -> f64 {
        self.nu_upper
    }

    /// Sampled `max |g₂|` away from `t = 0`.
    pub fn g2_bound_sample(&self) -> f64 {
        self.g2_bound_sample
    }

    /// True when `g ≡ 1` and `g₂ ≡ 0` hold exactly (constant α, `w ≡ 1`).
    pub fn is_trivial(&self) -> bool {
        self.pair.is_constant() && self.weight.is_one()
    }

    fn check_args(&self, s: f64, t: f64) -> Result<()> {
        let b = self.pair.horizon();
        if !(s >= 0.0) || !(t >= 0.0) || s + t > b * (1.0 + TIME_SLACK) {
            return Err(Error::Domain(format!(
                "g(s,t) needs s, t >= 0 and s + t <= {b}, got s = {s}, t = {t}"
            )));
        }
        Ok(())
    }

    /// `g(s,t)`; `g(s,0) = w(s,s)` exactly.
    pub fn eval_g(&self, s: f64, t: f64) -> Result<f64> {
        self.check_args(s, t)?;
        if t == 0.0 || self.is_trivial() {
            return self.weight.eval(s, s);
        }
        let sum = self.jacobi.try_integrate(|z| {
            let x = t * z;
            Ok(self.weight.eval(s, s + x)? * self.pair.smooth_factor(x)?)
        })?;
        Ok(self.inv_kappa * sum)
    }

    /// `∂g/∂t (s,t)` for `t > 0`.
    pub fn eval_g2(&self, s: f64, t: f64) -> Result<f64> {
        self.check_args(s, t)?;
        if !(t > 0.0) {
            return Err(Error::Domain(format!("g2(s,t) needs t > 0, got {t}")));
        }
        if self.is_trivial() {
            return Ok(0.0);
        }
        let constant = self.pair.is_constant();
        let sum = self.jacobi.try_integrate(|z| {
            let x = t * z;
            let (phi, dphi) = if constant {
                (1.0, 0.0)
            } else {
                self.pair.smooth_factor_with_derivative(x)?
            };
            let w2 = self.weight.eval_w2(s, s + x)?;
            let mut v = w2 * z * phi;
            if dphi != 0.0 {
                v += self.weight.eval(s, s + x)? * z * dphi;
            }
            Ok(v)
        })?;
        Ok(self.inv_kappa * sum)
    }

    /// `g(t, 0) = w(t, t)`, the diagonal of the weighted transform.
    pub fn diagonal(&self, t: f64) -> Result<f64> {
        self.weight.eval(t, t)
    }
}

/// `|∫₀ᵗ K(t-s) k(s) ds - 1|` using an `n`-node Jacobi rule (the composite
/// rule for a variable exponent).
pub fn csc_residual(pair: &KernelPair, t: f64, rule_n: usize) -> Result<f64> {
    if !(t > 0.0) || t > pair.horizon() * (1.0 + TIME_SLACK) {
        return Err(Error::Domain(format!(
            "csc_residual needs 0 < t <= {}, got {t}",
            pair.horizon()
        )));
    }
    let rule = if pair.is_constant() {
        jacobi_rule(pair.alpha0(), rule_n)?
    } else {
        let (end, levels, panel) = VARIABLE_RULE;
        graded_jacobi_rule(pair.alpha0(), end, levels, panel)?
    };
    let sum = rule.try_integrate(|z| pair.smooth_factor(t * z))?;
    Ok((sum / pair.kappa() - 1.0).abs())
}

/// `G(s,t) = w(s,s) + ∫₀ᵗ (w(s, t-z+s) - w(s,s)) k(z) K(t-z) dz` for a
/// constant exponent.
#[allow(non_snake_case)]
pub fn eval_G(pair: &KernelPair, weight: &Weight, s: f64, t: f64) -> Result<f64> {
    let rule = jacobi_rule(pair.alpha0(), DEFAULT_JACOBI_NODES)?;
    eval_G_with(pair, weight, &rule, s, t)
}

#[allow(non_snake_case)]
pub(crate) fn eval_G_with(
    pair: &KernelPair,
    weight: &Weight,
    rule: &JacobiRule,
    s: f64,
    t: f64,
) -> Result<f64> {
    if !pair.is_constant() {
        return Err(Error::Unsupported(
            "G(s,t) is only available for a constant exponent".into(),
        ));
    }
    let b = pair.horizon();
    if !(s >= 0.0) || !(t >= 0.0) || s + t > b * (1.0 + TIME_SLACK) {
        return Err(Error::Domain(format!(
            "G(s,t) needs s, t >= 0 and s + t <= {b}, got s = {s}, t = {t}"
        )));
    }
    let diag = weight.eval(s, s)?;
    if t == 0.0 || weight.is_one() {
        return Ok(diag);
    }
    let sum = rule.try_integrate(|z| Ok(weight.eval(s, t - t * z + s)? - diag))?;
    Ok(diag + sum / pair.kappa())
}

/// Finite-difference `∂G/∂t` with step `1e-5·max(t, 0.01)`, one-sided near 0.
#[allow(non_snake_case)]
pub(crate) fn eval_G2_with(
    pair: &KernelPair,
    weight: &Weight,
    rule: &JacobiRule,
    s: f64,
    t: f64,
) -> Result<f64> {
    if weight.is_one() {
        return Ok(0.0);
    }
    let h = 1e-5 * t.max(0.01);
    let b = pair.horizon();
    let hi = (t + h).min(b - s);
    let lo = (t - h).max(0.0);
    let up = eval_G_with(pair, weight, rule, s, hi)?;
    let down = eval_G_with(pair, weight, rule, s, lo)?;
    Ok((up - down) / (hi - lo))
}

/// Which Sonine condition a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Csc,
    Wsc1,
    Wsc2,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Csc => "CSC",
            Condition::Wsc1 => "WSC1",
            Condition::Wsc2 => "WSC2",
        }
    }
}

/// Per-point residuals of one condition on a sample grid.
///
/// For CSC the residual is `|∫K k - 1|`. For WSC1/WSC2 it is the continuity
/// gap `|g(s,δ) - g(s,0)|` (resp. `G`), and `derivative_l1` holds the sampled
/// `∫|g₂(s,·)|` used as integrability evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub condition: Condition,
    pub grid: Vec<f64>,
    pub residuals: Vec<f64>,
    pub derivative_l1: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Named failure, e.g. `"(i)/(a): ..."`.
    pub violation: Option<String>,
    /// The check carries no pass requirement (CSC for a variable exponent).
    pub informational: bool,
}

impl VerificationReport {
    fn finish(
        condition: Condition,
        grid: Vec<f64>,
        residuals: Vec<f64>,
        derivative_l1: Vec<f64>,
        tolerance: f64,
        mut violation: Option<String>,
    ) -> Self {
        let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
        if violation.is_none() && !(max_residual <= tolerance) {
            violation = Some(format!(
                "max residual {max_residual:e} exceeds tolerance {tolerance:e}"
            ));
        }
        VerificationReport {
            condition,
            grid,
            residuals,
            derivative_l1,
            max_residual,
            tolerance,
            pass: violation.is_none(),
            violation,
            informational: false,
        }
    }

    /// CSV with columns `point,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,residual\n");
        for (p, r) in self.grid.iter().zip(&self.residuals) {
            let _ = writeln!(out, "{p},{r}");
        }
        out
    }

    /// One line: condition, max residual, pass flag.
    pub fn summary(&self) -> String {
        let status = if self.informational {
            "info"
        } else if self.pass {
            "pass"
        } else {
            "fail"
        };
        let mut line = format!(
            "{} max_residual={:e} tolerance={:e} {status}",
            self.condition.name(),
            self.max_residual,
            self.tolerance
        );
        if let Some(v) = &self.violation {
            let _ = write!(line, " ({v})");
        }
        line
    }
}

/// CSC residuals on `grid`. For a variable exponent the identity is not
/// expected to hold and the report is marked informational.
pub fn csc_report(pair: &KernelPair, grid: &[f64], rule_n: usize, tolerance: f64) -> Result<VerificationReport> {
    let residuals = grid
        .iter()
        .map(|&t| csc_residual(pair, t, rule_n))
        .collect::<Result<Vec<_>>>()?;
    let mut report = VerificationReport::finish(
        Condition::Csc,
        grid.to_vec(),
        residuals,
        Vec::new(),
        tolerance,
        None,
    );
    report.informational = !pair.is_constant();
    Ok(report)
}

/// Uniform grid of `n` points on `[0, b - δ]` for the WSC checks.
pub fn default_check_grid(horizon: f64, n: usize) -> Vec<f64> {
    let top = horizon - CONTINUITY_PROBE;
    (0..n).map(|i| top * i as f64 / (n.max(2) - 1) as f64).collect()
}

fn diagonal_violation(weight: &Weight, grid: &[f64]) -> Result<Option<String>> {
    if weight.check_nondegenerate().is_err() {
        return Ok(Some(format!(
            "(i)/(a): sampled min |w(t,t)| = {} is not bounded away from zero",
            weight.mu_lower()
        )));
    }
    for &s in grid {
        let v = weight.eval(s, s)?.abs();
        if !(v >= 0.5 * weight.mu_lower()) {
            return Ok(Some(format!("(i)/(a): |w({s},{s})| = {v} below half the sampled bound")));
        }
    }
    Ok(None)
}

fn l1_violation(grid: &[f64], l1: &[f64]) -> Option<String> {
    grid.iter()
        .zip(l1)
        .find(|(_, v)| !v.is_finite())
        .map(|(s, _)| format!("(b): integral of |d/dt| is not finite at s = {s}"))
}

/// Conditions (a) and (b) for `g`, sampled on `grid`.
pub fn wsc1_report(data: &SonineData, grid: &[f64], tolerance: f64) -> Result<VerificationReport> {
    let b = data.pair.horizon();
    let mut violation = diagonal_violation(&data.weight, grid)?;
    let rows: Vec<Result<(f64, f64)>> = grid
        .par_iter()
        .map(|&s| {
            let gap = (data.eval_g(s, CONTINUITY_PROBE)? - data.eval_g(s, 0.0)?).abs();
            let len = b - s;
            let l1 = if len > 0.0 {
                graded_distance_quad(|t| Ok(data.eval_g2(s, t)?.abs()), len, L1_LEVELS, L1_NODES)
                    .unwrap_or(f64::INFINITY)
            } else {
                0.0
            };
            Ok((gap, l1))
        })
        .collect();
    let (residuals, l1): (Vec<f64>, Vec<f64>) = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    if violation.is_none() {
        violation = l1_violation(grid, &l1);
    }
    Ok(VerificationReport::finish(
        Condition::Wsc1,
        grid.to_vec(),
        residuals,
        l1,
        tolerance,
        violation,
    ))
}

/// Conditions (a) and (b) for `G`, sampled on `grid`. Constant exponent only.
pub fn wsc2_report(pair: &KernelPair, weight: &Weight, grid: &[f64], tolerance: f64) -> Result<VerificationReport> {
    if !pair.is_constant() {
        return Err(Error::Unsupported(
            "WSC2 is only checked for a constant exponent".into(),
        ));
    }
    let rule = jacobi_rule(pair.alpha0(), DEFAULT_JACOBI_NODES)?;
    let b = pair.horizon();
    let mut violation = diagonal_violation(weight, grid)?;
    let rows: Vec<Result<(f64, f64)>> = grid
        .par_iter()
        .map(|&s| {
            let at_zero = eval_G_with(pair, weight, &rule, s, 0.0)?;
            let gap = (eval_G_with(pair, weight, &rule, s, CONTINUITY_PROBE)? - at_zero).abs();
            let len = b - s;
            let l1 = if len > 0.0 {
                graded_distance_quad(
                    |t| Ok(eval_G2_with(pair, weight, &rule, s, t)?.abs()),
                    len,
                    L1_LEVELS,
                    L1_NODES,
                )
                .unwrap_or(f64::INFINITY)
            } else {
                0.0
            };
            Ok((gap, l1))
        })
        .collect();
    let (residuals, l1): (Vec<f64>, Vec<f64>) = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    if violation.is_none() {
        violation = l1_violation(grid, &l1);
    }
    Ok(VerificationReport::finish(
        Condition::Wsc2,
        grid.to_vec(),
        residuals,
        l1,
        tolerance,
        violation,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::kernels::{exponent_preset, weight_preset, Normalization};
    use crate::quadrature::{graded_panel_quad, SingularEnd};
    use approx::assert_relative_eq;

    fn pair(preset: &str) -> KernelPair {
        KernelPair::from_expr(exponent_preset(preset, None).unwrap(), 1.0, Normalization::Plain).unwrap()
    }

    fn weight(preset: &str) -> Weight {
        Weight::new(weight_preset(preset).unwrap(), 1.0).unwrap()
    }

    /// `g(s,t)` straight from the convolution, split at the midpoint so each
    /// half has one singular end.
    fn g_oracle(p: &KernelPair, w: &Weight, s: f64, t: f64) -> f64 {
        let f = |tau: f64| -> Result<f64> {
            Ok(w.eval(s, tau)? * p.eval_k(tau - s)? * p.eval_K(s + t - tau)?)
        };
        let mid = s + 0.5 * t;
        graded_panel_quad(f, s, mid, SingularEnd::Left, 60, 20).unwrap()
            + graded_panel_quad(f, mid, s + t, SingularEnd::Right, 60, 20).unwrap()
    }

    #[test]
    fn trivial_case_is_identically_one() {
        let data = SonineData::new(pair("abel-const"), weight("w-one")).unwrap();
        for &(s, t) in &[(0.0, 0.3), (0.2, 0.5), (0.7, 0.3)] {
            assert!((data.eval_g(s, t).unwrap() - 1.0).abs() <= 1e-12);
            assert_eq!(data.eval_g2(s, t).unwrap(), 0.0);
        }
        // the general path (non-trivial weight expression that equals one)
        let w = Weight::new(Expr::parse("1 + 0*s").unwrap(), 1.0).unwrap();
        let data = SonineData::new(pair("abel-const"), w).unwrap();
        assert!((data.eval_g(0.2, 0.5).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn g_at_zero_is_the_weight_diagonal() {
        let data = SonineData::new(pair("abel-linear"), weight("w-bilinear")).unwrap();
        for s in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(data.eval_g(s, 0.0).unwrap(), 1.0 + s * s);
        }
    }

    #[test]
    fn g_matches_raw_convolution() {
        let p = pair("abel-linear");
        let w = weight("w-bilinear");
        let data = SonineData::new(p.clone(), w.clone()).unwrap();
        for &(s, t) in &[(0.2, 0.5), (0.0, 1.0), (0.5, 0.1)] {
            let reference = g_oracle(&p, &w, s, t);
            assert_relative_eq!(data.eval_g(s, t).unwrap(), reference, max_relative = 1e-8);
        }
    }

    #[test]
    fn bilinear_weight_closed_form() {
        // α = 1/2, w = 1 + st: g(s,t) = 1 + s² + st/2
        let p = KernelPair::constant(0.5, 1.0, Normalization::Plain).unwrap();
        let w = weight("w-bilinear");
        let data = SonineData::new(p.clone(), w.clone()).unwrap();
        for &(s, t) in &[(0.0, 0.4), (0.3, 0.6), (0.5, 0.5)] {
            assert_relative_eq!(data.eval_g(s, t).unwrap(), 1.0 + s * s + s * t / 2.0, max_relative = 1e-13);
            assert!((data.eval_g2(s, t).unwrap() - s / 2.0).abs() <= 1e-13);
            assert_relative_eq!(eval_G(&p, &w, s, t).unwrap(), 1.0 + s * s + s * t / 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn g2_matches_finite_differences() {
        for (kp, wp) in [("abel-linear", "w-bilinear"), ("abel-sin", "w-expdiff"), ("abel-const", "w-expdiff")] {
            let data = SonineData::new(pair(kp), weight(wp)).unwrap();
            for &(s, t) in &[(0.2, 0.5), (0.0, 0.8), (0.6, 0.2)] {
                let h = 1e-5;
                let fd = (data.eval_g(s, t + h).unwrap() - data.eval_g(s, t - h).unwrap()) / (2.0 * h);
                let g2 = data.eval_g2(s, t).unwrap();
                assert!((g2 - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{kp} {wp} {s} {t}: {g2} vs {fd}");
            }
        }
    }

    #[test]
    fn g2_rejects_t_zero() {
        let data = SonineData::new(pair("abel-linear"), weight("w-bilinear")).unwrap();
        assert!(data.eval_g2(0.1, 0.0).is_err());
        assert!(data.eval_g(0.6, 0.6).is_err());
    }

    #[test]
    fn csc_identity_and_symmetry() {
        for a in [0.3, 0.5, 0.7] {
            let p = KernelPair::constant(a, 1.0, Normalization::Plain).unwrap();
            for i in 1..=10 {
                assert!(csc_residual(&p, i as f64 / 10.0, 32).unwrap() <= 1e-12);
            }
        }
        let lo = KernelPair::constant(0.3, 1.0, Normalization::Plain).unwrap();
        let hi = KernelPair::constant(0.7, 1.0, Normalization::Plain).unwrap();
        assert!((csc_residual(&lo, 0.5, 32).unwrap() - csc_residual(&hi, 0.5, 32).unwrap()).abs() <= 1e-12);
        let variable = csc_residual(&pair("abel-linear"), 0.5, 32).unwrap();
        assert!(variable > 1e-6);
    }

    #[test]
    fn gamma_normalisation_keeps_g() {
        let plain = SonineData::new(pair("abel-linear"), weight("w-bilinear")).unwrap();
        let gamma_pair =
            KernelPair::from_expr(exponent_preset("abel-linear", None).unwrap(), 1.0, Normalization::Gamma)
                .unwrap();
        let w = weight("w-bilinear");
        let gamma = SonineData::new(gamma_pair.clone(), w.clone()).unwrap();
        // constant prefactors cancel but the Γ(1-α(x)) ratio does not
        let reference = g_oracle(&gamma_pair, &w, 0.2, 0.5);
        assert_relative_eq!(gamma.eval_g(0.2, 0.5).unwrap(), reference, max_relative = 1e-8);
        assert!((gamma.eval_g(0.2, 0.5).unwrap() - plain.eval_g(0.2, 0.5).unwrap()).abs() > 1e-6);
    }

    #[test]
    fn g_of_t_is_constant_for_bilinear_weight_at_origin() {
        // w(0,τ) = 1 for w = 1 + st, so g(0,·) ≡ 1 and G(0,·) ≡ 1
        let p = KernelPair::constant(0.5, 1.0, Normalization::Plain).unwrap();
        let w = weight("w-bilinear");
        let data = SonineData::new(p.clone(), w.clone()).unwrap();
        for t in [0.1, 0.5, 1.0] {
            assert!((data.eval_g(0.0, t).unwrap() - 1.0).abs() <= 1e-13);
            assert!(data.eval_g2(0.0, t).unwrap().abs() <= 1e-13);
            assert!((eval_G(&p, &w, 0.0, t).unwrap() - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn big_g_rejects_variable_exponent() {
        let err = eval_G(&pair("abel-linear"), &weight("w-one"), 0.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn reports() {
        let grid = default_check_grid(1.0, 8);
        let data = SonineData::new(pair("abel-linear"), weight("w-bilinear")).unwrap();
        let r = wsc1_report(&data, &grid, CONTINUITY_TOLERANCE).unwrap();
        assert!(r.pass, "{}", r.summary());
        assert!(r.derivative_l1.iter().all(|v| v.is_finite()));

        let data = SonineData::new(pair("abel-const"), weight("w-one")).unwrap();
        let r = wsc1_report(&data, &grid, CONTINUITY_TOLERANCE).unwrap();
        assert!(r.pass && r.max_residual == 0.0);

        let degenerate = Weight::new(Expr::parse("t").unwrap(), 1.0).unwrap();
        let data = SonineData::new(pair("abel-const"), degenerate.clone()).unwrap();
        let r = wsc1_report(&data, &grid, CONTINUITY_TOLERANCE).unwrap();
        assert!(!r.pass);
        assert!(r.violation.as_deref().unwrap().contains("(i)/(a)"));

        let p = KernelPair::constant(0.5, 1.0, Normalization::Plain).unwrap();
        let r = wsc2_report(&p, &weight("w-bilinear"), &grid, CONTINUITY_TOLERANCE).unwrap();
        assert!(r.pass, "{}", r.summary());
        let r = wsc2_report(&p, &degenerate, &grid, CONTINUITY_TOLERANCE).unwrap();
        assert!(!r.pass);

        let csv = r.to_csv();
        assert!(csv.starts_with("point,residual\n"));
        assert_eq!(csv.lines().count(), grid.len() + 1);
    }
}
