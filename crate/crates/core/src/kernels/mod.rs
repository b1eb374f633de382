//! The variable-exponent Abel pair and weight functions.
//!
//! `k(t) = t^{-α(t)}` is paired with the associate `K(t) = t^{α(0)-1}/κ`,
//! `κ = Γ(α(0))Γ(1-α(0))`. Every quantity downstream is computed through the
//! factorisation `k(x) = x^{-α(0)} · φ(x)` where the smooth factor
//! `φ(x) = x^{α(0)-α(x)}` tends to 1 at the origin.

mod gamma;
mod licm;

pub use gamma::{digamma, gamma, kappa};
pub use licm::{licm_check, log_grid, LicmReport, MAX_ORDER as LICM_MAX_ORDER};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};

/// Number of points in the sampling grids used for validation and bounds.
pub const SAMPLE_POINTS: usize = 1024;

const HORIZON_SLACK: f64 = 1e-9;

/// Exponent presets: `abel-const`, `abel-linear`, `abel-sin`.
pub fn exponent_preset(name: &str, value: Option<f64>) -> Result<Expr> {
    let text = match name {
        "abel-const" => format!("{}", value.unwrap_or(0.5)),
        "abel-linear" => "0.5 + 0.2*t".to_string(),
        "abel-sin" => "0.5 + 0.2*sin(t)".to_string(),
        other => return Err(Error::Validation(format!("unknown kernel preset `{other}`"))),
    };
    Ok(Expr::parse(&text)?)
}

/// Weight presets: `w-one`, `w-bilinear`, `w-expdiff`.
pub fn weight_preset(name: &str) -> Result<Expr> {
    let text = match name {
        "w-one" => "1",
        "w-bilinear" => "1 + s*t",
        "w-expdiff" => "exp(-(t-s))",
        other => return Err(Error::Validation(format!("unknown weight preset `{other}`"))),
    };
    Ok(Expr::parse(text)?)
}

fn uniform_samples(b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| b * i as f64 / (n - 1) as f64)
}

/// A variable exponent `α(t)` with values in (0, 1).
#[derive(Debug, Clone)]
pub struct VarExponent {
    alpha: Expr,
    alpha_prime: Expr,
    alpha0: f64,
    lipschitz_sample: f64,
    constant: bool,
}

impl VarExponent {
    pub fn new(alpha: Expr, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Validation(format!("horizon must be positive, got {horizon}")));
        }
        if alpha.depends_on(Var::S) || alpha.depends_on(Var::X) {
            return Err(Error::Validation(format!(
                "exponent `{alpha}` may only depend on t"
            )));
        }
        let alpha_prime = alpha.diff(Var::T);
        let mut lipschitz: f64 = 0.0;
        for t in uniform_samples(horizon, SAMPLE_POINTS) {
            let a = alpha.eval(&Bindings::t(t))?;
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Validation(format!(
                    "exponent leaves (0,1): alpha({t}) = {a}"
                )));
            }
            lipschitz = lipschitz.max(alpha_prime.eval(&Bindings::t(t))?.abs());
        }
        let alpha0 = alpha.eval(&Bindings::t(0.0))?;
        let constant = !alpha.depends_on(Var::T);
        Ok(VarExponent {
            alpha,
            alpha_prime,
            alpha0,
            lipschitz_sample: lipschitz,
            constant,
        })
    }

    pub fn constant(alpha0: f64, horizon: f64) -> Result<Self> {
        Self::new(Expr::constant(alpha0), horizon)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Sampled max |α'| on the validation grid.
    pub fn lipschitz_sample(&self) -> f64 {
        self.lipschitz_sample
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn expr(&self) -> &Expr {
        &self.alpha
    }

    pub fn derivative_expr(&self) -> &Expr {
        &self.alpha_prime
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        if self.constant {
            return Ok(self.alpha0);
        }
        Ok(self.alpha.eval(&Bindings::t(t))?)
    }

    pub fn alpha_prime(&self, t: f64) -> Result<f64> {
        if self.constant {
            return Ok(0.0);
        }
        Ok(self.alpha_prime.eval(&Bindings::t(t))?)
    }
}

/// How the kernel pair is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `k = t^{-α(t)}`, `K = t^{α0-1}/κ`.
    #[default]
    Plain,
    /// `k = t^{-α(t)}/Γ(1-α(t))`, `K = t^{α0-1}/Γ(α0)`.
    Gamma,
}

/// The weighted Sonine pair `(k, K)` on `[0, b]`.
#[derive(Debug, Clone)]
pub struct KernelPair {
    exponent: VarExponent,
    kappa: f64,
    horizon: f64,
    normalization: Normalization,
    k_scale: f64,
    assoc_scale: f64,
    gamma_one_minus_alpha0: f64,
}

impl KernelPair {
    pub fn new(exponent: VarExponent, horizon: f64, normalization: Normalization) -> Result<Self> {
        let a0 = exponent.alpha0;
        let kappa = kappa(a0)?;
        let reflection = std::f64::consts::PI / (std::f64::consts::PI * a0).sin();
        if ((kappa - reflection) / reflection).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "kappa({a0}) = {kappa} disagrees with the reflection formula {reflection}"
            )));
        }
        let g1 = gamma(1.0 - a0)?;
        let (k_scale, assoc_scale) = match normalization {
            Normalization::Plain => (1.0, 1.0 / kappa),
            Normalization::Gamma => (1.0 / g1, 1.0 / gamma(a0)?),
        };
        Ok(KernelPair {
            exponent,
            kappa,
            horizon,
            normalization,
            k_scale,
            assoc_scale,
            gamma_one_minus_alpha0: g1,
        })
    }

    /// Builds the pair from an expression for α(t).
    pub fn from_expr(alpha: Expr, horizon: f64, normalization: Normalization) -> Result<Self> {
        Self::new(VarExponent::new(alpha, horizon)?, horizon, normalization)
    }

    pub fn constant(alpha0: f64, horizon: f64, normalization: Normalization) -> Result<Self> {
        Self::new(VarExponent::constant(alpha0, horizon)?, horizon, normalization)
    }

    pub fn exponent(&self) -> &VarExponent {
        &self.exponent
    }

    pub fn alpha0(&self) -> f64 {
        self.exponent.alpha0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn is_constant(&self) -> bool {
        self.exponent.constant
    }

    /// Constant `c_k` in `k(x) = c_k · x^{-α0} · φ(x)`.
    pub fn k_scale(&self) -> f64 {
        self.k_scale
    }

    /// Constant `c_K` in `K(x) = c_K · x^{α0-1}`.
    pub fn assoc_scale(&self) -> f64 {
        self.assoc_scale
    }

    fn check_time(&self, t: f64, what: &str) -> Result<()> {
        if !(t > 0.0) || t > self.horizon * (1.0 + HORIZON_SLACK) {
            return Err(Error::Domain(format!(
                "{what} needs 0 < t <= {}, got {t}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `k(t)`, singular at the origin.
    pub fn eval_k(&self, t: f64) -> Result<f64> {
        self.check_time(t, "k(t)")?;
        let a = self.exponent.alpha(t)?;
        let base = (-a * t.ln()).exp();
        Ok(match self.normalization {
            Normalization::Plain => base,
            Normalization::Gamma => base / gamma(1.0 - a)?,
        })
    }

    /// The associate kernel `K(t)`.
    #[allow(non_snake_case)]
    pub fn eval_K(&self, t: f64) -> Result<f64> {
        self.check_time(t, "K(t)")?;
        Ok(self.assoc_scale * ((self.alpha0() - 1.0) * t.ln()).exp())
    }

    /// `φ(x)`: `x^{α0-α(x)}`, times `Γ(1-α0)/Γ(1-α(x))` under gamma
    /// normalisation. Exactly 1 at `x = 0`.
    pub fn smooth_factor(&self, x: f64) -> Result<f64> {
        if x == 0.0 || self.exponent.constant {
            return Ok(1.0);
        }
        if x < 0.0 {
            return Err(Error::Domain(format!("smooth factor needs x >= 0, got {x}")));
        }
        let a = self.exponent.alpha(x)?;
        let base = ((self.alpha0() - a) * x.ln()).exp();
        Ok(match self.normalization {
            Normalization::Plain => base,
            Normalization::Gamma => base * self.gamma_one_minus_alpha0 / gamma(1.0 - a)?,
        })
    }

    /// `φ(x)` and `φ'(x)` for `x > 0`.
    pub fn smooth_factor_with_derivative(&self, x: f64) -> Result<(f64, f64)> {
        if self.exponent.constant {
            return Ok((1.0, 0.0));
        }
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "smooth factor derivative needs x > 0, got {x}"
            )));
        }
        let a = self.exponent.alpha(x)?;
        let da = self.exponent.alpha_prime(x)?;
        let ln_x = x.ln();
        let mut log_derivative = -da * ln_x + (self.alpha0() - a) / x;
        let mut phi = ((self.alpha0() - a) * ln_x).exp();
        if self.normalization == Normalization::Gamma {
            phi *= self.gamma_one_minus_alpha0 / gamma(1.0 - a)?;
            log_derivative += da * digamma(1.0 - a)?;
        }
        Ok((phi, phi * log_derivative))
    }

    /// `d/dt φ(t·z)`.
    pub fn smooth_factor_dt(&self, t: f64, z: f64) -> Result<f64> {
        let x = t * z;
        if !(x > 0.0) {
            return Err(Error::Domain(format!("smooth_factor_dt needs t·z > 0, got {x}")));
        }
        let (_, dphi) = self.smooth_factor_with_derivative(x)?;
        Ok(z * dphi)
    }

    /// Runs the LICM screen on `k` over a 64-point log grid on `(0, b]`.
    pub fn licm_report(&self, order: usize) -> LicmReport {
        let grid = log_grid(self.horizon, 64);
        licm_check(|t| self.eval_k_unchecked(t), order, &grid)
    }

    fn eval_k_unchecked(&self, t: f64) -> f64 {
        let a = match self.exponent.alpha(t) {
            Ok(a) => a,
            Err(_) => return f64::NAN,
        };
        let base = (-a * t.ln()).exp();
        match self.normalization {
            Normalization::Plain => base,
            Normalization::Gamma => gamma(1.0 - a).map(|g| base / g).unwrap_or(f64::NAN),
        }
    }
}

/// A weight `w(s, t)` with its t-derivative and sampled bounds.
#[derive(Debug, Clone)]
pub struct Weight {
    w: Expr,
    w2: Expr,
    mu_lower: f64,
    mu_upper: f64,
    w2_bound_sample: f64,
    is_one: bool,
}

impl Weight {
    /// Samples `|w(t,t)|` on `[0, b]` and `|w_2|` on the triangle
    /// `0 <= s <= t <= b`. Degenerate weights are accepted here and flagged by
    /// [`Weight::check_nondegenerate`].
    pub fn new(w: Expr, horizon: f64) -> Result<Self> {
        if w.depends_on(Var::X) {
            return Err(Error::Validation(format!("weight `{w}` may only depend on s and t")));
        }
        let w2 = w.diff(Var::T);
        let mut mu_lower = f64::INFINITY;
        let mut mu_upper: f64 = 0.0;
        for t in uniform_samples(horizon, SAMPLE_POINTS) {
            let v = w.eval(&Bindings::st(t, t))?.abs();
            mu_lower = mu_lower.min(v);
            mu_upper = mu_upper.max(v);
        }
        let side = 64;
        let mut w2_bound: f64 = 0.0;
        for i in 0..side {
            let t = horizon * i as f64 / (side - 1) as f64;
            for j in 0..=i {
                let s = horizon * j as f64 / (side - 1) as f64;
                w2_bound = w2_bound.max(w2.eval(&Bindings::st(s, t))?.abs());
            }
        }
        let is_one = w.as_constant() == Some(1.0);
        Ok(Weight {
            w,
            w2,
            mu_lower,
            mu_upper,
            w2_bound_sample: w2_bound,
            is_one,
        })
    }

    pub fn one(horizon: f64) -> Result<Self> {
        Self::new(Expr::constant(1.0), horizon)
    }

    pub fn expr(&self) -> &Expr {
        &self.w
    }

    pub fn derivative_expr(&self) -> &Expr {
        &self.w2
    }

    /// Sampled min of |w(t,t)|.
    pub fn mu_lower(&self) -> f64 {
        self.mu_lower
    }

    /// Sampled max of |w(t,t)|.
    pub fn mu_upper(&self) -> f64 {
        self.mu_upper
    }

    pub fn w2_bound_sample(&self) -> f64 {
        self.w2_bound_sample
    }

    pub fn is_one(&self) -> bool {
        self.is_one
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        if self.is_one {
            return Ok(1.0);
        }
        Ok(self.w.eval(&Bindings::st(s, t))?)
    }

    /// `∂w/∂t`.
    pub fn eval_w2(&self, s: f64, t: f64) -> Result<f64> {
        if self.is_one {
            return Ok(0.0);
        }
        Ok(self.w2.eval(&Bindings::st(s, t))?)
    }

    /// Condition (i): `w(t,t)` bounded away from zero on the sampling grid.
    pub fn check_nondegenerate(&self) -> Result<()> {
        if self.mu_lower > 0.0 {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "condition (i) violated: sampled min |w(t,t)| = {}",
                self.mu_lower
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear_pair() -> KernelPair {
        KernelPair::from_expr(exponent_preset("abel-linear", None).unwrap(), 1.0, Normalization::Plain)
            .unwrap()
    }

    #[test]
    fn exponent_validation() {
        let e = VarExponent::new(Expr::parse("0.5+0.2*t").unwrap(), 1.0).unwrap();
        assert_eq!(e.alpha0(), 0.5);
        assert_relative_eq!(e.lipschitz_sample(), 0.2, max_relative = 1e-12);
        assert!(!e.is_constant());
        assert!(VarExponent::new(Expr::parse("0.5+0.6*t").unwrap(), 1.0).is_err());
        assert!(VarExponent::new(Expr::parse("t").unwrap(), 1.0).is_err());
        assert!(VarExponent::new(Expr::parse("0.5+0*s").unwrap(), 1.0).is_err());
        let c = VarExponent::constant(0.3, 2.0).unwrap();
        assert!(c.is_constant());
        assert_eq!(c.alpha(1.7).unwrap(), 0.3);
    }

    #[test]
    fn kernel_values() {
        let half = KernelPair::constant(0.5, 4.0, Normalization::Plain).unwrap();
        assert_relative_eq!(half.eval_k(4.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(half.eval_K(1.0).unwrap(), 1.0 / std::f64::consts::PI, max_relative = 1e-15);
        assert_relative_eq!(half.eval_K(0.25).unwrap(), 2.0 / std::f64::consts::PI, max_relative = 1e-15);
        let quarter = KernelPair::constant(0.25, 1.0, Normalization::Plain).unwrap();
        assert_relative_eq!(
            quarter.eval_K(1.0).unwrap(),
            1.0 / (std::f64::consts::PI * 2f64.sqrt()),
            max_relative = 1e-12
        );

        let lin = linear_pair();
        assert_eq!(lin.eval_k(1.0).unwrap(), 1.0);
        // direct oracle: exp(-0.55 ln 0.25)
        let oracle = 0.25f64.powf(-0.55);
        assert_relative_eq!(lin.eval_k(0.25).unwrap(), oracle, max_relative = 1e-14);
        assert_relative_eq!(oracle, 2.1435, max_relative = 1e-4);

        assert!(lin.eval_k(0.0).is_err());
        assert!(lin.eval_K(-1.0).is_err());
        assert!(lin.eval_k(1.5).is_err());
    }

    #[test]
    fn gamma_normalised_pair() {
        let p = KernelPair::constant(0.5, 1.0, Normalization::Gamma).unwrap();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(p.eval_k(0.25).unwrap(), 2.0 / sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(p.eval_K(0.25).unwrap(), 2.0 / sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(p.k_scale() * p.assoc_scale() * p.kappa(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn product_consistency() {
        for pair in [linear_pair(), KernelPair::constant(0.3, 1.0, Normalization::Plain).unwrap()] {
            for i in 1..=20 {
                let t = i as f64 / 20.0;
                let a = pair.exponent().alpha(t).unwrap();
                let expected = t.powf(-a + pair.alpha0() - 1.0) / pair.kappa();
                let got = pair.eval_k(t).unwrap() * pair.eval_K(t).unwrap();
                assert_relative_eq!(got, expected, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn smooth_factor_values() {
        let lin = linear_pair();
        assert_eq!(lin.smooth_factor(0.0).unwrap(), 1.0);
        assert_relative_eq!(lin.smooth_factor(0.5).unwrap(), 0.5f64.powf(-0.1), max_relative = 1e-14);
        assert_relative_eq!(lin.smooth_factor(0.5).unwrap(), 1.07177, max_relative = 1e-5);
        let c = KernelPair::constant(0.7, 1.0, Normalization::Plain).unwrap();
        assert_eq!(c.smooth_factor(0.37).unwrap(), 1.0);
        assert_eq!(c.smooth_factor_dt(0.3, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn smooth_factor_continuity_at_origin() {
        for name in ["abel-const", "abel-linear", "abel-sin"] {
            let pair =
                KernelPair::from_expr(exponent_preset(name, None).unwrap(), 1.0, Normalization::Plain)
                    .unwrap();
            let l = pair.exponent().lipschitz_sample();
            for i in 1..=100 {
                let x = 0.1 * i as f64 / 100.0;
                let bound = 2.0 * l * x * x.ln().abs();
                assert!((pair.smooth_factor(x).unwrap() - 1.0).abs() <= bound + 1e-16);
            }
        }
    }

    #[test]
    fn smooth_factor_dt_matches_finite_difference() {
        for norm in [Normalization::Plain, Normalization::Gamma] {
            let pair = KernelPair::from_expr(Expr::parse("0.5+0.2*t").unwrap(), 1.0, norm).unwrap();
            for (t, z) in [(0.5, 1.0), (0.3, 0.5), (0.9, 0.1)] {
                let h = 1e-5;
                let f = |t: f64| pair.smooth_factor(t * z).unwrap();
                let fd = (f(t + h) - f(t - h)) / (2.0 * h);
                assert_relative_eq!(pair.smooth_factor_dt(t, z).unwrap(), fd, max_relative = 1e-6);
            }
        }
        let lin = linear_pair();
        assert!(lin.smooth_factor_dt(0.5, 0.0).is_err());
        // α increasing and tz < 1 ⇒ −α' ln(tz) > 0
        let da = lin.exponent().alpha_prime(0.2).unwrap();
        assert!(-da * 0.2f64.ln() > 0.0);
    }

    #[test]
    fn licm_on_kernels() {
        let c = KernelPair::constant(0.5, 1.0, Normalization::Plain).unwrap();
        assert!(c.licm_report(4).pass);
    }

    #[test]
    fn weights() {
        let w = Weight::new(weight_preset("w-bilinear").unwrap(), 1.0).unwrap();
        assert_eq!(w.mu_lower(), 1.0);
        assert_relative_eq!(w.mu_upper(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(w.w2_bound_sample(), 1.0, max_relative = 1e-12);
        assert_eq!(w.eval_w2(0.3, 0.9).unwrap(), 0.3);
        assert!(w.check_nondegenerate().is_ok());

        let one = Weight::new(weight_preset("w-one").unwrap(), 1.0).unwrap();
        assert!(one.is_one());
        let e = Weight::new(weight_preset("w-expdiff").unwrap(), 1.0).unwrap();
        assert_relative_eq!(e.mu_lower(), 1.0);

        let bad = Weight::new(Expr::parse("t").unwrap(), 1.0).unwrap();
        assert_eq!(bad.mu_lower(), 0.0);
        let err = bad.check_nondegenerate().unwrap_err().to_string();
        assert!(err.contains("(i)"));
        assert!(Weight::new(Expr::parse("x").unwrap(), 1.0).is_err());
    }

    #[test]
    fn presets() {
        assert!(exponent_preset("abel-const", Some(0.3)).unwrap().as_constant() == Some(0.3));
        assert!(exponent_preset("nope", None).is_err());
        assert!(weight_preset("w-nope").is_err());
    }
}
