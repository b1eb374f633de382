use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};

/// A scalar function of time that may fail.
pub type ScalarFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A forcing `f(t)` together with `f'(t)`.
///
/// Forcings are either expressions (differentiated symbolically) or pairs of
/// closures, which is how manufactured problems supply values computed by
/// quadrature. Evaluating at `t = 0` may return a non-finite value when `f'`
/// blows up there; callers treat that as a singular first node.
#[derive(Clone)]
pub struct Forcing {
    label: String,
    value: ScalarFn,
    derivative: ScalarFn,
    constant: Option<f64>,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing").field("label", &self.label).finish_non_exhaustive()
    }
}

impl Forcing {
    pub fn from_expr(expr: &Expr) -> Result<Self> {
        if expr.depends_on(Var::S) || expr.depends_on(Var::X) {
            return Err(Error::Validation(format!("forcing `{expr}` may only depend on t")));
        }
        let label = expr.to_string();
        let constant = expr.as_constant();
        let f = expr.clone();
        let df = expr.diff(Var::T);
        Ok(Forcing {
            label,
            value: Arc::new(move |t| Ok(f.eval(&Bindings::t(t))?)),
            derivative: Arc::new(move |t| Ok(df.eval(&Bindings::t(t))?)),
            constant,
        })
    }

    pub fn constant(c: f64) -> Self {
        Forcing {
            label: format!("{c}"),
            value: Arc::new(move |_| Ok(c)),
            derivative: Arc::new(|_| Ok(0.0)),
            constant: Some(c),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn from_fns<F, D>(label: impl Into<String>, value: F, derivative: D) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
        D: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        Forcing {
            label: label.into(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            constant: None,
        }
    }

    /// `a·f + b·g`.
    pub fn combine(a: f64, f: &Forcing, b: f64, g: &Forcing) -> Self {
        let (fv, gv) = (f.value.clone(), g.value.clone());
        let (fd, gd) = (f.derivative.clone(), g.derivative.clone());
        let constant = match (f.constant, g.constant) {
            (Some(x), Some(y)) => Some(a * x + b * y),
            _ => None,
        };
        Forcing {
            label: format!("{a}*({}) + {b}*({})", f.label, g.label),
            value: Arc::new(move |t| Ok(a * fv(t)? + b * gv(t)?)),
            derivative: Arc::new(move |t| Ok(a * fd(t)? + b * gd(t)?)),
            constant,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Some(c)` when the forcing is known to be the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        (self.value)(t)
    }

    pub fn eval_prime(&self, t: f64) -> Result<f64> {
        if self.constant.is_some() {
            return Ok(0.0);
        }
        (self.derivative)(t)
    }
}
