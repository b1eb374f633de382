//! Forcings for manufactured solutions, computed by graded quadrature.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::kernels::{KernelPair, Weight};
use crate::quadrature::graded_distance_quad;

use super::forcing::Forcing;
use super::transform::Variant;

/// Halving levels and nodes per panel for manufactured forcings.
pub const ORACLE_LEVELS: usize = 60;
pub const ORACLE_NODES: usize = 16;

/// Forcing `f` such that `u` (an expression in `t`) solves the first-kind
/// equation of the given variant, with `f'` by differentiating under the
/// integral. `f'(0)` is reported as infinite, marking a singular first node.
pub fn manufactured_forcing(pair: &KernelPair, weight: &Weight, variant: Variant, u: &Expr) -> Result<Forcing> {
    if u.depends_on(Var::S) || u.depends_on(Var::X) {
        return Err(Error::Validation(format!("manufactured solution `{u}` may only depend on t")));
    }
    let u_prime = u.diff(Var::T);
    let ue = {
        let u = u.clone();
        move |t: f64| -> Result<f64> { Ok(u.eval(&Bindings::t(t))?) }
    };
    let upe = move |t: f64| -> Result<f64> { Ok(u_prime.eval(&Bindings::t(t))?) };
    let u0 = ue(0.0)?;
    let label = format!("manufactured({u})");
    match variant {
        Variant::Weighted => {
            let w1 = weight.expr().diff(Var::S);
            let state = Arc::new((pair.clone(), weight.clone(), w1, ue, upe));
            let sv = state.clone();
            let value = move |t: f64| -> Result<f64> {
                let (pair, weight, _, ue, _) = &*sv;
                if t == 0.0 {
                    return Ok(0.0);
                }
                graded_distance_quad(
                    |v| Ok(weight.eval(t - v, t)? * pair.eval_k(v)? * ue(t - v)?),
                    t,
                    ORACLE_LEVELS,
                    ORACLE_NODES,
                )
            };
            let derivative = move |t: f64| -> Result<f64> {
                let (pair, weight, w1, ue, upe) = &*state;
                if t == 0.0 {
                    return Ok(f64::INFINITY);
                }
                let boundary = weight.eval(0.0, t)? * pair.eval_k(t)? * u0;
                let integral = graded_distance_quad(
                    |v| {
                        let s = t - v;
                        let ws = w1.eval(&Bindings::st(s, t))?;
                        let wt = weight.eval_w2(s, t)?;
                        let inner = (ws + wt) * ue(s)? + weight.eval(s, t)? * upe(s)?;
                        Ok(inner * pair.eval_k(v)?)
                    },
                    t,
                    ORACLE_LEVELS,
                    ORACLE_NODES,
                )?;
                Ok(boundary + integral)
            };
            Ok(Forcing::from_fns(label, value, derivative))
        }
        Variant::KKernel => {
            let state = Arc::new((pair.clone(), ue, upe));
            let sv = state.clone();
            let value = move |t: f64| -> Result<f64> {
                let (pair, ue, _) = &*sv;
                if t == 0.0 {
                    return Ok(0.0);
                }
                graded_distance_quad(|v| Ok(pair.eval_K(v)? * ue(t - v)?), t, ORACLE_LEVELS, ORACLE_NODES)
            };
            let derivative = move |t: f64| -> Result<f64> {
                let (pair, _, upe) = &*state;
                if t == 0.0 {
                    return Ok(f64::INFINITY);
                }
                let integral =
                    graded_distance_quad(|v| Ok(pair.eval_K(v)? * upe(t - v)?), t, ORACLE_LEVELS, ORACLE_NODES)?;
                Ok(pair.eval_K(t)? * u0 + integral)
            };
            Ok(Forcing::from_fns(label, value, derivative))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Normalization;
    use approx::assert_relative_eq;

    #[test]
    fn abel_forcing_matches_beta_closed_form() {
        let pair = KernelPair::constant(0.5, 1.0, Normalization::Plain).unwrap();
        let w = Weight::one(1.0).unwrap();
        let f = manufactured_forcing(&pair, &w, Variant::Weighted, &Expr::parse("t").unwrap()).unwrap();
        // ∫₀ᵗ (t-s)^{-1/2} s ds = (4/3) t^{3/2}
        for t in [0.1, 0.5, 1.0] {
            assert_relative_eq!(f.eval(t).unwrap(), 4.0 / 3.0 * t.powf(1.5), max_relative = 1e-10);
            assert_relative_eq!(f.eval_prime(t).unwrap(), 2.0 * t.sqrt(), max_relative = 1e-9);
        }
        assert!(f.eval_prime(0.0).unwrap().is_infinite());
    }

    #[test]
    fn weighted_derivative_matches_difference_quotient() {
        let pair = KernelPair::from_expr(Expr::parse("0.5 + 0.1*t").unwrap(), 1.0, Normalization::Plain).unwrap();
        let w = Weight::new(Expr::parse("1 + s*t").unwrap(), 1.0).unwrap();
        let f = manufactured_forcing(&pair, &w, Variant::Weighted, &Expr::parse("1 + t").unwrap()).unwrap();
        let (t, h) = (0.6, 1e-5);
        let fd = (f.eval(t + h).unwrap() - f.eval(t - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(f.eval_prime(t).unwrap(), fd, max_relative = 1e-7);
    }
}
