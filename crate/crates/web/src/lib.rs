//! Browser bindings. Each export wraps a plain function returning
//! `Result<Vec<f64>, String>` so the numerics can be tested natively.

use sonine_core::expr::Expr;
use sonine_core::kernels::{KernelPair, Normalization, Weight};
use sonine_core::quadrature::{default_grading, Mesh, DEFAULT_JACOBI_NODES};
use sonine_core::sonine::{csc_residual, SonineData};
use sonine_core::vie::{solve_first_kind, solve_nonlocal_ode, FirstKindProblem, Forcing, NonlocalOdeProblem, Strategy, Variant};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 4096;
const MAX_GRID: usize = 256;

fn parse(field: &str, text: &str) -> Result<Expr, String> {
    Expr::parse(text).map_err(|e| format!("{field}: {e}"))
}

fn normalization(name: &str) -> Result<Normalization, String> {
    match name {
        "plain" => Ok(Normalization::Plain),
        "gamma" => Ok(Normalization::Gamma),
        other => Err(format!("unknown normalization `{other}`")),
    }
}

fn pair(alpha: &str, norm: &str) -> Result<KernelPair, String> {
    KernelPair::from_expr(parse("alpha", alpha)?, 1.0, normalization(norm)?).map_err(|e| e.to_string())
}

fn weight(w: &str) -> Result<Weight, String> {
    Weight::new(parse("w", w)?, 1.0).map_err(|e| e.to_string())
}

fn check_size(n: usize, max: usize) -> Result<(), String> {
    if n < 2 || n > max {
        return Err(format!("size {n} is outside 2..={max}"));
    }
    Ok(())
}

/// `n` points on `(0, 1]` followed by `k`, `K` and the CSC residual there,
/// as four consecutive blocks of length `n`.
pub fn pair_curves(alpha: &str, norm: &str, n: usize) -> Result<Vec<f64>, String> {
    check_size(n, MAX_POINTS)?;
    let pair = pair(alpha, norm)?;
    let t: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let k = t.iter().map(|&x| pair.eval_k(x));
    let big_k = t.iter().map(|&x| pair.eval_K(x));
    let csc = t.iter().map(|&x| csc_residual(&pair, x, DEFAULT_JACOBI_NODES));
    let mut out = t.clone();
    for v in k.chain(big_k).chain(csc) {
        out.push(v.map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// `g(s, t)` on an `n × n` grid of `[0, 1]²`, row `i` holding `s = i/(n-1)`;
/// NaN outside the triangle `s + t <= 1`.
pub fn g_surface(alpha: &str, norm: &str, w: &str, n: usize) -> Result<Vec<f64>, String> {
    check_size(n, MAX_GRID)?;
    let data = SonineData::new(pair(alpha, norm)?, weight(w)?).map_err(|e| e.to_string())?;
    let h = 1.0 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (i as f64 * h, j as f64 * h);
            out.push(if s + t <= 1.0 + 1e-12 {
                data.eval_g(s, t.min(1.0 - s)).map_err(|e| e.to_string())?
            } else {
                f64::NAN
            });
        }
    }
    Ok(out)
}

/// Nodes followed by the solution values of a weighted first-kind VIE
/// (`kind = "vie1"`) or a nonlocal ODE (`kind = "ode"`) on a graded mesh
/// with `n` panels. `u(0)` is NaN when the solution is singular there.
pub fn solve_curve(kind: &str, alpha: &str, norm: &str, w: &str, f: &str, c: f64, n: usize) -> Result<Vec<f64>, String> {
    check_size(n, MAX_POINTS)?;
    let pair = pair(alpha, norm)?;
    let weight = weight(w)?;
    let forcing = Forcing::from_expr(&parse("f", f)?).map_err(|e| e.to_string())?;
    let mesh = Mesh::graded(1.0, n, default_grading(pair.alpha0())).map_err(|e| e.to_string())?;
    let report = match kind {
        "vie1" => {
            let problem = FirstKindProblem { pair, weight, forcing, variant: Variant::Weighted };
            solve_first_kind(&problem, &mesh, Strategy::SecondKind)
        }
        "ode" => solve_nonlocal_ode(&NonlocalOdeProblem { pair, weight, forcing, c }, &mesh),
        other => return Err(format!("unknown problem kind `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    let mut out = report.times;
    out.extend(report.values);
    Ok(out)
}

#[wasm_bindgen(js_name = pairCurves)]
pub fn pair_curves_js(alpha: &str, norm: &str, n: usize) -> Result<Vec<f64>, JsValue> {
    pair_curves(alpha, norm, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = gSurface)]
pub fn g_surface_js(alpha: &str, norm: &str, w: &str, n: usize) -> Result<Vec<f64>, JsValue> {
    g_surface(alpha, norm, w, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = solveCurve)]
pub fn solve_curve_js(kind: &str, alpha: &str, norm: &str, w: &str, f: &str, c: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    solve_curve(kind, alpha, norm, w, f, c, n).map_err(|e| JsValue::from_str(&e))
}
