//! Product-integration weights for `∫₀ᵗ (t-s)^{-β} φ(s) ds`.
//!
//! `φ` is replaced by its piecewise-linear interpolant on the nodes and the
//! power factor is integrated exactly panel by panel. Far from `t` the closed
//! form differences cancel badly, so panels that are short relative to their
//! distance from `t` use the binomial series of `(1-ρθ)^{-β}` instead, which
//! has only positive terms.

use super::jacobi::gauss_jacobi;
use super::Mesh;
use crate::error::Result;
use crate::kernels::kappa;

const SERIES_RATIO: f64 = 0.25;

/// Weights `(w_left, w_right)` of one panel for the target time `t`, given
/// `a = t - t_j` and the panel width `h = t_j - t_{j-1}`. The width is passed
/// separately because `t - t_{j-1}` can round to `a` on strongly graded meshes.
pub fn panel_weights(beta: f64, a: f64, h: f64) -> (f64, f64) {
    debug_assert!(h > 0.0 && a >= 0.0);
    let c = a + h;
    let rho = h / c;
    if rho > SERIES_RATIO {
        let p0 = 1.0 - beta;
        let p1 = 2.0 - beta;
        let m0 = (c.powf(p0) - if a > 0.0 { a.powf(p0) } else { 0.0 }) / p0;
        let m1 = (c.powf(p1) - if a > 0.0 { a.powf(p1) } else { 0.0 }) / p1;
        ((m1 - a * m0) / h, (c * m0 - m1) / h)
    } else {
        let mut coef = 1.0;
        let mut power = 1.0;
        let mut left = 0.0;
        let mut right = 0.0;
        for k in 0..200 {
            let kf = k as f64;
            let term = coef * power;
            right += term / (kf + 2.0);
            left += term / ((kf + 1.0) * (kf + 2.0));
            if term.abs() < 1e-17 * right.abs() {
                break;
            }
            coef *= (beta + kf) / (kf + 1.0);
            power *= rho;
        }
        let scale = h * c.powf(-beta);
        (scale * left, scale * right)
    }
}

/// Weights over `nodes` (increasing, starting at 0) for the target time equal
/// to the last node.
pub fn power_weights_on(beta: f64, nodes: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    let Some(&t) = nodes.last() else {
        return w;
    };
    for j in 1..nodes.len() {
        let (left, right) = panel_weights(beta, t - nodes[j], nodes[j] - nodes[j - 1]);
        w[j - 1] += left;
        w[j] += right;
    }
    w
}

/// Row `i` of the product-integration matrix on `mesh`: `Σ_j w_j φ(t_j)`
/// equals `∫₀^{t_i} (t_i-s)^{-β} φ̂(s) ds` for the interpolant `φ̂`.
pub fn power_conv_weights(beta: f64, mesh: &Mesh, i: usize) -> Vec<f64> {
    power_weights_on(beta, &mesh.points()[..=i])
}

/// `∫₀^{t1} (t-s)^{-β} s^{β-1} ds` for `t >= t1`: the first-panel weight
/// when the integrand behaves like `s^{β-1}` at the origin.
pub fn singular_start_weight(beta: f64, t: f64, t1: f64) -> Result<f64> {
    if t == t1 {
        return kappa(beta);
    }
    let (zs, ws) = gauss_jacobi(0.0, beta - 1.0, 16, 1.0 / beta)?;
    let sum: f64 = zs.iter().zip(&ws).map(|(z, w)| w * (t - t1 * z).powf(-beta)).sum();
    Ok(t1.powf(beta) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn apply(beta: f64, mesh: &Mesh, i: usize, f: impl Fn(f64) -> f64) -> f64 {
        power_conv_weights(beta, mesh, i)
            .iter()
            .zip(mesh.points())
            .map(|(w, t)| w * f(*t))
            .sum()
    }

    #[test]
    fn row_sums_are_exact_moments() {
        for &(beta, r) in &[(0.5, 1.0), (0.3, 4.0), (0.7, 2.5), (0.5, 8.0)] {
            let mesh = Mesh::graded(1.3, 200, r).unwrap();
            for i in 1..=mesh.steps() {
                let t = mesh.t(i);
                let exact = t.powf(1.0 - beta) / (1.0 - beta);
                let sum: f64 = power_conv_weights(beta, &mesh, i).iter().sum();
                assert_relative_eq!(sum, exact, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn linear_integrand_is_exact() {
        // ∫₀¹ (1-s)^{-1/2} s ds = B(2, 1/2) = 4/3
        for r in [1.0, 3.0] {
            let mesh = Mesh::graded(1.0, 37, r).unwrap();
            assert_relative_eq!(apply(0.5, &mesh, 37, |s| s), 4.0 / 3.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn quadratic_integrand_converges_at_second_order() {
        // ∫₀¹ (1-s)^{-1/2} s² ds = B(3, 1/2) = 16/15
        let errors: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&n| {
                let mesh = Mesh::uniform(1.0, n).unwrap();
                (apply(0.5, &mesh, n, |s| s * s) - 16.0 / 15.0).abs()
            })
            .collect();
        for w in errors.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errors:?}");
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for beta in [0.1, 0.5, 0.9] {
            let c = 1.0;
            let a = c * (1.0 - SERIES_RATIO);
            let closed = {
                let p0 = 1.0 - beta;
                let p1 = 2.0 - beta;
                let h = c - a;
                let m0 = (c.powf(p0) - a.powf(p0)) / p0;
                let m1 = (c.powf(p1) - a.powf(p1)) / p1;
                ((m1 - a * m0) / h, (c * m0 - m1) / h)
            };
            let series = panel_weights(beta, a * (1.0 + 1e-15), c - a * (1.0 + 1e-15));
            assert_relative_eq!(closed.0, series.0, max_relative = 1e-12);
            assert_relative_eq!(closed.1, series.1, max_relative = 1e-12);
        }
    }

    #[test]
    fn self_panel() {
        let (l, r) = panel_weights(0.5, 0.0, 0.25);
        assert_relative_eq!(l, 0.5f64 / 1.5, max_relative = 1e-15);
        assert_relative_eq!(r, 0.5f64 / (0.5 * 1.5), max_relative = 1e-15);
    }

    #[test]
    fn singular_start_against_beta() {
        // t = 2 t1, beta = 1/2: ∫₀¹ (2-s)^{-1/2} s^{-1/2} ds = π/2
        let v = singular_start_weight(0.5, 2.0, 1.0).unwrap();
        assert_relative_eq!(v, std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
        let v = singular_start_weight(0.3, 0.7, 0.7).unwrap();
        assert_relative_eq!(v, kappa(0.3).unwrap(), max_relative = 1e-14);
    }
}
