//! Finite-difference screening for local complete monotonicity.
//!
//! A locally integrable completely monotone function satisfies
//! `(-1)^n f^(n)(t) >= 0` for all n. Only orders up to 4 are checked, with
//! central differences on a log-spaced grid; this is evidence, not proof.

/// Highest derivative order that is screened.
pub const MAX_ORDER: usize = 4;

const STEP_FRACTION: f64 = 0.05;
const SIGN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LicmReport {
    pub pass: bool,
    /// `(order, t)` of the first sign violation in grid order.
    pub first_violation: Option<(usize, f64)>,
    pub order: usize,
    pub points: usize,
}

/// `n` log-spaced points from `b·1e-3` to `b`.
pub fn log_grid(b: f64, n: usize) -> Vec<f64> {
    let lo = (b * 1e-3).ln();
    let hi = b.ln();
    if n == 1 {
        return vec![b];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn licm_check<F>(f: F, order: usize, grid: &[f64]) -> LicmReport
where
    F: Fn(f64) -> f64,
{
    let order = order.min(MAX_ORDER);
    let mut first_violation = None;
    'points: for &t in grid {
        if !(t > 0.0) {
            continue;
        }
        let h = STEP_FRACTION * t;
        for n in 0..=order {
            let mut diff = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..=n {
                let x = t + (n as f64 / 2.0 - k as f64) * h;
                let v = f(x);
                scale = scale.max(v.abs());
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                diff += sign * binomial(n, k) * v;
            }
            let hn = h.powi(n as i32);
            let derivative = diff / hn;
            let scale = scale / hn;
            let signed = if n % 2 == 0 { derivative } else { -derivative };
            if !derivative.is_finite() || signed < -SIGN_TOLERANCE * scale {
                first_violation = Some((n, t));
                break 'points;
            }
        }
    }
    LicmReport {
        pass: first_violation.is_none(),
        first_violation,
        order,
        points: grid.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completely_monotone_kernels_pass() {
        let grid = log_grid(1.0, 64);
        for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let report = licm_check(|t| t.powf(-a), 4, &grid);
            assert!(report.pass, "t^-{a}: {report:?}");
        }
        let report = licm_check(|t: f64| (-t).exp(), 4, &log_grid(3.0, 64));
        assert!(report.pass);
    }

    #[test]
    fn oscillating_kernel_fails_at_first_order() {
        let report = licm_check(|t: f64| 2.0 + t.sin(), 4, &log_grid(3.0, 64));
        assert!(!report.pass);
        assert_eq!(report.first_violation.map(|v| v.0), Some(1));
    }

    #[test]
    fn increasing_function_fails() {
        let report = licm_check(|t| t, 2, &log_grid(1.0, 16));
        assert_eq!(report.first_violation.map(|v| v.0), Some(1));
    }

    #[test]
    fn grid_shape() {
        let g = log_grid(2.0, 64);
        assert_eq!(g.len(), 64);
        assert!((g[0] - 2e-3).abs() < 1e-15);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
