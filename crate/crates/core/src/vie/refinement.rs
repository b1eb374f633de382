//! Refinement studies: errors over mesh doublings and observed orders.

use std::fmt::Write as _;

/// Errors at or below this level count as exact.
pub const EXACT_LEVEL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub steps: usize,
    pub error: f64,
    /// Order from the previous row; `None` for the first row or when either
    /// error is at rounding level.
    pub order: Option<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RefinementHistory {
    pub rows: Vec<RefinementRow>,
}

impl RefinementHistory {
    pub fn from_errors(steps: &[usize], errors: &[f64]) -> Self {
        let mut rows: Vec<RefinementRow> = Vec::with_capacity(steps.len());
        for (k, (&n, &e)) in steps.iter().zip(errors).enumerate() {
            let exact = e.abs() <= EXACT_LEVEL;
            let order = if k == 0 {
                None
            } else {
                let prev = rows[k - 1];
                if exact || prev.exact {
                    None
                } else {
                    Some((prev.error / e).ln() / (n as f64 / prev.steps as f64).ln())
                }
            };
            rows.push(RefinementRow {
                steps: n,
                error: e,
                order,
                exact,
            });
        }
        RefinementHistory { rows }
    }

    /// Least-squares order over all rows, `None` with fewer than two inexact rows.
    pub fn fitted_order(&self) -> Option<f64> {
        let (ns, es): (Vec<usize>, Vec<f64>) =
            self.rows.iter().filter(|r| !r.exact).map(|r| (r.steps, r.error)).unzip();
        least_squares_order(&ns, &es)
    }

    pub fn last_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    /// Every error is at rounding level.
    pub fn all_exact(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.exact)
    }

    /// CSV with columns `N,error,order`; the order column reads `exact` at
    /// rounding level and is empty for the first row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,error,order\n");
        for (k, r) in self.rows.iter().enumerate() {
            let order = match (r.order, r.exact) {
                (_, true) if k > 0 => "exact".to_string(),
                (Some(p), _) => format!("{p:.4}"),
                _ => String::new(),
            };
            let _ = writeln!(out, "{},{:e},{}", r.steps, r.error, order);
        }
        out
    }
}

/// Slope of `-log(error)` against `log(N)`.
pub fn least_squares_order(steps: &[usize], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(&n, &e)| ((n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_sequence() {
        let h = RefinementHistory::from_errors(&[10, 20, 40], &[1e-1, 5e-2, 2.5e-2]);
        assert!((h.fitted_order().unwrap() - 1.0).abs() < 1e-12);
        assert!((h.last_order().unwrap() - 1.0).abs() < 1e-12);
        assert!(h.to_csv().starts_with("N,error,order\n10,"));
    }

    #[test]
    fn rounding_level_is_exact() {
        let h = RefinementHistory::from_errors(&[4, 8], &[1e-15, 2e-16]);
        assert!(h.all_exact());
        assert!(h.to_csv().lines().nth(2).unwrap().ends_with(",exact"));
        let single = RefinementHistory::from_errors(&[4], &[0.1]);
        assert!(single.to_csv().lines().nth(1).unwrap().ends_with(','));
    }
}
