//! Gauss–Jacobi rules for `∫₀¹ (1-z)^{α0-1} z^{-α0} φ(z) dz`.
//!
//! Nodes and weights come from the Golub–Welsch construction: the Jacobi
//! polynomials with parameters `(α0-1, -α0)` on [-1, 1] define a symmetric
//! tridiagonal matrix whose eigenvalues are the nodes and whose normalised
//! first eigenvector components give the weights. The rule is mapped to
//! [0, 1], where the total mass is `B(α0, 1-α0) = κ(α0)`.

use crate::error::{Error, Result};
use crate::kernels::kappa;

use super::GaussLegendre;

pub const DEFAULT_JACOBI_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    alpha0: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl JacobiRule {
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ w_j φ(z_j)`.
    pub fn integrate<F>(&self, mut phi: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.iter().map(|(z, w)| w * phi(z)).sum()
    }

    pub fn try_integrate<F>(&self, mut phi: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (z, w) in self.iter() {
            acc += w * phi(z)?;
        }
        Ok(acc)
    }
}

pub fn jacobi_rule(alpha0: f64, n: usize) -> Result<JacobiRule> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(Error::Domain(format!("Jacobi rule needs 0 < alpha0 < 1, got {alpha0}")));
    }
    if n == 0 {
        return Err(Error::Validation("Jacobi rule needs at least one node".into()));
    }
    let (nodes, weights) = gauss_jacobi(alpha0 - 1.0, -alpha0, n, kappa(alpha0)?)?;
    Ok(JacobiRule {
        alpha0,
        nodes,
        weights,
    })
}

/// The same integral as [`jacobi_rule`], but robust to integrands that are
/// only continuous at `z = 0` (such as `1 + c·z ln z`).
///
/// `[1/2, 1]` gets an `n`-node Gauss–Jacobi rule for `(1-z)^{α0-1}`;
/// `[0, 1/2]` is cut into `levels` panels halving toward 0, each with
/// `panel_nodes` Gauss–Legendre nodes, and the innermost panel gets a
/// Gauss–Jacobi rule for `z^{-α0}`. The remaining factor of the weight is
/// folded into the quadrature weights.
pub fn graded_jacobi_rule(alpha0: f64, n: usize, levels: usize, panel_nodes: usize) -> Result<JacobiRule> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(Error::Domain(format!("Jacobi rule needs 0 < alpha0 < 1, got {alpha0}")));
    }
    if n == 0 || panel_nodes == 0 {
        return Err(Error::Validation("Jacobi rule needs at least one node".into()));
    }
    let mut pairs = Vec::new();

    // (1-z)^{α0-1} on [1/2, 1]: z = 1/2 + y/2, (1-z) = (1-y)/2
    let a = alpha0 - 1.0;
    let (ys, ws) = gauss_jacobi(a, 0.0, n, 1.0 / alpha0)?;
    let scale = 0.5f64.powf(a + 1.0);
    for (y, w) in ys.into_iter().zip(ws) {
        let z = 0.5 + 0.5 * y;
        pairs.push((z, w * scale * z.powf(-alpha0)));
    }

    let gl = GaussLegendre::new(panel_nodes);
    let mut outer = 0.5;
    for _ in 0..levels {
        let inner = 0.5 * outer;
        for (z, w) in gl.mapped(inner, outer) {
            pairs.push((z, w * (1.0 - z).powf(a) * z.powf(-alpha0)));
        }
        outer = inner;
    }

    // z^{-α0} on [0, ε]: z = ε y
    let eps = outer;
    let m = panel_nodes.max(2).min(8);
    let (ys, ws) = gauss_jacobi(0.0, -alpha0, m, 1.0 / (1.0 - alpha0))?;
    let scale = eps.powf(1.0 - alpha0);
    for (y, w) in ys.into_iter().zip(ws) {
        let z = eps * y;
        pairs.push((z, w * scale * (1.0 - z).powf(a)));
    }

    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(JacobiRule {
        alpha0,
        nodes,
        weights,
    })
}

/// Gauss rule on [0, 1] for the weight `(1-z)^a z^b`, whose total mass is
/// passed in so the caller controls how it is evaluated.
pub(super) fn gauss_jacobi(a: f64, b: f64, n: usize, mass: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    // Recurrence on [-1, 1] for (1-x)^a (1+x)^b. At k = 1 the common factor
    // (1 + a + b) is cancelled by hand, since a + b = -1 is a case we need.
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    diag[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        diag[k] = (b * b - a * a) / (s * (s + 2.0));
        let beta = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off[k - 1] = beta.sqrt();
    }
    // z = (1 + x)/2
    for d in diag.iter_mut() {
        *d = 0.5 * (1.0 + *d);
    }
    for e in off.iter_mut() {
        *e *= 0.5;
    }

    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first)?;

    let mut pairs: Vec<(f64, f64)> = diag
        .into_iter()
        .zip(first.into_iter().map(|v| mass * v * v))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. On return `d` holds
/// the eigenvalues and `z` the first components of the eigenvectors.
/// `e[i]` couples rows `i` and `i+1`; `e[n-1]` is ignored.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    let cap = 50 * n;
    let mut iterations = 0;
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > cap {
                return Err(Error::NoConvergence { iterations: cap });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
