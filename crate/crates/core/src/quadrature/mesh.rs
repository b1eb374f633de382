use crate::error::{Error, Result};

/// Time grid `t_i = b·(i/N)^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    horizon: f64,
    grading: f64,
    points: Vec<f64>,
}

/// Grading exponent that resolves `t^{α0-1}` behaviour near the origin.
pub fn default_grading(alpha0: f64) -> f64 {
    (2.0 / alpha0).max(1.0)
}

impl Mesh {
    pub fn graded(horizon: f64, steps: usize, grading: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Validation(format!("mesh horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::Validation("mesh needs at least one step".into()));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::Validation(format!("mesh grading must be >= 1, got {grading}")));
        }
        let n = steps as f64;
        let points = (0..=steps)
            .map(|i| {
                if i == steps {
                    horizon
                } else if grading == 1.0 {
                    horizon * i as f64 / n
                } else {
                    horizon * (i as f64 / n).powf(grading)
                }
            })
            .collect();
        Ok(Mesh {
            horizon,
            grading,
            points,
        })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        Self::graded(horizon, steps, 1.0)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn is_uniform(&self) -> bool {
        self.grading == 1.0
    }

    /// Number of steps N.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn t(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Width of step `i`, `t_i - t_{i-1}`.
    pub fn step(&self, i: usize) -> f64 {
        self.points[i] - self.points[i - 1]
    }

    /// Same grading with twice the steps.
    pub fn refined(&self) -> Self {
        Self::graded(self.horizon, 2 * self.steps(), self.grading).expect("valid mesh")
    }

    /// Index of the last node `<= t`.
    pub fn locate(&self, t: f64) -> usize {
        match self.points.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }
}
