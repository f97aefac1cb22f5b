//! Closed-form and semi-analytic solutions of the model.

pub mod linearized;
pub mod pursuit;
pub mod stationary;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{Field, Grid};

/// Isotropic Gaussian density described by its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub center: Vec<f64>,
    /// Per-axis variance.
    pub variance: f64,
    pub mass: f64,
}

impl GaussianProfile {
    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.mass * (2.0 * PI * self.variance).powf(-0.5 * self.n() as f64)
    }

    pub fn density(&self, z: &[f64]) -> f64 {
        let r2: f64 = z.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.peak() * (-r2 / (2.0 * self.variance)).exp()
    }

    pub fn to_field(&self, grid: &Grid) -> Field {
        Field::from_fn(grid.clone(), |z| self.density(z))
    }
}
