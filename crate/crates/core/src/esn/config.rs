use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reservoir hyperparameters. Serialized keys follow the usual symbols
/// (`D`, `N`, `beta1`, `beta2`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnConfig {
    /// Reservoir dimension.
    #[serde(rename = "D")]
    pub reservoir_dim: usize,
    /// Input/output dimension, `2n` for SWE snapshots.
    #[serde(rename = "N")]
    pub io_dim: usize,
    /// Half-width of the uniform input weights.
    pub beta1: f64,
    /// Target spectral radius of the adjacency matrix.
    pub beta2: f64,
    /// Fraction of nonzero adjacency entries.
    pub density: f64,
    /// Ridge (Tikhonov) parameter, relative to the mean diagonal of `R R'`.
    pub lambda: f64,
    pub seed: u64,
    /// Zero the reservoir state at each trajectory boundary while driving.
    pub reset_on_concat: bool,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            reservoir_dim: 5000,
            io_dim: 800,
            beta1: 0.01,
            beta2: 0.1,
            density: 0.02,
            lambda: 1e-6,
            seed: 0,
            reset_on_concat: false,
        }
    }
}

impl EsnConfig {
    /// `β₂` may exceed 1 (useful as a negative control); the echo-state
    /// property is only expected below 1.
    pub fn validate(&self) -> Result<()> {
        if self.reservoir_dim == 0 || self.io_dim == 0 {
            return Err(Error::Config("D and N must be positive".into()));
        }
        if !(self.beta1 >= 0.0 && self.beta1.is_finite()) {
            return Err(Error::Config(format!("beta1 = {} must be >= 0", self.beta1)));
        }
        if !(self.beta2 >= 0.0 && self.beta2.is_finite()) {
            return Err(Error::Config(format!("beta2 = {} must be >= 0", self.beta2)));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!("density = {} not in (0, 1]", self.density)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda = {} must be >= 0", self.lambda)));
        }
        Ok(())
    }

    /// Nonzeros drawn per adjacency row.
    pub fn nonzeros_per_row(&self) -> usize {
        ((self.density * self.reservoir_dim as f64).round() as usize).clamp(1, self.reservoir_dim)
    }
}
