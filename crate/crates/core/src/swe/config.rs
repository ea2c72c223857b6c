use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical and numerical parameters of the direct simulation.
///
/// Field names double as the keys of the `[swe]` table in config files.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweConfig {
    /// Domain length.
    pub L: f64,
    /// Gravitational constant.
    pub g: f64,
    /// Viscosity coefficient.
    pub nu: f64,
    /// Cell width.
    pub dx: f64,
    /// Fine (DNS) time step.
    pub dt_fine: f64,
    /// Bump height.
    pub topo_height: f64,
    /// Bump width.
    pub topo_width: f64,
}

impl Default for SweConfig {
    fn default() -> Self {
        Self {
            L: 40.0,
            g: 32.0,
            nu: 0.5,
            dx: 0.1,
            dt_fine: 0.0005,
            topo_height: 0.48,
            topo_width: 8.0,
        }
    }
}

impl SweConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.L,
            self.g,
            self.nu,
            self.dx,
            self.dt_fine,
            self.topo_height,
            self.topo_width,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("non-finite SWE parameter".into()));
        }
        if !(self.dx > 0.0 && self.L > 0.0) {
            return Err(Error::Config(format!(
                "need L > 0 and dx > 0 (L = {}, dx = {})",
                self.L, self.dx
            )));
        }
        let ratio = self.L / self.dx;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::Config(format!(
                "L/dx = {ratio} is not a positive integer"
            )));
        }
        if self.dt_fine <= 0.0 {
            return Err(Error::Config(format!("dt_fine = {} <= 0", self.dt_fine)));
        }
        if self.nu < 0.0 {
            return Err(Error::Config(format!("nu = {} < 0", self.nu)));
        }
        if self.g <= 0.0 {
            return Err(Error::Config(format!("g = {} <= 0", self.g)));
        }
        if self.topo_height < 0.0 || self.topo_width <= 0.0 || self.topo_width >= self.L {
            return Err(Error::Config(format!(
                "need topo_height >= 0 and 0 < topo_width < L (H = {}, W = {})",
                self.topo_height, self.topo_width
            )));
        }
        Ok(())
    }

    /// Number of cells `L/dx`.
    pub fn cells(&self) -> usize {
        (self.L / self.dx).round() as usize
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx
    }

    /// Number of fine steps per sampling interval; `sample_dt` must be an
    /// integer multiple of `dt_fine`.
    pub fn steps_per_sample(&self, sample_dt: f64) -> Result<usize> {
        let ratio = sample_dt / self.dt_fine;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
            return Err(Error::Config(format!(
                "sample dt {sample_dt} is not an integer multiple of dt_fine {}",
                self.dt_fine
            )));
        }
        Ok(k as usize)
    }
}
