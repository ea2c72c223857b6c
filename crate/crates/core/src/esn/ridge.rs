//! Closed-form readout fits.
//!
//! All solves go through a Cholesky factorization of `R R' + γI`. A missing
//! or numerically singular factor is reported as [`Error::RankDeficient`].

use nalgebra::{Cholesky, DMatrix, Dyn, SVD};

use super::{EsnModel, NormalEquations, StateMatrixPair};
use crate::{Error, Result};

/// Diagonal ratio of the Cholesky factor below which `R R' + γI` counts as
/// singular: `min L_ii² < max L_ii² · D · ε`.
fn factor(gram: &DMatrix<f64>, shift: f64, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let d = gram.nrows();
    let mut m = gram.clone();
    for i in 0..d {
        m[(i, i)] += shift;
    }
    let chol = Cholesky::new(m).ok_or_else(|| {
        Error::RankDeficient(format!("{what}: matrix is not positive definite (shift {shift:e})"))
    })?;
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..d {
        let v = l[(i, i)] * l[(i, i)];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo > hi * d as f64 * f64::EPSILON) {
        return Err(Error::RankDeficient(format!(
            "{what}: pivot ratio {:e} (shift {shift:e})",
            lo / hi
        )));
    }
    Ok(chol)
}

fn check_shapes(ne: &NormalEquations) -> Result<()> {
    let d = ne.gram.nrows();
    if ne.gram.ncols() != d || ne.cross.nrows() != d {
        return Err(Error::Dimension {
            what: "normal equations",
            expected: d,
            got: ne.cross.nrows(),
        });
    }
    Ok(())
}

/// Ridge readout `W_out = ((R R' + λI)⁻¹ R X')'`, shape `N×D`.
pub fn train(ne: &NormalEquations, lambda: f64) -> Result<DMatrix<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda = {lambda} must be >= 0")));
    }
    check_shapes(ne)?;
    let chol = factor(&ne.gram, lambda, "ridge readout")?;
    Ok(chol.solve(&ne.cross).transpose())
}

/// Transfer correction `δW = ((R* R*' + αI)⁻¹ (R* X*' − R* R*' W_out'))'`.
pub fn transfer_correction(ne: &NormalEquations, w_out: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::Config(format!("alpha = {alpha} must be >= 0")));
    }
    check_shapes(ne)?;
    if w_out.shape() != (ne.cross.ncols(), ne.gram.nrows()) {
        return Err(Error::Dimension {
            what: "W_out vs transfer data",
            expected: ne.gram.nrows(),
            got: w_out.ncols(),
        });
    }
    let chol = factor(&ne.gram, alpha, "transfer correction")?;
    let rhs = &ne.cross - &ne.gram * w_out.transpose();
    Ok(chol.solve(&rhs).transpose())
}

/// Absolute ridge shift for a trace-relative `lambda`: `λ · tr(R R') / D`.
pub fn ridge_shift(ne: &NormalEquations, lambda: f64) -> f64 {
    let d = ne.gram.nrows().max(1);
    lambda * ne.gram.trace() / d as f64
}

/// Minimum-norm least-squares readout `X pinv(R)`: the `λ → 0⁺` limit of
/// [`train`], defined even when `R R'` is singular.
pub fn min_norm_readout(pair: &StateMatrixPair) -> Result<DMatrix<f64>> {
    let (d, p) = pair.states.shape();
    if p == 0 {
        return Err(Error::RankDeficient("no training pairs".into()));
    }
    let svd = SVD::new(pair.states.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let eps = sigma_max * d.max(p) as f64 * f64::EPSILON;
    let pinv = svd
        .pseudo_inverse(eps)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    Ok(&pair.targets * pinv)
}

impl EsnModel {
    /// Fit `W_out`; the configured `lambda` is relative to the mean Gram
    /// diagonal (see [`ridge_shift`]).
    pub fn train(&mut self, ne: &NormalEquations) -> Result<()> {
        let w = train(ne, ridge_shift(ne, self.config().lambda))?;
        self.set_w_out(w)
    }

    /// Apply the transfer correction for rate `alpha`; returns `δW`.
    pub fn transfer_update(&mut self, pair_star: &StateMatrixPair, alpha: f64) -> Result<DMatrix<f64>> {
        let w_out = self.w_out().ok_or(Error::Untrained)?;
        let delta = transfer_correction(&pair_star.normal_equations(), w_out, alpha)?;
        let updated = w_out + &delta;
        self.set_w_out(updated)?;
        Ok(delta)
    }
}
