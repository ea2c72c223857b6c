use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;

use super::sparse::CsrMatrix;
use super::spectral::{dense_spectral_radius, power_spectral_radius, PowerIterationOptions};
use super::EsnConfig;
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// Redraws allowed when the sampled adjacency matrix is unusable (zero
/// spectral radius, or the radius estimate fails to converge).
pub const MAX_BUILD_ATTEMPTS: u32 = 8;

/// Reservoirs up to this size get their spectral radius from a dense Schur
/// decomposition under [`RadiusMethod::Auto`].
pub const DENSE_RADIUS_MAX_DIM: usize = 200;

/// Radii at or below this count as a nilpotent draw and trigger a redraw.
pub const ZERO_RADIUS: f64 = 1e-6;

/// How the spectral radius of the raw adjacency draw is measured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RadiusMethod {
    /// Dense eigensolver for small reservoirs, restarted power iteration above.
    #[default]
    Auto,
    Power(PowerIterationOptions),
    Dense,
}

/// `r̃_j = r_j²` for odd 1-based `j`, `r_j` for even `j`.
pub fn readout_transform(r: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; r.len()];
    readout_transform_into(r, &mut out);
    out
}

pub fn readout_transform_into(r: &[f64], out: &mut [f64]) {
    for (i, (o, &v)) in out.iter_mut().zip(r).enumerate() {
        // 0-based even index = 1-based odd index
        *o = if i % 2 == 0 { v * v } else { v };
    }
}

/// A built reservoir plus (optionally) its trained readout.
#[derive(Debug, Clone)]
pub struct EsnModel {
    cfg: EsnConfig,
    w_in: DMatrix<f64>,
    a: CsrMatrix,
    w_out: Option<DMatrix<f64>>,
    r: DVector<f64>,
    pre: DVector<f64>,
    r_tilde: DVector<f64>,
}

impl PartialEq for EsnModel {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg
            && self.w_in == other.w_in
            && self.a == other.a
            && self.w_out == other.w_out
            && self.r == other.r
    }
}

impl EsnModel {
    pub fn build(cfg: EsnConfig) -> Result<Self> {
        Self::build_with(cfg, RadiusMethod::Auto)
    }

    /// Draw `W_in` and `W₀` from the seed, then set `A = β₂·W₀/ρ(W₀)`.
    /// Deterministic in `cfg`.
    pub fn build_with(cfg: EsnConfig, method: RadiusMethod) -> Result<Self> {
        cfg.validate()?;
        let (d, n) = (cfg.reservoir_dim, cfg.io_dim);
        let mut last_err = None;
        for attempt in 0..MAX_BUILD_ATTEMPTS {
            let mut rng = stream(cfg.seed, Purpose::Reservoir, attempt);
            let w_in_rows: Vec<f64> = (0..d * n)
                .map(|_| rng.random_range(-1.0..=1.0) * cfg.beta1)
                .collect();
            let w_in = DMatrix::from_row_slice(d, n, &w_in_rows);

            if cfg.beta2 == 0.0 {
                return Ok(Self::from_parts(cfg, w_in, CsrMatrix::zeros(d), None));
            }

            let per_row = cfg.nonzeros_per_row();
            let mut triplets = Vec::with_capacity(d * per_row);
            for row in 0..d {
                let mut cols = rand::seq::index::sample(&mut rng, d, per_row).into_vec();
                cols.sort_unstable();
                for col in cols {
                    triplets.push((row, col, rng.random_range(-1.0..=1.0)));
                }
            }
            let mut a = CsrMatrix::from_triplets(d, &triplets);

            let radius = match method {
                RadiusMethod::Dense => dense_spectral_radius(&a.to_dense()),
                RadiusMethod::Auto if d <= DENSE_RADIUS_MAX_DIM => {
                    dense_spectral_radius(&a.to_dense())
                }
                RadiusMethod::Auto => {
                    let mut prng = stream(cfg.seed, Purpose::PowerIteration, attempt);
                    power_spectral_radius(&a, &PowerIterationOptions::default(), &mut prng)
                }
                RadiusMethod::Power(opts) => {
                    let mut prng = stream(cfg.seed, Purpose::PowerIteration, attempt);
                    power_spectral_radius(&a, &opts, &mut prng)
                }
            };
            match radius {
                // defective draws only resolve to roundoff, around eps^(1/k)
                Ok(rho) if rho > ZERO_RADIUS => {
                    a.scale(cfg.beta2 / rho);
                    return Ok(Self::from_parts(cfg, w_in, a, None));
                }
                Ok(rho) => {
                    last_err = Some(Error::Convergence(format!(
                        "adjacency draw has spectral radius {rho:e}"
                    )))
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Convergence("no attempts made".into())))
    }

    /// Assemble a model from explicit matrices (deserialization, tests).
    pub fn from_parts(
        cfg: EsnConfig,
        w_in: DMatrix<f64>,
        a: CsrMatrix,
        w_out: Option<DMatrix<f64>>,
    ) -> Self {
        let d = cfg.reservoir_dim;
        assert_eq!(w_in.shape(), (d, cfg.io_dim), "W_in shape");
        assert_eq!(a.dim(), d, "adjacency dimension");
        if let Some(w) = &w_out {
            assert_eq!(w.shape(), (cfg.io_dim, d), "W_out shape");
        }
        Self {
            cfg,
            w_in,
            a,
            w_out,
            r: DVector::zeros(d),
            pre: DVector::zeros(d),
            r_tilde: DVector::zeros(d),
        }
    }

    pub fn config(&self) -> &EsnConfig {
        &self.cfg
    }

    pub fn reservoir_dim(&self) -> usize {
        self.cfg.reservoir_dim
    }

    pub fn io_dim(&self) -> usize {
        self.cfg.io_dim
    }

    pub fn w_in(&self) -> &DMatrix<f64> {
        &self.w_in
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn w_out(&self) -> Option<&DMatrix<f64>> {
        self.w_out.as_ref()
    }

    pub fn is_trained(&self) -> bool {
        self.w_out.is_some()
    }

    pub fn set_w_out(&mut self, w_out: DMatrix<f64>) -> Result<()> {
        let expected = (self.cfg.io_dim, self.cfg.reservoir_dim);
        if w_out.shape() != expected {
            return Err(Error::Dimension {
                what: "W_out columns",
                expected: expected.1,
                got: w_out.ncols(),
            });
        }
        self.w_out = Some(w_out);
        Ok(())
    }

    pub fn state(&self) -> &[f64] {
        self.r.as_slice()
    }

    pub fn set_state(&mut self, r: &[f64]) -> Result<()> {
        self.check_dim("reservoir state", self.cfg.reservoir_dim, r.len())?;
        self.r.as_mut_slice().copy_from_slice(r);
        Ok(())
    }

    pub fn reset_state(&mut self) {
        self.r.fill(0.0);
    }

    fn check_dim(&self, what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::Dimension {
                what,
                expected,
                got,
            });
        }
        Ok(())
    }

    /// `r ← tanh(A r + W_in x)`; returns the new state.
    pub fn update_state(&mut self, x: &[f64]) -> Result<&[f64]> {
        self.check_dim("input vector", self.cfg.io_dim, x.len())?;
        self.a.mul_vec_into(self.r.as_slice(), self.pre.as_mut_slice());
        let xv = DVectorView::from_slice(x, x.len());
        self.pre.gemv(1.0, &self.w_in, &xv, 1.0);
        for (r, p) in self.r.iter_mut().zip(self.pre.iter()) {
            *r = p.tanh();
        }
        Ok(self.r.as_slice())
    }

    /// Readout-transformed current state.
    pub fn transformed_state(&self) -> Vec<f64> {
        readout_transform(self.r.as_slice())
    }

    /// `W_out r̃` for the current state, written to `out`.
    pub fn output_into(&mut self, out: &mut [f64]) -> Result<()> {
        let w_out = self.w_out.as_ref().ok_or(Error::Untrained)?;
        self.check_dim("output vector", self.cfg.io_dim, out.len())?;
        readout_transform_into(self.r.as_slice(), self.r_tilde.as_mut_slice());
        let mut y = nalgebra::DVectorViewMut::from_slice(out, self.cfg.io_dim);
        y.gemv(1.0, w_out, &self.r_tilde, 0.0);
        Ok(())
    }

    /// Feed each snapshot of `snippet` through the reservoir, discarding outputs.
    pub fn warmup<'a, I>(&mut self, snippet: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        for x in snippet {
            self.update_state(x)?;
        }
        Ok(())
    }

    /// Closed-loop forecast from `r = 0`: emits `steps + 1` snapshots, the first
    /// being `x0`. Result is flat, one snapshot of length `N` after another.
    pub fn predict(&mut self, x0: &[f64], steps: usize) -> Result<Vec<f64>> {
        if !self.is_trained() {
            return Err(Error::Untrained);
        }
        self.reset_state();
        self.predict_from_current(x0, steps)
    }

    /// Same as [`EsnModel::predict`] but leaves the model untouched, so one
    /// model can serve many forecasts concurrently.
    pub fn forecast(&self, x0: &[f64], steps: usize) -> Result<Vec<f64>> {
        let w_out = self.w_out.as_ref().ok_or(Error::Untrained)?;
        let (d, n) = (self.cfg.reservoir_dim, self.cfg.io_dim);
        self.check_dim("initial snapshot", n, x0.len())?;
        let mut r = DVector::<f64>::zeros(d);
        let mut pre = DVector::<f64>::zeros(d);
        let mut r_tilde = DVector::<f64>::zeros(d);
        let mut out = vec![0.0; n * (steps + 1)];
        out[..n].copy_from_slice(x0);
        for k in 0..steps {
            let (done, rest) = out.split_at_mut((k + 1) * n);
            self.a.mul_vec_into(r.as_slice(), pre.as_mut_slice());
            pre.gemv(1.0, &self.w_in, &DVectorView::from_slice(&done[k * n..], n), 1.0);
            for (ri, p) in r.iter_mut().zip(pre.iter()) {
                *ri = p.tanh();
            }
            readout_transform_into(r.as_slice(), r_tilde.as_mut_slice());
            let mut y = nalgebra::DVectorViewMut::from_slice(&mut rest[..n], n);
            y.gemv(1.0, w_out, &r_tilde, 0.0);
        }
        Ok(out)
    }

    /// Closed-loop forecast continuing from the current reservoir state (e.g.
    /// after [`EsnModel::warmup`]).
    pub fn predict_from_current(&mut self, x0: &[f64], steps: usize) -> Result<Vec<f64>> {
        if !self.is_trained() {
            return Err(Error::Untrained);
        }
        let n = self.cfg.io_dim;
        self.check_dim("initial snapshot", n, x0.len())?;
        let mut out = vec![0.0; n * (steps + 1)];
        out[..n].copy_from_slice(x0);
        for k in 0..steps {
            let (done, rest) = out.split_at_mut((k + 1) * n);
            self.update_state(&done[k * n..])?;
            self.output_into(&mut rest[..n])?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(d: usize, n: usize, seed: u64) -> EsnConfig {
        EsnConfig {
            reservoir_dim: d,
            io_dim: n,
            density: 0.3,
            seed,
            ..EsnConfig::default()
        }
    }

    #[test]
    fn readout_transform_examples() {
        assert_eq!(readout_transform(&[2.0, 3.0]), vec![4.0, 3.0]);
        assert_eq!(readout_transform(&[0.0, 0.0, 0.0]), vec![0.0; 3]);
        assert_eq!(readout_transform(&[-1.0, -1.0, -1.0]), vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = small_cfg(40, 6, 11);
        let a = EsnModel::build(cfg).unwrap();
        let b = EsnModel::build(cfg).unwrap();
        assert_eq!(a, b);
        let c = EsnModel::build(EsnConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.w_in(), c.w_in());
    }

    #[test]
    fn input_weights_within_bounds() {
        let cfg = small_cfg(30, 8, 3);
        let m = EsnModel::build(cfg).unwrap();
        assert!(m.w_in().iter().all(|w| w.abs() <= cfg.beta1));
        assert!(m.w_in().iter().any(|w| w.abs() > 0.5 * cfg.beta1));
    }

    #[test]
    fn zero_beta2_gives_zero_adjacency() {
        let m = EsnModel::build(EsnConfig {
            beta2: 0.0,
            ..small_cfg(20, 4, 1)
        })
        .unwrap();
        assert!(m.adjacency().to_dense().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectral_radius_is_beta2() {
        for (d, method) in [
            (50, RadiusMethod::Auto),
            (50, RadiusMethod::Power(PowerIterationOptions::default())),
            (250, RadiusMethod::Auto),
        ] {
            let cfg = EsnConfig {
                density: 0.05,
                ..small_cfg(d, 4, 5)
            };
            let m = EsnModel::build_with(cfg, method).unwrap();
            let rho = dense_spectral_radius(&m.adjacency().to_dense()).unwrap();
            assert!((rho - 0.1).abs() < 1e-6, "d={d}: rho = {rho}");
        }
    }

    #[test]
    fn update_matches_dense_oracle() {
        let cfg = small_cfg(3, 2, 9);
        let mut m = EsnModel::build(EsnConfig { density: 1.0, ..cfg }).unwrap();
        m.set_state(&[0.3, -0.2, 0.7]).unwrap();
        let x = [1.5, -4.0];
        let a = m.adjacency().to_dense();
        let w = m.w_in().clone();
        let r0 = [0.3, -0.2, 0.7];
        let expect: Vec<f64> = (0..3)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..3 {
                    s += a[(i, j)] * r0[j];
                }
                for j in 0..2 {
                    s += w[(i, j)] * x[j];
                }
                s.tanh()
            })
            .collect();
        let got = m.update_state(&x).unwrap().to_vec();
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_input_and_zero_adjacency_give_zero_state() {
        let d = 6;
        let w_in = DMatrix::identity(d, d);
        let cfg = EsnConfig {
            reservoir_dim: d,
            io_dim: d,
            ..EsnConfig::default()
        };
        let mut m = EsnModel::from_parts(cfg, w_in, CsrMatrix::zeros(d), None);
        m.set_state(&[0.4, -0.1, 0.9, 0.0, 0.2, -0.7]).unwrap();
        let r = m.update_state(&[0.0; 6]).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_and_training_errors() {
        let mut m = EsnModel::build(small_cfg(10, 4, 2)).unwrap();
        assert!(matches!(m.update_state(&[1.0; 3]), Err(Error::Dimension { .. })));
        assert!(matches!(m.predict(&[1.0; 4], 3), Err(Error::Untrained)));
        assert!(m.set_w_out(DMatrix::zeros(4, 9)).is_err());
    }

    #[test]
    fn predict_zero_steps_returns_x0() {
        let mut m = EsnModel::build(small_cfg(10, 4, 2)).unwrap();
        m.set_w_out(DMatrix::zeros(4, 10)).unwrap();
        let out = m.predict(&[1.0, 2.0, 3.0, 4.0], 0).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn warmup_then_predict_matches_sequential_oracle() {
        let mut m = EsnModel::build(small_cfg(10, 4, 21)).unwrap();
        let w_out = DMatrix::from_fn(4, 10, |i, j| ((i * 10 + j) as f64 * 0.37).sin() * 0.1);
        m.set_w_out(w_out.clone()).unwrap();
        let snippet = [[1.0, 0.5, -0.5, 2.0], [0.9, 0.4, -0.3, 2.1]];
        let x0 = [0.8, 0.6, -0.2, 1.9];

        m.reset_state();
        m.warmup(snippet.iter().map(|s| s.as_slice())).unwrap();
        let got = m.predict_from_current(&x0, 5).unwrap();

        // oracle: dense matrices, explicit loop
        let a = m.adjacency().to_dense();
        let w_in = m.w_in().clone();
        let step = |r: &DVector<f64>, x: &[f64]| {
            (&a * r + &w_in * DVector::from_column_slice(x)).map(f64::tanh)
        };
        let mut r = DVector::zeros(10);
        for s in &snippet {
            r = step(&r, s);
        }
        let mut x = x0.to_vec();
        let mut expect = x.clone();
        for _ in 0..5 {
            r = step(&r, &x);
            let rt = DVector::from_vec(readout_transform(r.as_slice()));
            x = (&w_out * rt).as_slice().to_vec();
            expect.extend_from_slice(&x);
        }
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn single_snapshot_warmup_is_one_update() {
        let mut a = EsnModel::build(small_cfg(10, 4, 3)).unwrap();
        let mut b = a.clone();
        let x = [0.1, 0.2, 0.3, 0.4];
        a.warmup([x.as_slice()]).unwrap();
        b.update_state(&x).unwrap();
        assert_eq!(a.state(), b.state());
    }

    #[test]
    fn forecast_equals_predict_and_keeps_state() {
        let mut m = EsnModel::build(small_cfg(12, 4, 8)).unwrap();
        m.set_w_out(DMatrix::from_fn(4, 12, |i, j| ((i + 2 * j) as f64).cos() * 0.05)).unwrap();
        m.update_state(&[0.3; 4]).unwrap();
        let before = m.state().to_vec();
        let x0 = [0.5, -0.1, 0.2, 0.9];
        let f = m.forecast(&x0, 7).unwrap();
        assert_eq!(m.state(), before.as_slice());
        assert_eq!(f, m.predict(&x0, 7).unwrap());
    }
}
