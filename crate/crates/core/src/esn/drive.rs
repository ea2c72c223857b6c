use nalgebra::{DMatrix, DMatrixViewMut};

use super::model::{readout_transform_into, EsnModel};
use crate::{Error, Exec, Result};

/// Transformed reservoir states and their targets, one column per pair.
///
/// `states` is `D×P`, `targets` is `N×P`; column `k` of `states` is the
/// readout-transformed state after feeding `X(t)`, column `k` of `targets` is
/// `X(t + Δt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrixPair {
    pub states: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

impl StateMatrixPair {
    pub fn len(&self) -> usize {
        self.states.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.states.ncols() == 0
    }

    pub fn normal_equations(&self) -> NormalEquations {
        NormalEquations {
            gram: &self.states * self.states.transpose(),
            cross: &self.states * self.targets.transpose(),
            samples: self.len(),
        }
    }
}

/// `R R'` (`D×D`) and `R X'` (`D×N`), accumulated without storing `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    pub gram: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub samples: usize,
}

impl NormalEquations {
    pub fn zeros(d: usize, n: usize) -> Self {
        Self {
            gram: DMatrix::zeros(d, d),
            cross: DMatrix::zeros(d, n),
            samples: 0,
        }
    }

    /// Add the outer products of a block of states (`D×b`) and targets (`N×b`).
    pub fn accumulate(&mut self, states: &DMatrix<f64>, targets: &DMatrix<f64>, exec: Exec) {
        const COLS_PER_TASK: usize = 64;
        let d = self.gram.nrows();
        let states_t = states.transpose();
        exec.for_each_chunk_mut(self.gram.as_mut_slice(), d * COLS_PER_TASK, |ci, chunk| {
            let c0 = ci * COLS_PER_TASK;
            let width = chunk.len() / d;
            let mut view = DMatrixViewMut::from_slice(chunk, d, width);
            view.gemm(1.0, states, &states_t.columns(c0, width), 1.0);
        });
        self.cross.gemm(1.0, states, &targets.transpose(), 1.0);
        self.samples += states.ncols();
    }
}

fn validate_segments(frames: &[f64], n: usize, starts: &[usize]) -> Result<usize> {
    if frames.len() % n != 0 {
        return Err(Error::Dimension {
            what: "flattened frames (length not a multiple of N)",
            expected: n * (frames.len() / n + 1),
            got: frames.len(),
        });
    }
    let t = frames.len() / n;
    if t == 0 {
        return Err(Error::Config("drive needs at least one snapshot".into()));
    }
    if starts.first().copied().unwrap_or(0) != 0
        || starts.windows(2).any(|w| w[0] >= w[1])
        || starts.last().is_some_and(|&s| s >= t)
    {
        return Err(Error::Config(format!(
            "segment starts {starts:?} must be increasing, begin at 0 and lie below {t}"
        )));
    }
    Ok(t)
}

impl EsnModel {
    /// Drive from `r = 0` through concatenated snapshots and call `sink` with
    /// `(r̃(t+Δt), X(t+Δt))` for every consecutive pair inside a segment.
    /// Segments start at the offsets in `starts` (empty means one segment).
    fn for_each_pair<F>(&mut self, frames: &[f64], starts: &[usize], mut sink: F) -> Result<()>
    where
        F: FnMut(&[f64], &[f64]),
    {
        let n = self.io_dim();
        let t = validate_segments(frames, n, starts)?;
        let mut bounds: Vec<usize> = if starts.is_empty() { vec![0] } else { starts.to_vec() };
        bounds.push(t);
        let reset = self.config().reset_on_concat;
        let mut r_tilde = vec![0.0; self.reservoir_dim()];

        self.reset_state();
        for (seg, w) in bounds.windows(2).enumerate() {
            if reset && seg > 0 {
                self.reset_state();
            }
            for k in w[0]..w[1] {
                let r = self.update_state(&frames[k * n..(k + 1) * n])?;
                if k + 1 < w[1] {
                    readout_transform_into(r, &mut r_tilde);
                    sink(&r_tilde, &frames[(k + 1) * n..(k + 2) * n]);
                }
            }
        }
        Ok(())
    }

    /// Collect the explicit state/target matrices. Memory is `O((D + N)·T)`;
    /// use [`EsnModel::drive_normal_equations`] for large training sets.
    pub fn drive(&mut self, frames: &[f64], starts: &[usize]) -> Result<StateMatrixPair> {
        let (d, n) = (self.reservoir_dim(), self.io_dim());
        let mut states = Vec::new();
        let mut targets = Vec::new();
        self.for_each_pair(frames, starts, |r, x| {
            states.extend_from_slice(r);
            targets.extend_from_slice(x);
        })?;
        let p = states.len() / d;
        Ok(StateMatrixPair {
            states: DMatrix::from_vec(d, p, states),
            targets: DMatrix::from_vec(n, p, targets),
        })
    }

    /// Stream the pairs straight into `R R'` and `R X'` in column blocks.
    pub fn drive_normal_equations(
        &mut self,
        frames: &[f64],
        starts: &[usize],
        exec: Exec,
    ) -> Result<NormalEquations> {
        const BLOCK: usize = 256;
        let (d, n) = (self.reservoir_dim(), self.io_dim());
        let mut ne = NormalEquations::zeros(d, n);
        let mut states = DMatrix::<f64>::zeros(d, BLOCK);
        let mut targets = DMatrix::<f64>::zeros(n, BLOCK);
        let mut filled = 0usize;
        self.for_each_pair(frames, starts, |r, x| {
            states.column_mut(filled).copy_from_slice(r);
            targets.column_mut(filled).copy_from_slice(x);
            filled += 1;
            if filled == BLOCK {
                ne.accumulate(&states, &targets, exec);
                filled = 0;
            }
        })?;
        if filled > 0 {
            let s = states.columns(0, filled).into_owned();
            let x = targets.columns(0, filled).into_owned();
            ne.accumulate(&s, &x, exec);
        }
        Ok(ne)
    }
}
