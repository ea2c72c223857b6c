//! Normalized L² prediction errors.
//!
//! For one trajectory and one channel,
//!
//! ```text
//! e(t) = ‖X_true(t) − X_pred(t)‖ / ⟨‖X_true‖⟩
//! ```
//!
//! where `‖·‖` is the Euclidean norm over cells and `⟨·⟩` the mean over all
//! sample times of the window. The height channel is reported as the free
//! surface `h + z`; the discharge channel is `hu` as is. Suite curves are the
//! pointwise mean over trajectories.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::datasets::SuiteRun;
use crate::esn::TransferRate;
use crate::swe::{Topography, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Free surface `h + z`.
    Height,
    /// Discharge `hu`.
    Discharge,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn check_aligned(truth: &Trajectory, pred: &Trajectory) -> Result<()> {
    if truth.cells() != pred.cells() {
        return Err(Error::Dimension {
            what: "prediction cells",
            expected: truth.cells(),
            got: pred.cells(),
        });
    }
    if truth.len() != pred.len() {
        return Err(Error::Dimension {
            what: "prediction length",
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Dimension {
            what: "trajectory length",
            expected: 1,
            got: 0,
        });
    }
    let tol = 1e-9 * truth.sample_dt().abs().max(1.0);
    if truth.times().iter().zip(pred.times()).any(|(a, b)| (a - b).abs() > tol) {
        return Err(Error::Config("prediction and truth sample different times".into()));
    }
    Ok(())
}

/// Per-time error of `pred` against `truth` on one channel.
pub fn trajectory_error(truth: &Trajectory, pred: &Trajectory, channel: Channel, topo: &Topography) -> Result<Vec<f64>> {
    check_aligned(truth, pred)?;
    let n = truth.cells();
    if channel == Channel::Height && topo.len() != n {
        return Err(Error::Dimension {
            what: "topography cells",
            expected: n,
            got: topo.len(),
        });
    }
    let block = |t: &Trajectory, i: usize| -> Vec<f64> {
        match channel {
            Channel::Height => t.h(i).iter().zip(&topo.z).map(|(h, z)| h + z).collect(),
            Channel::Discharge => t.hu(i).to_vec(),
        }
    };
    let mut diff = Vec::with_capacity(truth.len());
    let mut scale = 0.0;
    for i in 0..truth.len() {
        let (bt, bp) = (block(truth, i), block(pred, i));
        scale += norm(bt.iter().copied());
        diff.push(norm(bt.iter().zip(&bp).map(|(a, b)| a - b)));
    }
    scale /= truth.len() as f64;
    if !(scale > 0.0) {
        return Err(Error::Config("true trajectory has zero norm on this channel".into()));
    }
    Ok(diff.into_iter().map(|d| d / scale).collect())
}

/// Pointwise mean of per-trajectory curves.
pub fn suite_error(curves: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = curves.first().ok_or(Error::Dimension {
        what: "number of curves",
        expected: 1,
        got: 0,
    })?;
    let mut mean = vec![0.0; first.len()];
    for c in curves {
        if c.len() != first.len() {
            return Err(Error::Dimension {
                what: "curve length",
                expected: first.len(),
                got: c.len(),
            });
        }
        mean.iter_mut().zip(c).for_each(|(m, v)| *m += v);
    }
    let j = curves.len() as f64;
    mean.iter_mut().for_each(|m| *m /= j);
    Ok(mean)
}

/// Suite-averaged error curves of one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub times: Vec<f64>,
    pub e_h: Vec<f64>,
    pub e_hu: Vec<f64>,
    pub suite: String,
    pub alpha: TransferRate,
}

impl ErrorCurve {
    /// Average both channels over `J` true/predicted pairs.
    pub fn from_pairs(
        truth: &[Trajectory],
        preds: &[Trajectory],
        topo: &Topography,
        suite: &str,
        alpha: TransferRate,
    ) -> Result<Self> {
        if truth.len() != preds.len() || truth.is_empty() {
            return Err(Error::Dimension {
                what: "prediction count",
                expected: truth.len(),
                got: preds.len(),
            });
        }
        let curves = |ch| -> Result<Vec<Vec<f64>>> {
            truth
                .iter()
                .zip(preds)
                .map(|(t, p)| trajectory_error(t, p, ch, topo))
                .collect()
        };
        Ok(Self {
            times: truth[0].times().to_vec(),
            e_h: suite_error(&curves(Channel::Height)?)?,
            e_hu: suite_error(&curves(Channel::Discharge)?)?,
            suite: suite.to_string(),
            alpha,
        })
    }

    /// One curve per branch of a suite run.
    pub fn from_run(run: &SuiteRun, topo: &Topography) -> Result<Vec<Self>> {
        run.predictions
            .iter()
            .map(|(rate, preds)| Self::from_pairs(&run.truth, preds, topo, &run.suite.name, *rate))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time averages `(ē_h, ē_hu)`.
    pub fn time_average(&self) -> (f64, f64) {
        let n = self.len().max(1) as f64;
        (self.e_h.iter().sum::<f64>() / n, self.e_hu.iter().sum::<f64>() / n)
    }

    /// Largest value over time and channels.
    pub fn max(&self) -> f64 {
        self.e_h.iter().chain(&self.e_hu).copied().fold(0.0, f64::max)
    }

    /// Restrict to samples with `t <= t_max`.
    pub fn until(&self, t_max: f64) -> Self {
        let k = self.times.iter().take_while(|&&t| t <= t_max + 1e-9).count();
        Self {
            times: self.times[..k].to_vec(),
            e_h: self.e_h[..k].to_vec(),
            e_hu: self.e_hu[..k].to_vec(),
            suite: self.suite.clone(),
            alpha: self.alpha,
        }
    }

    /// `t,e_h,e_hu,suite,alpha`, optionally preceded by a `# config_hash=` line.
    pub fn write_csv(&self, path: &Path, config_hash: Option<&str>) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut body = || -> std::io::Result<()> {
            if let Some(hash) = config_hash {
                writeln!(w, "# config_hash={hash}")?;
            }
            writeln!(w, "t,e_h,e_hu,suite,alpha")?;
            for i in 0..self.len() {
                writeln!(
                    w,
                    "{:?},{:?},{:?},{},{}",
                    self.times[i], self.e_h[i], self.e_hu[i], self.suite, self.alpha
                )?;
            }
            w.flush()
        };
        body().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut curve = Self {
            times: Vec::new(),
            e_h: Vec::new(),
            e_hu: Vec::new(),
            suite: String::new(),
            alpha: TransferRate::Skip,
        };
        let bad = |msg: String| Error::format("error curve", msg);
        let mut header = false;
        for (ln, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !header {
                if line.trim() != "t,e_h,e_hu,suite,alpha" {
                    return Err(bad(format!("unexpected header {line:?}")));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("line {}: expected 5 fields", ln + 1)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", ln + 1)));
            curve.times.push(num(f[0])?);
            curve.e_h.push(num(f[1])?);
            curve.e_hu.push(num(f[2])?);
            curve.suite = f[3].to_string();
            curve.alpha = f[4].parse()?;
        }
        if !header {
            return Err(bad("missing header".into()));
        }
        Ok(curve)
    }
}
