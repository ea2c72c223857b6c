use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::SweConfig;
use crate::{Error, Result};

/// Time-ordered snapshots `[h ⧺ hu]` sampled every `sample_dt`.
///
/// Frames are stored back to back in one buffer; `frame(i)` has length `2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    cells: usize,
    sample_dt: f64,
    times: Vec<f64>,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(cells: usize, sample_dt: f64) -> Self {
        Self::with_capacity(cells, sample_dt, 0)
    }

    pub fn with_capacity(cells: usize, sample_dt: f64, frames: usize) -> Self {
        Self {
            cells,
            sample_dt,
            times: Vec::with_capacity(frames),
            data: Vec::with_capacity(frames * 2 * cells),
        }
    }

    /// Wrap back-to-back snapshots sampled every `sample_dt` from `t0`.
    pub fn from_flat(cells: usize, sample_dt: f64, t0: f64, data: Vec<f64>) -> Result<Self> {
        let dim = 2 * cells;
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Dimension {
                what: "flat trajectory length",
                expected: dim * (data.len() / dim.max(1)),
                got: data.len(),
            });
        }
        let times = (0..data.len() / dim).map(|i| t0 + i as f64 * sample_dt).collect();
        Ok(Self {
            cells,
            sample_dt,
            times,
            data,
        })
    }

    /// Append a snapshot. Panics if its length is not `2n`.
    pub fn push(&mut self, t: f64, frame: &[f64]) {
        assert_eq!(frame.len(), 2 * self.cells, "snapshot length");
        self.times.push(t);
        self.data.extend_from_slice(frame);
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Snapshot length `2n`.
    pub fn dim(&self) -> usize {
        2 * self.cells
    }

    pub fn sample_dt(&self) -> f64 {
        self.sample_dt
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim().max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Water height block of frame `i`.
    pub fn h(&self, i: usize) -> &[f64] {
        &self.frame(i)[..self.cells]
    }

    /// Momentum block of frame `i`.
    pub fn hu(&self, i: usize) -> &[f64] {
        &self.frame(i)[self.cells..]
    }

    /// First `len` frames.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            cells: self.cells,
            sample_dt: self.sample_dt,
            times: self.times[..len].to_vec(),
            data: self.data[..len * self.dim()].to_vec(),
        }
    }

    /// Write as CSV: comment lines with grid metadata, a column header, then
    /// one row per snapshot `t, h_0..h_{n-1}, hu_0..hu_{n-1}`. Floats use the
    /// shortest round-trip representation, so reading back is lossless.
    pub fn write_csv(&self, path: &Path, cfg: &SweConfig, config_hash: Option<&str>) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "# n={} dx={:?} L={:?} sample_dt={:?}",
            self.cells, cfg.dx, cfg.L, self.sample_dt
        )
        .map_err(io)?;
        if let Some(hash) = config_hash {
            writeln!(w, "# config_hash={hash}").map_err(io)?;
        }
        w.flush().map_err(io)?;

        let mut csv = csv::Writer::from_writer(w);
        let header = std::iter::once("t".to_string())
            .chain((0..self.cells).map(|j| format!("h_{j}")))
            .chain((0..self.cells).map(|j| format!("hu_{j}")));
        csv.write_record(header)
            .map_err(|e| Error::format("trajectory csv", e.to_string()))?;
        let mut row = Vec::with_capacity(self.dim() + 1);
        for (t, frame) in self.times.iter().zip(self.frames()) {
            row.clear();
            row.push(format!("{t:?}"));
            row.extend(frame.iter().map(|v| format!("{v:?}")));
            csv.write_record(&row)
                .map_err(|e| Error::format("trajectory csv", e.to_string()))?;
        }
        csv.flush().map_err(io)?;
        Ok(())
    }

    /// Read a file produced by [`Trajectory::write_csv`]. Returns the
    /// trajectory and the `(dx, L)` recorded in its header.
    pub fn read_csv(path: &Path) -> Result<(Self, f64, f64)> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader
            .read_line(&mut first)
            .map_err(|e| Error::io(path, e))?;
        let meta = parse_meta(first.trim_start_matches('#'))?;
        let get = |key: &str| -> Result<f64> {
            meta.iter()
                .find(|(k, _)| k == key)
                .and_then(|(_, v)| v.parse().ok())
                .ok_or_else(|| Error::format("trajectory csv", format!("header lacks {key}")))
        };
        let cells = get("n")? as usize;
        let (dx, len, sample_dt) = (get("dx")?, get("L")?, get("sample_dt")?);

        let mut csv = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut traj = Trajectory::new(cells, sample_dt);
        let mut frame = vec![0.0; 2 * cells];
        for rec in csv.records() {
            let rec = rec.map_err(|e| Error::format("trajectory csv", e.to_string()))?;
            if rec.len() != 2 * cells + 1 {
                return Err(Error::format(
                    "trajectory csv",
                    format!("row has {} fields, expected {}", rec.len(), 2 * cells + 1),
                ));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::format("trajectory csv", format!("{s:?}: {e}")))
            };
            let t = parse(&rec[0])?;
            for (dst, field) in frame.iter_mut().zip(rec.iter().skip(1)) {
                *dst = parse(field)?;
            }
            traj.push(t, &frame);
        }
        Ok((traj, dx, len))
    }
}

fn parse_meta(line: &str) -> Result<Vec<(String, String)>> {
    line.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::format("trajectory csv", format!("bad header token {kv:?}")))
        })
        .collect()
}
