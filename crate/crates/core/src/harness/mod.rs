//! Experiment orchestration behind the `swe-esn` binary.
//!
//! The in-memory steps ([`train_model`], [`transfer_pairs`],
//! [`evaluate_suite`], [`bench`]) are usable directly; the `cmd_*` functions
//! wrap them with the run-directory layout:
//!
//! ```text
//! <output_dir>/config.toml                  resolved configuration
//! <output_dir>/model.bin                    trained source model
//! <output_dir>/train_manifest.csv           training ICs and boundary offsets
//! <output_dir>/data/train_NNN.csv           training trajectories (gen-data)
//! <output_dir>/model_<suite>_alpha-<a>.bin  transferred readouts
//! <output_dir>/curves/<suite>_alpha-<a>.csv suite error curves
//! ```
//!
//! Every artifact carries the configuration hash.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;

pub use config::{ExperimentConfig, Preset, DESK_LAMBDA};

use crate::datasets::{
    build_test_suite, build_training_set, build_transfer_set, realize_ic, suite_initial_conditions, Dataset,
    IcParams, TestSuiteSpec, SAMPLE_DT,
};
use crate::esn::io::{read_model, write_model, ModelMeta};
use crate::esn::{EsnModel, StateMatrixPair, TransferRate};
use crate::metrics::ErrorCurve;
use crate::swe::{Solver, Topography, Trajectory};
use crate::{Error, Exec, Result};

/// Summary of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub trajectories: usize,
    pub columns: usize,
    pub pairs: usize,
    /// In-sample one-step residual `‖W_out R̃ − X‖_F / ‖X‖_F`.
    pub residual: f64,
    pub data_seconds: f64,
    pub fit_seconds: f64,
}

impl fmt::Display for TrainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "trajectories {}  columns {}  pairs {}",
            self.trajectories, self.columns, self.pairs
        )?;
        writeln!(f, "in-sample residual {:.3e}", self.residual)?;
        write!(
            f,
            "data {:.2}s  drive+fit {:.2}s",
            self.data_seconds, self.fit_seconds
        )
    }
}

fn topography(cfg: &ExperimentConfig) -> Result<Topography> {
    Topography::bump(&cfg.swe)
}

/// Sum of squares of every frame that appears as a target.
fn target_energy(ds: &Dataset) -> f64 {
    let d = ds.dim();
    let mut bounds = ds.starts().to_vec();
    bounds.push(ds.columns());
    bounds
        .windows(2)
        .map(|w| ds.frames()[(w[0] + 1) * d..w[1] * d].iter().map(|x| x * x).sum::<f64>())
        .sum()
}

/// Build the training set and the reservoir, drive, and fit the readout.
pub fn train_model(cfg: &ExperimentConfig, exec: Exec) -> Result<(EsnModel, Dataset, TrainReport)> {
    cfg.validate()?;
    let topo = topography(cfg)?;
    let t0 = Instant::now();
    let ds = build_training_set(cfg.m, &cfg.swe, &topo, cfg.seed, exec)?;
    let data_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut model = EsnModel::build(cfg.esn)?;
    let ne = model.drive_normal_equations(ds.frames(), ds.starts(), exec)?;
    model.train(&ne)?;
    let fit_seconds = t1.elapsed().as_secs_f64();
    model.reset_state();

    // ‖W R − X‖² = tr(W G W') − 2 tr(W C) + ‖X‖²
    let w = model.w_out().expect("just trained");
    let xx = target_energy(&ds);
    let wgw = (w * &ne.gram).component_mul(w).sum();
    let wc = (w * &ne.cross).trace();
    let residual = ((wgw - 2.0 * wc + xx).max(0.0) / xx).sqrt();

    let report = TrainReport {
        trajectories: ds.len(),
        columns: ds.columns(),
        pairs: ne.samples,
        residual,
        data_seconds,
        fit_seconds,
    };
    Ok((model, ds, report))
}

/// The single target-regime trajectory of `suite` driven through `model`.
pub fn transfer_pairs(cfg: &ExperimentConfig, model: &EsnModel, suite: &TestSuiteSpec) -> Result<StateMatrixPair> {
    let topo = topography(cfg)?;
    let (_, traj) = build_transfer_set(suite, &cfg.swe, &topo, cfg.seed)?;
    model.clone().drive(traj.as_flat(), &[])
}

/// Copy of `base` with its readout corrected at `rate`.
pub fn transferred(base: &EsnModel, pairs: &StateMatrixPair, rate: TransferRate) -> Result<(EsnModel, DMatrix<f64>)> {
    let mut m = base.clone();
    let delta = m.apply_transfer(pairs, rate)?;
    Ok((m, delta))
}

/// Error curves of `suite`, one per transfer rate, on `[0, cfg.horizon]`.
pub fn evaluate_suite(
    cfg: &ExperimentConfig,
    base: &EsnModel,
    suite: &TestSuiteSpec,
    exec: Exec,
) -> Result<Vec<ErrorCurve>> {
    let topo = topography(cfg)?;
    let rates = cfg.rates_for(suite);
    let pairs = if rates.iter().any(|r| !r.is_skip()) {
        Some(transfer_pairs(cfg, base, suite)?)
    } else {
        None
    };
    let models = exec.try_map(rates.len(), |i| match (rates[i], &pairs) {
        (TransferRate::Skip, _) | (_, None) => Ok(base.clone()),
        (rate, Some(p)) => transferred(base, p, rate).map(|(m, _)| m),
    })?;
    let branches: Vec<(TransferRate, &EsnModel)> = rates.iter().copied().zip(&models).collect();
    let run = build_test_suite(suite, &branches, &cfg.swe, &topo, cfg.seed, cfg.horizon, exec)?;
    ErrorCurve::from_run(&run, &topo)
}

/// Wall-clock comparison of DNS and ESN forecasting over one test horizon.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub suite: String,
    pub horizon: f64,
    pub dns_steps: usize,
    pub esn_steps: usize,
    pub dns_seconds: f64,
    pub esn_seconds: f64,
    /// Generating the target-regime trajectory; `None` without transfer.
    pub transfer_data_seconds: Option<f64>,
    /// Driving the reservoir on it and solving for `δW`.
    pub transfer_update_seconds: Option<f64>,
}

impl BenchReport {
    /// DNS steps per ESN step; exactly `Δt / δt`.
    pub fn step_ratio(&self) -> usize {
        self.dns_steps / self.esn_steps.max(1)
    }

    pub fn step_ratio_exact(&self) -> bool {
        self.esn_steps > 0 && self.dns_steps == self.step_ratio() * self.esn_steps
    }

    pub fn speedup_prediction(&self) -> f64 {
        self.dns_seconds / self.esn_seconds
    }

    /// Speedup when the transfer set and update are charged to the ESN.
    pub fn speedup_with_transfer(&self) -> f64 {
        let extra = self.transfer_data_seconds.unwrap_or(0.0) + self.transfer_update_seconds.unwrap_or(0.0);
        self.dns_seconds / (self.esn_seconds + extra)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}  horizon {}", self.suite, self.horizon)?;
        writeln!(f, "dns              steps {:>8}  {:>10.4}s", self.dns_steps, self.dns_seconds)?;
        writeln!(f, "esn prediction   steps {:>8}  {:>10.4}s", self.esn_steps, self.esn_seconds)?;
        match (self.transfer_data_seconds, self.transfer_update_seconds) {
            (Some(a), Some(b)) => {
                writeln!(f, "transfer data                     {a:>10.4}s")?;
                writeln!(f, "transfer update                   {b:>10.4}s")?;
            }
            _ => writeln!(f, "transfer         none")?,
        }
        writeln!(
            f,
            "step ratio       {} ({})",
            self.step_ratio(),
            if self.step_ratio_exact() { "exact" } else { "not exact" }
        )?;
        writeln!(f, "speedup          prediction only {:.2}x", self.speedup_prediction())?;
        write!(f, "speedup          with transfer   {:.2}x", self.speedup_with_transfer())
    }
}

/// Time one DNS run and one forecast of the same test trajectory. Transfer
/// costs are included for shifted suites when `cfg.alpha` is finite.
pub fn bench(cfg: &ExperimentConfig, model: &EsnModel, suite: &TestSuiteSpec) -> Result<BenchReport> {
    let topo = topography(cfg)?;
    let ic = suite_initial_conditions(suite, cfg.seed)?[0];
    let per_sample = cfg.swe.steps_per_sample(SAMPLE_DT)?;
    let samples = (cfg.horizon / SAMPLE_DT).round() as usize;

    let t0 = Instant::now();
    let state = realize_ic(&ic, &cfg.swe, &topo)?;
    let truth = Solver::new(cfg.swe, topo.clone())?.integrate(state, cfg.horizon, SAMPLE_DT)?;
    let dns_seconds = t0.elapsed().as_secs_f64();

    let (mut transfer_data_seconds, mut transfer_update_seconds) = (None, None);
    let mut m = model.clone();
    if suite.is_shifted() && !cfg.alpha.is_skip() {
        let t = Instant::now();
        let (_, traj) = build_transfer_set(suite, &cfg.swe, &topo, cfg.seed)?;
        transfer_data_seconds = Some(t.elapsed().as_secs_f64());
        let t = Instant::now();
        let pairs = m.drive(traj.as_flat(), &[])?;
        m.apply_transfer(&pairs, cfg.alpha)?;
        transfer_update_seconds = Some(t.elapsed().as_secs_f64());
    }

    let t1 = Instant::now();
    let pred = m.forecast(truth.frame(0), samples)?;
    let esn_seconds = t1.elapsed().as_secs_f64();
    debug_assert_eq!(pred.len(), truth.as_flat().len());

    Ok(BenchReport {
        suite: suite.name.clone(),
        horizon: cfg.horizon,
        dns_steps: per_sample * samples,
        esn_steps: samples,
        dns_seconds,
        esn_seconds,
        transfer_data_seconds,
        transfer_update_seconds,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn meta(cfg: &ExperimentConfig, tag: Option<String>) -> ModelMeta {
    ModelMeta {
        config_hash: Some(cfg.hash()),
        tag,
    }
}

/// Write the resolved configuration next to the artifacts.
pub fn write_config(cfg: &ExperimentConfig) -> Result<PathBuf> {
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("config.toml");
    let text = format!("# config_hash={}\n{}", cfg.hash(), cfg.to_toml());
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn model_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("model.bin")
}

pub fn transferred_model_path(cfg: &ExperimentConfig, suite: &str, rate: TransferRate) -> PathBuf {
    cfg.output_dir.join(format!("model_{suite}_alpha-{rate}.bin"))
}

pub fn curve_path(cfg: &ExperimentConfig, suite: &str, rate: TransferRate) -> PathBuf {
    cfg.output_dir.join("curves").join(format!("{suite}_alpha-{rate}.csv"))
}

/// Integrate one initial condition over `[0, t_end]` and write the CSV.
pub fn cmd_simulate(cfg: &ExperimentConfig, ic: &IcParams, t_end: f64, out: &Path) -> Result<Trajectory> {
    ic.validate()?;
    let topo = topography(cfg)?;
    let state = realize_ic(ic, &cfg.swe, &topo)?;
    let traj = Solver::new(cfg.swe, topo)?.integrate(state, t_end, SAMPLE_DT)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    traj.write_csv(out, &cfg.swe, Some(&cfg.hash()))?;
    Ok(traj)
}

/// Generate the training trajectories and their manifest under `data/`.
pub fn cmd_gen_data(cfg: &ExperimentConfig, exec: Exec) -> Result<Dataset> {
    cfg.validate()?;
    let topo = topography(cfg)?;
    let ds = build_training_set(cfg.m, &cfg.swe, &topo, cfg.seed, exec)?;
    let dir = cfg.output_dir.join("data");
    ensure_dir(&dir)?;
    write_config(cfg)?;
    let hash = cfg.hash();
    for i in 0..ds.len() {
        ds.trajectory(i)
            .write_csv(&dir.join(format!("train_{i:03}.csv")), &cfg.swe, Some(&hash))?;
    }
    ds.write_manifest(&dir.join("manifest.csv"), Some(&hash))?;
    Ok(ds)
}

/// Train the source model and write it with the training manifest.
pub fn cmd_train(cfg: &ExperimentConfig, exec: Exec) -> Result<(EsnModel, TrainReport)> {
    let (model, ds, report) = train_model(cfg, exec)?;
    write_config(cfg)?;
    ds.write_manifest(&cfg.output_dir.join("train_manifest.csv"), Some(&cfg.hash()))?;
    write_model(&model_path(cfg), &model, &meta(cfg, None))?;
    Ok((model, report))
}

/// Correct the readout of the model at `model_file` for `suite` at `cfg.alpha`
/// and write the result. Returns the new model, `δW` and the output path.
pub fn cmd_transfer(cfg: &ExperimentConfig, model_file: &Path, suite: &str) -> Result<(EsnModel, DMatrix<f64>, PathBuf)> {
    cfg.validate()?;
    let suite = cfg.suite(suite)?;
    let (base, _) = read_model(model_file)?;
    let pairs = transfer_pairs(cfg, &base, suite)?;
    let (model, delta) = transferred(&base, &pairs, cfg.alpha)?;
    let out = transferred_model_path(cfg, &suite.name, cfg.alpha);
    ensure_dir(&cfg.output_dir)?;
    let tag = format!("{} alpha={} pairs={}", suite.name, cfg.alpha, pairs.len());
    write_model(&out, &model, &meta(cfg, Some(tag)))?;
    Ok((model, delta, out))
}

/// Evaluate the model at `model_file` on the named suites (all when empty)
/// and write one curve file per suite and rate.
pub fn cmd_evaluate(cfg: &ExperimentConfig, model_file: &Path, suites: &[String], exec: Exec) -> Result<Vec<ErrorCurve>> {
    cfg.validate()?;
    let (base, _) = read_model(model_file)?;
    let selected: Vec<&TestSuiteSpec> = if suites.is_empty() {
        cfg.suites.iter().collect()
    } else {
        suites.iter().map(|s| cfg.suite(s)).collect::<Result<_>>()?
    };
    ensure_dir(&cfg.output_dir.join("curves"))?;
    let hash = cfg.hash();
    let mut all = Vec::new();
    for suite in selected {
        for curve in evaluate_suite(cfg, &base, suite, exec)? {
            curve.write_csv(&curve_path(cfg, &curve.suite, curve.alpha), Some(&hash))?;
            all.push(curve);
        }
    }
    Ok(all)
}

/// Benchmark the model at `model_file` on `suite`.
pub fn cmd_bench(cfg: &ExperimentConfig, model_file: &Path, suite: &str) -> Result<BenchReport> {
    cfg.validate()?;
    let (model, _) = read_model(model_file)?;
    bench(cfg, &model, cfg.suite(suite)?)
}
