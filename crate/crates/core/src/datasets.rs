//! Randomized initial conditions, the concatenated training set and the test
//! suites.
//!
//! An initial condition is a sinusoidal perturbation of a uniform stream:
//!
//! ```text
//! h(x,0) + z(x) = h0(1+s_h) + a·h0·sin(2kπx/L + ω1)
//! u(x,0)        = u0(1+s_u) + d·u0·sin(2pπx/L + ω2)
//! ```
//!
//! Training draws use the base regime (`s_h = s_u = 0`); test and transfer
//! draws use the ambient means of a [`TestSuiteSpec`]. Every trajectory gets its
//! own RNG stream (see [`crate::rng`]), so datasets are a pure function of the
//! seed and the configuration no matter how the work is scheduled.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::esn::{EsnModel, TransferRate};
use crate::rng::{stream, Purpose};
use crate::swe::{Solver, SweConfig, SweState, Topography, Trajectory};
use crate::{Error, Exec, Result};

pub const BASE_H0: f64 = 4.0;
pub const BASE_U0: f64 = 2.5;
/// Snapshot spacing of every stored trajectory.
pub const SAMPLE_DT: f64 = 0.1;
pub const TRAINING_HORIZON: f64 = 30.0;
pub const TEST_HORIZON: f64 = 60.0;
pub const TRANSFER_HORIZON: f64 = 2.0;
/// Upper bound of the relative perturbation amplitudes `a`, `d`.
pub const MAX_AMPLITUDE: f64 = 0.05;
pub const TRAINING_MAX_K: u32 = 7;
pub const TRAINING_MAX_P: u32 = 4;
pub const TESTING_MAX_WAVENUMBER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcParams {
    pub h0: f64,
    pub u0: f64,
    pub s_h: f64,
    pub s_u: f64,
    pub a: f64,
    pub d: f64,
    pub k: u32,
    pub p: u32,
    pub omega1: f64,
    pub omega2: f64,
}

impl IcParams {
    /// Unperturbed stream `h + z = h0(1+s_h)`, `u = u0(1+s_u)`.
    pub fn uniform(h_mean: f64, u_mean: f64) -> Self {
        Self {
            h0: BASE_H0,
            u0: BASE_U0,
            s_h: h_mean / BASE_H0 - 1.0,
            s_u: u_mean / BASE_U0 - 1.0,
            a: 0.0,
            d: 0.0,
            k: 1,
            p: 1,
            omega1: 0.0,
            omega2: 0.0,
        }
    }

    pub fn mean_level(&self) -> f64 {
        self.h0 * (1.0 + self.s_h)
    }

    pub fn mean_velocity(&self) -> f64 {
        self.u0 * (1.0 + self.s_u)
    }

    pub fn validate(&self) -> Result<()> {
        let amp = 0.0..=MAX_AMPLITUDE;
        let phase = 0.0..TAU;
        if !amp.contains(&self.a) || !amp.contains(&self.d) {
            return Err(Error::Config(format!(
                "amplitudes a = {}, d = {} must lie in [0, {MAX_AMPLITUDE}]",
                self.a, self.d
            )));
        }
        if self.k == 0 || self.p == 0 {
            return Err(Error::Config("wavenumbers must be positive".into()));
        }
        if !phase.contains(&self.omega1) || !phase.contains(&self.omega2) {
            return Err(Error::Config("phases must lie in [0, 2π)".into()));
        }
        if !(self.h0 > 0.0 && self.u0.is_finite() && self.s_h.is_finite() && self.s_u.is_finite()) {
            return Err(Error::Config("mean level must be positive and finite".into()));
        }
        Ok(())
    }
}

/// One row of the test matrix: `J` trajectories around the ambient means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSuiteSpec {
    pub name: String,
    #[serde(rename = "J")]
    pub j: usize,
    pub h_mean: f64,
    pub u_mean: f64,
    /// Transfer rates to evaluate. Empty means the experiment's default
    /// `{0, α, ∞}`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha_values: Vec<TransferRate>,
}

impl TestSuiteSpec {
    pub fn new(name: impl Into<String>, j: usize, h_mean: f64, u_mean: f64) -> Self {
        Self {
            name: name.into(),
            j,
            h_mean,
            u_mean,
            alpha_values: Vec::new(),
        }
    }

    /// The nine suites `TEST_0..TEST_8`, `J = 20` each.
    pub fn default_suites() -> Vec<Self> {
        const MEANS: [(f64, f64); 9] = [
            (4.0, 2.5),
            (4.0, 2.375),
            (4.0, 2.625),
            (4.0, 2.25),
            (4.0, 2.75),
            (3.92, 2.5),
            (4.08, 2.5),
            (3.8, 2.5),
            (4.2, 2.5),
        ];
        MEANS
            .iter()
            .enumerate()
            .map(|(i, &(h, u))| Self::new(format!("TEST_{i}"), 20, h, u))
            .collect()
    }

    pub fn s_h(&self) -> f64 {
        self.h_mean / BASE_H0 - 1.0
    }

    pub fn s_u(&self) -> f64 {
        self.u_mean / BASE_U0 - 1.0
    }

    /// False for the reference regime, which has nothing to transfer to.
    pub fn is_shifted(&self) -> bool {
        self.h_mean != BASE_H0 || self.u_mean != BASE_U0
    }

    /// 16-bit id used in the RNG stream index: `k` for `TEST_k`, otherwise a
    /// hash of the name.
    pub fn stream_id(&self) -> u32 {
        if let Some(k) = self.name.strip_prefix("TEST_").and_then(|s| s.parse::<u16>().ok()) {
            return u32::from(k);
        }
        // FNV-1a folded to 16 bits, offset past the TEST_k range
        let h = self
            .name
            .bytes()
            .fold(0x811c_9dc5u32, |h, b| (h ^ u32::from(b)).wrapping_mul(0x0100_0193));
        0x8000 | ((h ^ (h >> 16)) & 0x7fff)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("suite name must not be empty".into()));
        }
        if self.j == 0 || self.j > 0xffff {
            return Err(Error::Config(format!("suite {}: J = {} out of range", self.name, self.j)));
        }
        if !(self.h_mean > 0.0 && self.u_mean.is_finite()) {
            return Err(Error::Config(format!("suite {}: bad means", self.name)));
        }
        Ok(())
    }
}

/// Training draw: base regime, `k ∈ {1..7}`, `p ∈ {1..4}`.
pub fn sample_training_ic<R: Rng + ?Sized>(rng: &mut R) -> IcParams {
    sample(rng, BASE_H0, BASE_U0, TRAINING_MAX_K, TRAINING_MAX_P)
}

/// Test draw: the suite's ambient means, `k, p ∈ {1..4}`.
pub fn sample_testing_ic<R: Rng + ?Sized>(rng: &mut R, suite: &TestSuiteSpec) -> IcParams {
    sample(
        rng,
        suite.h_mean,
        suite.u_mean,
        TESTING_MAX_WAVENUMBER,
        TESTING_MAX_WAVENUMBER,
    )
}

fn sample<R: Rng + ?Sized>(rng: &mut R, h_mean: f64, u_mean: f64, max_k: u32, max_p: u32) -> IcParams {
    let mut ic = IcParams::uniform(h_mean, u_mean);
    ic.a = rng.random_range(0.0..=MAX_AMPLITUDE);
    ic.d = rng.random_range(0.0..=MAX_AMPLITUDE);
    ic.k = rng.random_range(1..=max_k);
    ic.p = rng.random_range(1..=max_p);
    ic.omega1 = rng.random_range(0.0..TAU);
    ic.omega2 = rng.random_range(0.0..TAU);
    ic
}

/// Cell-averaged state for `params` sampled at the cell centers.
pub fn realize_ic(params: &IcParams, cfg: &SweConfig, topo: &Topography) -> Result<SweState> {
    let n = cfg.cells();
    if topo.len() != n {
        return Err(Error::Dimension {
            what: "topography cells",
            expected: n,
            got: topo.len(),
        });
    }
    let (level, vel) = (params.mean_level(), params.mean_velocity());
    let mut h = Vec::with_capacity(n);
    let mut hu = Vec::with_capacity(n);
    for j in 0..n {
        let x = cfg.cell_center(j);
        let eta = level + params.a * params.h0 * (TAU * f64::from(params.k) * x / cfg.L + params.omega1).sin();
        let u = vel + params.d * params.u0 * (TAU * f64::from(params.p) * x / cfg.L + params.omega2).sin();
        let depth = eta - topo.z[j];
        if !(depth > 0.0) {
            return Err(Error::DryCell { cell: j, h: depth });
        }
        h.push(depth);
        hu.push(depth * u);
    }
    Ok(SweState { h, hu, t: 0.0 })
}

fn simulate(params: &IcParams, cfg: &SweConfig, topo: &Topography, horizon: f64) -> Result<Trajectory> {
    let state = realize_ic(params, cfg, topo)?;
    Solver::new(cfg.clone(), topo.clone())?.integrate(state, horizon, SAMPLE_DT)
}

/// `M` training trajectories concatenated column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    cells: usize,
    seed: u64,
    frames: Vec<f64>,
    starts: Vec<usize>,
    params: Vec<IcParams>,
}

impl Dataset {
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Snapshot length `2n`.
    pub fn dim(&self) -> usize {
        2 * self.cells
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total number of snapshots over all trajectories.
    pub fn columns(&self) -> usize {
        self.frames.len() / self.dim()
    }

    /// All snapshots, back to back.
    pub fn frames(&self) -> &[f64] {
        &self.frames
    }

    /// Column offset where each trajectory begins (one marker per trajectory).
    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn params(&self) -> &[IcParams] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Trajectory `i` as a standalone copy.
    pub fn trajectory(&self, i: usize) -> Trajectory {
        let end = self.starts.get(i + 1).copied().unwrap_or(self.columns());
        let d = self.dim();
        Trajectory::from_flat(self.cells, SAMPLE_DT, 0.0, self.frames[self.starts[i] * d..end * d].to_vec())
            .expect("segment is a whole number of snapshots")
    }

    /// Text manifest: per-trajectory RNG stream, IC parameters and offset.
    pub fn write_manifest(&self, path: &Path, config_hash: Option<&str>) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut body = || -> std::io::Result<()> {
            writeln!(
                w,
                "# M={} seed={} columns={} sample_dt={SAMPLE_DT} horizon={TRAINING_HORIZON}",
                self.len(),
                self.seed,
                self.columns()
            )?;
            if let Some(hash) = config_hash {
                writeln!(w, "# config_hash={hash}")?;
            }
            writeln!(w, "index,stream,offset,h0,u0,s_h,s_u,a,d,k,p,omega1,omega2")?;
            for (i, (p, off)) in self.params.iter().zip(&self.starts).enumerate() {
                let stream_id = ((Purpose::TrainingIc as u64) << 32) | i as u64;
                writeln!(
                    w,
                    "{i},{stream_id:#018x},{off},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{:?},{:?}",
                    p.h0, p.u0, p.s_h, p.s_u, p.a, p.d, p.k, p.p, p.omega1, p.omega2
                )?;
            }
            w.flush()
        };
        body().map_err(|e| Error::io(path, e))
    }
}

/// Integrate `m` training trajectories on `[0, 30]` and concatenate them in
/// index order.
pub fn build_training_set(m: usize, cfg: &SweConfig, topo: &Topography, seed: u64, exec: Exec) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::Config("training set needs M >= 1".into()));
    }
    if u32::try_from(m).is_err() {
        return Err(Error::Config(format!("M = {m} too large")));
    }
    let runs = exec.try_map(m, |i| {
        let params = sample_training_ic(&mut stream(seed, Purpose::TrainingIc, i as u32));
        simulate(&params, cfg, topo, TRAINING_HORIZON).map(|t| (params, t))
    })?;
    let cells = cfg.cells();
    let per = runs[0].1.len();
    let mut frames = Vec::with_capacity(m * per * 2 * cells);
    let mut starts = Vec::with_capacity(m);
    let mut params = Vec::with_capacity(m);
    for (p, traj) in runs {
        starts.push(frames.len() / (2 * cells));
        frames.extend_from_slice(traj.as_flat());
        params.push(p);
    }
    Ok(Dataset {
        cells,
        seed,
        frames,
        starts,
        params,
    })
}

/// True trajectories of a suite and the forecasts of every branch from the
/// same initial snapshots.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub suite: TestSuiteSpec,
    pub params: Vec<IcParams>,
    pub truth: Vec<Trajectory>,
    /// One entry per branch, each holding `J` forecasts aligned with `truth`.
    pub predictions: Vec<(TransferRate, Vec<Trajectory>)>,
}

/// Initial conditions of a suite: `J` draws from the suite's streams.
pub fn suite_initial_conditions(suite: &TestSuiteSpec, seed: u64) -> Result<Vec<IcParams>> {
    suite.validate()?;
    let id = suite.stream_id();
    Ok((0..suite.j)
        .map(|j| sample_testing_ic(&mut stream(seed, Purpose::TestingIc, (id << 16) | j as u32), suite))
        .collect())
}

/// Run DNS for each of the suite's `J` initial conditions over `[0, horizon]`
/// and forecast each one with every `(rate, model)` branch. Forecasts start
/// from `r = 0` and the true initial snapshot only.
pub fn build_test_suite(
    suite: &TestSuiteSpec,
    branches: &[(TransferRate, &EsnModel)],
    cfg: &SweConfig,
    topo: &Topography,
    seed: u64,
    horizon: f64,
    exec: Exec,
) -> Result<SuiteRun> {
    let params = suite_initial_conditions(suite, seed)?;
    let truth = exec.try_map(params.len(), |j| simulate(&params[j], cfg, topo, horizon))?;
    let steps = truth[0].len() - 1;
    let cells = cfg.cells();
    let jn = truth.len();
    let flat = exec.try_map(branches.len() * jn, |idx| {
        let (b, j) = (idx / jn, idx % jn);
        let out = branches[b].1.forecast(truth[j].frame(0), steps)?;
        Trajectory::from_flat(cells, SAMPLE_DT, 0.0, out)
    })?;
    let mut flat = flat.into_iter();
    let predictions = branches
        .iter()
        .map(|(rate, _)| (*rate, flat.by_ref().take(jn).collect()))
        .collect();
    Ok(SuiteRun {
        suite: suite.clone(),
        params,
        truth,
        predictions,
    })
}

/// Single target-regime trajectory on `[0, 2]` for the readout correction.
/// Refused for an unshifted suite.
pub fn build_transfer_set(
    suite: &TestSuiteSpec,
    cfg: &SweConfig,
    topo: &Topography,
    seed: u64,
) -> Result<(IcParams, Trajectory)> {
    suite.validate()?;
    if !suite.is_shifted() {
        return Err(Error::Refused(format!(
            "suite {} is the reference regime; there is nothing to transfer to",
            suite.name
        )));
    }
    let params = sample_testing_ic(&mut stream(seed, Purpose::TransferIc, suite.stream_id()), suite);
    let traj = simulate(&params, cfg, topo, TRANSFER_HORIZON)?;
    Ok((params, traj))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> SweConfig {
        SweConfig {
            dx: 0.8,
            dt_fine: 0.002,
            ..SweConfig::default()
        }
    }

    #[test]
    fn default_suites_match_table() {
        let s = TestSuiteSpec::default_suites();
        assert_eq!(s.len(), 9);
        let expect = [
            (4.0, 2.5),
            (4.0, 2.375),
            (4.0, 2.625),
            (4.0, 2.25),
            (4.0, 2.75),
            (3.92, 2.5),
            (4.08, 2.5),
            (3.8, 2.5),
            (4.2, 2.5),
        ];
        for (i, (suite, (h, u))) in s.iter().zip(expect).enumerate() {
            assert_eq!(suite.name, format!("TEST_{i}"));
            assert_eq!(suite.j, 20);
            assert_eq!((suite.h_mean, suite.u_mean), (h, u));
            assert_eq!(suite.stream_id(), i as u32);
        }
        assert!(!s[0].is_shifted());
        assert!(s[1..].iter().all(|t| t.is_shifted()));
        assert!((s[4].s_u() - 0.1).abs() < 1e-15);
        assert!((s[7].s_h() + 0.05).abs() < 1e-15);
    }

    #[test]
    fn custom_suite_ids_avoid_default_range() {
        let s = TestSuiteSpec::new("my-suite", 3, 4.0, 2.6);
        assert!(s.stream_id() >= 0x8000 && s.stream_id() <= 0xffff);
        assert_eq!(s.stream_id(), TestSuiteSpec::new("my-suite", 9, 1.0, 1.0).stream_id());
    }

    #[test]
    fn training_draws_respect_ranges() {
        let mut rng = stream(1, Purpose::TrainingIc, 0);
        let mut counts = [0usize; 8];
        let draws = 10_000;
        for _ in 0..draws {
            let ic = sample_training_ic(&mut rng);
            ic.validate().unwrap();
            assert_eq!((ic.h0, ic.u0, ic.s_h, ic.s_u), (4.0, 2.5, 0.0, 0.0));
            assert!((1..=7).contains(&ic.k) && (1..=4).contains(&ic.p));
            counts[ic.k as usize] += 1;
        }
        let pk = 1.0 / 7.0;
        let sigma = (draws as f64 * pk * (1.0 - pk)).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 - draws as f64 * pk).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn testing_draws_use_suite_means_and_small_wavenumbers() {
        let suite = &TestSuiteSpec::default_suites()[4];
        let mut rng = stream(2, Purpose::TestingIc, 0);
        for _ in 0..10_000 {
            let ic = sample_testing_ic(&mut rng, suite);
            assert!(ic.k <= 4 && ic.p <= 4);
            assert!((ic.mean_velocity() - 2.75).abs() < 1e-12);
            assert_eq!(ic.mean_level(), 4.0);
        }
    }

    #[test]
    fn same_stream_same_draws() {
        let a: Vec<_> = (0..5).map(|i| sample_training_ic(&mut stream(9, Purpose::TrainingIc, i))).collect();
        let b: Vec<_> = (0..5).map(|i| sample_training_ic(&mut stream(9, Purpose::TrainingIc, i))).collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn unperturbed_ic_is_flat_stream() {
        let cfg = SweConfig::default();
        let topo = Topography::bump(&cfg).unwrap();
        let ic = IcParams::uniform(4.08, 2.5);
        let s = realize_ic(&ic, &cfg, &topo).unwrap();
        let flat = SweState::flat(&topo, ic.mean_level(), ic.mean_velocity()).unwrap();
        for j in 0..cfg.cells() {
            assert!((s.h[j] - flat.h[j]).abs() < 1e-14);
            assert!((s.hu[j] - flat.hu[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn free_surface_mean_is_ambient_level() {
        let cfg = SweConfig::default();
        let topo = Topography::bump(&cfg).unwrap();
        let mut rng = stream(3, Purpose::TrainingIc, 0);
        for _ in 0..20 {
            let ic = sample_training_ic(&mut rng);
            let s = realize_ic(&ic, &cfg, &topo).unwrap();
            let n = s.h.len() as f64;
            // midpoint sum of the free surface
            let mean: f64 = s.h.iter().zip(&topo.z).map(|(h, z)| h + z).sum::<f64>() / n;
            assert!((mean - ic.mean_level()).abs() < 1e-12, "{mean}");
            for (j, (h, hu)) in s.h.iter().zip(&s.hu).enumerate() {
                let x = cfg.cell_center(j);
                let u = 2.5 + ic.d * 2.5 * (TAU * f64::from(ic.p) * x / cfg.L + ic.omega2).sin();
                assert!((hu - h * u).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn first_mode_peaks_at_quarter_domain() {
        let cfg = SweConfig {
            topo_height: 0.0,
            ..SweConfig::default()
        };
        let topo = Topography::bump(&cfg).unwrap();
        let mut ic = IcParams::uniform(4.0, 2.5);
        ic.a = 0.05;
        let s = realize_ic(&ic, &cfg, &topo).unwrap();
        let (jmax, _) = s
            .h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((cfg.cell_center(jmax) - cfg.L / 4.0).abs() <= cfg.dx / 2.0 + 1e-12);
    }

    #[test]
    fn dry_ic_is_reported() {
        let cfg = SweConfig::default();
        let topo = Topography::bump(&cfg).unwrap();
        assert!(matches!(
            realize_ic(&IcParams::uniform(0.3, 2.5), &cfg, &topo),
            Err(Error::DryCell { .. })
        ));
    }

    #[test]
    fn training_set_layout_and_determinism() {
        let cfg = coarse();
        let topo = Topography::bump(&cfg).unwrap();
        let ds = build_training_set(3, &cfg, &topo, 11, Exec::Parallel).unwrap();
        assert_eq!(ds.columns(), 3 * 301);
        assert_eq!(ds.starts(), &[0, 301, 602]);
        assert!(ds.frames().iter().all(|v| v.is_finite()));
        let seq = build_training_set(3, &cfg, &topo, 11, Exec::Sequential).unwrap();
        assert_eq!(ds, seq);
        // each segment starts from its own IC
        let t1 = ds.trajectory(1);
        assert_eq!(t1.len(), 301);
        let ic = realize_ic(&ds.params()[1], &cfg, &topo).unwrap();
        assert_eq!(t1.frame(0), ic.flatten().as_slice());

        let single = build_training_set(1, &cfg, &topo, 11, Exec::Sequential).unwrap();
        assert_eq!(single.starts(), &[0]);
        assert_eq!(single.frames(), &ds.frames()[..301 * ds.dim()]);
    }

    #[test]
    fn manifest_lists_offsets() {
        let cfg = coarse();
        let topo = Topography::bump(&cfg).unwrap();
        let ds = build_training_set(2, &cfg, &topo, 4, Exec::Sequential).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        ds.write_manifest(&path, Some("abc")).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# M=2 seed=4 columns=602"));
        assert_eq!(lines[1], "# config_hash=abc");
        assert_eq!(lines.len(), 5);
        assert!(lines[3].starts_with("0,0x0000000100000000,0,"));
        assert!(lines[4].starts_with("1,0x0000000100000001,301,"));
    }

    #[test]
    fn transfer_set_has_twenty_pairs_and_refuses_reference() {
        let cfg = coarse();
        let topo = Topography::bump(&cfg).unwrap();
        let suites = TestSuiteSpec::default_suites();
        let (ic, traj) = build_transfer_set(&suites[4], &cfg, &topo, 1).unwrap();
        assert_eq!(traj.len(), 21);
        assert!((ic.mean_velocity() - 2.75).abs() < 1e-12);
        assert!(matches!(
            build_transfer_set(&suites[0], &cfg, &topo, 1),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn test_suite_shares_initial_snapshots() {
        use crate::esn::EsnConfig;
        use nalgebra::DMatrix;

        let cfg = coarse();
        let topo = Topography::bump(&cfg).unwrap();
        let n = 2 * cfg.cells();
        let mut model = EsnModel::build(EsnConfig {
            reservoir_dim: 40,
            io_dim: n,
            density: 0.1,
            ..EsnConfig::default()
        })
        .unwrap();
        model.set_w_out(DMatrix::zeros(n, 40)).unwrap();
        let mut other = model.clone();
        other.set_w_out(DMatrix::from_element(n, 40, 1e-3)).unwrap();

        let suite = TestSuiteSpec::new("TEST_2", 3, 4.0, 2.625);
        let branches = [(TransferRate::Skip, &model), (TransferRate::Rate(0.01), &other)];
        let run = build_test_suite(&suite, &branches, &cfg, &topo, 5, 3.0, Exec::Parallel).unwrap();
        assert_eq!(run.truth.len(), 3);
        assert_eq!(run.predictions.len(), 2);
        for (_, preds) in &run.predictions {
            assert_eq!(preds.len(), 3);
            for (p, t) in preds.iter().zip(&run.truth) {
                assert_eq!(p.len(), 31);
                assert_eq!(p.frame(0), t.frame(0));
                assert_eq!(p.times(), t.times());
            }
        }
        // zero readout forecasts zeros after the first frame
        assert!(run.predictions[0].1[0].frame(1).iter().all(|&v| v == 0.0));
        let again = build_test_suite(&suite, &branches, &cfg, &topo, 5, 3.0, Exec::Sequential).unwrap();
        assert_eq!(again.truth, run.truth);
        assert_eq!(again.predictions[1].1, run.predictions[1].1);
    }
}
