use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::datasets::{TestSuiteSpec, SAMPLE_DT, TEST_HORIZON, TRAINING_HORIZON};
use crate::esn::{EsnConfig, TransferRate};
use crate::swe::SweConfig;
use crate::{Error, Result};

/// Ridge parameter of the desk preset, calibrated on TEST_0.
pub const DESK_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Full-size study: 400 cells, `D = 5000`, 50 training trajectories.
    #[default]
    Full,
    /// Small configuration that runs end to end in minutes.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Preset::Full),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::Config(format!("unknown preset {s:?} (expected full or desk)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Full => "full",
            Preset::Desk => "desk",
        })
    }
}

/// Everything a run depends on. Loaded from TOML on top of a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Seed of all initial-condition streams. The reservoir uses `esn.seed`.
    pub seed: u64,
    /// Number of training trajectories.
    #[serde(rename = "M")]
    pub m: usize,
    /// Transfer rate used by `transfer` and as the middle branch of `evaluate`.
    pub alpha: TransferRate,
    /// Length of every test trajectory.
    pub horizon: f64,
    pub output_dir: PathBuf,
    pub swe: SweConfig,
    pub esn: EsnConfig,
    pub suites: Vec<TestSuiteSpec>,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut suites = TestSuiteSpec::default_suites();
        match preset {
            Preset::Full => Self {
                preset,
                seed: 0,
                m: 50,
                alpha: TransferRate::Rate(0.01),
                horizon: TEST_HORIZON,
                output_dir: PathBuf::from("runs/full"),
                swe: SweConfig::default(),
                esn: EsnConfig::default(),
                suites,
            },
            Preset::Desk => {
                suites.iter_mut().for_each(|s| s.j = 5);
                let swe = SweConfig {
                    dx: 0.4,
                    ..SweConfig::default()
                };
                Self {
                    preset,
                    seed: 0,
                    m: 10,
                    alpha: TransferRate::Rate(0.01),
                    horizon: TRAINING_HORIZON,
                    output_dir: PathBuf::from("runs/desk"),
                    esn: EsnConfig {
                        reservoir_dim: 1000,
                        io_dim: 2 * swe.cells(),
                        // TEST_0 argmin over decades 1e-10..1e-5
                        lambda: DESK_LAMBDA,
                        ..EsnConfig::default()
                    },
                    swe,
                    suites,
                }
            }
        }
    }

    /// Resolve a configuration: preset (explicit, from the file's `preset`
    /// key, or `full`), then the file's keys, then `key.path=value`
    /// overrides whose values are TOML literals.
    pub fn load(path: Option<&Path>, preset: Option<Preset>, overrides: &[String]) -> Result<Self> {
        let mut user = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let preset = match (preset, user.get("preset")) {
            (Some(p), _) => p,
            (None, Some(Value::String(s))) => s.parse()?,
            (None, Some(v)) => return Err(Error::Config(format!("preset must be a string, got {v}"))),
            (None, None) => Preset::default(),
        };
        user.insert("preset".into(), Value::String(preset.to_string()));
        let mut base = Table::try_from(Self::preset(preset)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, user);
        let cfg: Self = Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.swe.validate()?;
        self.esn.validate()?;
        let n = 2 * self.swe.cells();
        if self.esn.io_dim != n {
            return Err(Error::Config(format!(
                "esn.N = {} must equal twice the number of cells ({n})",
                self.esn.io_dim
            )));
        }
        if self.m == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        let samples = self.horizon / SAMPLE_DT;
        if !(self.horizon > 0.0) || (samples - samples.round()).abs() > 1e-9 * samples {
            return Err(Error::Config(format!(
                "horizon {} must be a positive multiple of {SAMPLE_DT}",
                self.horizon
            )));
        }
        self.swe.steps_per_sample(SAMPLE_DT)?;
        for (i, s) in self.suites.iter().enumerate() {
            s.validate()?;
            if self.suites[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::Config(format!("duplicate suite name {}", s.name)));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of everything except `output_dir`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn suite(&self, name: &str) -> Result<&TestSuiteSpec> {
        self.suites
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("no suite named {name:?}")))
    }

    /// Rates evaluated for `suite`: its own list, or `{0, alpha, ∞}`. The
    /// reference suite only runs the untouched readout.
    pub fn rates_for(&self, suite: &TestSuiteSpec) -> Vec<TransferRate> {
        if !suite.is_shifted() {
            return vec![TransferRate::Skip];
        }
        if !suite.alpha_values.is_empty() {
            return suite.alpha_values.clone();
        }
        let mut rates = vec![TransferRate::Rate(0.0), self.alpha, TransferRate::Skip];
        rates.dedup();
        rates
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_override(table: &mut Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value = parse_literal(raw.trim());
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty key in {spec:?}")))?;
    let mut t = table;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{p} is not a table in {spec:?}")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// A TOML literal if it parses as one, otherwise a bare string.
fn parse_literal(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        let full = ExperimentConfig::preset(Preset::Full);
        full.validate().unwrap();
        assert_eq!((full.swe.cells(), full.esn.reservoir_dim, full.esn.io_dim), (400, 5000, 800));
        assert_eq!(full.m, 50);
        assert!(full.suites.iter().all(|s| s.j == 20));
        assert_eq!(full.horizon, 60.0);
        assert_eq!(
            full.rates_for(&full.suites[4]),
            vec![TransferRate::Rate(0.0), TransferRate::Rate(0.01), TransferRate::Skip]
        );
        assert_eq!(full.rates_for(&full.suites[0]), vec![TransferRate::Skip]);

        let desk = ExperimentConfig::preset(Preset::Desk);
        desk.validate().unwrap();
        assert_eq!((desk.swe.cells(), desk.esn.reservoir_dim, desk.esn.io_dim), (100, 1000, 200));
        assert_eq!((desk.m, desk.horizon), (10, 30.0));
        assert_eq!((full.esn.lambda, desk.esn.lambda), (1e-6, 1e-8));
        assert!(desk.suites.iter().all(|s| s.j == 5));
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let c = ExperimentConfig::preset(Preset::Desk);
        let back: ExperimentConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
        let mut moved = c.clone();
        moved.output_dir = "elsewhere".into();
        assert_eq!(moved.hash(), c.hash());
        let mut other = c.clone();
        other.seed = 1;
        assert_ne!(other.hash(), c.hash());
    }

    #[test]
    fn load_merges_file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "preset = \"desk\"\nM = 3\n[esn]\nlambda = 1e-4\n").unwrap();
        let c = ExperimentConfig::load(Some(&path), None, &["esn.D=64".into(), "alpha=inf".into()]).unwrap();
        assert_eq!(c.preset, Preset::Desk);
        assert_eq!(c.m, 3);
        assert_eq!(c.esn.lambda, 1e-4);
        assert_eq!(c.esn.reservoir_dim, 64);
        assert_eq!(c.esn.io_dim, 200);
        assert_eq!(c.alpha, TransferRate::Skip);
        assert_eq!(c.swe.dx, 0.4);

        let p = ExperimentConfig::load(None, Some(Preset::Full), &["output_dir=out/x".into()]).unwrap();
        assert_eq!(p.output_dir, PathBuf::from("out/x"));
        assert_eq!(p.esn.reservoir_dim, 5000);
    }

    #[test]
    fn load_rejects_bad_input() {
        assert!(ExperimentConfig::load(None, None, &["esn.bogus=1".into()]).is_err());
        assert!(ExperimentConfig::load(None, None, &["esn.N=10".into()]).is_err());
        assert!(ExperimentConfig::load(None, None, &["preset=\"huge\"".into()]).is_err());
        assert!(ExperimentConfig::load(None, None, &["horizon=0.05".into()]).is_err());
        assert!(ExperimentConfig::load(None, None, &["noequals".into()]).is_err());
        let missing = Path::new("/nonexistent/cfg.toml");
        assert!(matches!(ExperimentConfig::load(Some(missing), None, &[]), Err(Error::Io { .. })));
    }
}
