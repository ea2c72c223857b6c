use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swe_esn::datasets::{IcParams, TRAINING_HORIZON};
use swe_esn::harness::{self, ExperimentConfig, Preset};
use swe_esn::{Error, Exec, Result};

/// Echo-state network surrogate for the 1D shallow-water equations.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file, layered on top of the preset.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Starting preset: full or desk.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Override any key, e.g. `--set esn.lambda=1e-4 --set M=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed for initial conditions and the reservoir.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Disable data parallelism.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one initial condition and write its trajectory CSV.
    Simulate {
        #[arg(long, default_value_t = 4.0)]
        h_mean: f64,
        #[arg(long, default_value_t = 2.5)]
        u_mean: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 0.0)]
        omega1: f64,
        #[arg(long, default_value_t = 0.0)]
        omega2: f64,
        #[arg(long, default_value_t = TRAINING_HORIZON)]
        t_end: f64,
        /// Output file (default `<output_dir>/simulate.csv`).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Generate the training trajectories and their manifest.
    GenData,
    /// Train the source model.
    Train,
    /// Correct a trained readout for one suite at the configured alpha.
    Transfer {
        #[arg(long)]
        suite: String,
        /// Transfer rate (`inf` keeps the readout).
        #[arg(long)]
        alpha: Option<String>,
        /// Source model (default `<output_dir>/model.bin`).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write suite error curves for alpha in {0, alpha, inf}.
    Evaluate {
        /// Suites to run (default: all).
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Time DNS against ESN prediction on one test trajectory.
    Bench {
        #[arg(long, default_value = "TEST_4")]
        suite: String,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn load(common: &Common, extra: &[String]) -> Result<ExperimentConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
        overrides.push(format!("esn.seed={seed}"));
    }
    if let Some(dir) = &common.output_dir {
        let dir = dir.to_str().ok_or_else(|| Error::Config("output dir is not UTF-8".into()))?;
        overrides.push(format!("output_dir={}", toml::Value::String(dir.into())));
    }
    overrides.extend_from_slice(extra);
    ExperimentConfig::load(common.config.as_deref(), common.preset, &overrides)
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.common.sequential { Exec::Sequential } else { Exec::Parallel };
    let c = &cli.common;
    match cli.cmd {
        Cmd::Simulate {
            h_mean,
            u_mean,
            a,
            d,
            k,
            p,
            omega1,
            omega2,
            t_end,
            out,
        } => {
            let cfg = load(c, &[])?;
            let ic = IcParams {
                a,
                d,
                k,
                p,
                omega1,
                omega2,
                ..IcParams::uniform(h_mean, u_mean)
            };
            let out = out.unwrap_or_else(|| cfg.output_dir.join("simulate.csv"));
            let traj = harness::cmd_simulate(&cfg, &ic, t_end, &out)?;
            println!("wrote {} snapshots to {}", traj.len(), out.display());
        }
        Cmd::GenData => {
            let cfg = load(c, &[])?;
            let ds = harness::cmd_gen_data(&cfg, exec)?;
            println!(
                "wrote {} trajectories ({} columns) to {}",
                ds.len(),
                ds.columns(),
                cfg.output_dir.join("data").display()
            );
        }
        Cmd::Train => {
            let cfg = load(c, &[])?;
            let (_, report) = harness::cmd_train(&cfg, exec)?;
            println!("{report}");
            println!("model {}", harness::model_path(&cfg).display());
        }
        Cmd::Transfer { suite, alpha, model } => {
            let extra: Vec<String> = alpha.map(|a| format!("alpha={}", quote_rate(&a))).into_iter().collect();
            let cfg = load(c, &extra)?;
            let model = model.unwrap_or_else(|| harness::model_path(&cfg));
            let (_, delta, out) = harness::cmd_transfer(&cfg, &model, &suite)?;
            println!("|dW| = {:.6e}", delta.norm());
            println!("model {}", out.display());
        }
        Cmd::Evaluate { suites, model } => {
            let cfg = load(c, &[])?;
            let model = model.unwrap_or_else(|| harness::model_path(&cfg));
            let curves = harness::cmd_evaluate(&cfg, &model, &suites, exec)?;
            println!("suite,alpha,mean_e_h,mean_e_hu,max");
            for curve in curves {
                let (h, hu) = curve.time_average();
                println!("{},{},{h:.6e},{hu:.6e},{:.6e}", curve.suite, curve.alpha, curve.max());
            }
        }
        Cmd::Bench { suite, model } => {
            let cfg = load(c, &[])?;
            let model = model.unwrap_or_else(|| harness::model_path(&cfg));
            println!("{}", harness::cmd_bench(&cfg, &model, &suite)?);
        }
    }
    Ok(())
}

/// `inf` and plain numbers are valid TOML; anything else is passed as a string
/// so the config loader reports it.
fn quote_rate(a: &str) -> String {
    if a.parse::<f64>().is_ok() || a == "inf" {
        a.to_string()
    } else {
        toml::Value::String(a.to_string()).to_string()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
