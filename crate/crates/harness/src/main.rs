use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rfm_harness::run::{self, Check};
use rfm_harness::{export_results, table, verify, ExperimentConfig, ResultRow};

#[derive(Parser)]
#[command(name = "rfm", version, about = "Random feature model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a configuration field, e.g. `--set train.m=512`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config, &self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate train and test datasets at every configured resolution.
    Generate(ConfigArgs),
    /// Train a model and record its test error.
    Train(ConfigArgs),
    /// Evaluate a saved model on the test set at one resolution.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Test resolution; the training resolution by default.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Evaluate a saved model across test resolutions.
    Transfer {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated resolutions; `sweep.transfer` by default.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<usize>,
    },
    /// Compose a saved model with itself and compare against later times.
    Semigroup {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<usize>,
        /// Largest composition count; `sweep.j_max` by default.
        #[arg(long)]
        j_max: Option<usize>,
    },
    /// Train nested models over feature counts.
    SweepM {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated feature counts; `sweep.m_values` by default.
        #[arg(long, value_delimiter = ',')]
        m_values: Vec<usize>,
    },
    /// Run the kernel self-checks and, given a config, the provenance checks.
    Verify {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Only check provenance.
        #[arg(long)]
        skip_kernel: bool,
    },
    /// Write the result table and plot data files.
    Export {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory; `<output_dir>/export` by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_rows(rows: &[ResultRow]) {
    for r in rows {
        let e = r.error.map_or_else(|| "-".to_string(), |e| format!("{e:.6}"));
        println!(
            "{:<10} K_train={:<4} K_test={:<4} m={:<5} n={:<5} j={} error={e} {:.1}s {}",
            r.kind.as_str(),
            r.k_train,
            r.k_test,
            r.m,
            r.n,
            r.horizon,
            r.wall_time_s,
            r.note
        );
    }
}

fn report(checks: &[Check]) -> bool {
    for c in checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(args) => {
            let cfg = args.load()?;
            for p in run::generate_dataset(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Train(args) => {
            let cfg = args.load()?;
            let (path, row) = run::run_training(&cfg)?;
            println!("model {}", path.display());
            print_rows(&[row]);
        }
        Command::Eval { cfg, model, resolution } => {
            let cfg = cfg.load()?;
            let model = model.unwrap_or_else(|| run::model_path(&cfg));
            let row = run::run_eval(&cfg, &model, resolution.unwrap_or(cfg.train.resolution))?;
            print_rows(&[row]);
        }
        Command::Transfer { cfg, model, resolutions } => {
            let cfg = cfg.load()?;
            let model = model.unwrap_or_else(|| run::model_path(&cfg));
            let ks = if resolutions.is_empty() { cfg.sweep.transfer.clone() } else { resolutions };
            print_rows(&run::run_mesh_transfer(&cfg, &model, &ks)?);
        }
        Command::Semigroup {
            cfg,
            model,
            resolution,
            j_max,
        } => {
            let cfg = cfg.load()?;
            let model = model.unwrap_or_else(|| run::model_path(&cfg));
            let k = resolution.unwrap_or(cfg.train.resolution);
            print_rows(&run::run_semigroup_experiment(&cfg, &model, k, j_max.unwrap_or(cfg.sweep.j_max))?);
        }
        Command::SweepM { cfg, m_values } => {
            let cfg = cfg.load()?;
            let ms = if m_values.is_empty() { cfg.sweep.m_values.clone() } else { m_values };
            print_rows(&run::run_sweep_m(&cfg, &ms)?);
        }
        Command::Verify {
            config,
            overrides,
            skip_kernel,
        } => {
            let mut checks = Vec::new();
            let cfg = config.map(|c| ExperimentConfig::load(&c, &overrides)).transpose()?;
            if !skip_kernel {
                let modes = cfg.as_ref().map_or(rfm_core::kernel_lab::DEFAULT_MODES, |c| c.brownian_bridge.modes);
                checks.extend(verify::kernel_lab_checks(modes)?);
            }
            if let Some(cfg) = &cfg {
                checks.extend(run::verify_provenance(cfg)?);
            }
            return Ok(report(&checks));
        }
        Command::Export { cfg, out } => {
            let cfg = cfg.load()?;
            let rows = table::ResultTable::new(cfg.output_dir.join("results.csv"))
                .read()
                .context("reading the result table")?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join("export"));
            for p in export_results(&rows, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(true)
}
