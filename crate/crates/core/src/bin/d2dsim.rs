//! Command-line driver: run, sweep, compare, oracle-check, and validate.
//!
//! Exit codes: 0 success, 2 configuration error, 3 learning failed to
//! converge within budget.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use d2dmm::config::{
    set_in_tree, to_tree, AssocAlgorithm, BeamStrategy, ExperimentConfig,
};
use d2dmm::experiment::{compare, monte_carlo, oracle_check, sweep};
use d2dmm::report::{write_outputs, Manifest, OutputFormat, RunOutput};
use d2dmm::{Error, Result};

#[derive(Parser)]
#[command(
    name = "d2dsim",
    version,
    about = "Monte Carlo simulator for content-centric D2D mmWave link initialization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment configuration (TOML).
    config: PathBuf,
    /// Override run.base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override run.trials.
    #[arg(long)]
    trials: Option<u64>,
    /// Override run.workers (0 = one thread per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for result files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Result encoding: csv or json.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write result tables.
    Run {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Re-run the experiment for each value of one dotted config key.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Dotted key to vary, e.g. channel.blockage_beta_per_m.
        #[arg(long)]
        param: String,
        /// Comma-separated values to substitute.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Cross-compare association algorithms and beamwidth strategies.
    Compare {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated association algorithms: hpa,daa,mda,rpa.
        #[arg(long, value_delimiter = ',')]
        assoc: Vec<String>,
        /// Comma-separated beam strategies: lll, cbws:<deg>, rbws, exhaustive.
        #[arg(long, value_delimiter = ',')]
        beam: Vec<String>,
    },
    /// Solve each trial's first-frame game by learning and brute force and
    /// report how often learning finds the optimum.
    OracleCheck {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Parse and validate a configuration, then exit.
    Validate {
        /// Experiment configuration (TOML).
        config: PathBuf,
    },
}

fn read_config_text(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// The configured tree with CLI overrides folded in.
fn load_tree(common: &CommonOpts) -> Result<toml::Value> {
    let mut tree = to_tree(&read_config_text(&common.config)?)?;
    if let Some(seed) = common.seed {
        set_in_tree(&mut tree, "run.base_seed", toml::Value::Integer(seed as i64))?;
    }
    if let Some(trials) = common.trials {
        set_in_tree(&mut tree, "run.trials", toml::Value::Integer(trials as i64))?;
    }
    if let Some(workers) = common.workers {
        set_in_tree(&mut tree, "run.workers", toml::Value::Integer(workers as i64))?;
    }
    Ok(tree)
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig> {
    let tree = load_tree(common)?;
    let text =
        toml::to_string(&tree).map_err(|e| Error::Config(format!("reserialize: {e}")))?;
    ExperimentConfig::from_toml_str(&text)
}

fn manifest_for(cfg: &ExperimentConfig, outputs: &[RunOutput]) -> Manifest {
    Manifest {
        config_hash: cfg.canonical_hash(),
        base_seed: cfg.run.base_seed,
        trials: cfg.run.trials,
        workers: cfg.run.workers,
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        experiments: outputs.iter().map(|o| o.experiment.clone()).collect(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

fn finish(cfg: &ExperimentConfig, common: &CommonOpts, outputs: Vec<RunOutput>) -> Result<()> {
    let manifest = manifest_for(cfg, &outputs);
    let written = write_outputs(&common.out, &outputs, &manifest, common.format)?;
    for out in &outputs {
        let agg = &out.aggregate;
        println!(
            "{}: trials={} mean_throughput={:.6} delivered_segments={:.1} d2d_bits={:.3e} cellular_bits={:.3e}",
            out.experiment,
            agg.trials,
            agg.mean_throughput.mean,
            agg.delivered_segments.mean,
            agg.d2d_bits.mean,
            agg.cellular_bits.mean,
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common } => {
            let cfg = load_config(&common)?;
            let output = monte_carlo(&cfg, "run")?;
            finish(&cfg, &common, vec![output])
        }
        Command::Sweep { common, param, values } => {
            let tree = load_tree(&common)?;
            let outputs = sweep(&tree, &param, &values)?;
            // Manifest provenance reflects the base document the sweep varied.
            let cfg = load_config(&common)?;
            finish(&cfg, &common, outputs)
        }
        Command::Compare { common, assoc, beam } => {
            let cfg = load_config(&common)?;
            let assoc: Vec<AssocAlgorithm> =
                assoc.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            let beam: Vec<BeamStrategy> =
                beam.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            let outputs = compare(&cfg, &assoc, &beam)?;
            finish(&cfg, &common, outputs)
        }
        Command::OracleCheck { common } => {
            let cfg = load_config(&common)?;
            let report = oracle_check(&cfg)?;
            for row in &report.rows {
                println!(
                    "trial {}: theta={:.9} theta_star={:.9} iterations={} converged={} optimal={}",
                    row.trial, row.theta, row.theta_star, row.iterations, row.converged,
                    row.optimal,
                );
            }
            println!(
                "optimal {:.1}% converged {:.1}% over {} games",
                100.0 * report.optimal_fraction,
                100.0 * report.converged_fraction,
                report.rows.len(),
            );
            std::fs::create_dir_all(&common.out)?;
            let path = common.out.join("oracle.json");
            let body = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            std::fs::write(&path, body + "\n")?;
            println!("wrote {}", path.display());
            if report.converged_fraction < 1.0 {
                return Err(Error::NonConvergence(format!(
                    "{:.1}% of games converged within budget",
                    100.0 * report.converged_fraction
                )));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!(
                "{} is valid (sha256 {})",
                config.display(),
                cfg.canonical_hash()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
