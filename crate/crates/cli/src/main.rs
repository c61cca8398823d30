use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use mackey::KernelForm;
use mackey_cli::commands::{self, parse_form, Outcome};
use mackey_cli::config::{ExperimentConfig, DEFAULT_SEED, DEFAULT_TRIALS};
use mackey_cli::error::{CliError, CliResult};
use mackey_cli::json;
use mackey_cli::verify::VerifyOptions;

#[derive(Parser)]
#[command(name = "mackey", version, about = "Equivariant kernel solver and verifier for finite groups")]
struct Cli {
    /// Emit JSON reports. This is the only output format.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a kernel basis and print it.
    Basis {
        #[arg(long)]
        config: PathBuf,
        /// Kernel form to print: d, c or g.
        #[arg(long, default_value = "d", value_parser = parse_form)]
        form: KernelForm,
        #[command(flatten)]
        output: Output,
    },
    /// Run the verification suite on one config.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Perturb the layer kernels by noise of this relative size.
        #[arg(long)]
        inject_noise: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the solver against the dense intertwiner oracle.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// List the catalog groups, subgroups and standard configs.
    Catalog {
        #[command(flatten)]
        output: Output,
    },
    /// Run every catalog check and verify every standard config.
    Selftest {
        /// Extra configs to verify alongside the standard ones.
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

fn load(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn emit(outcome: &Outcome, output: &Output) -> CliResult<()> {
    let text = json::render(&outcome.report);
    match &output.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            info!("report written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    let (outcome, output) = match cli.command {
        Command::Basis { config, form, output } => (commands::cmd_basis(&load(&config)?, form)?, output),
        Command::Verify { config, trials, seed, tol, inject_noise, output } => {
            let cfg = load(&config)?;
            let r = cfg.resolve()?;
            let mut opts = VerifyOptions::from_resolved(&r);
            opts.trials = trials.unwrap_or(opts.trials);
            opts.seed = seed.unwrap_or(opts.seed);
            opts.tol = tol.unwrap_or(opts.tol);
            opts.inject_noise = inject_noise;
            debug!("verify options: {opts:?}");
            (commands::cmd_verify(&cfg, &opts)?, output)
        }
        Command::Oracle { config, output } => (commands::cmd_oracle(&load(&config)?)?, output),
        Command::Catalog { output } => (commands::cmd_catalog()?, output),
        Command::Selftest { configs, trials, seed, output } => {
            let extra = configs
                .iter()
                .map(|p| Ok((p.display().to_string(), load(p)?)))
                .collect::<CliResult<Vec<_>>>()?;
            (commands::cmd_selftest(&extra, trials, seed)?, output)
        }
    };
    emit(&outcome, &output)?;
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
