use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cope_cli::commands::{self, AblateArgs, EvalArgs, RunArgs};
use cope_cli::CliResult;

#[derive(Parser)]
#[command(
    name = "cope",
    about = "Online continual learning with continually evolving class prototypes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigSource {
    /// Built-in preset name (see `cope config dump-defaults` for the shape).
    #[arg(long)]
    preset: Option<String>,
    /// Path to a JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. --override learner.learning_rate=0.01
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run seeds 0..N instead of the config's seed list.
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads for parallel runs (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results.json + CSV tables.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Save the final learner state to this checkpoint file.
        #[arg(long)]
        checkpoint_out: Option<PathBuf>,
        /// Capture the checkpoint after this many stream batches instead.
        #[arg(long)]
        checkpoint_at: Option<u64>,
    },
    /// Sweep one ablation axis and write a CSV table.
    Ablate {
        /// momentum | ppp-terms | pseudo-proto | batch-size | buffer-size
        axis: String,
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate a saved checkpoint on the configured evaluation split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Configuration helpers.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the fully explicit default configuration.
    DumpDefaults,
}

fn init_jobs(jobs: Option<usize>) -> CliResult<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| cope_cli::CliError::config(format!("--jobs: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if jobs.is_some() {
        eprintln!("note: built without the 'parallel' feature; --jobs is ignored");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            source,
            out_dir,
            checkpoint_out,
            checkpoint_at,
        } => {
            init_jobs(source.jobs)?;
            let config = commands::resolve_config(
                source.preset.as_deref(),
                source.config.as_deref(),
                &source.overrides,
                source.seeds,
            )?;
            commands::cmd_run(&RunArgs {
                config,
                out_dir,
                checkpoint_out,
                checkpoint_at,
                quiet: false,
            })?;
            Ok(())
        }
        Command::Ablate {
            axis,
            source,
            out_dir,
        } => {
            init_jobs(source.jobs)?;
            let config = commands::resolve_config(
                source.preset.as_deref(),
                source.config.as_deref(),
                &source.overrides,
                source.seeds,
            )?;
            commands::cmd_ablate(&AblateArgs {
                axis,
                config,
                out_dir,
                quiet: false,
            })?;
            Ok(())
        }
        Command::Eval {
            checkpoint,
            source,
            out_dir,
        } => {
            init_jobs(source.jobs)?;
            let config = commands::resolve_config(
                source.preset.as_deref(),
                source.config.as_deref(),
                &source.overrides,
                source.seeds,
            )?;
            commands::cmd_eval(&EvalArgs {
                checkpoint,
                config,
                out_dir,
                quiet: false,
            })?;
            Ok(())
        }
        Command::Config { action } => match action {
            ConfigAction::DumpDefaults => commands::cmd_dump_defaults(&mut std::io::stdout()),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(u8::try_from(e.code).unwrap_or(1))
        }
    }
}
