use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermalsim::experiments::{list_experiments, run, ConfigSources, RunError, RunOptions};

#[derive(Parser, Debug)]
#[command(
    name = "thermalsim",
    version,
    about = "Run thermal-interpretation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment from a JSON config.
    Run(RunArgs),
    /// List the available experiments.
    List,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Config file (alternatively `--config`).
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// `key=value` pairs; keys are dotted paths, relative to `parameters`
    /// unless they name a top-level field.
    #[arg(long, num_args = 1.., value_name = "K=V")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the engines; defaults to available parallelism.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4096))]
    threads: Option<u64>,
    /// Write per-run trajectories where an experiment supports it.
    #[arg(long)]
    debug_dump: bool,
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn execute(args: RunArgs) -> Result<(), RunError> {
    let path = args.path.or(args.config).ok_or_else(|| RunError::Config {
        key: "config".into(),
        message: "no config file given".into(),
    })?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| RunError::Runtime {
                message: e.to_string(),
            })?;
    }
    let options = RunOptions {
        sources: ConfigSources {
            overrides: args.overrides,
            seed: args.seed,
            env_seed: std::env::var("THERMALSIM_SEED").ok(),
            output_dir: args.out,
        },
        debug_dump: args.debug_dump,
    };
    let manifest = run(&path, &options)?;
    for w in &manifest.warnings {
        eprintln!("{}", serde_json::json!({ "warning": w }));
    }
    println!(
        "{}",
        manifest
            .artifact_paths
            .last()
            .map(String::as_str)
            .unwrap_or("")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.to_string();
            let line = detail
                .lines()
                .next()
                .unwrap_or(&message)
                .trim_start_matches("error: ");
            return fail(&RunError::Config {
                key: "arguments".into(),
                message: line.to_string(),
            });
        }
    };
    match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
    }
}
