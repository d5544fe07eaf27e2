use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use log::{error, info};

use tricomi_lab::commands::{execute, exit_code, Command};
use tricomi_lab::config::{config_hash, parse_config, RunConfig};
use tricomi_lab::persist::{persist_run, verify_manifest};
use tricomi_lab::Error;

/// Default output root when neither `--out` nor `io.out_dir` is given.
const OUT_ENV: &str = "TRICOMI_OUT";

#[derive(Parser)]
#[command(name = "tricomi", version, about = "Generalized Tricomi equation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `io.out_dir` and $TRICOMI_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Critical exponents and lifespan law for (n, l, p).
    Exponents,
    /// Evaluate the representation formula on a grid.
    SolveLinear,
    /// Finite-difference run with blow-up detection.
    SolveNonlinear,
    /// Check the characteristic functional against its data bound.
    FunctionalCheck,
    /// Lifespan against epsilon, with a log-log fit.
    LifespanSweep,
    /// Blow-up points of the comparison ODE.
    ComparisonOde,
    /// Special-function identities.
    #[command(hide = true)]
    SfSelftest,
    /// Recompute the digests of a finished run.
    Verify,
}

fn to_command(c: Cmd) -> Option<Command> {
    Some(match c {
        Cmd::Exponents => Command::Exponents,
        Cmd::SolveLinear => Command::SolveLinear,
        Cmd::SolveNonlinear => Command::SolveNonlinear,
        Cmd::FunctionalCheck => Command::FunctionalCheck,
        Cmd::LifespanSweep => Command::LifespanSweep,
        Cmd::ComparisonOde => Command::ComparisonOde,
        Cmd::SfSelftest => Command::SfSelftest,
        Cmd::Verify => return None,
    })
}

fn load(path: Option<&PathBuf>, command: Command) -> Result<RunConfig, Error> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.display().to_string(),
                source: e,
            })?;
            parse_config(&text)
        }
        None if command == Command::SfSelftest => parse_config("{}"),
        None => Err(Error::Config(vec![tricomi_lab::FieldError {
            path: "--config".into(),
            message: format!("`{}` needs a config file", command.name()),
        }])),
    }
}

fn out_dir(cli: &Cli, config: Option<&RunConfig>, name: &str) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.and_then(|c| c.io.out_dir.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(|root| PathBuf::from(root).join(name)))
        .unwrap_or_else(|| PathBuf::from("tricomi-out").join(name))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("could not set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    let Some(command) = to_command(cli.command) else {
        let dir = out_dir(&cli, None, "");
        return match verify_manifest(&dir) {
            Ok(report) if report.ok() => {
                println!("{} outputs verified in {}", report.checked, dir.display());
                ExitCode::SUCCESS
            }
            Ok(report) => {
                println!("digest mismatch: {}", report.mismatches.join(", "));
                ExitCode::from(3)
            }
            Err(e) => {
                error!("{e}");
                ExitCode::from(exit_code(&e) as u8)
            }
        };
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).ok();
    let result = load(cli.config.as_ref(), command).and_then(|config| {
        let output = execute(command, &config)?;
        let dir = out_dir(&cli, Some(&config), command.name());
        persist_run(&output.artifacts, command.name(), &config_hash(&config), started, &dir)?;
        info!("wrote {} artifacts to {}", output.artifacts.len(), dir.display());
        Ok(output)
    });
    match result {
        Ok(output) => {
            println!("{}", output.summary);
            if output.inconclusive {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
