use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mpdlab::config::{parse_config, parse_override};
use mpdlab::experiment::{error_payload, run, Command, RunOptions};
use mpdlab::Error;

/// Marked length spectrum and Poincare-determinant experiments.
#[derive(Parser, Debug)]
#[command(name = "mpdlab", version)]
struct Cli {
    /// One of: spectrum, mpd, kappa, entropy, xray, derivative-check,
    /// hessian-check, validate, export.
    command: String,

    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Override a config field by dotted path, e.g. numerics.ode_step=2e-3.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory (default: config output_dir, then $MPDLAB_OUT).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write CSV tables.
    #[arg(long)]
    csv: bool,
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    let command: Command = cli.command.parse()?;
    let overrides = cli.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let config = parse_config(&cli.config, &overrides)?;
    let opts = RunOptions {
        out_dir: cli.out.clone(),
        csv: cli.csv,
    };
    let out = run(command, &config, &opts)?;
    for f in &out.files {
        eprintln!("wrote {}", f.display());
    }
    println!("{}", serde_json::to_string_pretty(&out.envelope.payload)?);
    Ok(out.envelope.success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            println!("{}", error_payload(&e, Some(&cli.command)));
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
