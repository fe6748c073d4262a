use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use kerrsense::config::parse_config;
use kerrsense::runner;

/// Batch front-end for the Kerr-resonator critical-sensing toolkit.
#[derive(Parser)]
#[command(name = "kerrsense", version, about)]
struct Cli {
    /// Command to run; must match the `command` key in the config file.
    command: String,
    /// Path to a `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker-thread count (0 = default).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (defaults to the config key, then $KERRSENSE_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            for file in &summary.files {
                println!("wrote {}", file.display());
            }
            if summary.point_failures > 0 {
                println!("{} point(s) failed; see errors.csv", summary.point_failures);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{{\"error\":{{\"kind\":\"{}\",\"message\":\"{}\"}}}}",
                e.kind(),
                escape_json(&e.to_string())
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> kerrsense::Result<runner::RunSummary> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        kerrsense::Error::InvalidParameter(format!("cannot read {}: {e}", cli.config.display()))
    })?;
    let mut config = parse_config(&text)?;
    let cli_command: kerrsense::Command = cli.command.parse()?;
    if cli_command != config.command {
        return Err(kerrsense::Error::InvalidParameter(format!(
            "command line says `{cli_command}` but the config says `{}`",
            config.command
        )));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if let Some(out) = cli.out {
        config.output_dir = Some(out);
    }
    runner::run(&config)
}

fn escape_json(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            '"' => "\\\"".chars().collect::<Vec<_>>(),
            '\\' => "\\\\".chars().collect(),
            '\n' => "\\n".chars().collect(),
            _ => vec![c],
        })
        .collect()
}
