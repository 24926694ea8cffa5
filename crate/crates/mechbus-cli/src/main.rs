use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Simulate and schedule two-qubit gates on a mechanical-bus device.
#[derive(Parser)]
#[command(name = "mechbus", version, about)]
struct Cli {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for report.json / sweep.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Override the config's scenario.
    #[arg(long)]
    scenario: Option<String>,

    /// Seed recorded in the report (no scenario draws randomness today).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Print headline metrics to stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match mechbus_cli::run(&cli.config, &cli.out, cli.scenario.as_deref(), cli.seed) {
        Ok(outcome) => {
            if cli.verbose {
                for line in &outcome.summary {
                    eprintln!("{line}");
                }
            }
            println!("wrote {}", outcome.report_path.display());
            if let Some(p) = outcome.sweep_path {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let payload = serde_json::json!({
                "error": {
                    "kind": e.kind(),
                    "message": e.to_string(),
                    "exit_code": e.exit_code(),
                }
            });
            eprintln!("{payload}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
