use aptransport::experiments::{run_file, ExperimentConfig, Kind};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(version, about = "Transport toy models: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment(s) described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output` key.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent runs.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// List the experiment kinds.
    ListKinds,
    /// Print the full default config of a kind.
    PrintDefaults { kind: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, workers } => run_file(&config, out.as_deref(), workers).map(|done| {
            for (dir, m) in done {
                println!(
                    "{}: {} files in {:.2} s",
                    dir.display(),
                    m.outputs.len() + 1,
                    m.wall_time_s
                );
            }
        }),
        Command::ListKinds => {
            let mut out = std::io::stdout().lock();
            for k in Kind::ALL {
                // A closed pipe is not an error worth reporting.
                let _ = writeln!(out, "{:<20} {}", k.name(), k.describe());
            }
            Ok(())
        }
        Command::PrintDefaults { kind } => Kind::parse(&kind).map(|k| {
            let d = ExperimentConfig::defaults(k);
            let _ = writeln!(
                std::io::stdout(),
                "{}",
                serde_json::to_string_pretty(&d).expect("defaults serialize")
            );
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
