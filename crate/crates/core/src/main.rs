use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tbma::experiment::{self, parse_config, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(author, version, about = "TBMA/MFSK over-the-air federated learning experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Overrides `output_dir` from the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads for grid points (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the training sweep and write metrics.csv and accuracy_vs_snr.svg.
    Run { config: PathBuf },
    /// Measure the PAPR of both modulators and write papr.csv.
    Papr { config: PathBuf },
}

fn load(path: &Path, out_dir: &Option<PathBuf>) -> Result<ExperimentConfig, tbma::Error> {
    let mut config = parse_config(path)?;
    if let Some(dir) = out_dir {
        config.output_dir = dir.clone();
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match &args.command {
        Command::Run { config } => load(config, &args.out_dir).and_then(|c| {
            let outcome = experiment::run_experiment(&c, args.threads)?;
            let failed: Vec<_> = outcome.failures().collect();
            for t in &failed {
                let p = t.point;
                eprintln!(
                    "trial {} N={} snr={} seed={} failed: {}",
                    p.aggregation.as_str(),
                    p.n_levels,
                    p.snr_db,
                    p.seed,
                    t.error.as_deref().unwrap_or_default()
                );
            }
            println!(
                "{} trials, {} failed; results in {}",
                outcome.trials.len(),
                failed.len(),
                c.output_dir.display()
            );
            Ok(failed.is_empty())
        }),
        Command::Papr { config } => load(config, &args.out_dir).and_then(|c| {
            for row in experiment::papr_report(&c)? {
                println!("{:<5} {:>8.3} dB over {} symbols", row.scheme, row.papr_db, row.n_symbols);
            }
            Ok(true)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
