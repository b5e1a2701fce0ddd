use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cidn_sprt::harness::{emit_csv, run_experiment, ExperimentConfig, ExperimentId};
use cidn_sprt::Error;

/// Monte Carlo sweeps of sequential feedback aggregation in a simulated
/// collaborative intrusion detection network. Results are written as CSV.
#[derive(Parser, Debug)]
#[command(name = "cidn-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Peer FP/FN rates against expertise
    Fig2(Opts),
    /// Peer FP/FN rates against the peer decision threshold
    Fig3(Opts),
    /// Average cost of the three aggregation schemes against the peer decision threshold
    Fig4(Opts),
    /// Average cost of the three aggregation schemes against the miss cost
    Fig5(Opts),
    /// Sequential test FP/TP rates against a forced number of consultations
    Fig6(Opts),
    /// Consultations needed to reach the target rates, simulated and predicted
    Fig7(Opts),
    /// Every experiment; with --out, one <name>.csv per experiment in that directory
    All(Opts),
}

#[derive(Args, Debug)]
struct Opts {
    /// `key = value` configuration file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    replications: Option<usize>,
    /// Output file (a directory for `all`); standard output when absent
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cidn-sim: {e}");
            ExitCode::from(match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn run(command: Command) -> cidn_sprt::Result<()> {
    let (ids, opts): (Vec<ExperimentId>, Opts) = match command {
        Command::Fig2(o) => (vec![ExperimentId::Fig2], o),
        Command::Fig3(o) => (vec![ExperimentId::Fig3], o),
        Command::Fig4(o) => (vec![ExperimentId::Fig4], o),
        Command::Fig5(o) => (vec![ExperimentId::Fig5], o),
        Command::Fig6(o) => (vec![ExperimentId::Fig6], o),
        Command::Fig7(o) => (vec![ExperimentId::Fig7], o),
        Command::All(o) => (ExperimentId::ALL.to_vec(), o),
    };
    let config = load_config(&opts)?;
    let all = ids.len() > 1;

    if all {
        if let Some(dir) = &opts.out {
            fs::create_dir_all(dir)?;
        }
    }
    let mut stdout_used = false;
    for id in ids {
        let rows = run_experiment(id, &config)?;
        let mut csv = Vec::new();
        emit_csv(&rows, &mut csv)?;
        match &opts.out {
            Some(dir) if all => write_file(&dir.join(format!("{id}.csv")), &csv)?,
            Some(path) => write_file(path, &csv)?,
            None => {
                let mut out = io::stdout().lock();
                if stdout_used {
                    out.write_all(b"\n")?;
                }
                out.write_all(&csv)?;
                out.flush()?;
                stdout_used = true;
            }
        }
    }
    Ok(())
}

fn load_config(opts: &Opts) -> cidn_sprt::Result<ExperimentConfig> {
    let mut config = match &opts.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(n) = opts.replications {
        config.replications = n;
    }
    config.validate()?;
    Ok(config)
}

fn write_file(path: &Path, bytes: &[u8]) -> cidn_sprt::Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
