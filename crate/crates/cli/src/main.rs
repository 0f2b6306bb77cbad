// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dressed_lasing_cli::output::default_out_dir;
use dressed_lasing_cli::{parse_config, run_command, Command, Flags, FreqGrid, RunConfig};

#[derive(Parser)]
#[command(name = "dressed-lasing", version, about = "Dressed-state transmission and superradiant lasing simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Flat TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $DRESSED_LASING_OUT or ./out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Normalize spectra to unit maximum.
    #[arg(long, global = true)]
    normalize: bool,
    /// Add a log10 intensity column.
    #[arg(long, global = true)]
    log: bool,
    /// Filter offset grid `min:max:n` in kHz.
    #[arg(long, global = true, value_parser = FreqGrid::parse)]
    fgrid: Option<FreqGrid>,
    /// Worker threads for spectrum sampling.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dressed levels of the first ladders, or predicted transmission peaks.
    Dressed {
        #[arg(long)]
        peaks: bool,
    },
    /// Transmission spectrum of a Gaussian probe pulse.
    Transmit,
    /// Steady lasing state and linewidth estimates.
    Lase,
    /// Filter-cavity emission spectrum.
    Spectrum,
    /// Steady observables along the configured pump grid.
    SweepPump,
    /// Pseudo-Dicke numbers along the configured pump grid.
    Dicke,
    /// Exact-oracle versus cumulant comparison table.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let (cmd, peaks) = match cli.cmd {
        Cmd::Dressed { peaks } => (Command::Dressed, peaks),
        Cmd::Transmit => (Command::Transmit, false),
        Cmd::Lase => (Command::Lase, false),
        Cmd::Spectrum => (Command::Spectrum, false),
        Cmd::SweepPump => (Command::SweepPump, false),
        Cmd::Dicke => (Command::Dicke, false),
        Cmd::Verify => (Command::Verify, false),
    };
    if let Some(j) = cli.jobs {
        if j == 0 || rayon::ThreadPoolBuilder::new().num_threads(j).build_global().is_err() {
            eprintln!("error: --jobs must be a positive thread count");
            return ExitCode::from(2);
        }
    }
    let cfg = match &cli.config {
        Some(path) => match parse_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    let flags = Flags {
        out: cli.out.unwrap_or_else(default_out_dir),
        peaks,
        normalize: cli.normalize,
        log: cli.log,
        fgrid: cli.fgrid,
        jobs: cli.jobs,
    };
    match run_command(cmd, &cfg, &flags) {
        Ok(manifest) => {
            log::info!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
