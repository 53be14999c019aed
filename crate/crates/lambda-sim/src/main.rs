//! Thin command-line front end over the library run drivers.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lambda_sim::config::RunConfig;
use lambda_sim::runs::{self, FitModel};
use lambda_sim::ModelTag;

#[derive(Parser)]
#[command(
    name = "lambda-sim",
    about = "Probe spectra and light-storage simulation for a driven three-level lambda system",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (sectioned key = value text).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the configured out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker count for parallel grid evaluation (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Suppress timestamps so outputs are byte-stable.
    #[arg(long)]
    reproducible: bool,
    /// Spectrum model (overrides the configured model): rate | floquet.
    #[arg(long)]
    model: Option<String>,
}

impl RunArgs {
    fn load(&self) -> lambda_sim::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.out_dir = out.display().to_string();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if self.reproducible {
            cfg.reproducible = true;
        }
        if let Some(m) = &self.model {
            cfg.model = m.parse::<ModelTag>()?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Probe transmission trace(s), one file per configured gradient.
    Spectrum(RunArgs),
    /// Write/store/read decay curves and retrieved pulses.
    Memory(RunArgs),
    /// Gradient sweep with fitted linewidth table.
    Sweep(RunArgs),
    /// Fit a two-column data file.
    Fit {
        /// Input file with two numeric columns.
        #[arg(long)]
        input: PathBuf,
        /// Fit model.
        #[arg(long)]
        model: String,
        /// Directory for the report (default: next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> lambda_sim::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Spectrum(args) => {
            let cfg = args.load()?;
            let files = runs::run_spectrum(&cfg)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Memory(args) => {
            let cfg = args.load()?;
            let files = runs::run_memory(&cfg)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let files = runs::run_sweep(&cfg)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Fit { input, model, out } => {
            let model: FitModel = model.parse()?;
            let (path, summary) = runs::run_fit(&input, model, out.as_deref())?;
            println!("{summary}");
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
