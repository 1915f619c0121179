use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pulsed_rf_cli::config::{Phonons, Preset};
use pulsed_rf_cli::{analyze, emit_plot_script, load_config, run_sweep, RunConfig};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "pulsed-rf", version, about = "Resonance fluorescence spectra of pulsed two-level emitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a single spectrum
    Run(RunArgs),
    /// Compute every point of the configured sweep
    Sweep(RunArgs),
    /// Re-derive peak tables and sideband ratios from a results directory
    Analyze(DirArgs),
    /// Write a matplotlib script that plots a results directory
    PlotScript {
        #[command(flatten)]
        dir: DirArgs,
        /// Logarithmic intensity axis
        #[arg(long)]
        semilog: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Built-in parameter set
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration)
    #[arg(long, env = "PULSED_RF_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, env = "PULSED_RF_THREADS")]
    threads: Option<usize>,
    /// Skip the phonon runs
    #[arg(long)]
    no_phonons: bool,
}

#[derive(Args)]
struct DirArgs {
    /// Results directory
    #[arg(long, env = "PULSED_RF_OUT", default_value = "results")]
    out: PathBuf,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match Preset::parse(s) {
        Some(p) if p != Preset::Custom => Ok(p),
        _ => Err(format!("unknown preset \"{s}\" (expected fig1, fig2 or fig3)")),
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = match (&args.config, args.preset) {
        (Some(path), preset) => load_config(path, preset).map_err(|e| e.to_string())?,
        (None, Some(preset)) => RunConfig::preset(preset),
        (None, None) => return Err("either --preset or --config is required".into()),
    };
    if args.no_phonons {
        config.phonons = Phonons::Off;
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    if args.threads == Some(0) {
        return Err("--threads must be at least 1".into());
    }
    config.validate().map_err(|(_, message)| message)?;
    Ok(config)
}

fn execute(args: &RunArgs, single: bool) -> ExitCode {
    let config = match resolve(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if single && config.points().len() != 1 {
        eprintln!(
            "error: the configuration expands to {} points; use `sweep` or narrow the axes",
            config.points().len()
        );
        return ExitCode::from(EXIT_VALIDATION);
    }
    match run_sweep(&config, &config.output, args.threads) {
        Ok(summary) => {
            println!(
                "{} of {} points written; manifest at {}",
                summary.points - summary.failed,
                summary.points,
                summary.manifest.display()
            );
            if summary.failed > 0 {
                eprintln!("error: {} points failed (see manifest)", summary.failed);
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => execute(&args, true),
        Command::Sweep(args) => execute(&args, false),
        Command::Analyze(dir) => match analyze(&dir.out) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_VALIDATION)
            }
        },
        Command::PlotScript { dir, semilog } => match emit_plot_script(&dir.out, semilog) {
            Ok(path) => {
                println!("{}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_VALIDATION)
            }
        },
    }
}
