use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convattn::data::write_trials;
use convattn::experiment::{generate, parse_synth_config, run_train, run_xval, ExperimentConfig};
use convattn::gradcheck::{run_gradcheck, GradcheckDims, GradcheckOptions};
use convattn::{Arch, Error, ErrorKind};

/// ConvLSTM with self-attention for multi-sensor time series.
#[derive(Parser)]
#[command(name = "convattn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate a model and write report.json.
    Xval(RunArgs),
    /// Train on a single split and save the model.
    Train(RunArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic dataset as canonical trial CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Folds trained in parallel. Defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// proposed, baseline or both.
    #[arg(long, default_value = "both")]
    arch: String,
    #[arg(long, default_value_t = 1)]
    lstm_layers: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator config: `synth.*` keys and `seed`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for trials.csv. Writes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numeric => 3,
    }
}

fn experiment(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.model.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn jobs(args: &RunArgs) -> usize {
    args.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Xval(args) => {
            let cfg = experiment(&args)?;
            let report = run_xval(&cfg, jobs(&args))?;
            for f in &report.folds {
                println!("fold {:>2}  accuracy {:.4}  f1 {:.4}", f.fold_index, f.accuracy, f.f1);
            }
            for (metric, value) in &report.aggregate.display {
                println!("{metric:<10} {value}");
            }
            println!("report written to {}", cfg.out.join("report.json").display());
        }
        Command::Train(args) => {
            let cfg = experiment(&args)?;
            let report = run_train(&cfg)?;
            println!(
                "test accuracy {:.4}  f1 {:.4}  epochs {} (best {})",
                report.fold.accuracy, report.fold.f1, report.history.stop_epoch, report.history.best_epoch
            );
            println!("model written to {}", cfg.out.join("model.bin").display());
        }
        Command::Gradcheck(args) => {
            let archs = match args.arch.as_str() {
                "both" => vec![Arch::Proposed, Arch::Baseline],
                a => vec![a.parse()?],
            };
            let dims = GradcheckDims {
                lstm_layers: args.lstm_layers,
                ..GradcheckDims::default()
            };
            let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
            let report = run_gradcheck(&dims, &seeds, &archs, &GradcheckOptions::default())?;
            print!("{}", report.table());
            if !report.passed() {
                eprintln!("gradient check failed (tolerance {:e})", report.tolerance);
                return Ok(ExitCode::from(3));
            }
        }
        Command::Synth(args) => {
            let text = std::fs::read_to_string(&args.config).map_err(|e| Error::io(&args.config, e))?;
            let (spec, seed) = parse_synth_config(&text)?;
            let trials = generate(&spec, args.seed.unwrap_or(seed))?;
            match args.out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                    let path = dir.join("trials.csv");
                    convattn::data::save_trials(&path, &trials)?;
                    eprintln!("{} trials written to {}", trials.len(), path.display());
                }
                None => {
                    let mut out = io::stdout().lock();
                    write_trials(&mut out, &trials)?;
                    out.flush().map_err(|e| Error::io("<stdout>", e))?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
