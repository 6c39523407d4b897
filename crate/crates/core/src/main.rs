use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use feataug::augment::Operator;
use feataug::harness::{
    cmd_classify, cmd_gen_data, cmd_roundtrip_check, cmd_sweep, cmd_train_sa, ExperimentConfig,
    SplitChoice, CHECKPOINT_FILE,
};
use feataug::{Error, Result};

#[derive(Parser)]
#[command(name = "feataug", version, about = "Feature-space augmentation experiments")]
struct Cli {
    /// Experiment config (TOML). Built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for gradient computation; 1 is the reference mode.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CheckpointArg {
    /// Defaults to checkpoint.bin in the output directory.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Train the sequence autoencoder; writes a checkpoint and a loss log.
    TrainSa,
    /// Decode operator results across a lambda grid for one pair of samples.
    Sweep {
        #[command(flatten)]
        checkpoint: CheckpointArg,
        /// Parent sample ids, e.g. `3,17`.
        #[arg(long, value_delimiter = ',')]
        pair: Option<Vec<usize>>,
        #[arg(long)]
        operator: Option<Operator>,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Train and evaluate classifiers on baseline and augmented contexts.
    Classify {
        #[command(flatten)]
        checkpoint: CheckpointArg,
    },
    /// Report per-sample and aggregate reconstruction error.
    Roundtrip {
        #[command(flatten)]
        checkpoint: CheckpointArg,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
    },
    /// Write the configured dataset as CSV.
    GenData,
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        config.out_dir = dir;
    }
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let checkpoint_path = |arg: CheckpointArg| {
        arg.checkpoint
            .unwrap_or_else(|| config.out_dir.join(CHECKPOINT_FILE))
    };

    match cli.command {
        Command::TrainSa => {
            let out = cmd_train_sa(&config)?;
            if let Some(last) = out.report.history.last() {
                println!(
                    "trained {} updates over {} epochs; final val_loss {:.6}",
                    out.report.updates, last.epoch, last.val_loss
                );
            }
            println!("wrote {}", out.checkpoint.display());
            println!("wrote {}", out.loss_log.display());
        }
        Command::Sweep {
            checkpoint,
            pair,
            operator,
            lambdas,
        } => {
            if let Some(p) = pair {
                if p.len() != 2 {
                    return Err(Error::Config(format!("--pair takes two sample ids, got {}", p.len())));
                }
                config.sweep.pair = (p[0], p[1]);
            }
            if let Some(op) = operator {
                config.sweep.operator = op;
            }
            if let Some(l) = lambdas {
                config.sweep.lambdas = l;
            }
            config.validate()?;
            let path = checkpoint_path(checkpoint);
            let out = cmd_sweep(&config, &path)?;
            for f in out.csv_files.iter().chain(std::iter::once(&out.plot)) {
                println!("wrote {}", f.display());
            }
        }
        Command::Classify { checkpoint } => {
            let path = checkpoint_path(checkpoint);
            let out = cmd_classify(&config, &path)?;
            for s in &out.summary {
                println!(
                    "{:<22} {:>8.3} +- {:.3} % ({} runs, {} updates)",
                    s.variant.name(),
                    s.result.mean,
                    s.result.std,
                    s.result.runs(),
                    s.updates
                );
            }
            println!("wrote {}", out.runs_csv.display());
            println!("wrote {}", out.summary_csv.display());
        }
        Command::Roundtrip { checkpoint, split } => {
            let path = checkpoint_path(checkpoint);
            let split = split.map(|s| match s {
                SplitArg::Train => SplitChoice::Train,
                SplitArg::Test => SplitChoice::Test,
            });
            let out = cmd_roundtrip_check(&config, &path, split)?;
            println!(
                "aggregate reconstruction MSE {:.6} over {} samples",
                out.aggregate,
                out.per_sample.len()
            );
            println!("wrote {}", out.report.display());
            println!("wrote {}", out.summary.display());
        }
        Command::GenData => {
            for f in cmd_gen_data(&config)? {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
