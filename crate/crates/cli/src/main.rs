use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hullrec_core::{Error, Pipeline, PipelineConfig};

/// Latent convex hull recommendation pipeline.
///
/// Stages read their inputs from the output directory and write their
/// results back to it, so each one can be rerun on its own.
#[derive(Parser, Debug)]
#[command(name = "hullrec", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Weight of unexpectedness in the utility, in [0, 1].
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long = "top-n", global = true)]
    top_n: Option<usize>,
    #[arg(long = "output-dir", global = true, default_value = "hullrec-out")]
    output_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load the configured dataset, filter sparse users and items.
    Ingest {
        /// One filtering pass instead of iterating to a fixed point.
        #[arg(long)]
        single_pass: bool,
    },
    /// Generate the planted-cluster dataset.
    Synth {
        #[arg(long)]
        single_pass: bool,
    },
    /// Split interactions and write the train graph.
    BuildGraph,
    /// Generate the random-walk corpus.
    Walk,
    /// Train embeddings and the rating models.
    Train,
    /// Write Top-N lists for every user.
    Recommend {
        /// Rank by predicted rating alone.
        #[arg(long)]
        rating_only: bool,
    },
    /// Score the recommendation file and print the metrics table.
    Evaluate,
    /// Maximum-hull coverage experiment.
    Iterate,
    /// Every stage from data to metrics.
    Run,
}

fn load_config(args: &GlobalArgs) -> hullrec_core::Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| match e {
            Error::Io { .. } => Error::Config { key: "--config".into(), line: 0, message: e.to_string() },
            other => other,
        })?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(alpha) = args.alpha {
        cfg.recommend.alpha = alpha;
    }
    if let Some(n) = args.top_n {
        cfg.recommend.top_n = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> hullrec_core::Result<()> {
    let mut cfg = load_config(&cli.global)?;
    if let Command::Ingest { single_pass: true } | Command::Synth { single_pass: true } = cli.command {
        cfg.data.single_pass_filter = true;
    }
    let pipeline = Pipeline::new(cfg, &cli.global.output_dir)?;
    match cli.command {
        Command::Ingest { .. } => {
            let n = pipeline.ingest()?;
            log::info!("ingested {n} interactions");
        }
        Command::Synth { .. } => {
            let n = pipeline.synth()?;
            log::info!("generated {n} interactions");
        }
        Command::BuildGraph => {
            pipeline.build_graph()?;
        }
        Command::Walk => {
            pipeline.walk()?;
        }
        Command::Train => pipeline.train()?,
        Command::Recommend { rating_only: true } => pipeline.recommend_rating_only()?,
        Command::Recommend { rating_only: false } => {
            let lists = pipeline.recommend()?;
            log::info!("wrote lists for {} users", lists.len());
        }
        Command::Evaluate => print!("{}", pipeline.evaluate()?.to_table()),
        Command::Iterate => {
            for r in pipeline.iterate()? {
                let points: Vec<String> = r
                    .iterations
                    .iter()
                    .zip(&r.coverage_curve)
                    .map(|(i, c)| format!("{i}:{c:.4}"))
                    .collect();
                println!("{:<16} users {:>5}  {}", r.policy.label(), r.users, points.join("  "));
            }
        }
        Command::Run => print!("{}", pipeline.run_all()?.to_table()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HULLREC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hullrec: {e}");
            exit_status(&e)
        }
    }
}

fn exit_status(e: &Error) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
