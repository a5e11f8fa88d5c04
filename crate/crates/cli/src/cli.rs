use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, SynthArgs};
use crate::config::{resolve, Override, RunConfig};
use crate::error::{io_error, CliError};

/// Cold-start recommender: data preparation, training, evaluation and
/// experiment sweeps.
///
/// Exit codes: 0 success, 1 run failure (e.g. divergence), 2 config or
/// missing input, 3 malformed input, 4 integrity mismatch.
#[derive(Debug, Parser)]
#[command(name = "coldrec", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON run config; unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `dotted.key=value`, applied after the config file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Prepared split directory.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse MovieLens-format files, binarize and split into cold cohorts.
    Prepare {
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Lowest rating counted as a positive.
        #[arg(long)]
        threshold: Option<u8>,
        #[arg(long)]
        user_frac: Option<f64>,
        #[arg(long)]
        item_frac: Option<f64>,
        /// Seed of the cold split.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train, checkpoint and evaluate on the test cohorts.
    Train {
        #[command(flatten)]
        dirs: SplitArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate a checkpoint on a prepared split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        dirs: SplitArgs,
        /// Also write per-entity rows.
        #[arg(long)]
        detail: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Full model and the three single-component ablations.
    Ablate {
        #[command(flatten)]
        dirs: SplitArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// One run per learning rate in 0.001, 0.005, 0.01, 0.05, 0.1.
    Sweep {
        #[command(flatten)]
        dirs: SplitArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a synthetic MovieLens-format dataset.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        users: usize,
        #[arg(long, default_value_t = 200)]
        items: usize,
        #[arg(long, default_value_t = coldrec::dataset::DEFAULT_TOPICS)]
        topics: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "info")]
        log_level: String,
    },
}

fn load_config(args: &ConfigArgs, flags: Vec<Override>) -> Result<RunConfig, CliError> {
    let text = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| io_error(p, e))?),
        None => None,
    };
    let mut overrides = args
        .overrides
        .iter()
        .map(|s| Override::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    overrides.extend(flags);
    resolve(text.as_deref(), &overrides)
}

fn path_flag(key: &str, p: &Option<PathBuf>) -> Option<Override> {
    p.as_ref().map(|p| Override::new(key, p.to_string_lossy().into_owned()))
}

fn split_flags(dirs: &SplitArgs) -> Vec<Override> {
    [path_flag("split_dir", &dirs.split), path_flag("out_dir", &dirs.out)]
        .into_iter()
        .flatten()
        .collect()
}

fn init_logging(level: &str) {
    let _ = env_logger::Builder::new()
        .parse_filters(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let (config, action): (RunConfig, fn(&RunConfig) -> Result<PathBuf, CliError>) = match cli.command {
        Command::Synth { seed, users, items, topics, out, log_level } => {
            init_logging(&log_level);
            return commands::cmd_synth(&SynthArgs { seed, users, items, topics }, &out);
        }
        Command::Evaluate { checkpoint, dirs, detail, config } => {
            let mut flags = split_flags(&dirs);
            if detail {
                flags.push(Override::new("detail_csv", true));
            }
            let config = load_config(&config, flags)?;
            init_logging(&config.log_level);
            return commands::cmd_evaluate(&config, &checkpoint);
        }
        Command::Prepare { data_dir, out, threshold, user_frac, item_frac, seed, config } => {
            let mut flags: Vec<Override> =
                [path_flag("data_dir", &data_dir), path_flag("out_dir", &out)].into_iter().flatten().collect();
            flags.extend(threshold.map(|v| Override::new("prepare.threshold", v)));
            flags.extend(user_frac.map(|v| Override::new("prepare.user_frac", v)));
            flags.extend(item_frac.map(|v| Override::new("prepare.item_frac", v)));
            flags.extend(seed.map(|v| Override::new("prepare.seed", v)));
            (load_config(&config, flags)?, commands::cmd_prepare)
        }
        Command::Train { dirs, config } => (load_config(&config, split_flags(&dirs))?, commands::cmd_train),
        Command::Ablate { dirs, config } => (load_config(&config, split_flags(&dirs))?, commands::cmd_ablate),
        Command::Sweep { dirs, config } => (load_config(&config, split_flags(&dirs))?, commands::cmd_sweep),
    };
    init_logging(&config.log_level);
    action(&config)
}
