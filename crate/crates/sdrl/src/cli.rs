//! Argument parsing and dispatch for the `sdrl` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sdrl_core::model::{Proportion, Variant, VariantConfig};

use crate::commands::{self, PrepareInputs, DATA_DIR_ENV};
use crate::config::{parse_k_list, RunConfig};
use crate::error::{exit, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "sdrl", version, about = "Train and evaluate block-structured recommendation embeddings")]
pub struct Cli {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Seed for the command: the split for `prepare`, training for `train`,
    /// the classifier split for `evaluate`, the only sweep seed for `ablate`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Model variant: sdrl, int+ext, int+oth, ext+oth or whole.
    #[arg(long, global = true)]
    pub variant: Option<String>,

    /// Block proportion internal:external:other, e.g. 2:1:1.
    #[arg(long, global = true)]
    pub proportion: Option<String>,

    /// Comma-separated cut-offs for the ranking metrics.
    #[arg(long, global = true, value_name = "K,K,...")]
    pub k_list: Option<String>,

    /// Suppress progress messages.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load raw CSV files, filter, split and write a dataset snapshot.
    Prepare(PrepareArgs),
    /// Train a model on a snapshot.
    Train(TrainArgs),
    /// Compute ranking and item-classification metrics for a checkpoint.
    Evaluate(ModelArgs),
    /// Train and evaluate every variant, proportion and seed of a sweep.
    Ablate(AblateArgs),
    /// Write user and item embeddings as TSV.
    Export(ModelArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Directory with the raw files (ratings.csv plus movies.csv or categories.csv).
    #[arg(long, env = DATA_DIR_ENV, value_name = "DIR")]
    pub input: Option<PathBuf>,
    /// Ratings file, overriding the one in --input.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Item category file, overriding the one in --input.
    #[arg(long)]
    pub items: Option<PathBuf>,
    /// Raw file format: movielens or amazon.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Dataset label carried into reports.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = commands::SNAPSHOT_FILE)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Continue from the checkpoint in --out if there is one.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = commands::CHECKPOINT_FILE)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = commands::SNAPSHOT_FILE)]
    pub snapshot: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, default_value = commands::SNAPSHOT_FILE)]
    pub snapshot: PathBuf,
    /// Comma-separated sweep seeds, overriding the config.
    #[arg(long, value_name = "S,S,...")]
    pub seeds: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::Config(format!("seed `{p}` is not an integer"))))
        .collect()
}

impl Cli {
    /// The configuration file with command-line overrides applied.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.variant {
            v.parse::<Variant>()?;
            c.train.variant = v.clone();
            if let Some(Command::Ablate(_)) = self.command {
                c.sweep.variants = vec![v.clone()];
            }
        }
        if let Some(p) = &self.proportion {
            p.parse::<Proportion>()?;
            c.train.proportion = p.clone();
            if let Some(Command::Ablate(_)) = self.command {
                c.sweep.proportions = vec![p.clone()];
            }
        }
        if self.variant.is_some() || self.proportion.is_some() {
            c.variant_config()?;
        }
        if let Some(k) = &self.k_list {
            c.eval.k_list = parse_k_list(k)?;
        }
        match &self.command {
            Some(Command::Prepare(a)) => {
                if let Some(s) = self.seed {
                    c.prepare.seed = s;
                }
                if let Some(f) = &a.format {
                    c.prepare.format = f.clone();
                }
                if let Some(m) = a.min_count {
                    c.prepare.min_count = m;
                }
                if let Some(f) = a.train_fraction {
                    c.prepare.train_fraction = f;
                }
                c.format()?;
            }
            Some(Command::Train(a)) => {
                if let Some(s) = self.seed {
                    c.train.seed = s;
                }
                if let Some(e) = a.epochs {
                    c.train.epochs = e;
                }
            }
            Some(Command::Ablate(a)) => {
                if let Some(s) = self.seed {
                    c.sweep.seeds = vec![s];
                }
                if let Some(s) = &a.seeds {
                    c.sweep.seeds = parse_seeds(s)?;
                }
                if let Some(e) = a.epochs {
                    c.train.epochs = e;
                }
            }
            _ => {}
        }
        Ok(c)
    }

    /// Variant requested explicitly on the command line, if any.
    fn explicit_variant(&self, config: &RunConfig) -> Result<Option<VariantConfig>> {
        if self.variant.is_none() && self.proportion.is_none() {
            return Ok(None);
        }
        config.variant_config().map(Some)
    }
}

/// Parses `args`, runs the command and returns the process exit status.
/// Output goes to the given writers so tests can capture it.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let config = cli.resolve_config()?;
    if cli.print_config {
        let _ = write!(stdout, "{}", config.to_toml());
        return Ok(());
    }
    let quiet = cli.quiet;
    let mut log = |m: &str| {
        if !quiet {
            let _ = writeln!(stderr, "{m}");
        }
    };
    let Some(command) = &cli.command else {
        return Err(Error::Config("no subcommand given (prepare, train, evaluate, ablate or export)".into()));
    };
    match command {
        Command::Prepare(a) => {
            let inputs = PrepareInputs {
                data_dir: a.input.clone(),
                ratings: a.ratings.clone(),
                items: a.items.clone(),
                name: a.name.clone(),
            };
            let o = commands::prepare(&config, &inputs, &a.out, &mut log)?;
            let _ = writeln!(stdout, "snapshot {} sha256 {}", o.snapshot.display(), o.checksum);
        }
        Command::Train(a) => {
            let o = commands::train(&config, &a.snapshot, &a.out, a.resume, &mut log)?;
            let _ = writeln!(stdout, "checkpoint {}", o.checkpoint.display());
            let _ = writeln!(stdout, "losses {}", o.losses.display());
        }
        Command::Evaluate(a) => {
            let expected = cli.explicit_variant(&config)?;
            let o = commands::evaluate(&config, &a.checkpoint, &a.snapshot, &a.out, expected, cli.seed, &mut log)?;
            let _ = writeln!(stdout, "ranking {}", o.ranking.display());
            let _ = writeln!(stdout, "classification {}", o.classification.display());
        }
        Command::Ablate(a) => {
            commands::ablate(&config, &a.snapshot, &a.out, &mut log)?;
            let _ = writeln!(stdout, "table {}", a.out.join(commands::ABLATION_FILE).display());
        }
        Command::Export(a) => {
            let path = commands::export(&config, &a.checkpoint, &a.snapshot, &a.out)?;
            let _ = writeln!(stdout, "embeddings {}", path.display());
        }
    }
    Ok(())
}
