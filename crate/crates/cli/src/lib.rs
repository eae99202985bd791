//! Library side of the `tal` command: argument parsing and the four
//! subcommands.

pub mod commands;
mod output;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tal_core::config::RunConfig;

#[derive(Parser)]
#[command(name = "tal", version, about = "Typicalness-aware learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write train.csv and test.csv for the synthetic benchmark.
    Gen(Common),
    /// Train on the training CSV and write a checkpoint and epoch log.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from the existing checkpoint instead of starting over.
        #[arg(long)]
        resume: bool,
        /// Stop once this many epochs are complete.
        #[arg(long, value_name = "N")]
        stop_after: Option<usize>,
    },
    /// Score the test CSV and write scores, metrics and risk-coverage curves.
    Eval(Common),
    /// Run gen, train and eval for every grid cell and seed.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "MODE", value_parser = ["ce", "logitnorm", "fixed-t", "tal"])]
    loss_mode: Option<String>,
    #[arg(long, value_name = "R")]
    t_min: Option<f64>,
    #[arg(long, value_name = "R")]
    t_max: Option<f64>,
    #[arg(long, value_name = "N")]
    queue_capacity: Option<usize>,
    #[arg(long, value_name = "MEASURE", value_parser = ["nearest", "knn"])]
    typicalness: Option<String>,
    #[arg(long, value_name = "N")]
    knn_k: Option<usize>,
    /// Comma-separated subset of old_fd,ood_d,new_fd.
    #[arg(long, value_name = "LIST")]
    settings: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set epochs=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> tal_core::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for item in &self.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| tal_core::Error::Config(format!("--set expects KEY=VALUE, got '{item}'")))?;
            cfg.set(key.trim(), value)?;
        }
        let flags: [(&str, Option<String>); 9] = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("loss_mode", self.loss_mode.clone()),
            ("t_min", self.t_min.map(|v| v.to_string())),
            ("t_max", self.t_max.map(|v| v.to_string())),
            ("queue_capacity", self.queue_capacity.map(|v| v.to_string())),
            ("typicalness", self.typicalness.clone()),
            ("knn_k", self.knn_k.map(|v| v.to_string())),
            ("settings", self.settings.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> tal_core::Result<()> {
    match cli.command {
        Command::Gen(common) => commands::gen(&common.resolve()?),
        Command::Train { common, resume, stop_after } => {
            commands::train(&common.resolve()?, resume, stop_after).map(|_| ())
        }
        Command::Eval(common) => commands::eval(&common.resolve()?).map(|_| ()),
        Command::Sweep(common) => sweep::run(&common.resolve()?),
    }
}

/// Parses `args` (without the program name) and runs the command.
pub fn run_args<I, S>(args: I) -> tal_core::Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("tal")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| tal_core::Error::Config(e.to_string()))?;
    run(cli)
}
