//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Unknown
//! keys are rejected. [`RunConfig::to_text`] writes every key, so the
//! resolved file alone reproduces a run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::DatasetSpec;
use crate::error::{Error, Result};
use crate::loss::MagnitudeSchedule;
use crate::metrics::Setting;
use crate::model::{LossMode, TrainingConfig, DEFAULT_FIXED_T};
use crate::typicalness::{DistanceMeasure, DEFAULT_KNN_K};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub warmup_fraction: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub queue_capacity: usize,
    /// `nearest` or `knn`.
    pub typicalness: String,
    pub knn_k: usize,
    pub loss_mode: String,
    /// Constant magnitude for the `logitnorm` and `fixed-t` modes.
    pub fixed_t: f64,
    pub hidden: Vec<usize>,

    pub n_classes: usize,
    pub feature_dim: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub atypical_fraction: f64,
    pub separation: f64,
    pub spread: f64,
    pub covariate_noise: f64,
    pub n_semantic_classes: usize,

    pub out: PathBuf,
    /// Empty means `<out>/train.csv`.
    pub train_csv: String,
    /// Empty means `<out>/test.csv`.
    pub test_csv: String,
    /// Empty means `<out>/checkpoint.bin`.
    pub checkpoint: String,
    pub settings: Vec<Setting>,

    pub sweep_t_min: Vec<f64>,
    pub sweep_t_max: Vec<f64>,
    pub sweep_queue_capacity: Vec<usize>,
    pub sweep_seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainingConfig::default();
        let d = DatasetSpec::default();
        Self {
            seed: 0,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            weight_decay: t.weight_decay,
            warmup_fraction: t.warmup_fraction,
            t_min: t.schedule.t_min(),
            t_max: t.schedule.t_max(),
            queue_capacity: t.queue_capacity,
            typicalness: "nearest".into(),
            knn_k: DEFAULT_KNN_K,
            loss_mode: "tal".into(),
            fixed_t: DEFAULT_FIXED_T,
            hidden: t.hidden,
            n_classes: d.n_classes,
            feature_dim: d.feature_dim,
            train_size: d.train_size,
            test_size: d.test_size,
            atypical_fraction: d.atypical_fraction,
            separation: d.separation,
            spread: d.spread,
            covariate_noise: d.covariate_noise,
            n_semantic_classes: d.n_semantic_classes,
            out: PathBuf::from("out"),
            train_csv: String::new(),
            test_csv: String::new(),
            checkpoint: String::new(),
            settings: Setting::ALL.to_vec(),
            sweep_t_min: Vec::new(),
            sweep_t_max: Vec::new(),
            sweep_queue_capacity: Vec::new(),
            sweep_seeds: Vec::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_num(key, s)).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub const KEYS: [&'static str; 33] = [
        "seed",
        "epochs",
        "batch_size",
        "learning_rate",
        "momentum",
        "weight_decay",
        "warmup_fraction",
        "t_min",
        "t_max",
        "queue_capacity",
        "typicalness",
        "knn_k",
        "loss_mode",
        "fixed_t",
        "hidden",
        "n_classes",
        "feature_dim",
        "train_size",
        "test_size",
        "atypical_fraction",
        "separation",
        "spread",
        "covariate_noise",
        "n_semantic_classes",
        "out",
        "train_csv",
        "test_csv",
        "checkpoint",
        "settings",
        "sweep_t_min",
        "sweep_t_max",
        "sweep_queue_capacity",
        "sweep_seeds",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "learning_rate" => self.learning_rate = parse_num(key, v)?,
            "momentum" => self.momentum = parse_num(key, v)?,
            "weight_decay" => self.weight_decay = parse_num(key, v)?,
            "warmup_fraction" => self.warmup_fraction = parse_num(key, v)?,
            "t_min" => self.t_min = parse_num(key, v)?,
            "t_max" => self.t_max = parse_num(key, v)?,
            "queue_capacity" => self.queue_capacity = parse_num(key, v)?,
            "typicalness" => match v {
                "nearest" | "knn" => self.typicalness = v.to_string(),
                _ => return Err(Error::Config(format!("typicalness must be nearest or knn, got '{v}'"))),
            },
            "knn_k" => self.knn_k = parse_num(key, v)?,
            "loss_mode" => {
                LossMode::parse(v, self.fixed_t)?;
                self.loss_mode = v.replace('_', "-");
            }
            "fixed_t" => self.fixed_t = parse_num(key, v)?,
            "hidden" => self.hidden = parse_list(key, v)?,
            "n_classes" => self.n_classes = parse_num(key, v)?,
            "feature_dim" => self.feature_dim = parse_num(key, v)?,
            "train_size" => self.train_size = parse_num(key, v)?,
            "test_size" => self.test_size = parse_num(key, v)?,
            "atypical_fraction" => self.atypical_fraction = parse_num(key, v)?,
            "separation" => self.separation = parse_num(key, v)?,
            "spread" => self.spread = parse_num(key, v)?,
            "covariate_noise" => self.covariate_noise = parse_num(key, v)?,
            "n_semantic_classes" => self.n_semantic_classes = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "train_csv" => self.train_csv = v.to_string(),
            "test_csv" => self.test_csv = v.to_string(),
            "checkpoint" => self.checkpoint = v.to_string(),
            "settings" => {
                self.settings = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Setting>().map_err(|e| Error::Config(e.to_string())))
                    .collect::<Result<_>>()?;
            }
            "sweep_t_min" => self.sweep_t_min = parse_list(key, v)?,
            "sweep_t_max" => self.sweep_t_max = parse_list(key, v)?,
            "sweep_queue_capacity" => self.sweep_queue_capacity = parse_list(key, v)?,
            "sweep_seeds" => self.sweep_seeds = parse_list(key, v)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", n + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("momentum", self.momentum.to_string());
        kv("weight_decay", self.weight_decay.to_string());
        kv("warmup_fraction", self.warmup_fraction.to_string());
        kv("t_min", self.t_min.to_string());
        kv("t_max", self.t_max.to_string());
        kv("queue_capacity", self.queue_capacity.to_string());
        kv("typicalness", self.typicalness.clone());
        kv("knn_k", self.knn_k.to_string());
        kv("loss_mode", self.loss_mode.clone());
        kv("fixed_t", self.fixed_t.to_string());
        kv("hidden", join(&self.hidden));
        kv("n_classes", self.n_classes.to_string());
        kv("feature_dim", self.feature_dim.to_string());
        kv("train_size", self.train_size.to_string());
        kv("test_size", self.test_size.to_string());
        kv("atypical_fraction", self.atypical_fraction.to_string());
        kv("separation", self.separation.to_string());
        kv("spread", self.spread.to_string());
        kv("covariate_noise", self.covariate_noise.to_string());
        kv("n_semantic_classes", self.n_semantic_classes.to_string());
        kv("out", self.out.display().to_string());
        kv("train_csv", self.train_csv.clone());
        kv("test_csv", self.test_csv.clone());
        kv("checkpoint", self.checkpoint.clone());
        kv("settings", join(&self.settings.iter().map(|s| s.name()).collect::<Vec<_>>()));
        kv("sweep_t_min", join(&self.sweep_t_min));
        kv("sweep_t_max", join(&self.sweep_t_max));
        kv("sweep_queue_capacity", join(&self.sweep_queue_capacity));
        kv("sweep_seeds", join(&self.sweep_seeds));
        s
    }

    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        let spec = DatasetSpec {
            seed: self.seed,
            n_classes: self.n_classes,
            feature_dim: self.feature_dim,
            train_size: self.train_size,
            test_size: self.test_size,
            atypical_fraction: self.atypical_fraction,
            separation: self.separation,
            spread: self.spread,
            covariate_noise: self.covariate_noise,
            n_semantic_classes: self.n_semantic_classes,
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn loss_mode(&self) -> Result<LossMode> {
        LossMode::parse(&self.loss_mode, self.fixed_t)
    }

    pub fn training_config(&self) -> Result<TrainingConfig> {
        let schedule = MagnitudeSchedule::new(self.t_min, self.t_max).map_err(|e| Error::Config(e.to_string()))?;
        let measure = match self.typicalness.as_str() {
            "knn" => DistanceMeasure::Knn(self.knn_k),
            _ => DistanceMeasure::Nearest,
        };
        let cfg = TrainingConfig {
            seed: self.seed,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            warmup_fraction: self.warmup_fraction,
            schedule,
            queue_capacity: self.queue_capacity,
            measure,
            loss_mode: self.loss_mode()?,
            hidden: self.hidden.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn path_or(&self, value: &str, default: &str) -> PathBuf {
        if value.is_empty() {
            self.out.join(default)
        } else {
            PathBuf::from(value)
        }
    }

    pub fn train_csv_path(&self) -> PathBuf {
        self.path_or(&self.train_csv, "train.csv")
    }

    pub fn test_csv_path(&self) -> PathBuf {
        self.path_or(&self.test_csv, "test.csv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.path_or(&self.checkpoint, "checkpoint.bin")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_valid_configs() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.training_config().unwrap(), TrainingConfig::default());
        assert_eq!(cfg.dataset_spec().unwrap(), DatasetSpec::default());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "seed = 7\n# comment\nt_max = 120.5  # trailing\nhidden = 32,16\nsettings = new_fd\nsweep_seeds = 1,2\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.t_max, 120.5);
        assert_eq!(cfg.hidden, vec![32, 16]);
        assert_eq!(cfg.settings, vec![Setting::NewFd]);
        let back = RunConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_text("sed = 3\n").unwrap_err();
        assert!(err.to_string().contains("'sed'"), "{err}");
        assert!(RunConfig::from_text("just words\n").is_err());
        assert!(RunConfig::from_text("epochs = many\n").is_err());
        assert!(RunConfig::from_text("loss_mode = focal\n").is_err());
    }

    #[test]
    fn invalid_schedule_is_a_config_error() {
        let cfg = RunConfig::from_text("t_min = 50\nt_max = 20\n").unwrap();
        assert!(matches!(cfg.training_config(), Err(Error::Config(_))));
    }

    #[test]
    fn tal_needs_a_warmup_epoch() {
        let cfg = RunConfig::from_text("epochs = 10\nwarmup_fraction = 0.05\n").unwrap();
        assert!(matches!(cfg.training_config(), Err(Error::Config(_))));
        let ok = RunConfig::from_text("epochs = 20\nwarmup_fraction = 0.05\n").unwrap();
        assert_eq!(ok.training_config().unwrap().warmup_epochs(), 1);
        let ce = RunConfig::from_text("epochs = 10\nloss_mode = ce\n").unwrap();
        assert!(ce.training_config().is_ok());
    }
}
