use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::admm::{CompressScope, Constraint, QuantSpec};
use crate::error::{Result, SnnError};
use crate::lif::LifParams;
use crate::metrics::BASELINE_BITS;
use crate::net::Architecture;
use crate::stbp::TrainConfig;

/// Which compression methods a run applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Mode {
    pub prune: bool,
    pub quantize: bool,
    pub regularize: bool,
}

impl Mode {
    pub const NONE: Mode = Mode {
        prune: false,
        quantize: false,
        regularize: false,
    };

    pub fn is_none(&self) -> bool {
        *self == Mode::NONE
    }
}

impl FromStr for Mode {
    type Err = SnnError;

    /// `none`, `all`, or a `+`-joined subset of `prune`, `quantize`, `regularize`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => return Ok(Mode::NONE),
            "all" => {
                return Ok(Mode {
                    prune: true,
                    quantize: true,
                    regularize: true,
                })
            }
            _ => {}
        }
        let mut mode = Mode::NONE;
        for part in s.split('+') {
            let flag = match part.trim() {
                "prune" => &mut mode.prune,
                "quantize" => &mut mode.quantize,
                "regularize" => &mut mode.regularize,
                other => {
                    return Err(SnnError::InvalidParam(format!(
                        "unknown compression method '{other}' in mode '{s}'"
                    )))
                }
            };
            if *flag {
                return Err(SnnError::InvalidParam(format!(
                    "method repeated in mode '{s}'"
                )));
            }
            *flag = true;
        }
        Ok(mode)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            return f.write_str("none");
        }
        if self.prune && self.quantize && self.regularize {
            return f.write_str("all");
        }
        let parts: Vec<&str> = [
            (self.prune, "prune"),
            (self.quantize, "quantize"),
            (self.regularize, "regularize"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, name)| *name)
        .collect();
        f.write_str(&parts.join("+"))
    }
}

/// Training data source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    /// IDX files in a directory (`train-images-idx3-ubyte`, ...).
    Mnist(PathBuf),
    /// [`crate::data::synthetic_two_class`] with this many training samples.
    Synthetic(usize),
}

/// Every setting of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arch: Architecture,
    pub lif: LifParams,
    pub train: TrainConfig,
    pub mode: Mode,
    pub sparsity: Option<f64>,
    pub bits: Option<u32>,
    pub quant_iterations: usize,
    pub rho: f64,
    pub scope: CompressScope,
    /// Skip the ADMM phase and run projected retraining only.
    pub hard_only: bool,
    /// Epochs of fine-tuning when regularization is the only method.
    pub regularize_epochs: usize,
    pub baseline_bits: u32,
    pub data: DataSource,
    /// Use at most this many training / test samples.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    /// Evaluate on the test split after every epoch.
    pub eval_every_epoch: bool,
    /// Start from this checkpoint instead of pretraining.
    pub init_checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// The weight constraint implied by the mode, if any.
    pub fn constraint(&self) -> Option<Constraint> {
        let spec = |b| QuantSpec {
            bits: b,
            iterations: self.quant_iterations,
        };
        match (self.mode.prune, self.mode.quantize) {
            (true, true) => Some(Constraint::SparseQuantized(
                self.sparsity?,
                spec(self.bits?),
            )),
            (true, false) => Some(Constraint::Sparse(self.sparsity?)),
            (false, true) => Some(Constraint::Quantized(spec(self.bits?))),
            (false, false) => None,
        }
    }

    /// Sparsity and bitwidth that the report accounts for.
    pub fn effective_sparsity(&self) -> f64 {
        if self.mode.prune {
            self.sparsity.unwrap_or(0.0)
        } else {
            0.0
        }
    }

    pub fn effective_bits(&self) -> u32 {
        if self.mode.quantize {
            self.bits.unwrap_or(self.baseline_bits)
        } else {
            self.baseline_bits
        }
    }

    /// Activity penalty in force during compression.
    pub fn effective_lambda(&self) -> f64 {
        if self.mode.regularize {
            self.train.lambda
        } else {
            0.0
        }
    }
}

const KEYS: &[&str] = &[
    "arch",
    "decay",
    "threshold",
    "surrogate_width",
    "timesteps",
    "pretrain_epochs",
    "admm_epochs",
    "hard_epochs",
    "regularize_epochs",
    "batch_size",
    "learning_rate",
    "lambda",
    "seed",
    "mode",
    "sparsity",
    "bits",
    "quant_iterations",
    "rho",
    "compress_scope",
    "hard_only",
    "baseline_bits",
    "dataset",
    "data_dir",
    "synthetic_samples",
    "train_limit",
    "test_limit",
    "eval_every_epoch",
    "init_checkpoint",
    "out_dir",
];

/// Raw `key = value` settings, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = ConfigMap::default();
        let mut errors = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    map.set(k.trim(), v.trim());
                }
                _ => errors.push(format!(
                    "line {}: expected key = value, got '{line}'",
                    n + 1
                )),
            }
        }
        if errors.is_empty() {
            Ok(map)
        } else {
            Err(SnnError::Config(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SnnError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        match kv.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                self.set(k.trim(), v.trim());
                Ok(())
            }
            _ => Err(SnnError::Config(vec![format!(
                "override '{kv}' is not key=value"
            )])),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Renders the map back to the file format, keys sorted.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Builds and validates a configuration, reporting every problem at once.
    pub fn build(&self) -> Result<ExperimentConfig> {
        let mut errors = Vec::new();
        for key in self.entries.keys() {
            if !KEYS.contains(&key.as_str()) {
                errors.push(format!("unknown key '{key}'"));
            }
        }

        fn field<T: FromStr>(map: &ConfigMap, errors: &mut Vec<String>, key: &str) -> Option<T>
        where
            T::Err: fmt::Display,
        {
            let raw = map.get(key)?;
            match raw.parse::<T>() {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(format!("{key} = '{raw}': {e}"));
                    None
                }
            }
        }
        let e = &mut errors;

        let defaults_lif = LifParams::default();
        let defaults_train = TrainConfig::default();
        let arch: Option<Architecture> = field(self, e, "arch");
        if self.get("arch").is_none() {
            e.push("arch is required".into());
        }
        let decay = field(self, e, "decay").unwrap_or(defaults_lif.decay);
        let threshold = field(self, e, "threshold").unwrap_or(defaults_lif.threshold);
        let width = field(self, e, "surrogate_width").unwrap_or(defaults_lif.surrogate_width);
        let lif = LifParams {
            decay,
            threshold,
            surrogate_width: width,
            ..defaults_lif
        };
        if let Err(err) = lif.validate() {
            e.push(err.to_string());
        }

        let seed: Option<u64> = field(self, e, "seed");
        if self.get("seed").is_none() {
            e.push("seed is required".into());
        }
        let train = TrainConfig {
            timesteps: field(self, e, "timesteps").unwrap_or(defaults_train.timesteps),
            pretrain_epochs: field(self, e, "pretrain_epochs")
                .unwrap_or(defaults_train.pretrain_epochs),
            admm_epochs: field(self, e, "admm_epochs").unwrap_or(defaults_train.admm_epochs),
            hard_epochs: field(self, e, "hard_epochs").unwrap_or(defaults_train.hard_epochs),
            batch_size: field(self, e, "batch_size").unwrap_or(defaults_train.batch_size),
            learning_rate: field(self, e, "learning_rate").unwrap_or(defaults_train.learning_rate),
            lambda: field(self, e, "lambda").unwrap_or(0.0),
            seed: seed.unwrap_or(0),
        };
        if let Err(err) = train.validate() {
            e.push(err.to_string());
        }

        let mode: Mode = field(self, e, "mode").unwrap_or_default();
        let sparsity: Option<f64> = field(self, e, "sparsity");
        let bits: Option<u32> = field(self, e, "bits");
        let quant_iterations = field(self, e, "quant_iterations").unwrap_or(3);
        let baseline_bits = field(self, e, "baseline_bits").unwrap_or(BASELINE_BITS);
        if mode.prune {
            match sparsity {
                None if self.get("sparsity").is_none() => {
                    e.push("mode includes prune but sparsity is not set".into())
                }
                Some(s) if !(0.0..1.0).contains(&s) => {
                    e.push(format!("sparsity = {s} must satisfy 0 <= s < 1"))
                }
                _ => {}
            }
        }
        if mode.quantize {
            match bits {
                None if self.get("bits").is_none() => {
                    e.push("mode includes quantize but bits is not set".into())
                }
                Some(b) => {
                    if let Err(err) = QuantSpec::new(b, quant_iterations) {
                        e.push(err.to_string());
                    }
                    if b > baseline_bits {
                        e.push(format!(
                            "bits = {b} exceeds baseline_bits = {baseline_bits}"
                        ));
                    }
                }
                None => {}
            }
        }
        if mode.regularize {
            if self.get("lambda").is_none() {
                e.push("mode includes regularize but lambda is not set".into());
            } else if !(train.lambda > 0.0) {
                e.push(format!(
                    "mode includes regularize but lambda = {}",
                    train.lambda
                ));
            }
        }
        let rho = field(self, e, "rho").unwrap_or(5e-4);
        if !(rho >= 0.0 && f64::is_finite(rho)) {
            e.push(format!("rho = {rho} must be >= 0"));
        }

        let data = match self.get("dataset").unwrap_or("mnist") {
            "mnist" => match self.get("data_dir") {
                Some(dir) => Some(DataSource::Mnist(PathBuf::from(dir))),
                None => {
                    e.push("dataset = mnist needs data_dir".into());
                    None
                }
            },
            "synthetic" => {
                let n: usize = field(self, e, "synthetic_samples").unwrap_or(200);
                if n < 2 {
                    e.push("synthetic_samples must be >= 2".into());
                }
                Some(DataSource::Synthetic(n))
            }
            other => {
                e.push(format!("dataset '{other}' (expected mnist or synthetic)"));
                None
            }
        };
        let out_dir = match self.get("out_dir") {
            Some(d) => PathBuf::from(d),
            None => {
                e.push("out_dir is required".into());
                PathBuf::new()
            }
        };
        let scope: CompressScope = field(self, e, "compress_scope").unwrap_or_default();
        let hard_only = field(self, e, "hard_only").unwrap_or(false);
        let regularize_epochs = field(self, e, "regularize_epochs").unwrap_or(10);
        let train_limit = field(self, e, "train_limit");
        let test_limit = field(self, e, "test_limit");
        let eval_every_epoch = field(self, e, "eval_every_epoch").unwrap_or(true);
        let init_checkpoint = self.get("init_checkpoint").map(PathBuf::from);

        if let Some(arch) = &arch {
            if let Err(err) = arch.layer_kinds() {
                e.push(err.to_string());
            }
            let n = arch.layers.len();
            if (mode.prune || mode.quantize) && scope.resolve(n).is_empty() {
                e.push(format!(
                    "compress_scope = {scope} selects no layer of the {n}-layer network {arch}"
                ));
            }
            if n < 2 {
                e.push(format!(
                    "spike-rate reporting needs at least one hidden layer, arch is {arch}"
                ));
            }
            if let (Some(DataSource::Synthetic(_)), Ok(kinds)) = (&data, arch.layer_kinds()) {
                if arch.input_len() != 16 || kinds.last().map(|k| k.out_len()) != Some(2) {
                    e.push(format!(
                        "synthetic data needs 16 inputs and 2 outputs, arch is {arch}"
                    ));
                }
            }
        }

        if !errors.is_empty() {
            return Err(SnnError::Config(errors));
        }
        Ok(ExperimentConfig {
            arch: arch.expect("checked above"),
            lif,
            train,
            mode,
            sparsity,
            bits,
            quant_iterations,
            rho,
            scope,
            hard_only,
            regularize_epochs,
            baseline_bits,
            data: data.expect("checked above"),
            train_limit,
            test_limit,
            eval_every_epoch,
            init_checkpoint,
            out_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ConfigMap {
        ConfigMap::parse(
            "# toy\narch = 16-8-2\nseed = 3\ndataset = synthetic\ncompress_scope = all_but_last\nout_dir = /tmp/x\n",
        )
        .unwrap()
    }

    #[test]
    fn modes_round_trip() {
        for s in [
            "none",
            "prune",
            "quantize",
            "regularize",
            "prune+quantize",
            "prune+regularize",
            "quantize+regularize",
            "all",
        ] {
            assert_eq!(s.parse::<Mode>().unwrap().to_string(), s);
        }
        assert!("prune+prune".parse::<Mode>().is_err());
        assert!("squash".parse::<Mode>().is_err());
    }

    #[test]
    fn minimal_config_builds_with_defaults() {
        let cfg = base().build().unwrap();
        assert_eq!(cfg.mode, Mode::NONE);
        assert_eq!(cfg.train.timesteps, 10);
        assert_eq!(cfg.rho, 5e-4);
        assert_eq!(cfg.data, DataSource::Synthetic(200));
    }

    #[test]
    fn all_errors_are_listed() {
        let mut m = base();
        m.set("mode", "prune+quantize");
        m.set("learning_rate", "-1");
        m.set("bogus", "1");
        match m.build() {
            Err(SnnError::Config(errs)) => {
                assert!(errs.iter().any(|e| e.contains("sparsity")), "{errs:?}");
                assert!(errs.iter().any(|e| e.contains("bits")), "{errs:?}");
                assert!(errs.iter().any(|e| e.contains("learning_rate")), "{errs:?}");
                assert!(errs.iter().any(|e| e.contains("bogus")), "{errs:?}");
            }
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn seed_is_mandatory() {
        let m = ConfigMap::parse("arch = 16-8-2\ndataset = synthetic\nout_dir = x\n").unwrap();
        assert!(
            matches!(m.build(), Err(SnnError::Config(e)) if e.iter().any(|s| s.contains("seed")))
        );
    }

    #[test]
    fn overrides_win() {
        let mut m = base();
        m.apply_override("timesteps=4").unwrap();
        assert_eq!(m.build().unwrap().train.timesteps, 4);
        assert!(m.apply_override("nonsense").is_err());
        assert!(ConfigMap::parse("just words").is_err());
    }

    #[test]
    fn constraint_follows_mode() {
        let mut m = base();
        m.set("mode", "all");
        m.set("sparsity", "0.25");
        m.set("bits", "1");
        m.set("lambda", "0.01");
        let cfg = m.build().unwrap();
        assert!(
            matches!(cfg.constraint(), Some(Constraint::SparseQuantized(s, q)) if s == 0.25 && q.bits == 1)
        );
        assert_eq!(cfg.effective_bits(), 1);
        assert_eq!(cfg.effective_lambda(), 0.01);
    }

    #[test]
    fn regularize_needs_hidden_layer_and_lambda() {
        let mut m = base();
        m.set("mode", "regularize");
        assert!(m.build().is_err());
        m.set("lambda", "0.1");
        assert!(m.build().is_ok());
        m.set("arch", "16-2");
        assert!(m.build().is_err());
    }
}
