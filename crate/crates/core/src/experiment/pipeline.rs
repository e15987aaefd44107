use std::path::Path;

use super::{load_checkpoint, save_checkpoint, Checkpoint, DataSource, ExperimentConfig};
use crate::admm::{
    admm_joint, admm_prune, admm_quantize, hard_compress, CompressSession, Constraint, DiagRow,
};
use crate::data::{load_idx, synthetic_two_class, Dataset, Split};
use crate::error::{Result, SnnError};
use crate::metrics::CompressionReport;
use crate::net::SpikingNetwork;
use crate::seed::{self, Stream};
use crate::stbp::{evaluate, Evaluation, History, NoHooks, Trainer};

pub const REPORT_FILE: &str = "report.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const DIAG_FILE: &str = "admm_diag.csv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";

/// Training and test splits of one experiment.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: Dataset,
    pub test: Dataset,
}

/// Loads the configured data, truncated to the configured limits.
pub fn load_data(cfg: &ExperimentConfig) -> Result<Datasets> {
    let (train, test) = match &cfg.data {
        DataSource::Mnist(dir) => (
            load_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
                Split::Train,
            )?,
            load_idx(
                &dir.join("t10k-images-idx3-ubyte"),
                &dir.join("t10k-labels-idx1-ubyte"),
                Split::Test,
            )?,
        ),
        DataSource::Synthetic(n) => {
            let test_seed = seed::derive(cfg.train.seed, Stream::Data, 1, 0);
            (
                synthetic_two_class(*n, cfg.train.seed)?,
                synthetic_two_class((*n / 2).max(2), test_seed)?.with_split(Split::Test),
            )
        }
    };
    Ok(Datasets {
        train: cfg.train_limit.map_or(train.clone(), |n| train.take(n)),
        test: cfg.test_limit.map_or(test.clone(), |n| test.take(n)),
    })
}

/// Everything one experiment produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: CompressionReport,
    pub baseline: Evaluation,
    pub compressed: Evaluation,
    pub history: History,
    pub diagnostics: Vec<DiagRow>,
    pub checkpoint: Checkpoint,
    pub warnings: Vec<String>,
}

/// Loads the data and runs [`run_with_data`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let data = load_data(cfg).map_err(|e| e.in_stage("load data"))?;
    run_with_data(cfg, &data)
}

/// Pretrains (or loads `init_checkpoint`), evaluates the baseline, applies
/// the configured compression, evaluates again and assembles the report.
pub fn run_with_data(cfg: &ExperimentConfig, data: &Datasets) -> Result<Outcome> {
    let mut pre_cfg = cfg.train.clone();
    pre_cfg.lambda = 0.0;
    let mut trainer = Trainer::new(pre_cfg, cfg.lif)?;
    let mut history = History::default();
    let eval = cfg.eval_every_epoch.then_some(&data.test);

    let mut net = match &cfg.init_checkpoint {
        Some(path) => {
            let ck = load_checkpoint(path).map_err(|e| e.in_stage("load checkpoint"))?;
            if ck.net.arch() != &cfg.arch {
                return Err(SnnError::InvalidParam(format!(
                    "checkpoint architecture {} differs from configured {}",
                    ck.net.arch(),
                    cfg.arch
                ))
                .in_stage("load checkpoint"));
            }
            trainer.set_epoch(ck.epoch as usize);
            ck.net
        }
        None => {
            let mut net = SpikingNetwork::init(
                cfg.arch.clone(),
                seed::derive(cfg.train.seed, Stream::Init, 0, 0),
            )?;
            trainer
                .run(
                    &mut net,
                    &data.train,
                    cfg.train.pretrain_epochs,
                    &mut NoHooks,
                    "pretrain",
                    eval,
                    &mut history,
                )
                .map_err(|e| e.in_stage("pretrain"))?;
            net
        }
    };

    let evaluate_now = |net: &SpikingNetwork| {
        evaluate(
            net,
            &data.test,
            &cfg.lif,
            cfg.train.timesteps,
            cfg.train.seed,
        )
    };
    let baseline = evaluate_now(&net).map_err(|e| e.in_stage("baseline evaluation"))?;

    trainer.config.lambda = cfg.effective_lambda();
    let mut sess = CompressSession::new(trainer, cfg.rho, cfg.scope, &data.train, eval)?;
    sess.history = history;
    match cfg.constraint() {
        Some(c) => {
            let result = if cfg.hard_only {
                hard_compress(&mut net, &mut sess, c)
            } else {
                match c {
                    Constraint::Sparse(s) => admm_prune(&mut net, &mut sess, s),
                    Constraint::Quantized(q) => admm_quantize(&mut net, &mut sess, q),
                    Constraint::SparseQuantized(s, q) => admm_joint(&mut net, &mut sess, s, q),
                }
            };
            result.map_err(|e| e.in_stage("compress"))?;
        }
        None if cfg.mode.regularize => {
            let epochs = cfg.regularize_epochs;
            let CompressSession {
                trainer, history, ..
            } = &mut sess;
            trainer
                .run(
                    &mut net,
                    &data.train,
                    epochs,
                    &mut NoHooks,
                    "regularize",
                    eval,
                    history,
                )
                .map_err(|e| e.in_stage("regularize"))?;
        }
        None => {}
    }

    let compressed = evaluate_now(&net).map_err(|e| e.in_stage("final evaluation"))?;
    let rate_of = |ev: &Evaluation| {
        ev.spikes
            .as_ref()
            .map(|s| s.avg_rate)
            .ok_or(SnnError::Empty("hidden layers"))
    };
    let report = CompressionReport::new(
        cfg.effective_lambda(),
        cfg.effective_sparsity(),
        cfg.effective_bits(),
        cfg.baseline_bits,
        rate_of(&baseline)?,
        rate_of(&compressed)?,
        baseline.accuracy,
        compressed.accuracy,
    )
    .map_err(|e| e.in_stage("report"))?;

    Ok(Outcome {
        report,
        baseline,
        compressed,
        history: sess.history,
        diagnostics: sess.diagnostics,
        checkpoint: Checkpoint {
            net,
            seed: cfg.train.seed,
            epoch: sess.trainer.epoch() as u64,
        },
        warnings: sess.warnings,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| SnnError::io(path, e))
}

/// Writes `report.csv`, `history.csv`, `admm_diag.csv` and `model.ckpt`.
pub fn write_outputs(out_dir: &Path, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| SnnError::io(out_dir, e))?;
    write(
        &out_dir.join(REPORT_FILE),
        &CompressionReport::to_csv(std::slice::from_ref(&outcome.report)),
    )?;
    write(&out_dir.join(HISTORY_FILE), &outcome.history.to_csv())?;
    write(
        &out_dir.join(DIAG_FILE),
        &DiagRow::to_csv(&outcome.diagnostics),
    )?;
    save_checkpoint(&out_dir.join(CHECKPOINT_FILE), &outcome.checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::off_level_count;
    use crate::experiment::ConfigMap;

    fn config(mode: &str, out: &Path) -> ExperimentConfig {
        let mut m = ConfigMap::parse(
            "arch = 16-8-2\nseed = 5\ndataset = synthetic\nsynthetic_samples = 60\ntimesteps = 6\n\
             pretrain_epochs = 4\nadmm_epochs = 2\nhard_epochs = 2\nregularize_epochs = 2\nbatch_size = 10\n\
             learning_rate = 0.1\nsparsity = 0.5\nbits = 2\nlambda = 0.05\n",
        )
        .unwrap();
        m.set("mode", mode);
        m.set("compress_scope", "all");
        m.set("out_dir", out.to_str().unwrap());
        m.build().unwrap()
    }

    #[test]
    fn every_mode_runs_and_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        for mode in ["none", "prune", "quantize", "regularize", "all"] {
            let cfg = config(mode, &dir.path().join(mode));
            let out = run_experiment(&cfg).unwrap();
            write_outputs(&cfg.out_dir, &out).unwrap();
            for f in [REPORT_FILE, HISTORY_FILE, DIAG_FILE, CHECKPOINT_FILE] {
                assert!(cfg.out_dir.join(f).is_file(), "{mode}: {f}");
            }
            let back = load_checkpoint(&cfg.out_dir.join(CHECKPOINT_FILE)).unwrap();
            assert_eq!(back, out.checkpoint);
            for layer in &out.checkpoint.net.layers {
                let w = layer.weights.values();
                if cfg.mode.prune {
                    let zeros = w.iter().filter(|v| **v == 0.0).count();
                    assert!(zeros >= w.len() / 2, "{mode}: {zeros} zeros of {}", w.len());
                }
                if cfg.mode.quantize {
                    let q = layer.quant.expect("quant state");
                    assert_eq!(off_level_count(w, q.alpha, q.bits), 0, "{mode}");
                }
            }
        }
    }

    #[test]
    fn resuming_from_checkpoint_skips_pretraining() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("none", dir.path());
        let first = run_experiment(&cfg).unwrap();
        write_outputs(&cfg.out_dir, &first).unwrap();
        let mut next = config("prune", &dir.path().join("p"));
        next.init_checkpoint = Some(dir.path().join(CHECKPOINT_FILE));
        let out = run_experiment(&next).unwrap();
        assert_eq!(out.baseline.accuracy, first.compressed.accuracy);
        assert!(out.history.rows.iter().all(|r| r.stage != "pretrain"));
    }
}
