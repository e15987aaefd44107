//! `snn-compress`: pretrain, compress, evaluate and report spiking networks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snn_compress::experiment::{
    load_checkpoint, load_data, run_experiment, write_outputs, ConfigMap, ExperimentConfig, Mode,
    REPORT_FILE,
};
use snn_compress::metrics::percent;
use snn_compress::stbp::evaluate;
use snn_compress::SnnError;

/// Snapshot of the resolved settings written next to the outputs.
const CONFIG_SNAPSHOT: &str = "config.txt";

#[derive(Parser)]
#[command(
    name = "snn-compress",
    version,
    about = "Compress spiking neural networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a dense network from scratch and save `model.ckpt`.
    Pretrain(Common),
    /// Prune, quantize and/or regularize, then report against the baseline.
    Compress {
        #[command(flatten)]
        common: Common,
        /// Start from this checkpoint instead of pretraining.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Measure test accuracy and hidden spike rate of a checkpoint.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Print `report.csv` files (or directories holding one) as one table.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--override sparsity=0.5`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn settings(&self) -> Result<ConfigMap, SnnError> {
        let mut map = match &self.config {
            Some(path) => ConfigMap::load(path)?,
            None => ConfigMap::default(),
        };
        for kv in &self.overrides {
            map.apply_override(kv)?;
        }
        if let Some(d) = &self.data_dir {
            map.set("data_dir", &d.to_string_lossy());
        }
        if let Some(d) = &self.out_dir {
            map.set("out_dir", &d.to_string_lossy());
        }
        if let Some(s) = self.seed {
            map.set("seed", &s.to_string());
        }
        Ok(map)
    }
}

fn run_and_save(map: &ConfigMap, cfg: &ExperimentConfig) -> Result<(), SnnError> {
    let outcome = run_experiment(cfg)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    write_outputs(&cfg.out_dir, &outcome)?;
    let snapshot = cfg.out_dir.join(CONFIG_SNAPSHOT);
    std::fs::write(&snapshot, map.to_text()).map_err(|e| SnnError::Io {
        path: snapshot,
        source: e,
    })?;
    let r = &outcome.report;
    println!(
        "accuracy {:.2}% (baseline {:.2}%), spike rate {:.4} (baseline {:.4}), memory {:.2}%, ops {:.2}%",
        r.accuracy * 100.0,
        r.baseline_accuracy * 100.0,
        r.rate,
        r.baseline_rate,
        percent(r.r_mem),
        percent(r.r_ops)
    );
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}

fn pretrain(common: &Common) -> Result<(), SnnError> {
    let mut map = common.settings()?;
    map.set("mode", &Mode::NONE.to_string());
    let cfg = map.build()?;
    run_and_save(&map, &cfg)
}

fn compress(common: &Common, checkpoint: Option<&Path>) -> Result<(), SnnError> {
    let mut map = common.settings()?;
    if let Some(p) = checkpoint {
        map.set("init_checkpoint", &p.to_string_lossy());
    }
    let cfg = map.build()?;
    if cfg.mode.is_none() {
        return Err(SnnError::Config(vec![
            "compress needs mode = prune, quantize, regularize or a combination".into(),
        ]));
    }
    run_and_save(&map, &cfg)
}

fn evaluate_checkpoint(common: &Common, checkpoint: &Path) -> Result<(), SnnError> {
    let mut map = common.settings()?;
    if map.get("out_dir").is_none() {
        map.set("out_dir", ".");
    }
    let ckpt = load_checkpoint(checkpoint)?;
    if map.get("arch").is_none() {
        map.set("arch", &ckpt.net.arch().to_string());
    }
    if map.get("seed").is_none() {
        map.set("seed", &ckpt.seed.to_string());
    }
    let cfg = map.build()?;
    let data = load_data(&cfg)?;
    let ev = evaluate(
        &ckpt.net,
        &data.test,
        &cfg.lif,
        cfg.train.timesteps,
        cfg.train.seed,
    )?;
    let rate = ev
        .spikes
        .map_or(String::from("n/a"), |s| format!("{:.4}", s.avg_rate));
    println!("samples,accuracy_pct,loss,avg_spike_rate");
    println!(
        "{},{:.2},{:.6},{rate}",
        data.test.len(),
        ev.accuracy * 100.0,
        ev.loss
    );
    Ok(())
}

fn report(paths: &[PathBuf]) -> Result<(), SnnError> {
    let mut header: Option<String> = None;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for p in paths {
        let file = if p.is_dir() {
            p.join(REPORT_FILE)
        } else {
            p.clone()
        };
        let text = std::fs::read_to_string(&file).map_err(|e| SnnError::Io {
            path: file.clone(),
            source: e,
        })?;
        let mut lines = text.lines();
        let h = lines.next().unwrap_or_default().to_string();
        match &header {
            Some(prev) if *prev != h => {
                return Err(SnnError::InvalidParam(format!(
                    "{} has a different header",
                    file.display()
                )));
            }
            Some(_) => {}
            None => {
                rows.push(h.split(',').map(str::to_string).collect());
                header = Some(h);
            }
        }
        rows.extend(
            lines
                .filter(|l| !l.is_empty())
                .map(|l| l.split(',').map(str::to_string).collect()),
        );
    }
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:>w$}"))
            .collect();
        println!("{}", cells.join("  "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pretrain(c) => pretrain(c),
        Command::Compress { common, checkpoint } => compress(common, checkpoint.as_deref()),
        Command::Evaluate { common, checkpoint } => evaluate_checkpoint(common, checkpoint),
        Command::Report { paths } => report(paths),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SnnError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
