//! Single training runs and checkpoint evaluation.
//!
//! Each seed of an experiment writes into
//! `<output_dir>/<pde>/<method>/<run name>/seed-<n>/`:
//!
//! | file | contents |
//! |------|----------|
//! | `config.toml` | the experiment with `seeds = [n]`; re-running it reproduces the run |
//! | `history.csv` | `epoch,L_u,L_f,L,delta,case,val_error` |
//! | `checkpoint.txt` | best-validation parameters |
//! | `metrics.csv` | `pde,method,segment,rel_l2,explained_variance,max_error,mean_abs_error` |
//! | `record.toml` | status, stop reason, epochs, wall-clock duration |
//!
//! `metrics.csv` depends only on the configuration and seed; timing goes to
//! `record.toml`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use dpm_core::diffnet::{forward_flat, init_params, read_checkpoint, write_checkpoint};
use dpm_core::pdes::{PdeId, PdeSpec};
use dpm_core::sampling::{build_regression_set, build_train_set, Segment, TrainSet};
use dpm_core::trainer::{train, train_regression, StopReason, TrainingHistory};
use dpm_core::{InputMap, LayerSpec, MetricsReport, NetworkParams, ReferenceSolution};
use serde::{Deserialize, Serialize};

use crate::cache::ReferenceCache;
use crate::config::{self, ExperimentConfig};

pub const CONFIG_FILE: &str = "config.toml";
pub const HISTORY_FILE: &str = "history.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const RECORD_FILE: &str = "record.toml";

pub const METRICS_HEADER: [&str; 7] = [
    "pde",
    "method",
    "segment",
    "rel_l2",
    "explained_variance",
    "max_error",
    "mean_abs_error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted,
    Failed,
}

/// Bookkeeping persisted as `record.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    pub status: RunStatus,
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: Option<usize>,
    pub best_val_error: Option<f64>,
    pub stop_reason: Option<String>,
    pub error: Option<String>,
    pub duration_secs: f64,
    pub config: String,
    pub history: Option<String>,
    pub checkpoint: Option<String>,
    pub metrics: Option<String>,
}

/// Everything known about one finished (or failed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub dir: PathBuf,
    pub file: RecordFile,
    pub metrics: Vec<(Segment, MetricsReport)>,
}

impl RunRecord {
    pub fn metrics_for(&self, segment: Segment) -> Option<&MetricsReport> {
        self.metrics.iter().find(|(s, _)| *s == segment).map(|(_, m)| m)
    }

    pub fn is_ok(&self) -> bool {
        self.file.status == RunStatus::Completed
    }
}

pub fn seed_dir(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.run_dir().join(format!("seed-{seed}"))
}

/// Fresh network for a configuration; inputs are scaled from the full
/// space-time domain onto `[-1, 1]^2`.
pub fn initial_network(cfg: &ExperimentConfig, seed: u64) -> Result<NetworkParams> {
    let spec = PdeSpec::get(cfg.pde);
    let layers = LayerSpec::new(cfg.width, cfg.depth, spec.output_channels, cfg.method.residual());
    Ok(init_params(layers, seed)?.with_input_map(InputMap::unit_box(
        (spec.x_min, spec.x_max),
        (0.0, spec.final_time),
    )))
}

/// Initial/boundary data plus collocation points, or for the regression
/// baselines the same data plus `n_f` interior points labelled by the reference.
pub fn training_set(cfg: &ExperimentConfig, seed: u64, cache: &ReferenceCache) -> Result<TrainSet> {
    let spec = PdeSpec::get(cfg.pde);
    let base = build_train_set(&spec, cfg.n_u, cfg.n_f, seed)?;
    if !cfg.method.is_regression() {
        return Ok(base);
    }
    let (reference, _) = cache.segment(cfg.pde, Segment::Train)?;
    Ok(build_regression_set(&spec, &base, cfg.n_f, seed, |points| {
        points.iter().map(|&(x, t)| reference.sample(x, t)).collect()
    })?)
}

/// Metrics of `params` against a reference on its own grid.
pub fn evaluate(params: &NetworkParams, pde: PdeId, reference: &ReferenceSolution) -> Result<MetricsReport> {
    let spec = PdeSpec::get(pde);
    if params.spec().output_dim != spec.output_channels {
        bail!(
            "checkpoint has {} output channels but {pde} needs {}",
            params.spec().output_dim,
            spec.output_channels
        );
    }
    let pred = forward_flat(params, &reference.grid().points())?;
    Ok(MetricsReport::compare_fields(&pred, reference.values(), spec.output_channels)?)
}

pub fn write_metrics_csv<W: Write>(
    pde: PdeId,
    method: &str,
    rows: &[(Segment, MetricsReport)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for (segment, m) in rows {
        let mut rec = vec![pde.to_string(), method.to_owned(), segment.to_string()];
        rec.extend(m.csv_fields());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<(Segment, MetricsReport)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != METRICS_HEADER.len() {
            bail!("{}: expected {} fields", path.display(), METRICS_HEADER.len());
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().with_context(|| format!("{}: bad number `{}`", path.display(), &rec[i]))
        };
        out.push((
            rec[2].parse::<Segment>()?,
            MetricsReport {
                rel_l2: num(3)?,
                explained_variance: num(4)?,
                max_error: num(5)?,
                mean_abs_error: num(6)?,
            },
        ));
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Trains one seed of `cfg` and writes its artifacts. Training aborts still
/// produce a record (status `aborted`) with the partial history and the best
/// parameters seen; only I/O and setup problems are returned as errors.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, cache: &ReferenceCache) -> Result<RunRecord> {
    let start = Instant::now();
    let dir = seed_dir(cfg, seed);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut snapshot = cfg.clone();
    snapshot.seeds = vec![seed];
    std::fs::write(dir.join(CONFIG_FILE), snapshot.to_toml())?;

    let spec = PdeSpec::get(cfg.pde);
    let (val_ref, _) = cache.segment(cfg.pde, Segment::Validation)?;
    let set = training_set(cfg, seed, cache)?;
    let initial = initial_network(cfg, seed)?;
    let trainer = cfg.trainer(seed);
    let fit = if cfg.method.is_regression() {
        train_regression(&trainer, &spec, initial, &set, val_ref.grid(), val_ref.values())
    } else {
        train(&trainer, &spec, initial, &set, val_ref.grid(), val_ref.values())
    };
    let (params, history, abort) = match fit {
        Ok(out) => (out.params, out.history, None),
        Err(a) => {
            let a = *a;
            let reason = format!("{a}");
            (a.best, a.history, Some(reason))
        }
    };

    history.write_csv(create(&dir.join(HISTORY_FILE))?)?;
    let mut ck = create(&dir.join(CHECKPOINT_FILE))?;
    write_checkpoint(&params, &mut ck)?;
    ck.flush()?;

    let mut metrics = Vec::new();
    let mut metric_error = None;
    for segment in Segment::ALL {
        let reference = match segment {
            Segment::Validation => val_ref.clone(),
            _ => cache.segment(cfg.pde, segment)?.0,
        };
        match evaluate(&params, cfg.pde, &reference) {
            Ok(m) => metrics.push((segment, m)),
            Err(e) => {
                metric_error = Some(format!("{segment} metrics: {e:#}"));
                metrics.clear();
                break;
            }
        }
    }
    let metrics_path = if metrics.is_empty() {
        None
    } else {
        write_metrics_csv(cfg.pde, cfg.method.as_str(), &metrics, create(&dir.join(METRICS_FILE))?)?;
        Some(METRICS_FILE.to_owned())
    };

    let error = abort.or(metric_error);
    let file = RecordFile {
        status: if error.is_some() { RunStatus::Aborted } else { RunStatus::Completed },
        seed,
        epochs: history.len(),
        best_epoch: history.best_epoch,
        best_val_error: history.best_val_error,
        stop_reason: Some(stop_reason_str(&history).to_owned()),
        error,
        duration_secs: start.elapsed().as_secs_f64(),
        config: CONFIG_FILE.to_owned(),
        history: Some(HISTORY_FILE.to_owned()),
        checkpoint: Some(CHECKPOINT_FILE.to_owned()),
        metrics: metrics_path,
    };
    std::fs::write(dir.join(RECORD_FILE), toml::to_string(&file)?)?;
    Ok(RunRecord {
        config: cfg.clone(),
        seed,
        dir,
        file,
        metrics,
    })
}

fn stop_reason_str(h: &TrainingHistory) -> &'static str {
    match h.stop_reason {
        StopReason::MaxEpochs => "max_epochs",
        StopReason::Patience => "patience",
    }
}

/// Records a run that could not even start, so sweeps can report it.
pub fn failed_record(cfg: &ExperimentConfig, seed: u64, err: &anyhow::Error) -> RunRecord {
    let dir = seed_dir(cfg, seed);
    let file = RecordFile {
        status: RunStatus::Failed,
        seed,
        epochs: 0,
        best_epoch: None,
        best_val_error: None,
        stop_reason: None,
        error: Some(format!("{err:#}")),
        duration_secs: 0.0,
        config: CONFIG_FILE.to_owned(),
        history: None,
        checkpoint: None,
        metrics: None,
    };
    if std::fs::create_dir_all(&dir).is_ok() {
        let mut snapshot = cfg.clone();
        snapshot.seeds = vec![seed];
        let _ = std::fs::write(dir.join(CONFIG_FILE), snapshot.to_toml());
        if let Ok(text) = toml::to_string(&file) {
            let _ = std::fs::write(dir.join(RECORD_FILE), text);
        }
    }
    RunRecord {
        config: cfg.clone(),
        seed,
        dir,
        file,
        metrics: Vec::new(),
    }
}

/// Reads a run back from its directory.
pub fn load_record(dir: &Path) -> Result<RunRecord> {
    let config = config::parse_single(
        &std::fs::read_to_string(dir.join(CONFIG_FILE))
            .with_context(|| format!("reading {}", dir.join(CONFIG_FILE).display()))?,
        None,
    )?;
    let file: RecordFile = toml::from_str(
        &std::fs::read_to_string(dir.join(RECORD_FILE))
            .with_context(|| format!("reading {}", dir.join(RECORD_FILE).display()))?,
    )
    .with_context(|| format!("parsing {}", dir.join(RECORD_FILE).display()))?;
    let metrics = match &file.metrics {
        Some(name) => read_metrics_csv(&dir.join(name))?,
        None => Vec::new(),
    };
    Ok(RunRecord {
        seed: file.seed,
        config,
        dir: dir.to_owned(),
        file,
        metrics,
    })
}

/// Runs every seed of one experiment in order.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let cache = ReferenceCache::new(&cfg.output_dir);
    cfg.seeds.iter().map(|&seed| run_seed(cfg, seed, &cache)).collect()
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_checkpoint(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Evaluates a checkpoint on one segment and writes the report next to it as
/// `eval-<pde>-<segment>.csv`.
pub fn cmd_eval(
    checkpoint: &Path,
    pde: PdeId,
    segment: Segment,
    output_root: &Path,
) -> Result<(MetricsReport, PathBuf)> {
    let params = load_checkpoint(checkpoint)?;
    let (reference, _) = ReferenceCache::new(output_root).segment(pde, segment)?;
    let report = evaluate(&params, pde, &reference)?;
    let dir = checkpoint
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let out = dir.join(format!("eval-{pde}-{segment}.csv"));
    write_metrics_csv(pde, "checkpoint", &[(segment, report)], create(&out)?)?;
    Ok((report, out))
}

/// The seed directories beneath `root`, sorted.
pub fn find_runs(root: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        if dir.join(RECORD_FILE).is_file() {
            out.push(dir.to_owned());
            return Ok(());
        }
        let entries = match std::fs::read_dir(dir) {
            Ok(e) => e,
            Err(_) => return Ok(()),
        };
        for entry in entries {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, out)?;
            }
        }
        Ok(())
    }
    if !root.is_dir() {
        return Err(anyhow!("{} is not a directory", root.display()));
    }
    let mut out = Vec::new();
    walk(root, &mut out)?;
    out.sort();
    Ok(out)
}
