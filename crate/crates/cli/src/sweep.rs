//! Grid sweeps and the per-PDE summary table.
//!
//! A sweep writes, under the output directory:
//!
//! * `runs.csv`: one line per run (`run_dir` relative to the output directory),
//!   in execution order;
//! * `summary.csv`: one row per PDE; for each of PINN, PINN-R, PINN-D1 and
//!   PINN-D2 the test metrics (`L2`, `EV`, `Max`, `MAE`) of the run with the
//!   lowest validation relative L2 error;
//! * `best_runs.csv`: which run was chosen for each summary cell.
//!
//! Both tables are computed from the runs listed in `runs.csv` alone, so
//! [`regenerate_summary`] rebuilds them byte for byte.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use dpm_core::pdes::PdeId;
use dpm_core::sampling::Segment;
use dpm_core::trainer::Method;

use crate::cache::ReferenceCache;
use crate::config::ExperimentConfig;
use crate::run::{failed_record, load_record, run_seed, RunRecord};

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const BEST_FILE: &str = "best_runs.csv";

pub const SUMMARY_METHODS: [Method; 4] = [Method::Pinn, Method::PinnR, Method::PinnD1, Method::PinnD2];
pub const SUMMARY_METRICS: [&str; 4] = ["L2", "EV", "Max", "MAE"];

#[derive(Debug)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub summary: PathBuf,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }
}

/// Runs every (configuration, seed) pair with up to `jobs` workers. Individual
/// failures are recorded and do not stop the sweep.
pub fn cmd_sweep(configs: &[ExperimentConfig], jobs: usize) -> Result<SweepOutcome> {
    let Some(first) = configs.first() else {
        bail!(crate::config::UsageError("the configuration grid is empty".into()));
    };
    let root = first.output_dir.clone();
    if configs.iter().any(|c| c.output_dir != root) {
        bail!("all runs of a sweep must share one output directory");
    }
    let cache = ReferenceCache::new(&root);
    let mut pdes: Vec<PdeId> = configs.iter().map(|c| c.pde).collect();
    pdes.sort_by_key(|p| p.as_str());
    pdes.dedup();
    for &pde in &pdes {
        for segment in Segment::ALL {
            cache.segment(pde, segment)?;
        }
    }

    let tasks: Vec<(&ExperimentConfig, u64)> = configs
        .iter()
        .flat_map(|c| c.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; tasks.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, tasks.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(cfg, seed)) = tasks.get(i) else { break };
                let record = run_seed(cfg, seed, &cache).unwrap_or_else(|e| failed_record(cfg, seed, &e));
                eprintln!(
                    "[{}/{}] {} {} {} seed {}: {:?} val rel_l2 {}",
                    i + 1,
                    tasks.len(),
                    cfg.pde,
                    cfg.method,
                    cfg.run_name(),
                    seed,
                    record.file.status,
                    record
                        .metrics_for(Segment::Validation)
                        .map_or("n/a".to_owned(), |m| format!("{:.4}", m.rel_l2)),
                );
                slots.lock().unwrap()[i] = Some(record);
            });
        }
    });
    let records: Vec<RunRecord> = slots.into_inner().unwrap().into_iter().flatten().collect();

    let mut index = csv::Writer::from_path(root.join(RUNS_FILE))?;
    index.write_record(["run_dir"])?;
    for r in &records {
        index.write_record([relative(&r.dir, &root)])?;
    }
    index.flush()?;
    let summary = write_summary(&records, &root)?;
    Ok(SweepOutcome { records, summary })
}

fn relative(path: &Path, root: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

/// The completed run of `method` on `pde` with the lowest validation error;
/// ties go to the earlier run.
pub fn best_run(records: &[RunRecord], pde: PdeId, method: Method) -> Option<&RunRecord> {
    records
        .iter()
        .filter(|r| r.is_ok() && r.config.pde == pde && r.config.method == method)
        .filter_map(|r| Some((r, r.metrics_for(Segment::Validation)?.rel_l2)))
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best: Option<(&RunRecord, f64)>, (r, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((r, v)),
        })
        .map(|(r, _)| r)
}

pub fn summary_header() -> Vec<String> {
    let mut h = vec!["pde".to_owned()];
    for m in SUMMARY_METHODS {
        for k in SUMMARY_METRICS {
            h.push(format!("{}_{}", m.label(), k));
        }
    }
    h
}

/// Writes `summary.csv` and `best_runs.csv` for `records` into `root`.
pub fn write_summary(records: &[RunRecord], root: &Path) -> Result<PathBuf> {
    let path = root.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    let mut best = csv::Writer::from_path(root.join(BEST_FILE))?;
    w.write_record(summary_header())?;
    best.write_record(["pde", "method", "run_dir", "val_rel_l2"])?;
    for pde in PdeId::ALL {
        if !records.iter().any(|r| r.config.pde == pde) {
            continue;
        }
        let mut row = vec![pde.to_string()];
        for method in SUMMARY_METHODS {
            match best_run(records, pde, method).and_then(|r| Some((r, r.metrics_for(Segment::Test)?))) {
                Some((r, m)) => {
                    row.extend(m.csv_fields());
                    best.write_record([
                        pde.to_string(),
                        method.label().to_owned(),
                        relative(&r.dir, root),
                        format!("{:?}", r.metrics_for(Segment::Validation).map_or(f64::NAN, |v| v.rel_l2)),
                    ])?;
                }
                None => row.extend(std::iter::repeat_n(String::new(), SUMMARY_METRICS.len())),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    best.flush()?;
    Ok(path)
}

/// Rebuilds the summary tables of a finished sweep from its run directories.
pub fn regenerate_summary(root: &Path) -> Result<PathBuf> {
    let index = root.join(RUNS_FILE);
    let mut r = csv::Reader::from_path(&index).with_context(|| format!("reading {}", index.display()))?;
    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        records.push(load_record(&root.join(&rec[0]))?);
    }
    write_summary(&records, root)
}
