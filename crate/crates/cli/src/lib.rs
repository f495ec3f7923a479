//! The `dpm` command line: reference solutions, training runs, sweeps,
//! checkpoint evaluation and plots.
//!
//! Exit codes are 0 on success, 1 for usage errors (bad arguments or
//! configuration) and 2 for runtime failures, including aborted training runs.

pub mod cache;
pub mod config;
pub mod plot;
pub mod run;
pub mod sweep;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use dpm_core::pdes::PdeId;
use dpm_core::sampling::Segment;

use crate::cache::ReferenceCache;
use crate::config::{UsageError, OUTPUT_DIR_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dpm", version, about = "Physics-informed networks trained with dynamic pulling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute (or load from the cache) reference solutions on the evaluation grids.
    SolveRef {
        #[arg(long)]
        pde: PdeId,
        /// One segment; all three when omitted.
        #[arg(long)]
        segment: Option<Segment>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Train every seed of a single-experiment config file.
    Train { config: PathBuf },
    /// Evaluate a checkpoint on one segment of a PDE.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        pde: PdeId,
        #[arg(long, default_value = "test")]
        segment: Segment,
        /// Where the reference cache lives.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the cartesian grid of a config file and summarise it.
    Sweep {
        config: PathBuf,
        /// Concurrent runs; overrides DPM_JOBS.
        #[arg(long)]
        jobs: Option<usize>,
        /// Only rebuild the summary tables from the runs on disk.
        #[arg(long)]
        regenerate: bool,
    },
    /// Draw heatmap, snapshot and loss-curve SVGs for a run directory.
    Plot {
        run_dir: PathBuf,
        /// Snapshot times; defaults to 83% and 98% of the horizon.
        #[arg(long = "t")]
        times: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::SolveRef { pde, segment, output_dir } => {
            let cache = ReferenceCache::new(&output_root(output_dir));
            let segments = segment.map_or(Segment::ALL.to_vec(), |s| vec![s]);
            for s in segments {
                let (sol, source) = cache.segment(pde, s)?;
                let g = sol.grid();
                println!(
                    "{pde} {s}: key {} shape {} x {} x {} (t x x x channels) from {} at {}",
                    dpm_core::refsolvers::cache_key(pde, g),
                    g.ts.len(),
                    g.xs.len(),
                    sol.channels(),
                    source.as_str(),
                    cache.path_for(pde, g).display()
                );
            }
            Ok(EXIT_OK)
        }
        Command::Train { config } => {
            let cfg = config::load_single(&config)?;
            let records = run::cmd_train(&cfg)?;
            let mut code = EXIT_OK;
            for r in &records {
                print_record(r);
                if !r.is_ok() {
                    code = EXIT_RUNTIME;
                }
            }
            Ok(code)
        }
        Command::Eval { checkpoint, pde, segment, output_dir } => {
            let (m, path) = run::cmd_eval(&checkpoint, pde, segment, &output_root(output_dir))?;
            println!(
                "{pde} {segment}: rel_l2 {:.6} explained_variance {:.6} max_error {:.6} mean_abs_error {:.6}",
                m.rel_l2, m.explained_variance, m.max_error, m.mean_abs_error
            );
            println!("report written to {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Sweep { config, jobs, regenerate } => {
            let configs = config::load_grid(&config)?;
            if regenerate {
                let path = sweep::regenerate_summary(&configs[0].output_dir)?;
                println!("summary written to {}", path.display());
                return Ok(EXIT_OK);
            }
            let jobs = match jobs {
                Some(0) => return Err(config::usage("--jobs must be positive")),
                Some(n) => n,
                None => config::jobs_from_env(1)?,
            };
            let outcome = sweep::cmd_sweep(&configs, jobs)?;
            println!(
                "{} runs, {} failed; summary written to {}",
                outcome.records.len(),
                outcome.failures(),
                outcome.summary.display()
            );
            Ok(if outcome.failures() > 0 { EXIT_RUNTIME } else { EXIT_OK })
        }
        Command::Plot { run_dir, times, out } => {
            let times = (!times.is_empty()).then_some(times);
            for path in plot::cmd_plot(&run_dir, times.as_deref(), out.as_deref())? {
                println!("{}", path.display());
            }
            Ok(EXIT_OK)
        }
    }
}

fn print_record(r: &run::RunRecord) {
    let show = |s: Segment| {
        r.metrics_for(s)
            .map_or("n/a".to_owned(), |m| format!("{:.4}", m.rel_l2))
    };
    println!(
        "{} {} seed {}: {:?} after {} epochs; rel_l2 val {} test {}; artifacts in {}",
        r.config.pde,
        r.config.method,
        r.seed,
        r.file.status,
        r.file.epochs,
        show(Segment::Validation),
        show(Segment::Test),
        r.dir.display()
    );
    if let Some(e) = &r.file.error {
        println!("  error: {e}");
    }
}
