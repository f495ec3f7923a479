//! Run configuration files.
//!
//! ```toml
//! [experiment]
//! pde = "viscous-burgers"
//! method = "pinn-d2"
//! seeds = [0, 1, 2]
//! output_dir = "runs"
//!
//! [network]
//! depth = 8
//! width = 20
//!
//! [trainer]
//! optimizer = "adam"
//! learning_rate = 0.005
//! alpha = 1.0
//! beta = 1.0
//! max_epochs = 10000
//! patience = 50
//! min_improvement = 1e-5
//!
//! [dpm]
//! epsilon = 0.001
//! delta = 0.01
//! w = 1.01
//!
//! [sampling]
//! n_u = 100
//! n_f = 10000
//! ```
//!
//! Every section except `[experiment]` is optional. In a sweep file any of
//! `pde`, `method`, `depth`, `width`, `optimizer`, `learning_rate`, `alpha`,
//! `beta`, `max_epochs`, `epsilon`, `delta`, `w`, `n_u` and `n_f` may be an array;
//! the sweep runs the cartesian product. DPM methods always train with
//! `alpha = beta = 1` and ignore other weight values in a sweep; the other
//! methods ignore `[dpm]`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dpm_core::pdes::{PdeId, PdeSpec};
use dpm_core::trainer::{DpmParams, Method, OptimizerKind, TrainerConfig};
use serde::Deserialize;

pub const OUTPUT_DIR_ENV: &str = "DPM_OUTPUT_DIR";
pub const JOBS_ENV: &str = "DPM_JOBS";

/// Problems with the configuration itself, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn axis<T: Clone>(v: &Option<OneOrMany<T>>, default: T) -> Vec<T> {
    v.as_ref().map_or_else(|| vec![default], OneOrMany::values)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    experiment: RawExperiment,
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    trainer: RawTrainer,
    dpm: Option<RawDpm>,
    #[serde(default)]
    sampling: RawSampling,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    pde: OneOrMany<String>,
    method: OneOrMany<String>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    depth: Option<OneOrMany<usize>>,
    width: Option<OneOrMany<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrainer {
    optimizer: Option<OneOrMany<String>>,
    learning_rate: Option<OneOrMany<f64>>,
    alpha: Option<OneOrMany<f64>>,
    beta: Option<OneOrMany<f64>>,
    max_epochs: Option<OneOrMany<usize>>,
    patience: Option<usize>,
    min_improvement: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDpm {
    epsilon: Option<OneOrMany<f64>>,
    delta: Option<OneOrMany<f64>>,
    w: Option<OneOrMany<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    n_u: Option<OneOrMany<usize>>,
    n_f: Option<OneOrMany<usize>>,
}

/// One fully resolved experiment: a single value for every setting, run once
/// per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pde: PdeId,
    pub method: Method,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub depth: usize,
    pub width: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_improvement: f64,
    /// Present exactly for the DPM methods.
    pub dpm: Option<DpmParams>,
    pub n_u: usize,
    pub n_f: usize,
}

impl ExperimentConfig {
    /// Paper-default settings for `pde` and `method`.
    pub fn new(pde: PdeId, method: Method) -> Self {
        let t = TrainerConfig::new(method);
        Self {
            pde,
            method,
            seeds: vec![0],
            output_dir: PathBuf::from("runs"),
            depth: 8,
            width: 20,
            optimizer: t.optimizer,
            learning_rate: t.learning_rate,
            alpha: 1.0,
            beta: 1.0,
            max_epochs: t.max_epochs,
            patience: t.patience,
            min_improvement: t.min_improvement,
            dpm: method.uses_dpm().then(DpmParams::default),
            n_u: 100,
            n_f: PdeSpec::get(pde).default_collocation(),
        }
    }

    pub fn trainer(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            method: self.method,
            alpha: self.alpha,
            beta: self.beta,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            max_epochs: self.max_epochs,
            patience: self.patience,
            min_improvement: self.min_improvement,
            seed,
            dpm: self.dpm.unwrap_or_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.uses_dpm() != self.dpm.is_some() {
            return Err(usage(format!(
                "dpm settings must be given exactly for pinn-d1/pinn-d2 (method {})",
                self.method
            )));
        }
        if self.seeds.is_empty() {
            return Err(usage("at least one seed is required"));
        }
        if self.depth == 0 || self.width == 0 {
            return Err(usage("network depth and width must be positive"));
        }
        if self.n_u < 2 {
            return Err(usage("n_u must be at least 2"));
        }
        if self.method.is_regression() && self.n_f == 0 {
            return Err(usage("regression baselines label n_f interior points; n_f must be positive"));
        }
        self.trainer(0)
            .validate()
            .map_err(|e| usage(format!("invalid trainer settings: {e}")))
    }

    /// Directory name shared by all seeds of this configuration.
    pub fn run_name(&self) -> String {
        let mut name = format!(
            "{}x{}-{}-lr{}-a{}-b{}-nu{}-nf{}-ep{}",
            self.depth,
            self.width,
            self.optimizer.as_str(),
            self.learning_rate,
            self.alpha,
            self.beta,
            self.n_u,
            self.n_f,
            self.max_epochs
        );
        if let Some(d) = self.dpm {
            name.push_str(&format!("-eps{}-d{}-w{}", d.epsilon, d.delta, d.w));
        }
        name
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir
            .join(self.pde.as_str())
            .join(self.method.as_str())
            .join(self.run_name())
    }

    /// Serialises as a config file that parses back to the same experiment.
    pub fn to_toml(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let mut s = format!(
            "[experiment]\npde = \"{}\"\nmethod = \"{}\"\nseeds = [{}]\noutput_dir = {}\n\n",
            self.pde,
            self.method,
            seeds.join(", "),
            toml_string(&self.output_dir.to_string_lossy()),
        );
        s.push_str(&format!("[network]\ndepth = {}\nwidth = {}\n\n", self.depth, self.width));
        s.push_str(&format!(
            "[trainer]\noptimizer = \"{}\"\nlearning_rate = {:?}\nalpha = {:?}\nbeta = {:?}\nmax_epochs = {}\npatience = {}\nmin_improvement = {:?}\n\n",
            self.optimizer.as_str(),
            self.learning_rate,
            self.alpha,
            self.beta,
            self.max_epochs,
            self.patience,
            self.min_improvement
        ));
        if let Some(d) = self.dpm {
            s.push_str(&format!(
                "[dpm]\nepsilon = {:?}\ndelta = {:?}\nw = {:?}\n\n",
                d.epsilon, d.delta, d.w
            ));
        }
        s.push_str(&format!("[sampling]\nn_u = {}\nn_f = {}\n", self.n_u, self.n_f));
        s
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

fn parse<T: std::str::FromStr>(v: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| usage(format!("{what}: {e}")))
}

/// Every configuration described by a (possibly multi-valued) config text,
/// in a fixed order with duplicates removed.
pub fn expand(text: &str, base_dir: Option<&Path>) -> Result<Vec<ExperimentConfig>> {
    let raw: RawFile = toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))?;
    let pdes = raw
        .experiment
        .pde
        .values()
        .iter()
        .map(|p| parse::<PdeId>(p, "pde"))
        .collect::<Result<Vec<_>>>()?;
    let methods = raw
        .experiment
        .method
        .values()
        .iter()
        .map(|m| parse::<Method>(m, "method"))
        .collect::<Result<Vec<_>>>()?;
    let optimizers = axis(&raw.trainer.optimizer, "adam".to_owned())
        .iter()
        .map(|o| parse::<OptimizerKind>(o, "optimizer"))
        .collect::<Result<Vec<_>>>()?;
    let defaults = DpmParams::default();
    let dpm = raw.dpm.unwrap_or_default();
    let seeds = raw.experiment.seeds.unwrap_or_else(|| vec![0]);
    let mut output_dir = std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .or(raw.experiment.output_dir)
        .unwrap_or_else(|| PathBuf::from("runs"));
    if let (Some(base), true) = (base_dir, output_dir.is_relative()) {
        if std::env::var_os(OUTPUT_DIR_ENV).is_none() {
            output_dir = base.join(output_dir);
        }
    }

    let mut out: Vec<ExperimentConfig> = Vec::new();
    let mut seen = BTreeSet::new();
    for &pde in &pdes {
        for &method in &methods {
            for depth in axis(&raw.network.depth, 8) {
                for width in axis(&raw.network.width, 20) {
                    for &optimizer in &optimizers {
                        for learning_rate in axis(&raw.trainer.learning_rate, 5e-3) {
                            for alpha in axis(&raw.trainer.alpha, 1.0) {
                                for beta in axis(&raw.trainer.beta, 1.0) {
                                    for max_epochs in axis(&raw.trainer.max_epochs, 10_000) {
                                        for epsilon in axis(&dpm.epsilon, defaults.epsilon) {
                                            for delta in axis(&dpm.delta, defaults.delta) {
                                                for w in axis(&dpm.w, defaults.w) {
                                                    for n_u in axis(&raw.sampling.n_u, 100) {
                                                        let n_f_default = PdeSpec::get(pde).default_collocation();
                                                        for n_f in axis(&raw.sampling.n_f, n_f_default) {
                                                            let dpm_method = method.uses_dpm();
                                                            let cfg = ExperimentConfig {
                                                                pde,
                                                                method,
                                                                seeds: seeds.clone(),
                                                                output_dir: output_dir.clone(),
                                                                depth,
                                                                width,
                                                                optimizer,
                                                                learning_rate,
                                                                alpha: if dpm_method { 1.0 } else { alpha },
                                                                beta: if dpm_method { 1.0 } else { beta },
                                                                max_epochs,
                                                                patience: raw.trainer.patience.unwrap_or(50),
                                                                min_improvement: raw.trainer.min_improvement.unwrap_or(1e-5),
                                                                dpm: dpm_method.then_some(DpmParams { epsilon, delta, w }),
                                                                n_u,
                                                                n_f,
                                                            };
                                                            if seen.insert(cfg.to_toml()) {
                                                                out.push(cfg);
                                                            }
                                                        }
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(usage("the configuration grid is empty"));
    }
    for cfg in &out {
        cfg.validate()?;
    }
    Ok(out)
}

/// Parses a single-experiment config; arrays (other than `seeds`) are rejected,
/// and DPM methods must not set loss weights other than 1.
pub fn parse_single(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig> {
    let raw: toml::Table = toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))?;
    for (section, body) in &raw {
        if let Some(table) = body.as_table() {
            for (key, value) in table {
                if value.is_array() && !(section == "experiment" && key == "seeds") {
                    return Err(usage(format!(
                        "`{section}.{key}` is a list; use `dpm sweep` for grids"
                    )));
                }
            }
        }
    }
    let mut cfgs = expand(text, base_dir)?;
    let cfg = cfgs.remove(0);
    if cfg.method.uses_dpm() {
        let trainer = raw.get("trainer").and_then(|t| t.as_table());
        for key in ["alpha", "beta"] {
            if let Some(v) = trainer.and_then(|t| t.get(key)) {
                if v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) != Some(1.0) {
                    return Err(usage(format!("{} trains with {key} = 1", cfg.method.label())));
                }
            }
        }
    }
    Ok(cfg)
}

pub fn load_single(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(|e| usage(format!("{e:#}")))?;
    parse_single(&text, path.parent())
}

pub fn load_grid(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(|e| usage(format!("{e:#}")))?;
    expand(&text, path.parent())
}

/// Worker count from `DPM_JOBS`, falling back to `default`.
pub fn jobs_from_env(default: usize) -> Result<usize> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => bail!(UsageError(format!("{JOBS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(default),
    }
}
