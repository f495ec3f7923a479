//! Full-batch training with early stopping on the validation error.

use std::io::Write;

use crate::diffnet::{forward_flat, FlatGradient, NetworkParams};
use crate::metrics::{magnitudes, rel_l2};
use crate::pdes::PdeSpec;
use crate::sampling::{EvalGrid, TrainSet};
use crate::trainer::{
    compute_bundle, optimizer_step, select_gradient, update_delta, DpmCase, DpmState, Optimizer,
    OptimizerKind,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Pinn,
    PinnR,
    PinnD1,
    PinnD2,
    FcRegression,
    FcrRegression,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Pinn,
        Method::PinnR,
        Method::PinnD1,
        Method::PinnD2,
        Method::FcRegression,
        Method::FcrRegression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pinn => "pinn",
            Method::PinnR => "pinn-r",
            Method::PinnD1 => "pinn-d1",
            Method::PinnD2 => "pinn-d2",
            Method::FcRegression => "fc",
            Method::FcrRegression => "fc-r",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Pinn => "PINN",
            Method::PinnR => "PINN-R",
            Method::PinnD1 => "PINN-D1",
            Method::PinnD2 => "PINN-D2",
            Method::FcRegression => "FC",
            Method::FcrRegression => "FC-R",
        }
    }

    /// Whether the network uses identity skips between hidden layers.
    pub fn residual(self) -> bool {
        !matches!(self, Method::Pinn | Method::FcRegression)
    }

    pub fn uses_dpm(self) -> bool {
        matches!(self, Method::PinnD1 | Method::PinnD2)
    }

    pub fn is_regression(self) -> bool {
        matches!(self, Method::FcRegression | Method::FcrRegression)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpmParams {
    pub epsilon: f64,
    pub delta: f64,
    pub w: f64,
}

impl Default for DpmParams {
    fn default() -> Self {
        Self {
            epsilon: 0.001,
            delta: 0.01,
            w: 1.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_improvement: f64,
    pub seed: u64,
    pub dpm: DpmParams,
}

impl TrainerConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            alpha: 1.0,
            beta: 1.0,
            learning_rate: 5e-3,
            optimizer: OptimizerKind::Adam,
            max_epochs: 10_000,
            patience: 50,
            min_improvement: 1e-5,
            seed: 0,
            dpm: DpmParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.uses_dpm() && (self.alpha != 1.0 || self.beta != 1.0) {
            return Err(Error::InvalidArgument(format!(
                "{} requires alpha = beta = 1 (got {}, {})",
                self.method.label(),
                self.alpha,
                self.beta
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
        }
        if self.min_improvement < 0.0 {
            return Err(Error::InvalidArgument("min_improvement must be non-negative".into()));
        }
        if self.method.uses_dpm() {
            DpmState::new(self.dpm.epsilon, self.dpm.delta, self.dpm.w)?;
        }
        Ok(())
    }
}

/// One epoch, recorded at the parameters the epoch started from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub l_u: f64,
    pub l_f: f64,
    pub loss: f64,
    pub delta: Option<f64>,
    pub case: Option<DpmCase>,
    pub val_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    Patience,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    pub rows: Vec<HistoryRow>,
    pub best_epoch: Option<usize>,
    pub best_val_error: Option<f64>,
    pub stop_reason: StopReason,
}

impl TrainingHistory {
    pub const CSV_HEADER: [&'static str; 7] = ["epoch", "L_u", "L_f", "L", "delta", "case", "val_error"];

    fn new() -> Self {
        Self {
            rows: Vec::new(),
            best_epoch: None,
            best_val_error: None,
            stop_reason: StopReason::MaxEpochs,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.epoch.to_string(),
                format!("{:?}", r.l_u),
                format!("{:?}", r.l_f),
                format!("{:?}", r.loss),
                r.delta.map(|d| format!("{d:?}")).unwrap_or_default(),
                r.case.map(|c| c.as_str().to_owned()).unwrap_or_default(),
                format!("{:?}", r.val_error),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let bad = |d: String| Error::Format { what: "history", detail: d };
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let mut h = Self::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 7 {
                return Err(bad(format!("expected 7 fields, got {}", rec.len())));
            }
            h.rows.push(HistoryRow {
                epoch: rec[0].parse().map_err(|e| bad(format!("epoch: {e}")))?,
                l_u: num(&rec[1])?,
                l_f: num(&rec[2])?,
                loss: num(&rec[3])?,
                delta: if rec[4].is_empty() { None } else { Some(num(&rec[4])?) },
                case: if rec[5].is_empty() { None } else { Some(rec[5].parse()?) },
                val_error: num(&rec[6])?,
            });
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub history: TrainingHistory,
}

/// A run that stopped on an error; carries everything recorded up to that point.
#[derive(Debug, thiserror::Error)]
#[error("training aborted at epoch {epoch}: {reason}")]
pub struct TrainAbort {
    pub epoch: usize,
    #[source]
    pub reason: Error,
    pub history: TrainingHistory,
    pub best: NetworkParams,
}

/// Relative L2 error of the network on `grid` against reference values laid out
/// like `grid.points()` (complex fields are compared by modulus).
pub fn validation_error(
    params: &NetworkParams,
    spec: &PdeSpec,
    grid: &EvalGrid,
    reference: &[f64],
) -> Result<f64> {
    let pred = forward_flat(params, &grid.points())?;
    if pred.len() != reference.len() {
        return Err(Error::ShapeMismatch {
            expected: pred.len(),
            actual: reference.len(),
        });
    }
    if spec.output_channels == 2 {
        rel_l2(&magnitudes(&pred), &magnitudes(reference))
    } else {
        rel_l2(&pred, reference)
    }
}

pub fn train(
    config: &TrainerConfig,
    spec: &PdeSpec,
    initial: NetworkParams,
    train_set: &TrainSet,
    val_grid: &EvalGrid,
    val_reference: &[f64],
) -> std::result::Result<TrainOutcome, Box<TrainAbort>> {
    run(config, spec, initial, train_set, val_grid, val_reference, false)
}

/// Fits `augmented_set` by minimizing the data loss alone.
pub fn train_regression(
    config: &TrainerConfig,
    spec: &PdeSpec,
    initial: NetworkParams,
    augmented_set: &TrainSet,
    val_grid: &EvalGrid,
    val_reference: &[f64],
) -> std::result::Result<TrainOutcome, Box<TrainAbort>> {
    run(config, spec, initial, augmented_set, val_grid, val_reference, true)
}

fn run(
    config: &TrainerConfig,
    spec: &PdeSpec,
    initial: NetworkParams,
    set: &TrainSet,
    val_grid: &EvalGrid,
    val_reference: &[f64],
    data_only: bool,
) -> std::result::Result<TrainOutcome, Box<TrainAbort>> {
    let mut history = TrainingHistory::new();
    let abort = |epoch, reason, history: TrainingHistory, best: NetworkParams| {
        Box::new(TrainAbort {
            epoch,
            reason,
            history,
            best,
        })
    };
    if let Err(e) = config.validate() {
        return Err(abort(0, e, history, initial));
    }
    let mut dpm = if config.method.uses_dpm() {
        let d = config.dpm;
        match DpmState::new(d.epsilon, d.delta, d.w) {
            Ok(s) => Some(s),
            Err(e) => return Err(abort(0, e, history, initial)),
        }
    } else {
        None
    };
    let mut params = initial.clone();
    let mut best = initial;
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;
    let mut opt = Optimizer::new(config.optimizer, params.len());

    for epoch in 0..config.max_epochs {
        let step = (|| -> Result<(FlatGradient, HistoryRow)> {
            let bundle = compute_bundle(&params, set, spec, config.alpha, config.beta)?;
            if !bundle.losses.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss (L_u = {}, L_f = {})",
                    bundle.losses.l_u, bundle.losses.l_f
                )));
            }
            let val_error = validation_error(&params, spec, val_grid, val_reference)?;
            if !val_error.is_finite() {
                return Err(Error::NonFinite("validation error".into()));
            }
            let (grad, case) = match &dpm {
                Some(state) => {
                    let (g, c) = select_gradient(&bundle, state)?;
                    (g, Some(c))
                }
                None if data_only => (bundle.g_lu, None),
                None => (bundle.g_l, None),
            };
            let row = HistoryRow {
                epoch,
                l_u: bundle.losses.l_u,
                l_f: bundle.losses.l_f,
                loss: bundle.losses.total,
                delta: dpm.as_ref().map(|s| s.delta),
                case,
                val_error,
            };
            Ok((grad, row))
        })();
        let (grad, row) = match step {
            Ok(v) => v,
            Err(e) => return Err(abort(epoch, e, history, best)),
        };
        history.rows.push(row);

        if row.val_error < best_val - config.min_improvement {
            best_val = row.val_error;
            best = params.clone();
            history.best_epoch = Some(epoch);
            history.best_val_error = Some(best_val);
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= config.patience {
            history.stop_reason = StopReason::Patience;
            break;
        }

        if let Err(e) = optimizer_step(&mut opt, params.flatten_mut(), &grad, config.learning_rate) {
            return Err(abort(epoch, e, history, best));
        }
        if let Some(state) = dpm.as_mut() {
            state.last_case = row.case;
            if config.method == Method::PinnD2 {
                *state = update_delta(state, row.l_f);
            }
        }
    }
    Ok(TrainOutcome { params: best, history })
}
