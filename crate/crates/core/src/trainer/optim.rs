//! Plain gradient descent and Adam on flat parameter vectors.

use crate::diffnet::FlatGradient;
use crate::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" | "gd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::InvalidArgument(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, step: u64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam {
                m: vec![0.0; len],
                v: vec![0.0; len],
                step: 0,
            },
        }
    }
}

/// Applies one update in place. A non-finite gradient leaves both the
/// parameters and the optimizer state untouched.
pub fn optimizer_step(
    state: &mut Optimizer,
    params: &mut [f64],
    grad: &FlatGradient,
    lr: f64,
) -> Result<()> {
    if grad.len() != params.len() {
        return Err(Error::ShapeMismatch {
            expected: params.len(),
            actual: grad.len(),
        });
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    match state {
        Optimizer::Sgd => {
            for (p, g) in params.iter_mut().zip(&grad.values) {
                *p -= lr * g;
            }
        }
        Optimizer::Adam { m, v, step } => {
            if m.len() != params.len() {
                return Err(Error::ShapeMismatch {
                    expected: params.len(),
                    actual: m.len(),
                });
            }
            *step += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(*step as i32);
            let c2 = 1.0 - ADAM_BETA2.powi(*step as i32);
            for i in 0..params.len() {
                let g = grad.values[i];
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }
    Ok(())
}
