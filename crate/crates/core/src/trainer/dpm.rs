//! Case selection between the data gradient, the combined gradient and the
//! pulled gradient, plus the multiplicative control of the pull target `delta`.
//!
//! When the two loss gradients conflict (`g_Lu . g_Lf < 0`) and the residual
//! loss exceeds `epsilon`, the update direction becomes `g_L + v*` with
//!
//! ```text
//! v* = ((delta - g_L . g_Lf) / |g_Lf|^2) g_Lf
//! ```
//!
//! the minimum-norm vector with `(g_L + v*) . g_Lf = delta`.

use crate::diffnet::FlatGradient;
use crate::trainer::GradientBundle;
use crate::{Error, Result};

pub const DELTA_MIN: f64 = 1e-8;
pub const DELTA_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DpmCase {
    OnlyDataGrad,
    CombinedGrad,
    PulledGrad,
}

impl DpmCase {
    pub fn as_str(self) -> &'static str {
        match self {
            DpmCase::OnlyDataGrad => "only_data",
            DpmCase::CombinedGrad => "combined",
            DpmCase::PulledGrad => "pulled",
        }
    }
}

impl std::str::FromStr for DpmCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "only_data" => Ok(DpmCase::OnlyDataGrad),
            "combined" => Ok(DpmCase::CombinedGrad),
            "pulled" => Ok(DpmCase::PulledGrad),
            _ => Err(Error::InvalidArgument(format!("unknown case `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpmState {
    pub epsilon: f64,
    pub delta: f64,
    pub w: f64,
    pub last_case: Option<DpmCase>,
}

impl DpmState {
    pub fn new(epsilon: f64, delta: f64, w: f64) -> Result<Self> {
        if !(epsilon > 0.0 && delta > 0.0 && w > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dpm needs epsilon > 0, delta > 0, w > 1 (got {epsilon}, {delta}, {w})"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            w,
            last_case: None,
        })
    }
}

pub fn manipulation_vector(g_l: &FlatGradient, g_lf: &FlatGradient, delta: f64) -> Result<FlatGradient> {
    if g_l.len() != g_lf.len() {
        return Err(Error::ShapeMismatch {
            expected: g_lf.len(),
            actual: g_l.len(),
        });
    }
    let norm_sq = g_lf.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::DegeneratePull);
    }
    let coef = (-g_l.dot(g_lf) + delta) / norm_sq;
    Ok(FlatGradient::from_vec(g_lf.values.iter().map(|g| coef * g).collect()))
}

pub fn select_gradient(bundle: &GradientBundle, state: &DpmState) -> Result<(FlatGradient, DpmCase)> {
    if bundle.losses.l_f <= state.epsilon {
        return Ok((bundle.g_lu.clone(), DpmCase::OnlyDataGrad));
    }
    if bundle.g_lu.dot(&bundle.g_lf) >= 0.0 {
        return Ok((bundle.g_l.clone(), DpmCase::CombinedGrad));
    }
    let v = manipulation_vector(&bundle.g_l, &bundle.g_lf, state.delta)?;
    Ok((v.combine(1.0, &bundle.g_l, 1.0), DpmCase::PulledGrad))
}

/// Grows `delta` by `w` while the residual loss is above `epsilon`, shrinks it
/// otherwise; the result is clamped to `[DELTA_MIN, DELTA_MAX]`.
pub fn update_delta(state: &DpmState, l_f: f64) -> DpmState {
    let excess = l_f - state.epsilon;
    let delta = if excess > 0.0 {
        state.w * state.delta
    } else {
        state.delta / state.w
    };
    DpmState {
        delta: delta.clamp(DELTA_MIN, DELTA_MAX),
        ..*state
    }
}
