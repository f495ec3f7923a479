//! The data loss `L_u`, the residual loss `L_f` and their parameter gradients.
//!
//! `L_u` is the mean squared misfit over initial/boundary tuples plus, for
//! periodic problems, the mean squared gaps in `u` and `u_x` between paired
//! boundary points. `L_f` is the mean over collocation points of the squared
//! residual summed over channels (`|f|^2` for complex fields).

use crate::diffnet::{FlatGradient, JetBatch, JetField, JetTape, NetworkParams, CHUNK};
use crate::pdes::{PdeSpec, PointJet};
use crate::sampling::TrainSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub l_u: f64,
    pub l_f: f64,
    pub total: f64,
}

impl LossReport {
    pub fn is_finite(&self) -> bool {
        self.l_u.is_finite() && self.l_f.is_finite() && self.total.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub g_lu: FlatGradient,
    pub g_lf: FlatGradient,
    pub g_l: FlatGradient,
    pub losses: LossReport,
}

fn check(params: &NetworkParams, set: &TrainSet, spec: &PdeSpec) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    if params.spec().output_dim != spec.output_channels {
        return Err(Error::ShapeMismatch {
            expected: spec.output_channels,
            actual: params.spec().output_dim,
        });
    }
    if let Some(p) = set.data_points.iter().find(|p| p.target.len() != spec.output_channels) {
        return Err(Error::ShapeMismatch {
            expected: spec.output_channels,
            actual: p.target.len(),
        });
    }
    Ok(())
}

fn put(adj: &mut JetBatch, j: usize, channels: usize, g: &PointJet) {
    for c in 0..channels {
        adj.set(JetField::Value, c, j, g.u[c]);
        adj.set(JetField::Dx, c, j, g.ux[c]);
        adj.set(JetField::Dt, c, j, g.ut[c]);
        adj.set(JetField::Dxx, c, j, g.uxx[c]);
    }
}

fn data_term(params: &NetworkParams, set: &TrainSet, mut grad: Option<&mut [f64]>) -> Result<f64> {
    let channels = params.spec().output_dim;
    let mut loss = 0.0;

    let nd = set.data_points.len();
    if nd > 0 {
        let scale = 1.0 / nd as f64;
        let mut sum = 0.0;
        for chunk in set.data_points.chunks(CHUNK) {
            let inputs: Vec<_> = chunk.iter().map(|p| (p.x, p.t)).collect();
            let tape = JetTape::record(params, &inputs)?;
            let out = tape.output();
            let mut adj = JetBatch::zeros(channels, chunk.len());
            for (j, p) in chunk.iter().enumerate() {
                for c in 0..channels {
                    let e = out.get(JetField::Value, c, j) - p.target[c];
                    sum += e * e;
                    adj.set(JetField::Value, c, j, 2.0 * e * scale);
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                tape.backward(&adj, g)?;
            }
        }
        loss += sum * scale;
    }

    let np = set.periodic_pairs.len();
    if np > 0 {
        let scale = 1.0 / np as f64;
        let mut sum = 0.0;
        for chunk in set.periodic_pairs.chunks(CHUNK / 2) {
            let inputs: Vec<_> = chunk
                .iter()
                .flat_map(|p| [(p.x_left, p.t), (p.x_right, p.t)])
                .collect();
            let tape = JetTape::record(params, &inputs)?;
            let out = tape.output();
            let mut adj = JetBatch::zeros(channels, inputs.len());
            for k in 0..chunk.len() {
                let (l, r) = (2 * k, 2 * k + 1);
                for c in 0..channels {
                    for f in [JetField::Value, JetField::Dx] {
                        let gap = out.get(f, c, l) - out.get(f, c, r);
                        sum += gap * gap;
                        adj.set(f, c, l, 2.0 * gap * scale);
                        adj.set(f, c, r, -2.0 * gap * scale);
                    }
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                tape.backward(&adj, g)?;
            }
        }
        loss += sum * scale;
    }
    Ok(loss)
}

fn residual_term(
    params: &NetworkParams,
    set: &TrainSet,
    spec: &PdeSpec,
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    let n = set.collocation.len();
    if n == 0 {
        return Ok(0.0);
    }
    let channels = spec.output_channels;
    let scale = 1.0 / n as f64;
    let mut sum = 0.0;
    for chunk in set.collocation.chunks(CHUNK) {
        let tape = JetTape::record(params, chunk)?;
        let out = tape.output();
        let mut adj = JetBatch::zeros(channels, chunk.len());
        for (j, &(x, _)) in chunk.iter().enumerate() {
            let mut pj = PointJet::default();
            for c in 0..channels {
                pj.u[c] = out.get(JetField::Value, c, j);
                pj.ux[c] = out.get(JetField::Dx, c, j);
                pj.ut[c] = out.get(JetField::Dt, c, j);
                pj.uxx[c] = out.get(JetField::Dxx, c, j);
            }
            let r = spec.residual_point(x, &pj);
            let mut rbar = [0.0; 2];
            for c in 0..channels {
                sum += r[c] * r[c];
                rbar[c] = 2.0 * r[c] * scale;
            }
            if grad.is_some() {
                put(&mut adj, j, channels, &spec.residual_vjp(x, &pj, rbar));
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            tape.backward(&adj, g)?;
        }
    }
    Ok(sum * scale)
}

pub fn compute_losses(
    params: &NetworkParams,
    set: &TrainSet,
    spec: &PdeSpec,
    alpha: f64,
    beta: f64,
) -> Result<LossReport> {
    check(params, set, spec)?;
    let l_u = data_term(params, set, None)?;
    let l_f = residual_term(params, set, spec, None)?;
    Ok(LossReport {
        l_u,
        l_f,
        total: alpha * l_u + beta * l_f,
    })
}

/// Losses and the gradients of `L_u`, `L_f` and `L = alpha L_u + beta L_f`.
pub fn compute_bundle(
    params: &NetworkParams,
    set: &TrainSet,
    spec: &PdeSpec,
    alpha: f64,
    beta: f64,
) -> Result<GradientBundle> {
    check(params, set, spec)?;
    let mut g_lu = FlatGradient::zeros(params.len());
    let mut g_lf = FlatGradient::zeros(params.len());
    let l_u = data_term(params, set, Some(&mut g_lu.values))?;
    let l_f = residual_term(params, set, spec, Some(&mut g_lf.values))?;
    let g_l = g_lu.combine(alpha, &g_lf, beta);
    Ok(GradientBundle {
        g_lu,
        g_lf,
        g_l,
        losses: LossReport {
            l_u,
            l_f,
            total: alpha * l_u + beta * l_f,
        },
    })
}
