//! Jet propagation and its adjoint.
//!
//! Activations are stored as `rows x 4n` blocks: for each row the four
//! consecutive `n`-wide blocks hold the value and its `x`, `t` and `xx`
//! derivatives. With `a = tanh(z)`, `s = 1 - a^2` and `a'' = -2 a s` one layer maps
//!
//! ```text
//! value -> a,  dx -> s z_x,  dt -> s z_t,  dxx -> s z_xx + a'' z_x^2
//! ```
//!
//! The adjoint pass differentiates those four rules once more, which is where
//! `tanh'''` shows up.

use super::kernels::{affine, outer_add, transpose_mul_add};
use super::{FlatGradient, NetworkParams, CHUNK};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JetField {
    Value = 0,
    Dx = 1,
    Dt = 2,
    Dxx = 3,
}

impl JetField {
    pub const ALL: [JetField; 4] = [JetField::Value, JetField::Dx, JetField::Dt, JetField::Dxx];
}

/// `(u, u_x, u_t, u_xx)` at one point, one entry per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub u: Vec<f64>,
    pub du_dx: Vec<f64>,
    pub du_dt: Vec<f64>,
    pub d2u_dx2: Vec<f64>,
}

impl Jet {
    pub fn zeros(channels: usize) -> Self {
        Self {
            u: vec![0.0; channels],
            du_dx: vec![0.0; channels],
            du_dt: vec![0.0; channels],
            d2u_dx2: vec![0.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.u.len()
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.du_dx, &self.du_dt, &self.d2u_dx2]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// A batch of jets (or of adjoints on jet fields), laid out channel, field, sample.
#[derive(Debug, Clone, PartialEq)]
pub struct JetBatch {
    channels: usize,
    len: usize,
    data: Vec<f64>,
}

impl JetBatch {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Self {
            channels,
            len,
            data: vec![0.0; channels * 4 * len],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn offset(&self, field: JetField, channel: usize) -> usize {
        (channel * 4 + field as usize) * self.len
    }

    pub fn field(&self, field: JetField, channel: usize) -> &[f64] {
        let o = self.offset(field, channel);
        &self.data[o..o + self.len]
    }

    pub fn field_mut(&mut self, field: JetField, channel: usize) -> &mut [f64] {
        let o = self.offset(field, channel);
        &mut self.data[o..o + self.len]
    }

    pub fn get(&self, field: JetField, channel: usize, sample: usize) -> f64 {
        self.data[self.offset(field, channel) + sample]
    }

    pub fn set(&mut self, field: JetField, channel: usize, sample: usize, value: f64) {
        let o = self.offset(field, channel);
        self.data[o + sample] = value;
    }

    pub fn point(&self, sample: usize) -> Jet {
        let pick = |f| (0..self.channels).map(|c| self.get(f, c, sample)).collect();
        Jet {
            u: pick(JetField::Value),
            du_dx: pick(JetField::Dx),
            du_dt: pick(JetField::Dt),
            d2u_dx2: pick(JetField::Dxx),
        }
    }

    fn samples(&self, start: usize, end: usize) -> JetBatch {
        let mut out = JetBatch::zeros(self.channels, end - start);
        for c in 0..self.channels {
            for f in JetField::ALL {
                out.field_mut(f, c)
                    .copy_from_slice(&self.field(f, c)[start..end]);
            }
        }
        out
    }
}

fn check_inputs(params: &NetworkParams) -> Result<()> {
    if params.spec().input_dim != 2 {
        return Err(Error::ShapeMismatch {
            expected: 2,
            actual: params.spec().input_dim,
        });
    }
    Ok(())
}

/// Seeded input block `2 x 4n`: normalised coordinates plus their derivatives.
fn seed_inputs(params: &NetworkParams, inputs: &[(f64, f64)]) -> Vec<f64> {
    let n = inputs.len();
    let m = 4 * n;
    let map = params.input_map();
    let mut seed = vec![0.0; 2 * m];
    for (j, &(x, t)) in inputs.iter().enumerate() {
        seed[j] = map.scale[0] * (x - map.shift[0]);
        seed[n + j] = map.scale[0];
        seed[m + j] = map.scale[1] * (t - map.shift[1]);
        seed[m + 2 * n + j] = map.scale[1];
    }
    seed
}

/// Forward pass over one chunk that keeps everything the adjoint pass needs.
pub struct JetTape<'p> {
    params: &'p NetworkParams,
    n: usize,
    seed: Vec<f64>,
    /// Pre-activations per hidden layer; the value block holds `tanh(z)` instead of `z`.
    pre: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    output: JetBatch,
}

impl<'p> JetTape<'p> {
    pub fn record(params: &'p NetworkParams, inputs: &[(f64, f64)]) -> Result<Self> {
        check_inputs(params)?;
        let spec = *params.spec();
        let n = inputs.len();
        let m = 4 * n;
        let seed = seed_inputs(params, inputs);
        let mut pre = Vec::with_capacity(spec.depth);
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(spec.depth);

        for l in 1..=spec.depth {
            let lay = params.layers()[l - 1];
            let prev = if l == 1 { &seed } else { &hidden[l - 2] };
            let mut z = vec![0.0; lay.rows * m];
            affine(
                params.weight(l - 1),
                params.bias(l - 1),
                lay.rows,
                lay.cols,
                prev,
                m,
                n,
                &mut z,
            );
            let mut h = vec![0.0; lay.rows * m];
            for i in 0..lay.rows {
                let zr = &mut z[i * m..(i + 1) * m];
                let hr = &mut h[i * m..(i + 1) * m];
                for j in 0..n {
                    let a = zr[j].tanh();
                    // the adjoint pass only needs tanh(z), so keep it in place of z
                    zr[j] = a;
                    let s = 1.0 - a * a;
                    let a2 = -2.0 * a * s;
                    let zx = zr[n + j];
                    hr[j] = a;
                    hr[n + j] = s * zx;
                    hr[2 * n + j] = s * zr[2 * n + j];
                    hr[3 * n + j] = s * zr[3 * n + j] + a2 * zx * zx;
                }
            }
            if spec.has_skip(l) {
                for (o, p) in h.iter_mut().zip(prev) {
                    *o += p;
                }
            }
            pre.push(z);
            hidden.push(h);
        }

        let last = params.layers()[spec.depth];
        let mut output = JetBatch::zeros(last.rows, n);
        affine(
            params.weight(spec.depth),
            params.bias(spec.depth),
            last.rows,
            last.cols,
            &hidden[spec.depth - 1],
            m,
            n,
            &mut output.data,
        );
        Ok(Self {
            params,
            n,
            seed,
            pre,
            hidden,
            output,
        })
    }

    pub fn output(&self) -> &JetBatch {
        &self.output
    }

    /// Accumulates `d(sum adjoint . jet) / d(theta)` into `grad`.
    pub fn backward(&self, adjoint: &JetBatch, grad: &mut [f64]) -> Result<()> {
        let params = self.params;
        let spec = *params.spec();
        if adjoint.channels != self.output.channels || adjoint.len != self.n {
            return Err(Error::ShapeMismatch {
                expected: self.output.data.len(),
                actual: adjoint.data.len(),
            });
        }
        if grad.len() != params.len() {
            return Err(Error::ShapeMismatch {
                expected: params.len(),
                actual: grad.len(),
            });
        }
        let n = self.n;
        let m = 4 * n;

        let last = params.layers()[spec.depth];
        let top = &self.hidden[spec.depth - 1];
        outer_add(
            &adjoint.data,
            last.rows,
            top,
            last.cols,
            m,
            &mut grad[last.weight..last.bias],
        );
        for i in 0..last.rows {
            grad[last.bias + i] += adjoint.data[i * m..i * m + n].iter().sum::<f64>();
        }
        let mut g = vec![0.0; last.cols * m];
        transpose_mul_add(params.weight(spec.depth), last.rows, last.cols, &adjoint.data, m, &mut g);

        for l in (1..=spec.depth).rev() {
            let lay = params.layers()[l - 1];
            let z = &self.pre[l - 1];
            let mut gz = vec![0.0; lay.rows * m];
            for i in 0..lay.rows {
                let zr = &z[i * m..(i + 1) * m];
                let gr = &g[i * m..(i + 1) * m];
                let out = &mut gz[i * m..(i + 1) * m];
                for j in 0..n {
                    let a = zr[j];
                    let s = 1.0 - a * a;
                    let a2 = -2.0 * a * s;
                    let a3 = s * (4.0 * a * a - 2.0 * s);
                    let (zx, zt, zxx) = (zr[n + j], zr[2 * n + j], zr[3 * n + j]);
                    let (gv, gx, gt, gxx) = (gr[j], gr[n + j], gr[2 * n + j], gr[3 * n + j]);
                    out[j] = gv * s + gx * a2 * zx + gt * a2 * zt + gxx * (a2 * zxx + a3 * zx * zx);
                    out[n + j] = gx * s + 2.0 * gxx * a2 * zx;
                    out[2 * n + j] = gt * s;
                    out[3 * n + j] = gxx * s;
                }
            }
            let input = if l == 1 { &self.seed } else { &self.hidden[l - 2] };
            outer_add(&gz, lay.rows, input, lay.cols, m, &mut grad[lay.weight..lay.bias]);
            for i in 0..lay.rows {
                grad[lay.bias + i] += gz[i * m..i * m + n].iter().sum::<f64>();
            }
            if l >= 2 {
                let mut gh = if spec.has_skip(l) {
                    g.clone()
                } else {
                    vec![0.0; lay.cols * m]
                };
                transpose_mul_add(params.weight(l - 1), lay.rows, lay.cols, &gz, m, &mut gh);
                g = gh;
            }
        }
        Ok(())
    }
}

/// Network outputs, sample-major: entry `j * channels + c`.
pub fn forward_flat(params: &NetworkParams, inputs: &[(f64, f64)]) -> Result<Vec<f64>> {
    check_inputs(params)?;
    let spec = *params.spec();
    let channels = spec.output_dim;
    let mut out = vec![0.0; inputs.len() * channels];
    let map = params.input_map();
    for (ci, chunk) in inputs.chunks(CHUNK).enumerate() {
        let n = chunk.len();
        let mut prev = vec![0.0; 2 * n];
        for (j, &(x, t)) in chunk.iter().enumerate() {
            prev[j] = map.scale[0] * (x - map.shift[0]);
            prev[n + j] = map.scale[1] * (t - map.shift[1]);
        }
        for l in 1..=spec.depth {
            let lay = params.layers()[l - 1];
            let mut h = vec![0.0; lay.rows * n];
            affine(params.weight(l - 1), params.bias(l - 1), lay.rows, lay.cols, &prev, n, n, &mut h);
            for v in h.iter_mut() {
                *v = v.tanh();
            }
            if spec.has_skip(l) {
                for (o, p) in h.iter_mut().zip(&prev) {
                    *o += p;
                }
            }
            prev = h;
        }
        let last = params.layers()[spec.depth];
        let mut y = vec![0.0; last.rows * n];
        affine(params.weight(spec.depth), params.bias(spec.depth), last.rows, last.cols, &prev, n, n, &mut y);
        let base = ci * CHUNK;
        for c in 0..channels {
            for j in 0..n {
                out[(base + j) * channels + c] = y[c * n + j];
            }
        }
    }
    Ok(out)
}

pub fn forward(params: &NetworkParams, inputs: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
    let channels = params.spec().output_dim;
    let flat = forward_flat(params, inputs)?;
    Ok(flat.chunks(channels).map(<[f64]>::to_vec).collect())
}

pub fn forward_jet(params: &NetworkParams, inputs: &[(f64, f64)]) -> Result<Vec<Jet>> {
    let mut jets = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(CHUNK) {
        let tape = JetTape::record(params, chunk)?;
        jets.extend((0..chunk.len()).map(|j| tape.output().point(j)));
    }
    Ok(jets)
}

/// Gradient of `sum_j sum_fields adjoint . jet` with respect to the parameters.
pub fn grad_params(
    params: &NetworkParams,
    inputs: &[(f64, f64)],
    adjoints: &JetBatch,
) -> Result<FlatGradient> {
    if adjoints.len() != inputs.len() || adjoints.channels() != params.spec().output_dim {
        return Err(Error::ShapeMismatch {
            expected: inputs.len() * params.spec().output_dim,
            actual: adjoints.len() * adjoints.channels(),
        });
    }
    let mut grad = FlatGradient::zeros(params.len());
    for (ci, chunk) in inputs.chunks(CHUNK).enumerate() {
        let start = ci * CHUNK;
        let tape = JetTape::record(params, chunk)?;
        tape.backward(&adjoints.samples(start, start + chunk.len()), &mut grad.values)?;
    }
    Ok(grad)
}
