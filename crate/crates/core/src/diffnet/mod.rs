//! Fully-connected and residual tanh networks over `(x, t)` inputs.
//!
//! Every hidden layer computes `h' = tanh(W h + b)`; in the residual variant
//! the hidden-to-hidden layers add the identity skip `h' = tanh(W h + b) + h`.
//! The output layer is affine. Parameters live in one flat vector laid out as
//! `W1` (row-major, `rows = fan_out`), `b1`, `W2`, `b2`, ... so that optimizers
//! and the gradient-pulling rule can work on plain slices.

mod checkpoint;
mod kernels;
mod tape;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use tape::{forward, forward_flat, forward_jet, grad_params, Jet, JetBatch, JetField, JetTape};

/// Number of samples pushed through the network at once.
pub(crate) const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub hidden_width: usize,
    /// Number of hidden layers.
    pub depth: usize,
    pub output_dim: usize,
    pub residual: bool,
}

impl LayerSpec {
    pub fn new(hidden_width: usize, depth: usize, output_dim: usize, residual: bool) -> Self {
        Self {
            input_dim: 2,
            hidden_width,
            depth,
            output_dim,
            residual,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidSpec("depth must be at least 1".into()));
        }
        if self.input_dim == 0 || self.hidden_width == 0 || self.output_dim == 0 {
            return Err(Error::InvalidSpec("all dimensions must be at least 1".into()));
        }
        Ok(())
    }

    /// `(rows, cols)` of each affine map from input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.depth + 1);
        shapes.push((self.hidden_width, self.input_dim));
        for _ in 1..self.depth {
            shapes.push((self.hidden_width, self.hidden_width));
        }
        shapes.push((self.output_dim, self.hidden_width));
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(r, c)| r * c + r).sum()
    }

    /// Whether hidden layer `layer` (1-based) carries an identity skip.
    pub(crate) fn has_skip(&self, layer: usize) -> bool {
        self.residual && layer >= 2 && layer <= self.depth
    }
}

/// Fixed affine normalisation applied to `(x, t)` before the first layer:
/// `x_hat = scale[0] * (x - shift[0])`, likewise for `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputMap {
    pub shift: [f64; 2],
    pub scale: [f64; 2],
}

impl InputMap {
    pub const IDENTITY: InputMap = InputMap {
        shift: [0.0, 0.0],
        scale: [1.0, 1.0],
    };

    /// Maps the box `[x0, x1] x [t0, t1]` onto `[-1, 1]^2`.
    pub fn unit_box(x_range: (f64, f64), t_range: (f64, f64)) -> Self {
        Self {
            shift: [
                0.5 * (x_range.0 + x_range.1),
                0.5 * (t_range.0 + t_range.1),
            ],
            scale: [
                2.0 / (x_range.1 - x_range.0),
                2.0 / (t_range.1 - t_range.0),
            ],
        }
    }
}

impl Default for InputMap {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LayerOffsets {
    pub rows: usize,
    pub cols: usize,
    pub weight: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    spec: LayerSpec,
    input_map: InputMap,
    values: Vec<f64>,
    layers: Vec<LayerOffsets>,
}

fn offsets(spec: &LayerSpec) -> Vec<LayerOffsets> {
    let mut at = 0;
    spec.layer_shapes()
        .into_iter()
        .map(|(rows, cols)| {
            let weight = at;
            let bias = weight + rows * cols;
            at = bias + rows;
            LayerOffsets {
                rows,
                cols,
                weight,
                bias,
            }
        })
        .collect()
}

/// Xavier-uniform weights and zero biases, deterministic in `seed`.
pub fn init_params(spec: LayerSpec, seed: u64) -> Result<NetworkParams> {
    let mut params = NetworkParams::zeros(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in params.layers.clone() {
        let bound = (6.0 / (layer.rows + layer.cols) as f64).sqrt();
        for w in &mut params.values[layer.weight..layer.bias] {
            *w = rng.random_range(-bound..bound);
        }
    }
    Ok(params)
}

impl NetworkParams {
    pub fn zeros(spec: LayerSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            input_map: InputMap::IDENTITY,
            values: vec![0.0; spec.param_count()],
            layers: offsets(&spec),
        })
    }

    /// Rebuilds parameters from a flat vector in the documented layer order.
    pub fn from_flat(spec: LayerSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let expected = spec.param_count();
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            spec,
            input_map: InputMap::IDENTITY,
            values,
            layers: offsets(&spec),
        })
    }

    pub fn with_input_map(mut self, map: InputMap) -> Self {
        self.input_map = map;
        self
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn input_map(&self) -> &InputMap {
        &self.input_map
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flatten(&self) -> &[f64] {
        &self.values
    }

    pub fn flatten_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn layers(&self) -> &[LayerOffsets] {
        &self.layers
    }

    /// Row-major weight matrix of affine layer `index` (0 = input layer).
    pub fn weight(&self, index: usize) -> &[f64] {
        let l = &self.layers[index];
        &self.values[l.weight..l.bias]
    }

    pub fn weight_mut(&mut self, index: usize) -> &mut [f64] {
        let l = self.layers[index];
        &mut self.values[l.weight..l.bias]
    }

    pub fn bias(&self, index: usize) -> &[f64] {
        let l = &self.layers[index];
        &self.values[l.bias..l.bias + l.rows]
    }

    pub fn bias_mut(&mut self, index: usize) -> &mut [f64] {
        let l = self.layers[index];
        &mut self.values[l.bias..l.bias + l.rows]
    }
}

/// Gradient of a scalar loss with respect to the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatGradient {
    pub values: Vec<f64>,
}

impl FlatGradient {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dot(&self, other: &FlatGradient) -> f64 {
        kernels::dot(&self.values, &other.values)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &FlatGradient, b: f64) -> FlatGradient {
        FlatGradient {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
