use ndarray::{Array1, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Pre-normalization norms below this are rejected in unit-norm mode.
pub const MIN_NORM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Raw,
    UnitNorm,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }
}

/// One affine layer, `y = x W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vector,
}

impl Layer {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Matrix::zeros((input, output)),
            bias: Vector::zeros(output),
        }
    }
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(net: &EncoderNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::Shape("gradient layer counts differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if a.weights.dim() != b.weights.dim() || a.bias.len() != b.bias.len() {
                return Err(Error::Shape("gradient shapes differ".into()));
            }
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
        Ok(())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

/// Intermediate values recorded by [`EncoderNet::forward_cached`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    output: Matrix,
    norms: Option<Vector>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

/// Fully connected encoder: activation after every hidden layer, affine
/// output layer, optional projection onto the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderNet {
    layers: Vec<Layer>,
    activation: Activation,
    output: OutputMode,
}

impl EncoderNet {
    /// He-initialized network with the given layer sizes
    /// (`[input, hidden.., output]`) and zero biases.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        activation: Activation,
        output: OutputMode,
        rng: &mut R,
    ) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let sd = (2.0 / w[0] as f64).sqrt();
                Layer {
                    weights: Matrix::from_shape_simple_fn((w[0], w[1]), || {
                        sd * rng.sample::<f64, _>(StandardNormal)
                    }),
                    bias: Vector::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self {
            layers,
            activation,
            output,
        })
    }

    /// Network with all parameters zero.
    pub fn zeros(sizes: &[usize], activation: Activation, output: OutputMode) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self {
            layers,
            activation,
            output,
        })
    }

    pub fn from_layers(
        layers: Vec<Layer>,
        activation: Activation,
        output: OutputMode,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("encoder needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.ncols() {
                return Err(Error::Shape(format!(
                    "layer {i}: bias length {} vs {} outputs",
                    l.bias.len(),
                    l.weights.ncols()
                )));
            }
            if i > 0 && layers[i - 1].weights.ncols() != l.weights.nrows() {
                return Err(Error::Shape(format!(
                    "layer {i} input does not match previous output"
                )));
            }
        }
        Ok(Self {
            layers,
            activation,
            output,
        })
    }

    fn check_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn output_mode(&self) -> OutputMode {
        self.output
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.weights.ncols()));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = it.next().expect("length checked");
            }
            for b in l.bias.iter_mut() {
                *b = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn forward(&self, batch: ArrayView2<'_, f64>) -> Result<Matrix> {
        Ok(self.forward_cached(batch)?.output)
    }

    pub fn forward_cached(&self, batch: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "encoder expects {} input columns, got {}",
                self.input_dim(),
                batch.ncols()
            )));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut h = batch.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = h.dot(&layer.weights) + &layer.bias;
            inputs.push(h);
            if i < last {
                let act = self.activation;
                h = z.mapv(|v| act.apply(v));
                pre_activations.push(z);
            } else {
                h = z;
            }
        }
        let (output, norms) = match self.output {
            OutputMode::Raw => (h, None),
            OutputMode::UnitNorm => {
                let norms: Vector = h.map_axis(Axis(1), |r| r.dot(&r).sqrt());
                if let Some(&n) = norms.iter().find(|&&n| !(n >= MIN_NORM)) {
                    return Err(Error::ZeroNorm(n));
                }
                let mut out = h;
                for (mut row, n) in out.axis_iter_mut(Axis(0)).zip(norms.iter()) {
                    row.mapv_inplace(|v| v / n);
                }
                (out, Some(norms))
            }
        };
        Ok(ForwardCache {
            inputs,
            pre_activations,
            output,
            norms,
        })
    }

    /// Parameter gradients of `Σ upstream ⊙ output` for a cached forward pass.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<Gradients> {
        if upstream.dim() != cache.output.dim() {
            return Err(Error::Shape(format!(
                "upstream gradient {:?} does not match output {:?}",
                upstream.dim(),
                cache.output.dim()
            )));
        }
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::Shape(
                "cache was produced by a different network".into(),
            ));
        }
        // through the normalization: dz = (g - y (yᵀg)) / ‖z‖
        let mut grad = match &cache.norms {
            None => upstream.to_owned(),
            Some(norms) => {
                let mut g = upstream.to_owned();
                for ((mut grow, yrow), n) in g
                    .axis_iter_mut(Axis(0))
                    .zip(cache.output.axis_iter(Axis(0)))
                    .zip(norms.iter())
                {
                    let proj = grow.dot(&yrow);
                    Zip::from(&mut grow)
                        .and(&yrow)
                        .for_each(|gv, &yv| *gv = (*gv - yv * proj) / n);
                }
                g
            }
        };
        let mut out = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let weights = cache.inputs[i].t().dot(&grad);
            let bias: Array1<f64> = grad.sum_axis(Axis(0));
            if i > 0 {
                let mut below = grad.dot(&layer.weights.t());
                let act = self.activation;
                Zip::from(&mut below)
                    .and(&cache.pre_activations[i - 1])
                    .for_each(|g, &z| *g *= act.derivative(z));
                grad = below;
            }
            out.push(Layer { weights, bias });
        }
        out.reverse();
        Ok(Gradients { layers: out })
    }
}
