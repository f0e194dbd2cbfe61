use serde::{Deserialize, Serialize};

use super::net::{EncoderNet, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Gradients,
    second: Gradients,
}

impl AdamState {
    pub fn new(net: &EncoderNet, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `net` in place.
pub fn adam_step(net: &mut EncoderNet, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    let layers = net.layers_mut();
    if grads.layers.len() != layers.len() || state.first.layers.len() != layers.len() {
        return Err(Error::Shape(
            "gradient/optimizer layer count mismatch".into(),
        ));
    }
    for ((l, g), m) in layers.iter().zip(&grads.layers).zip(&state.first.layers) {
        if l.weights.dim() != g.weights.dim()
            || l.bias.len() != g.bias.len()
            || m.weights.dim() != l.weights.dim()
        {
            return Err(Error::Shape(
                "gradient/optimizer shapes do not match parameters".into(),
            ));
        }
    }
    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);

    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let mhat = *m / c1;
        let vhat = *v / c2;
        *p -= learning_rate * mhat / (vhat.sqrt() + epsilon);
    };
    for (((layer, g), m), v) in layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.first.layers.iter_mut())
        .zip(state.second.layers.iter_mut())
    {
        ndarray::Zip::from(&mut layer.weights)
            .and(&g.weights)
            .and(&mut m.weights)
            .and(&mut v.weights)
            .for_each(|p, &g, m, v| update(p, g, m, v));
        ndarray::Zip::from(&mut layer.bias)
            .and(&g.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{Activation, OutputMode};
    use crate::numerics::SeedRng;

    fn net() -> EncoderNet {
        EncoderNet::new(
            &[3, 4, 2],
            Activation::Relu,
            OutputMode::Raw,
            &mut SeedRng::new(5),
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut n = net();
        let before = n.flat_params();
        let mut state = AdamState::new(&n, AdamConfig::default());
        let g = Gradients::zeros_like(&n);
        for _ in 0..3 {
            adam_step(&mut n, &g, &mut state).unwrap();
        }
        assert_eq!(n.flat_params(), before);
        assert_eq!(state.step(), 3);
    }

    #[test]
    fn first_step_moves_each_param_by_learning_rate() {
        // m̂ = g, v̂ = g², so the step is lr · g / (|g| + ε)
        let mut n = net();
        let before = n.flat_params();
        let mut g = Gradients::zeros_like(&n);
        for l in &mut g.layers {
            l.weights.fill(0.7);
            l.bias.fill(-2.0);
        }
        let cfg = AdamConfig {
            learning_rate: 0.01,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(&n, cfg);
        adam_step(&mut n, &g, &mut state).unwrap();
        let gflat = g.flatten();
        for ((a, b), gv) in n.flat_params().iter().zip(&before).zip(&gflat) {
            let step = b - a;
            assert!((step.abs() - 0.01).abs() < 1e-7, "{step}");
            assert_eq!(step.signum(), gv.signum());
        }
    }

    #[test]
    fn nan_gradient_rejected() {
        let mut n = net();
        let mut g = Gradients::zeros_like(&n);
        g.layers[0].weights[[0, 0]] = f64::NAN;
        let mut state = AdamState::new(&n, AdamConfig::default());
        let err = adam_step(&mut n, &g, &mut state).unwrap_err();
        assert_eq!(err.to_string(), "non-finite gradient");
    }

    #[test]
    fn deterministic_runs() {
        let run = || {
            let mut n = net();
            let mut state = AdamState::new(&n, AdamConfig::default());
            let mut g = Gradients::zeros_like(&n);
            for (i, l) in g.layers.iter_mut().enumerate() {
                l.weights.fill(0.1 * (i + 1) as f64);
            }
            for _ in 0..5 {
                adam_step(&mut n, &g, &mut state).unwrap();
            }
            n.flat_params()
        };
        assert_eq!(run(), run());
    }
}
