use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::{activation_backward, activation_forward, Activation};
use crate::nn::conv::{self, conv1d_forward, Conv1d};
use crate::nn::dense::Dense;
use crate::nn::init::xavier_uniform;
use crate::nn::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// One stage of a [`Sequential`] network.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    /// `N × C × L` → `N × C' × L'`.
    Conv(Conv1d<T>),
    /// `N × F` → `N × F'`.
    Dense(Dense<T>),
    Act(Activation),
    /// Nearest-neighbour repeat along the last axis, cropped to `out_len`.
    Upsample { factor: usize, out_len: usize },
    /// `N × C × L` → `N × (C·L)`.
    Flatten,
    /// `N × (C·L)` → `N × C × L`.
    Unflatten { channels: usize, len: usize },
}

/// Architecture-only description of a layer, stored in model manifests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Activation {
        kind: Activation,
    },
    Upsample {
        factor: usize,
        out_len: usize,
    },
    Flatten,
    Unflatten {
        channels: usize,
        len: usize,
    },
}

impl<T: Scalar> Layer<T> {
    pub fn from_spec(spec: &LayerSpec) -> Result<Self> {
        Ok(match *spec {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => Layer::Conv(Conv1d::zeros(in_channels, out_channels, kernel, stride)?),
            LayerSpec::Dense { inputs, outputs } => Layer::Dense(Dense::zeros(inputs, outputs)),
            LayerSpec::Activation { kind } => Layer::Act(kind),
            LayerSpec::Upsample { factor, out_len } => Layer::Upsample { factor, out_len },
            LayerSpec::Flatten => Layer::Flatten,
            LayerSpec::Unflatten { channels, len } => Layer::Unflatten { channels, len },
        })
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv(c) => LayerSpec::Conv {
                in_channels: c.in_channels(),
                out_channels: c.out_channels(),
                kernel: c.kernel(),
                stride: c.stride(),
            },
            Layer::Dense(d) => LayerSpec::Dense {
                inputs: d.inputs(),
                outputs: d.outputs(),
            },
            Layer::Act(kind) => LayerSpec::Activation { kind: *kind },
            Layer::Upsample { factor, out_len } => LayerSpec::Upsample {
                factor: *factor,
                out_len: *out_len,
            },
            Layer::Flatten => LayerSpec::Flatten,
            Layer::Unflatten { channels, len } => LayerSpec::Unflatten {
                channels: *channels,
                len: *len,
            },
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Conv(c) => conv1d_forward(x, c),
            Layer::Dense(d) => d.forward(x),
            Layer::Act(kind) => Ok(activation_forward(x, *kind)),
            Layer::Upsample { factor, out_len } => upsample(x, *factor, *out_len),
            Layer::Flatten => {
                let [n, c, l] = x.dims3()?;
                x.clone().reshape(&[n, c * l])
            }
            Layer::Unflatten { channels, len } => {
                let [n, f] = x.dims2()?;
                if f != channels * len {
                    return Err(Error::shape(format!(
                        "cannot unflatten {f} features into {channels}×{len}"
                    )));
                }
                x.clone().reshape(&[n, *channels, *len])
            }
        }
    }

    /// Returns the input gradient (when requested) and the parameter
    /// gradients in [`Layer::params`] order.
    fn backward(
        &self,
        input: &Tensor<T>,
        output: &Tensor<T>,
        grad_out: &Tensor<T>,
        want_input: bool,
    ) -> Result<(Option<Tensor<T>>, Vec<Tensor<T>>)> {
        match self {
            Layer::Conv(c) => {
                let (gi, gw, gb) = conv::backward_impl(grad_out, input, c, want_input)?;
                Ok((gi, vec![gw, gb]))
            }
            Layer::Dense(d) => {
                let g = d.backward(grad_out, input)?;
                Ok((Some(g.input), vec![g.weight, g.bias]))
            }
            Layer::Act(kind) => Ok((Some(activation_backward(output, grad_out, *kind)?), vec![])),
            Layer::Upsample { factor, .. } => {
                let [n, c, l] = input.dims3()?;
                let [_, _, lout] = grad_out.dims3()?;
                let mut gi = Tensor::zeros(&[n, c, l]);
                let g = grad_out.data();
                for (row, dst) in gi.data_mut().chunks_exact_mut(l).enumerate() {
                    for j in 0..lout {
                        dst[j / factor] += g[row * lout + j];
                    }
                }
                Ok((Some(gi), vec![]))
            }
            Layer::Flatten | Layer::Unflatten { .. } => Ok((
                Some(grad_out.clone().reshape(input.shape())?),
                vec![],
            )),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Conv(c) => vec![&c.weight, &c.bias],
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Conv(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            _ => vec![],
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

fn upsample<T: Scalar>(x: &Tensor<T>, factor: usize, out_len: usize) -> Result<Tensor<T>> {
    let [n, c, l] = x.dims3()?;
    if factor == 0 || out_len > l * factor {
        return Err(Error::shape(format!(
            "cannot upsample length {l} by {factor} to {out_len}"
        )));
    }
    let mut out = Vec::with_capacity(n * c * out_len);
    for row in x.data().chunks_exact(l) {
        out.extend((0..out_len).map(|j| row[j / factor]));
    }
    Tensor::new(vec![n, c, out_len], out)
}

/// Values seen during a training forward pass: `values[i]` is the input of
/// layer `i`, and the last entry is the network output.
pub struct Trace<T> {
    values: Vec<Tensor<T>>,
}

impl<T> Trace<T> {
    pub fn output(&self) -> &Tensor<T> {
        self.values.last().expect("trace holds at least the input")
    }
}

/// Feed-forward stack of layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequential<T> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Self {
        Self { layers }
    }

    pub fn from_spec(spec: &[LayerSpec]) -> Result<Self> {
        Ok(Self::new(
            spec.iter().map(Layer::from_spec).collect::<Result<_>>()?,
        ))
    }

    pub fn spec(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    /// Output of every layer in order, for shape assertions and inspection.
    pub fn forward_layers(&self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        let mut outs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
            outs.push(cur.clone());
        }
        Ok(outs)
    }

    pub fn forward_train(&self, x: &Tensor<T>) -> Result<Trace<T>> {
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.clone());
        for layer in &self.layers {
            let next = layer.forward(values.last().unwrap())?;
            values.push(next);
        }
        Ok(Trace { values })
    }

    /// Parameter gradients (in [`Sequential::params`] order) for the loss
    /// whose gradient with respect to the network output is `grad_out`.
    pub fn backward(&self, trace: &Trace<T>, grad_out: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        if trace.values.len() != self.layers.len() + 1 {
            return Err(Error::shape("trace does not belong to this network"));
        }
        let mut per_layer: Vec<Vec<Tensor<T>>> = vec![Vec::new(); self.layers.len()];
        let mut grad = grad_out.clone();
        // The input gradient of the first parameterised layer is never needed.
        let first_param = self
            .layers
            .iter()
            .position(|l| l.param_count() > 0)
            .unwrap_or(0);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let want_input = i > first_param;
            let (gi, gp) =
                layer.backward(&trace.values[i], &trace.values[i + 1], &grad, want_input)?;
            per_layer[i] = gp;
            if !want_input {
                break;
            }
            grad = gi.expect("input gradient requested");
        }
        Ok(per_layer.into_iter().flatten().collect())
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// Stable parameter names, e.g. `"2.weight"`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.param_count() > 0 {
                names.push(format!("{i}.weight"));
                names.push(format!("{i}.bias"));
            }
        }
        names
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init_xavier(&mut self, rng: &mut Rng) {
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => {
                    let k = c.kernel();
                    let shape = c.weight.shape().to_vec();
                    c.weight = xavier_uniform(&shape, c.in_channels() * k, c.out_channels() * k, rng);
                    c.bias = Tensor::zeros(&[c.out_channels()]);
                }
                Layer::Dense(d) => {
                    let shape = d.weight.shape().to_vec();
                    d.weight = xavier_uniform(&shape, d.inputs(), d.outputs(), rng);
                    d.bias = Tensor::zeros(&[d.outputs()]);
                }
                _ => {}
            }
        }
    }

    /// Small random perturbation of every parameter; test helper for
    /// gradient checks away from the zero-bias initialisation.
    #[doc(hidden)]
    pub fn jitter(&mut self, rng: &mut Rng, scale: f64) {
        for p in self.params_mut() {
            for v in p.data_mut() {
                *v += T::lit(rng.gen_range(-scale..scale));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn tiny_net() -> Sequential<f64> {
        let mut net = Sequential::new(vec![
            Layer::Conv(Conv1d::zeros(2, 3, 3, 2).unwrap()),
            Layer::Act(Activation::Relu),
            Layer::Flatten,
            Layer::Dense(Dense::zeros(9, 4)),
            Layer::Unflatten { channels: 2, len: 2 },
            Layer::Upsample { factor: 2, out_len: 3 },
            Layer::Conv(Conv1d::zeros(2, 2, 3, 1).unwrap()),
            Layer::Act(Activation::Sigmoid),
        ]);
        net.init_xavier(&mut seeded(3));
        net.jitter(&mut seeded(4), 0.1);
        net
    }

    #[test]
    fn spec_round_trip_preserves_architecture() {
        let net = tiny_net();
        let rebuilt = Sequential::<f64>::from_spec(&net.spec()).unwrap();
        assert_eq!(rebuilt.spec(), net.spec());
        assert_eq!(rebuilt.param_count(), net.param_count());
        assert_eq!(net.param_names().len(), net.params().len());
    }

    #[test]
    fn mixed_stack_gradients_match_finite_differences() {
        let mut net = tiny_net();
        let x = Tensor::from_fn(&[2, 2, 5], |i| ((i * 7 % 11) as f64) / 11.0);
        let loss = |net: &Sequential<f64>| net.forward(&x).unwrap().data().iter().map(|v| v * v).sum::<f64>();
        let trace = net.forward_train(&x).unwrap();
        let grad_out = trace.output().map(|v| 2.0 * v);
        let grads = net.backward(&trace, &grad_out).unwrap();
        let h = 1e-6;
        for (pi, g) in grads.iter().enumerate() {
            for j in 0..g.len() {
                let orig = net.params()[pi].data()[j];
                net.params_mut()[pi].data_mut()[j] = orig + h;
                let up = loss(&net);
                net.params_mut()[pi].data_mut()[j] = orig - h;
                let down = loss(&net);
                net.params_mut()[pi].data_mut()[j] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = g.data()[j];
                assert!((an - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "param {pi}[{j}]: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn upsample_repeats_then_crops() {
        let x = Tensor::new(vec![1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let y = Layer::<f64>::Upsample { factor: 2, out_len: 5 }.forward(&x).unwrap();
        assert_eq!(y.data(), &[1.0, 1.0, 2.0, 2.0, 3.0]);
    }
}
