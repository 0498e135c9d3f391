use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Sigmoid => {
                if x >= T::zero() {
                    T::one() / (T::one() + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (T::one() + e)
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the forward output `y`.
    #[inline]
    fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Identity => T::one(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::config(format!("unknown activation '{other}'"))),
        }
    }
}

pub fn activation_forward<T: Scalar>(x: &Tensor<T>, kind: Activation) -> Tensor<T> {
    x.map(|v| kind.apply(v))
}

/// Backward pass given the forward *output* and the upstream gradient.
pub fn activation_backward<T: Scalar>(
    output: &Tensor<T>,
    grad_out: &Tensor<T>,
    kind: Activation,
) -> Result<Tensor<T>> {
    output.zip_map(grad_out, |y, g| g * kind.derivative_from_output(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_definition() {
        let x = Tensor::new(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(activation_forward(&x, Activation::Relu).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_at_zero_and_extremes() {
        let x = Tensor::new(vec![3], vec![0.0, -800.0, 800.0]).unwrap();
        let y = activation_forward(&x, Activation::Sigmoid);
        assert_eq!(y.data(), &[0.5, 0.0, 1.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let h = 1e-6;
        let xs: [f64; 5] = [-2.3, -0.7, 0.4, 1.9, 3.3];
        for kind in [Activation::Relu, Activation::Sigmoid, Activation::Identity] {
            for &x in &xs {
                let t = Tensor::new(vec![1], vec![x]).unwrap();
                let y = activation_forward(&t, kind);
                let g = activation_backward(&y, &Tensor::new(vec![1], vec![1.0]).unwrap(), kind)
                    .unwrap()
                    .data()[0];
                let fd: f64 = (kind.apply(x + h) - kind.apply(x - h)) / (2.0 * h);
                let rel = (g - fd).abs() / fd.abs().max(1e-12);
                assert!(rel < 1e-6 || (g == 0.0 && fd == 0.0), "{kind} at {x}: {g} vs {fd}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in [Activation::Relu, Activation::Sigmoid, Activation::Identity] {
            assert_eq!(kind.name().parse::<Activation>().unwrap(), kind);
        }
        assert!("tanh".parse::<Activation>().is_err());
    }
}
