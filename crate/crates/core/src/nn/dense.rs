use crate::error::{Error, Result};
use crate::nn::linalg::{gemm, Op};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Fully connected layer on `N × in` inputs: `y = x·Wᵀ + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    /// `out × in`.
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let [out, _] = weight.dims2()?;
        bias.expect_shape(&[out])?;
        Ok(Self { weight, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[outputs, inputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<usize> {
        let [n, f] = x.dims2()?;
        if f != self.inputs() {
            return Err(Error::shape(format!(
                "dense expects {} features, got {f}",
                self.inputs()
            )));
        }
        Ok(n)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.check_input(x)?;
        let (fin, fout) = (self.inputs(), self.outputs());
        let mut out = Vec::with_capacity(n * fout);
        for _ in 0..n {
            out.extend_from_slice(self.bias.data());
        }
        gemm(n, fin, fout, x.data(), Op::N, self.weight.data(), Op::T, T::one(), &mut out);
        Tensor::new(vec![n, fout], out)
    }

    pub fn backward(&self, grad_out: &Tensor<T>, x: &Tensor<T>) -> Result<DenseGrads<T>> {
        let n = self.check_input(x)?;
        let (fin, fout) = (self.inputs(), self.outputs());
        grad_out.expect_shape(&[n, fout])?;
        let g = grad_out.data();

        let mut grad_weight = vec![T::zero(); fout * fin];
        gemm(fout, n, fin, g, Op::T, x.data(), Op::N, T::zero(), &mut grad_weight);
        let mut grad_input = vec![T::zero(); n * fin];
        gemm(n, fout, fin, g, Op::N, self.weight.data(), Op::N, T::zero(), &mut grad_input);
        let mut grad_bias = vec![T::zero(); fout];
        for row in g.chunks_exact(fout) {
            for (b, &v) in grad_bias.iter_mut().zip(row) {
                *b += v;
            }
        }
        Ok(DenseGrads {
            input: Tensor::new(vec![n, fin], grad_input)?,
            weight: Tensor::new(vec![fout, fin], grad_weight)?,
            bias: Tensor::new(vec![fout], grad_bias)?,
        })
    }
}
