use crate::error::{Error, Result};
use crate::nn::linalg::{gemm, Op};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// 1-D convolution over the last axis of an `N × C × L` tensor.
///
/// Computes cross-correlation (no kernel flip) with `(kernel - 1) / 2` zeros
/// on both ends. With stride 1 the output length equals the input length;
/// with stride `s` it is `ceil(L / s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d<T> {
    /// `out_channels × in_channels × kernel`.
    pub weight: Tensor<T>,
    /// `out_channels`.
    pub bias: Tensor<T>,
    stride: usize,
}

/// Gradients returned by [`conv1d_backward`].
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Conv1d<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>, stride: usize) -> Result<Self> {
        let [cout, _cin, k] = weight.dims3()?;
        if k % 2 == 0 {
            return Err(Error::config(format!("kernel must be odd, got {k}")));
        }
        if stride == 0 {
            return Err(Error::config("stride must be positive"));
        }
        bias.expect_shape(&[cout])?;
        Ok(Self {
            weight,
            bias,
            stride,
        })
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Result<Self> {
        Self::new(
            Tensor::zeros(&[out_channels, in_channels, kernel]),
            Tensor::zeros(&[out_channels]),
            stride,
        )
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn padding(&self) -> usize {
        (self.kernel() - 1) / 2
    }

    pub fn output_len(&self, len: usize) -> usize {
        (len + 2 * self.padding() - self.kernel()) / self.stride + 1
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<[usize; 3]> {
        let [n, c, len] = input.dims3()?;
        if c != self.in_channels() {
            return Err(Error::shape(format!(
                "conv1d expects {} input channels, got {c}",
                self.in_channels()
            )));
        }
        if len == 0 {
            return Err(Error::shape("conv1d input has zero length"));
        }
        Ok([n, c, len])
    }

    /// Lays every receptive field out as a column: `(C_in·k) × (N·L_out)`.
    fn im2col(&self, x: &[T], n: usize, cin: usize, len: usize, lout: usize) -> Vec<T> {
        let k = self.kernel();
        let pad = self.padding() as isize;
        let nl = n * lout;
        let mut cols = vec![T::zero(); cin * k * nl];
        for i in 0..cin {
            for t in 0..k {
                let row = &mut cols[(i * k + t) * nl..(i * k + t + 1) * nl];
                for s in 0..n {
                    let src = &x[(s * cin + i) * len..(s * cin + i + 1) * len];
                    let dst = &mut row[s * lout..(s + 1) * lout];
                    for (j, d) in dst.iter_mut().enumerate() {
                        let pos = (j * self.stride + t) as isize - pad;
                        if pos >= 0 && (pos as usize) < len {
                            *d = src[pos as usize];
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, cols: &[T], n: usize, cin: usize, len: usize, lout: usize) -> Vec<T> {
        let k = self.kernel();
        let pad = self.padding() as isize;
        let nl = n * lout;
        let mut x = vec![T::zero(); n * cin * len];
        for i in 0..cin {
            for t in 0..k {
                let row = &cols[(i * k + t) * nl..(i * k + t + 1) * nl];
                for s in 0..n {
                    let dst = &mut x[(s * cin + i) * len..(s * cin + i + 1) * len];
                    let src = &row[s * lout..(s + 1) * lout];
                    for (j, &g) in src.iter().enumerate() {
                        let pos = (j * self.stride + t) as isize - pad;
                        if pos >= 0 && (pos as usize) < len {
                            dst[pos as usize] += g;
                        }
                    }
                }
            }
        }
        x
    }
}

/// Forward pass: `N × C_in × L` → `N × C_out × L_out`.
pub fn conv1d_forward<T: Scalar>(input: &Tensor<T>, layer: &Conv1d<T>) -> Result<Tensor<T>> {
    let [n, cin, len] = layer.check_input(input)?;
    let cout = layer.out_channels();
    let lout = layer.output_len(len);
    let nl = n * lout;
    let cols = layer.im2col(input.data(), n, cin, len, lout);

    let mut mixed = vec![T::zero(); cout * nl];
    gemm(
        cout,
        cin * layer.kernel(),
        nl,
        layer.weight.data(),
        Op::N,
        &cols,
        Op::N,
        T::zero(),
        &mut mixed,
    );

    let bias = layer.bias.data();
    let mut out = vec![T::zero(); n * cout * lout];
    for o in 0..cout {
        let row = &mixed[o * nl..(o + 1) * nl];
        for s in 0..n {
            let dst = &mut out[(s * cout + o) * lout..(s * cout + o + 1) * lout];
            for (d, &v) in dst.iter_mut().zip(&row[s * lout..(s + 1) * lout]) {
                *d = v + bias[o];
            }
        }
    }
    Tensor::new(vec![n, cout, lout], out)
}

/// Exact gradients of [`conv1d_forward`] given the upstream gradient and the
/// input the forward pass saw.
pub fn conv1d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    input: &Tensor<T>,
    layer: &Conv1d<T>,
) -> Result<ConvGrads<T>> {
    let (input, weight, bias) = backward_impl(grad_out, input, layer, true)?;
    Ok(ConvGrads {
        input: input.expect("input gradient requested"),
        weight,
        bias,
    })
}

type RawGrads<T> = (Option<Tensor<T>>, Tensor<T>, Tensor<T>);

/// Shared backward kernel; skips the input gradient when the caller does not need it.
pub(crate) fn backward_impl<T: Scalar>(
    grad_out: &Tensor<T>,
    input: &Tensor<T>,
    layer: &Conv1d<T>,
    want_input: bool,
) -> Result<RawGrads<T>> {
    let [n, cin, len] = layer.check_input(input)?;
    let cout = layer.out_channels();
    let k = layer.kernel();
    let lout = layer.output_len(len);
    grad_out.expect_shape(&[n, cout, lout])?;
    let nl = n * lout;

    // Gather the upstream gradient as C_out × (N·L_out) to match the column layout.
    let g = grad_out.data();
    let mut g2 = vec![T::zero(); cout * nl];
    let mut grad_bias = vec![T::zero(); cout];
    for o in 0..cout {
        let row = &mut g2[o * nl..(o + 1) * nl];
        for s in 0..n {
            row[s * lout..(s + 1) * lout]
                .copy_from_slice(&g[(s * cout + o) * lout..(s * cout + o + 1) * lout]);
        }
        grad_bias[o] = row.iter().copied().sum();
    }

    let cols = layer.im2col(input.data(), n, cin, len, lout);
    let mut grad_weight = vec![T::zero(); cout * cin * k];
    gemm(cout, nl, cin * k, &g2, Op::N, &cols, Op::T, T::zero(), &mut grad_weight);

    let grad_input = if want_input {
        let mut grad_cols = cols;
        gemm(
            cin * k,
            cout,
            nl,
            layer.weight.data(),
            Op::T,
            &g2,
            Op::N,
            T::zero(),
            &mut grad_cols,
        );
        let x = layer.col2im(&grad_cols, n, cin, len, lout);
        Some(Tensor::new(vec![n, cin, len], x)?)
    } else {
        None
    };

    Ok((
        grad_input,
        Tensor::new(vec![cout, cin, k], grad_weight)?,
        Tensor::new(vec![cout], grad_bias)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    /// Direct quadruple loop, independent of the im2col/GEMM path.
    fn naive_forward(x: &Tensor<f64>, layer: &Conv1d<f64>) -> Tensor<f64> {
        let [n, cin, len] = x.dims3().unwrap();
        let (cout, k, stride) = (layer.out_channels(), layer.kernel(), layer.stride());
        let pad = layer.padding() as isize;
        let lout = layer.output_len(len);
        let w = layer.weight.data();
        let mut out = Tensor::zeros(&[n, cout, lout]);
        for s in 0..n {
            for o in 0..cout {
                for j in 0..lout {
                    let mut acc = layer.bias.data()[o];
                    for i in 0..cin {
                        for t in 0..k {
                            let pos = (j * stride + t) as isize - pad;
                            if pos >= 0 && (pos as usize) < len {
                                acc += w[(o * cin + i) * k + t]
                                    * x.data()[(s * cin + i) * len + pos as usize];
                            }
                        }
                    }
                    out.data_mut()[(s * cout + o) * lout + j] = acc;
                }
            }
        }
        out
    }

    fn random_layer(cin: usize, cout: usize, k: usize, stride: usize, seed: u64) -> Conv1d<f64> {
        let mut rng = seeded(seed);
        Conv1d::new(
            Tensor::from_fn(&[cout, cin, k], |_| rng.gen_range(-1.0..1.0)),
            Tensor::from_fn(&[cout], |_| rng.gen_range(-1.0..1.0)),
            stride,
        )
        .unwrap()
    }

    #[test]
    fn hand_worked_edge_kernel() {
        let x = Tensor::new(vec![1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let layer = Conv1d::new(
            Tensor::new(vec![1, 1, 3], vec![1.0, 0.0, -1.0]).unwrap(),
            Tensor::zeros(&[1]),
            1,
        )
        .unwrap();
        let y = conv1d_forward(&x, &layer).unwrap();
        assert_eq!(y.data(), &[-2.0, -2.0, 2.0]);
    }

    #[test]
    fn centered_delta_is_identity() {
        let c = 4;
        let mut layer = Conv1d::<f64>::zeros(c, c, 5, 1).unwrap();
        for o in 0..c {
            layer.weight.data_mut()[(o * c + o) * 5 + 2] = 1.0;
        }
        let x = Tensor::from_fn(&[2, c, 9], |i| (i as f64).sin());
        assert_eq!(conv1d_forward(&x, &layer).unwrap(), x);
    }

    #[test]
    fn matches_naive_loop() {
        let mut rng = seeded(7);
        let x = Tensor::from_fn(&[2, 4, 7], |_| rng.gen_range(-1.0..1.0));
        for (k, stride) in [(1, 1), (3, 1), (5, 1), (7, 1), (3, 2), (5, 2)] {
            let layer = random_layer(4, 3, k, stride, k as u64 * 10 + stride as u64);
            let fast = conv1d_forward(&x, &layer).unwrap();
            let slow = naive_forward(&x, &layer);
            assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12, "k={k} stride={stride}");
        }
    }

    #[test]
    fn same_padding_keeps_length() {
        for k in [1, 3, 5, 7, 9] {
            let layer = Conv1d::<f64>::zeros(2, 3, k, 1).unwrap();
            for len in [1, 2, 7, 30] {
                let y = conv1d_forward(&Tensor::zeros(&[1, 2, len]), &layer).unwrap();
                assert_eq!(y.shape(), &[1, 3, len]);
            }
        }
    }

    #[test]
    fn stride_two_halves_rounding_up() {
        let layer = Conv1d::<f64>::zeros(1, 1, 3, 2).unwrap();
        assert_eq!(layer.output_len(30), 15);
        assert_eq!(layer.output_len(15), 8);
        assert_eq!(layer.output_len(8), 4);
    }

    #[test]
    fn rejects_even_kernel_and_channel_mismatch() {
        assert!(Conv1d::<f64>::zeros(1, 1, 4, 1).is_err());
        let layer = Conv1d::<f64>::zeros(3, 1, 3, 1).unwrap();
        assert!(conv1d_forward(&Tensor::zeros(&[1, 2, 5]), &layer).is_err());
    }

    #[test]
    fn scalar_case_product_rule() {
        let layer = Conv1d::new(
            Tensor::new(vec![1, 1, 1], vec![3.0]).unwrap(),
            Tensor::new(vec![1], vec![0.5]).unwrap(),
            1,
        )
        .unwrap();
        let x = Tensor::new(vec![1, 1, 1], vec![2.0]).unwrap();
        assert_eq!(conv1d_forward(&x, &layer).unwrap().data(), &[6.5]);
        let g = Tensor::new(vec![1, 1, 1], vec![-1.5]).unwrap();
        let grads = conv1d_backward(&g, &x, &layer).unwrap();
        assert_eq!(grads.weight.data(), &[-3.0]);
        assert_eq!(grads.input.data(), &[-4.5]);
        assert_eq!(grads.bias.data(), &[-1.5]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let layer = random_layer(3, 2, 3, 1, 1);
        let x = Tensor::from_fn(&[2, 3, 6], |i| i as f64);
        let grads = conv1d_backward(&Tensor::zeros(&[2, 2, 6]), &x, &layer).unwrap();
        assert!(grads.input.data().iter().all(|&v| v == 0.0));
        assert!(grads.weight.data().iter().all(|&v| v == 0.0));
        assert!(grads.bias.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_wrong_upstream_shape() {
        let layer = random_layer(3, 2, 3, 1, 1);
        let x = Tensor::zeros(&[2, 3, 6]);
        assert!(conv1d_backward(&Tensor::zeros(&[2, 3, 6]), &x, &layer).is_err());
    }
}
