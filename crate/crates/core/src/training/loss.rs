use crate::error::{Error, Result};
use crate::eval::sample_distances;
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Mean over the batch of per-sample Euclidean distances:
/// `(1/N) Σₙ √(Σ (x − x̂)²)`.
pub fn euclidean_loss<T: Scalar>(x: &Tensor<T>, x_hat: &Tensor<T>) -> Result<T> {
    let d = sample_distances(x, x_hat)?;
    if d.is_empty() {
        return Err(Error::Empty("loss of an empty batch"));
    }
    let n = T::from_usize(d.len()).expect("batch size fits in a float");
    Ok(d.into_iter().sum::<T>() / n)
}

/// Loss, per-sample distances, and the gradient with respect to `x_hat`.
///
/// A sample reconstructed exactly contributes a zero gradient (the
/// subgradient at the kink of the norm).
pub fn euclidean_loss_grad<T: Scalar>(x: &Tensor<T>, x_hat: &Tensor<T>) -> Result<(T, Vec<T>, Tensor<T>)> {
    let dist = sample_distances(x, x_hat)?;
    if dist.is_empty() {
        return Err(Error::Empty("loss of an empty batch"));
    }
    let n = T::from_usize(dist.len()).expect("batch size fits in a float");
    let per = x.len() / dist.len();
    let mut grad = Tensor::zeros(x.shape());
    for (i, (&norm, g)) in dist.iter().zip(grad.data_mut().chunks_exact_mut(per)).enumerate() {
        if norm > T::zero() {
            let scale = T::one() / (n * norm);
            let (xs, ys) = (&x.data()[i * per..(i + 1) * per], &x_hat.data()[i * per..(i + 1) * per]);
            for ((g, &a), &b) in g.iter_mut().zip(xs).zip(ys) {
                *g = (b - a) * scale;
            }
        }
    }
    let loss = dist.iter().copied().sum::<T>() / n;
    Ok((loss, dist, grad))
}
