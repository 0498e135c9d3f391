use rand::distributions::{Distribution, Uniform};

use crate::nn::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Bound `a = sqrt(6 / (fan_in + fan_out))` of the Xavier-uniform distribution.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// I.i.d. samples from `U[-a, a]` with the Xavier bound.
///
/// Values are drawn in `f64` and then converted so that `f32` and `f64`
/// models share the same random stream.
pub fn xavier_uniform<T: Scalar>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor<T> {
    assert!(fan_in > 0 && fan_out > 0, "xavier_uniform: fans must be positive");
    let a = xavier_bound(fan_in, fan_out);
    let dist = Uniform::new_inclusive(-a, a);
    Tensor::from_fn(shape, |_| T::lit(dist.sample(rng)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn unit_bound_when_fans_sum_to_six() {
        assert_eq!(xavier_bound(3, 3), 1.0);
        let t: Tensor<f64> = xavier_uniform(&[1000], 3, 3, &mut seeded(1));
        assert!(t.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn empirical_variance_near_uniform_variance() {
        let fan = 128 * 3;
        let t: Tensor<f64> = xavier_uniform(&[10_000], fan, fan, &mut seeded(99));
        let n = t.len() as f64;
        let mean = t.sum() / n;
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let a = xavier_bound(fan, fan);
        let want = a * a / 3.0;
        assert!((var - want).abs() / want < 0.10, "variance {var} vs {want}");
    }

    #[test]
    fn seeded_draws_repeat() {
        let a: Tensor<f64> = xavier_uniform(&[4, 5], 10, 20, &mut seeded(5));
        let b: Tensor<f64> = xavier_uniform(&[4, 5], 10, 20, &mut seeded(5));
        assert_eq!(a, b);
    }
}
