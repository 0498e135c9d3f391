use crate::dsp::MfccSequence;
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Per-feature min/max of the training data.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Scalar> NormStats<T> {
    pub fn new(min: Vec<T>, max: Vec<T>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::shape("min and max must have the same length"));
        }
        if min.iter().zip(&max).any(|(a, b)| !(a <= b)) {
            return Err(Error::config("normalisation min must not exceed max"));
        }
        Ok(Self { min, max })
    }

    /// Maps `[0, 1]` onto itself.
    pub fn identity(n_features: usize) -> Self {
        Self {
            min: vec![T::zero(); n_features],
            max: vec![T::one(); n_features],
        }
    }

    pub fn fit(sequences: &[MfccSequence<T>]) -> Result<Self> {
        let first = sequences
            .first()
            .ok_or(Error::Empty("cannot fit normalisation on no sequences"))?;
        let d = first.cols;
        let mut min = vec![T::infinity(); d];
        let mut max = vec![T::neg_infinity(); d];
        for seq in sequences {
            if seq.cols != d {
                return Err(Error::shape(format!(
                    "sequence '{}' has {} features, expected {d}",
                    seq.source_id, seq.cols
                )));
            }
            for row in seq.data.chunks_exact(d) {
                for (f, &v) in row.iter().enumerate() {
                    min[f] = min[f].min(v);
                    max[f] = max[f].max(v);
                }
            }
        }
        Ok(Self { min, max })
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    #[inline]
    pub fn normalize_value(&self, feature: usize, v: T) -> T {
        let (lo, hi) = (self.min[feature], self.max[feature]);
        if hi > lo {
            ((v - lo) / (hi - lo)).max(T::zero()).min(T::one())
        } else {
            T::lit(0.5)
        }
    }

    #[inline]
    pub fn denormalize_value(&self, feature: usize, v: T) -> T {
        let (lo, hi) = (self.min[feature], self.max[feature]);
        lo + v * (hi - lo)
    }

    /// Normalises a row-major buffer whose last axis is the feature axis.
    pub fn normalize_slice(&self, data: &[T]) -> Result<Vec<T>> {
        let d = self.n_features();
        if d == 0 || data.len() % d != 0 {
            return Err(Error::shape(format!(
                "{} values do not split into {d}-feature rows",
                data.len()
            )));
        }
        Ok(data
            .chunks_exact(d)
            .flat_map(|row| row.iter().enumerate().map(|(f, &v)| self.normalize_value(f, v)))
            .collect())
    }
}

/// `(x - min) / (max - min)` clamped to `[0, 1]` along the last axis; constant features map to 0.5.
pub fn normalize<T: Scalar>(x: &Tensor<T>, stats: &NormStats<T>) -> Result<Tensor<T>> {
    check_last_axis(x, stats)?;
    Tensor::new(x.shape().to_vec(), stats.normalize_slice(x.data())?)
}

pub fn denormalize<T: Scalar>(x: &Tensor<T>, stats: &NormStats<T>) -> Result<Tensor<T>> {
    check_last_axis(x, stats)?;
    let d = stats.n_features();
    let data = x
        .data()
        .chunks_exact(d)
        .flat_map(|row| row.iter().enumerate().map(|(f, &v)| stats.denormalize_value(f, v)))
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

fn check_last_axis<T: Scalar>(x: &Tensor<T>, stats: &NormStats<T>) -> Result<()> {
    match x.shape().last() {
        Some(&d) if d == stats.n_features() => Ok(()),
        _ => Err(Error::shape(format!(
            "last axis of {:?} must hold {} features",
            x.shape(),
            stats.n_features()
        ))),
    }
}
