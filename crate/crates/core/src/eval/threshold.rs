use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default fence multiplier on σ.
pub const TUKEY_MULTIPLIER: f64 = 1.5;

/// Decision threshold `θ = μ + m·σ` over training reconstruction errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold<T> {
    pub theta: T,
    pub mu: T,
    pub sigma: T,
    pub multiplier: T,
}

impl<T: Scalar> Threshold<T> {
    /// Same μ and σ with a different multiplier.
    pub fn with_multiplier(&self, multiplier: T) -> Self {
        Self {
            theta: self.mu + multiplier * self.sigma,
            multiplier,
            ..*self
        }
    }

    pub fn cast<U: Scalar>(&self) -> Threshold<U> {
        Threshold {
            theta: U::lit(self.theta.as_f64()),
            mu: U::lit(self.mu.as_f64()),
            sigma: U::lit(self.sigma.as_f64()),
            multiplier: U::lit(self.multiplier.as_f64()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Abnormal,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
        })
    }
}

/// Mean plus 1.5 population standard deviations.
pub fn tukey_threshold<T: Scalar>(scores: &[T]) -> Result<Threshold<T>> {
    tukey_threshold_with(scores, T::lit(TUKEY_MULTIPLIER))
}

pub fn tukey_threshold_with<T: Scalar>(scores: &[T], multiplier: T) -> Result<Threshold<T>> {
    if scores.len() < 2 {
        return Err(Error::Empty("threshold needs at least 2 scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("non-finite score in threshold input".into()));
    }
    let n = T::from_usize(scores.len()).expect("length fits in a float");
    let mu = scores.iter().copied().sum::<T>() / n;
    let var = scores.iter().map(|&s| (s - mu) * (s - mu)).sum::<T>() / n;
    let sigma = var.sqrt();
    Ok(Threshold {
        theta: mu + multiplier * sigma,
        mu,
        sigma,
        multiplier,
    })
}

/// Abnormal iff `score > θ`.
pub fn classify<T: Scalar>(score: T, threshold: &Threshold<T>) -> Label {
    if score > threshold.theta {
        Label::Abnormal
    } else {
        Label::Normal
    }
}
