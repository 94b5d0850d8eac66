//! Log-normal size estimation errors.
//!
//! A job of true size `s` is estimated as `s * exp(sigma * Z)` with `Z`
//! standard normal, so under- and over-estimation by the same factor are
//! equally likely.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::trace::SizedJob;

#[derive(Debug, Error, PartialEq)]
pub enum ErrorModelError {
    #[error("job `{label}` has non-positive size")]
    NonPositiveSize { label: String },
    #[error("sigma must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedJob {
    pub label: String,
    pub submit_time: f64,
    pub true_size: f64,
    pub est_size: f64,
}

impl EstimatedJob {
    /// A job whose estimate is exact.
    pub fn exact(label: impl Into<String>, submit_time: f64, size: f64) -> Self {
        EstimatedJob {
            label: label.into(),
            submit_time,
            true_size: size,
            est_size: size,
        }
    }
}

/// Draws one error factor per job from a single stream seeded by
/// `model.seed`, in list order. Estimates are fixed for the job's lifetime.
pub fn estimate(jobs: &[SizedJob], model: &ErrorModel) -> Result<Vec<EstimatedJob>, ErrorModelError> {
    if !(model.sigma >= 0.0 && model.sigma.is_finite()) {
        return Err(ErrorModelError::InvalidSigma(model.sigma));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    jobs.iter()
        .map(|j| {
            if j.true_size.is_nan() || j.true_size <= 0.0 {
                return Err(ErrorModelError::NonPositiveSize { label: j.label.clone() });
            }
            let est_size = if model.sigma == 0.0 {
                j.true_size
            } else {
                let z: f64 = StandardNormal.sample(&mut rng);
                j.true_size * (model.sigma * z).exp()
            };
            Ok(EstimatedJob {
                label: j.label.clone(),
                submit_time: j.submit_time,
                true_size: j.true_size,
                est_size,
            })
        })
        .collect()
}
