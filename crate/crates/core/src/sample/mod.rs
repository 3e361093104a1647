//! Sampling primitives: deterministic random streams, i.i.d. interpretation
//! sampling, exact weighted model sampling from compiled circuits, and
//! hash-based (approximate) weighted and uniform model sampling.

mod exact;
mod hash;
mod interpretation;
mod rng;

pub use exact::{exact_model_sample, ExactModelSampler};
pub use hash::{hash_model_sample, uniform_model_sample, HashModelSampler};
pub use interpretation::sample_interpretations;
pub use rng::RngStream;

use crate::error::{Error, Result};

/// Which model sampler backs an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    /// I.i.d. draws from the interpretation distribution.
    Interpretation,
    /// Exact weighted model sampling via a compiled circuit.
    ExactModel,
    /// Parity-constraint cell sampling, approximately weighted.
    HashModel,
    /// Hash sampling with all weights forced to 1/2.
    UniformModel,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplerKind::Interpretation => write!(f, "interpretation"),
            SamplerKind::ExactModel => write!(f, "exact"),
            SamplerKind::HashModel => write!(f, "hash"),
            SamplerKind::UniformModel => write!(f, "uniform"),
        }
    }
}

/// Quality and sizing parameters of a sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    /// Relative error bound of the (epsilon, delta) guarantee.
    pub epsilon: f64,
    /// Failure probability of the guarantee.
    pub delta: f64,
    /// Target cell size of the hash sampler.
    pub pivot: usize,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind) -> Self {
        SamplerSpec {
            kind,
            epsilon: 0.8,
            delta: 0.2,
            pivot: 73,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_pivot(mut self, pivot: usize) -> Self {
        self.pivot = pivot;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument("delta must be in (0, 1)".into()));
        }
        if self.pivot == 0 {
            return Err(Error::InvalidArgument("pivot must be positive".into()));
        }
        Ok(())
    }
}
