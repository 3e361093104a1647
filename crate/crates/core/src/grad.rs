//! Per-variable gradient vectors and comparison helpers.

use crate::error::{Error, Result};

/// Which function the partials differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradTarget {
    Wmc,
    LogWmc,
}

impl std::fmt::Display for GradTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GradTarget::Wmc => write!(f, "wmc"),
            GradTarget::LogWmc => write!(f, "logwmc"),
        }
    }
}

/// Partial derivatives with respect to every `w(x)`, indexed by variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
    target: GradTarget,
}

impl GradientVector {
    pub fn new(values: Vec<f64>, target: GradTarget) -> Self {
        GradientVector { values, target }
    }

    pub fn zeros(len: usize, target: GradTarget) -> Self {
        GradientVector {
            values: vec![0.0; len],
            target,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn target(&self) -> GradTarget {
        self.target
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64, target: GradTarget) -> GradientVector {
        GradientVector {
            values: self.values.iter().map(|v| v * factor).collect(),
            target,
        }
    }

    pub fn cosine(&self, other: &GradientVector) -> Result<Cosine> {
        cosine_similarity(&self.values, &other.values)
    }
}

/// Cosine similarity with an explicit flag for the zero-vector convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// True when either vector had zero norm and the value was pinned to 0.
    pub degenerate: bool,
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<Cosine> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "gradient lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(Cosine {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Cosine {
        value: (dot / (na * nb)).clamp(-1.0, 1.0),
        degenerate: false,
    })
}
