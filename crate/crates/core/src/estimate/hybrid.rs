//! Sampling / t-norm hybrid: clauses hit by at least one sampled
//! interpretation count as satisfied (constant 1), the remaining clauses
//! contribute through the product t-norm and carry the gradient.

use super::tnorm::{combine_product_factors, ClauseFactor, ProductFactor};
use super::{EstimatorContext, EstimatorReport};
use crate::error::{Error, Result};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{CnfFormula, WeightMap};
use crate::sample::{sample_interpretations, RngStream};

pub fn sample_tnorm_hybrid_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "hybrid needs at least 1 sample".into(),
        ));
    }
    ctx.check_deadline("hybrid")?;
    let samples = sample_interpretations(w, s, rng)?;
    let factors: Vec<Box<dyn ProductFactor>> = phi
        .clauses()
        .iter()
        .filter(|c| {
            let hit = samples
                .iter()
                .any(|i| c.literals().iter().any(|&l| i.satisfies(l)));
            !hit
        })
        .map(|c| Box::new(ClauseFactor::new(c, w)) as Box<dyn ProductFactor>)
        .collect();
    let (value, grad) = combine_product_factors(&factors, phi.num_vars());
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(value)
            .with_samples(s as u64),
    )
}
