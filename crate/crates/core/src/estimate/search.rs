//! Search-based estimators: top-k model mass, MPE, and perturb-and-MAP.

use super::{EstimatorContext, EstimatorReport};
use crate::error::{Error, Result};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{CnfFormula, Interpretation, WeightMap, DEFAULT_CLAMP_MARGIN};
use crate::sample::RngStream;
use crate::sat::top_k_models;

/// Adds `d P(M) / d w(x)` for every variable: the signed product of the
/// other literals' weights.
fn accumulate_model_grad(model: &Interpretation, w: &WeightMap, grad: &mut [f64]) {
    let lits: Vec<_> = model.literals().collect();
    let probs: Vec<f64> = lits.iter().map(|&l| w.literal_prob(l)).collect();
    let n = lits.len();
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * probs[i];
    }
    let mut suffix = 1.0;
    for i in (0..n).rev() {
        let others = prefix[i] * suffix;
        let sign = if lits[i].is_positive() { 1.0 } else { -1.0 };
        grad[lits[i].var().pos()] += sign * others;
        suffix *= probs[i];
    }
}

/// Gradient of the disjoint top-k model mass. The value is an exact lower
/// bound on the WMC, monotone in k.
pub fn kbest_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    k: usize,
    ctx: &EstimatorContext,
) -> Result<EstimatorReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let models = top_k_models(phi, w, k, &ctx.mpe_options())?;
    let mut grad = vec![0.0; phi.num_vars()];
    let mut mass = 0.0;
    for res in &models {
        mass += res.model.prob(w);
        accumulate_model_grad(&res.model, w, &mut grad);
    }
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(mass)
            .with_samples(models.len() as u64),
    )
}

/// Gradient of the most probable model's mass; k-best with k = 1.
pub fn mpe_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    ctx: &EstimatorContext,
) -> Result<EstimatorReport> {
    kbest_grad(phi, w, 1, ctx)
}

/// Perturb-and-MAP direction averaging: per round, logits get logistic noise
/// scaled by `noise_scale`, the most probable model under the perturbed
/// weights is computed, and its signed indicator is averaged.
pub fn imle_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    noise_scale: f64,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    if s == 0 {
        return Err(Error::InvalidArgument("imle needs at least 1 round".into()));
    }
    if noise_scale < 0.0 {
        return Err(Error::InvalidArgument(
            "noise scale must be nonnegative".into(),
        ));
    }
    let clamped = w.clamped(DEFAULT_CLAMP_MARGIN);
    let n = phi.num_vars();
    let mut grad = vec![0.0; n];
    for _ in 0..s {
        ctx.check_deadline("imle")?;
        let perturbed: Vec<f64> = clamped
            .probs()
            .iter()
            .map(|&p| {
                let logit = (p / (1.0 - p)).ln() + noise_scale * rng.next_logistic();
                1.0 / (1.0 + (-logit).exp())
            })
            .collect();
        let pw = WeightMap::new(perturbed)?;
        let res = crate::sat::mpe(phi, &pw, &ctx.mpe_options())?;
        for l in res.model.literals() {
            grad[l.var().pos()] += if l.is_positive() { 1.0 } else { -1.0 };
        }
    }
    for g in &mut grad {
        *g /= s as f64;
    }
    Ok(EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc)).with_samples(s as u64))
}
