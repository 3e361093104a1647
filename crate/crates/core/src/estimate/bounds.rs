//! Sample-complexity calculators and tractability diagnostics.
//!
//! The guarantee constant is fixed as `c(eps, delta) = eps^-2 ln(2/delta)`
//! throughout (the Hoeffding form); ceilings carry a 1e-9 slack so exact
//! integer boundaries do not flip on floating-point noise.

use super::EstimatorContext;
use crate::compile::{compile_with, wmc_eval};
use crate::error::{Error, Result};
use crate::logic::{is_implicant, CnfFormula, Implicant, Literal, Variable, WeightMap};
use crate::sample::SamplerSpec;
use crate::sat::mpe;

fn guarantee_constant(spec: &SamplerSpec) -> f64 {
    (2.0 / spec.delta).ln() / (spec.epsilon * spec.epsilon)
}

fn ceil_with_slack(x: f64) -> u64 {
    ((x - 1e-9).ceil().max(1.0)) as u64
}

/// Interpretation samples needed for an (eps, delta) relative-error
/// guarantee given a lower bound on the WMC: the unit-WMC sample count
/// `ceil(c(eps, delta))` scaled by `1 / wmc_lower`, so halving the bound
/// exactly doubles the requirement.
pub fn required_samples_interpretation(spec: &SamplerSpec, wmc_lower: f64) -> Result<u64> {
    spec.validate()?;
    if wmc_lower.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument(
            "WMC lower bound must be positive".into(),
        ));
    }
    let base = ceil_with_slack(guarantee_constant(spec));
    Ok(ceil_with_slack(base as f64 / wmc_lower))
}

/// Weighted model samples needed by the model-sampling estimator:
/// `ceil(ln(2/delta) / (2 eps^2 lambda^2))` where `lambda` lower-bounds
/// `|P(x | phi) - w(x)|`. Independent of the formula size.
pub fn required_samples_weightme(spec: &SamplerSpec, lambda: f64) -> Result<u64> {
    spec.validate()?;
    if !lambda.is_finite() || lambda <= 0.0 || lambda > 1.0 {
        return Err(Error::InvalidArgument("lambda must be in (0, 1]".into()));
    }
    let s = (2.0 / spec.delta).ln() / (2.0 * spec.epsilon * spec.epsilon * lambda * lambda);
    Ok(ceil_with_slack(s))
}

/// True when a verified implicant containing `x` dominates: the partial
/// derivative is then at least `WMC(pi) - WMC(phi | not x)`, and sampling
/// gives a polynomial-time guarantee once that margin clears
/// `1 / c(eps, delta)`.
pub fn check_tractability_condition(
    phi: &CnfFormula,
    w: &WeightMap,
    pi: &Implicant,
    x: Variable,
    spec: &SamplerSpec,
    ctx: &EstimatorContext,
) -> Result<bool> {
    spec.validate()?;
    if !pi.contains_var(x) {
        return Err(Error::InvalidArgument(format!(
            "variable {x} is not assigned by the implicant"
        )));
    }
    if !is_implicant(phi, pi) {
        return Err(Error::InvalidArgument(
            "the given assignment is not an implicant".into(),
        ));
    }
    let wmc_pi = pi.prob(w);
    let conditioned = phi.condition(Literal::negative(x));
    let circuit = compile_with(&conditioned, &ctx.compile_options())?;
    let wmc_not_x = wmc_eval(&circuit, w).value;
    let threshold = 1.0 / guarantee_constant(spec);
    Ok(wmc_pi - wmc_not_x >= threshold)
}

/// Number of literals of the most probable model whose weight strictly
/// exceeds 1/2: how much of the model the weights already classify
/// confidently.
pub fn tau_supervision(phi: &CnfFormula, w: &WeightMap, ctx: &EstimatorContext) -> Result<u64> {
    let res = mpe(phi, w, &ctx.mpe_options())?;
    Ok(res
        .model
        .literals()
        .filter(|&l| w.literal_prob(l) > 0.5)
        .count() as u64)
}
