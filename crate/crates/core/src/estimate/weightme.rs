//! Weighted-model-sampling gradient estimator.
//!
//! For a model sample `M` the per-variable term is
//! `1(x in M)/w(x) - 1(x not in M)/w(-x)`; averaged over samples this is an
//! unbiased estimator of the log-WMC gradient when the samples follow
//! `P(M)/WMC` and the weights lie strictly inside (0, 1). Given the WMC it
//! also yields the WMC gradient by rescaling.

use super::{EstimatorContext, EstimatorReport};
use crate::compile::DecisionDnnf;
use crate::error::{Error, Result};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{CnfFormula, Interpretation, WeightMap, DEFAULT_CLAMP_MARGIN};
use crate::sample::{ExactModelSampler, HashModelSampler, RngStream, SamplerKind, SamplerSpec};

/// The model-sampling backends an estimator can draw from.
pub enum ModelSampler<'a> {
    Exact(ExactModelSampler<'a>),
    Hash(Box<HashModelSampler>),
}

impl<'a> ModelSampler<'a> {
    pub fn build(
        kind: SamplerKind,
        phi: &CnfFormula,
        w: &WeightMap,
        circuit: Option<&'a DecisionDnnf>,
    ) -> Result<ModelSampler<'a>> {
        match kind {
            SamplerKind::ExactModel => {
                let circuit = circuit.ok_or_else(|| {
                    Error::InvalidArgument("exact model sampling needs a compiled circuit".into())
                })?;
                Ok(ModelSampler::Exact(ExactModelSampler::new(circuit, w)?))
            }
            SamplerKind::HashModel => {
                let spec = SamplerSpec::new(SamplerKind::HashModel);
                Ok(ModelSampler::Hash(Box::new(HashModelSampler::new(
                    phi, w, spec,
                )?)))
            }
            SamplerKind::UniformModel => {
                let spec = SamplerSpec::new(SamplerKind::UniformModel);
                Ok(ModelSampler::Hash(Box::new(HashModelSampler::uniform(
                    phi, spec,
                )?)))
            }
            SamplerKind::Interpretation => Err(Error::InvalidArgument(
                "interpretation sampling does not produce models".into(),
            )),
        }
    }

    pub fn draw(&mut self, rng: &mut RngStream) -> Result<Interpretation> {
        match self {
            ModelSampler::Exact(s) => Ok(s.sample(rng)),
            ModelSampler::Hash(s) => s.sample(rng),
        }
    }
}

/// Estimates the gradient of log WMC from `s` model samples; with `wmc`
/// supplied the report instead carries `wmc * grad log WMC`, the WMC
/// gradient. Weights are clamped into the open interval first.
pub fn weightme_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    sampler_kind: SamplerKind,
    s: usize,
    wmc: Option<f64>,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "weightme needs at least 1 sample".into(),
        ));
    }
    let clamped = w.clamped(DEFAULT_CLAMP_MARGIN);
    // The exact sampler reuses the shared circuit when one is around;
    // otherwise it compiles within the context budget.
    let owned;
    let circuit_ref = match (sampler_kind, ctx.circuit) {
        (SamplerKind::ExactModel, Some(c)) => Some(c),
        (SamplerKind::ExactModel, None) => {
            owned = crate::compile::compile_with(phi, &ctx.compile_options())?;
            Some(&owned)
        }
        _ => None,
    };
    let mut sampler = ModelSampler::build(sampler_kind, phi, &clamped, circuit_ref)?;

    let mut grad = vec![0.0; phi.num_vars()];
    for _ in 0..s {
        ctx.check_deadline("weightme")?;
        let model = sampler.draw(rng)?;
        debug_assert!(phi.evaluate(&model));
        for l in model.literals() {
            let sign = if l.is_positive() { 1.0 } else { -1.0 };
            grad[l.var().pos()] += sign / clamped.literal_prob(l);
        }
    }
    for g in &mut grad {
        *g /= s as f64;
    }

    let report = match wmc {
        Some(value) => {
            let log_grad = GradientVector::new(grad, GradTarget::LogWmc);
            EstimatorReport::new(log_grad.scaled(value, GradTarget::Wmc)).with_value(value)
        }
        None => EstimatorReport::new(GradientVector::new(grad, GradTarget::LogWmc)),
    };
    Ok(report.with_samples(s as u64))
}

/// Closed-form expectation of the estimator over the exact weighted model
/// distribution, by enumerating all models. Test oracle for unbiasedness.
pub fn weightme_expectation(phi: &CnfFormula, w: &WeightMap) -> Result<GradientVector> {
    let n = phi.num_vars();
    let clamped = w.clamped(DEFAULT_CLAMP_MARGIN);
    let mut grad = vec![0.0; n];
    let mut wmc = 0.0;
    for code in 0..1u64 << n {
        let i = Interpretation::from_index(n, code);
        if !phi.evaluate(&i) {
            continue;
        }
        let p = i.prob(&clamped);
        wmc += p;
        for l in i.literals() {
            let sign = if l.is_positive() { 1.0 } else { -1.0 };
            grad[l.var().pos()] += p * sign / clamped.literal_prob(l);
        }
    }
    if wmc <= 0.0 {
        return Err(Error::ZeroWmc);
    }
    for g in &mut grad {
        *g /= wmc;
    }
    Ok(GradientVector::new(grad, GradTarget::LogWmc))
}
