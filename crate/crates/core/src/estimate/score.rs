//! Score-function estimators over interpretation samples: REINFORCE with a
//! leave-one-out baseline, and the per-variable conditioned difference
//! estimator (a Rao-Blackwellization of the score function).

use super::{EstimatorContext, EstimatorReport};
use crate::error::{Error, Result};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{CnfFormula, Interpretation, Variable, WeightMap};
use crate::sample::{sample_interpretations, RngStream};

/// Score function estimator of the WMC gradient.
///
/// With the leave-one-out baseline each sample is centered on the mean of
/// the other samples' model indicators, which keeps the estimator unbiased
/// while removing most of the variance; `plain` disables the baseline.
pub fn sfe_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    plain: bool,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    let min = if plain { 1 } else { 2 };
    if s < min {
        return Err(Error::InvalidArgument(format!(
            "sfe needs at least {min} samples"
        )));
    }
    ctx.check_deadline("sfe")?;
    let samples = sample_interpretations(w, s, rng)?;
    let hits: Vec<bool> = samples.iter().map(|i| phi.evaluate(i)).collect();
    let total_hits = hits.iter().filter(|&&h| h).count() as f64;

    let mut grad = vec![0.0; phi.num_vars()];
    if total_hits > 0.0 {
        ctx.check_deadline("sfe")?;
        for (sample, &hit) in samples.iter().zip(&hits) {
            let f = if hit { 1.0 } else { 0.0 };
            let coef = if plain {
                f / s as f64
            } else {
                let baseline = (total_hits - f) / (s as f64 - 1.0);
                (f - baseline) / s as f64
            };
            if coef == 0.0 {
                continue;
            }
            for l in sample.literals() {
                // d log P(I) / d w(x) = 1/w(x) if x in I else -1/w(-x)
                let sign = if l.is_positive() { 1.0 } else { -1.0 };
                grad[l.var().pos()] += coef * sign / w.literal_prob(l);
            }
        }
    }
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(total_hits / s as f64)
            .with_samples(s as u64),
    )
}

/// Per-variable difference of conditioned hit rates, with common random
/// numbers: the same base samples are reused for the `x` and `not x`
/// branches of every variable. Unbiased for each partial of the WMC.
pub fn indecater_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "indecater needs at least 1 sample".into(),
        ));
    }
    let samples = sample_interpretations(w, s, rng)?;
    let mut grad = vec![0.0; phi.num_vars()];
    let mut hits = 0usize;
    for sample in &samples {
        ctx.check_deadline("indecater")?;
        if phi.evaluate(sample) {
            hits += 1;
        }
        let mut forced = sample.values().to_vec();
        for v in phi.variables() {
            let original = forced[v.pos()];
            forced[v.pos()] = true;
            let hi = evaluate_values(phi, &forced);
            forced[v.pos()] = false;
            let lo = evaluate_values(phi, &forced);
            forced[v.pos()] = original;
            grad[v.pos()] += (f64::from(hi) - f64::from(lo)) / s as f64;
        }
    }
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(hits as f64 / s as f64)
            .with_samples(s as u64),
    )
}

fn evaluate_values(phi: &CnfFormula, values: &[bool]) -> bool {
    phi.clauses().iter().all(|c| {
        c.literals()
            .iter()
            .any(|&l| values[l.var().pos()] == l.is_positive())
    })
}

/// Closed-form expectation of the single-sample score term, computed by
/// enumerating all interpretations. Test oracle for unbiasedness.
pub fn sfe_expectation(phi: &CnfFormula, w: &WeightMap) -> GradientVector {
    let n = phi.num_vars();
    let mut grad = vec![0.0; n];
    for code in 0..1u64 << n {
        let i = Interpretation::from_index(n, code);
        if !phi.evaluate(&i) {
            continue;
        }
        let p = i.prob(w);
        for l in i.literals() {
            let sign = if l.is_positive() { 1.0 } else { -1.0 };
            let lw = w.literal_prob(l);
            if lw > 0.0 {
                grad[l.var().pos()] += p * sign / lw;
            }
        }
    }
    GradientVector::new(grad, GradTarget::Wmc)
}

/// Closed-form expectation of the conditioned-difference estimator: for each
/// variable, `WMC(phi | x) - WMC(phi | not x)` by enumeration.
pub fn indecater_expectation(phi: &CnfFormula, w: &WeightMap) -> GradientVector {
    let n = phi.num_vars();
    let mut grad = vec![0.0; n];
    for v in phi.variables() {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for code in 0..1u64 << n {
            let mut values: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
            values[v.pos()] = true;
            if evaluate_values(phi, &values) {
                hi += prob_excluding(&values, w, v);
            }
            values[v.pos()] = false;
            if evaluate_values(phi, &values) {
                lo += prob_excluding(&values, w, v);
            }
        }
        // Each conditioned interpretation was counted twice (both values of v).
        grad[v.pos()] = (hi - lo) / 2.0;
    }
    GradientVector::new(grad, GradTarget::Wmc)
}

fn prob_excluding(values: &[bool], w: &WeightMap, skip: Variable) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip.pos())
        .map(|(i, &b)| {
            let p = w.probs()[i];
            if b {
                p
            } else {
                1.0 - p
            }
        })
        .product()
}
