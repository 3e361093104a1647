//! Relaxation-based estimators: straight-through and Gumbel-Softmax. Both
//! evaluate the formula with product-t-norm fuzzy semantics at sampled
//! points and differ in how the sample enters the backward pass.

use super::tnorm::product_tnorm_value_grad;
use super::{EstimatorContext, EstimatorReport};
use crate::error::{Error, Result};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{CnfFormula, WeightMap, DEFAULT_CLAMP_MARGIN};
use crate::sample::RngStream;

/// Straight-through estimator: the forward pass evaluates the fuzzy
/// semantics at a hard Bernoulli sample (a plain model indicator), the
/// backward pass pretends the sample were the weights, so the gradient is
/// the fuzzy gradient taken at the sampled point.
pub fn ste_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    if s == 0 {
        return Err(Error::InvalidArgument("ste needs at least 1 sample".into()));
    }
    let n = phi.num_vars();
    let mut grad = vec![0.0; n];
    let mut value = 0.0;
    for _ in 0..s {
        ctx.check_deadline("ste")?;
        let hard: Vec<f64> = w
            .probs()
            .iter()
            .map(|&p| if rng.next_f64() < p { 1.0 } else { 0.0 })
            .collect();
        let at = WeightMap::new(hard).expect("binary weights");
        let (v, g) = product_tnorm_value_grad(phi, &at);
        value += v / s as f64;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += gi / s as f64;
        }
    }
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(value)
            .with_samples(s as u64),
    )
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One relaxed Bernoulli draw per variable plus the reparametrization chain
/// factor `d b / d w`.
pub(crate) fn gumbel_relaxed_sample(
    w: &WeightMap,
    temperature: f64,
    rng: &mut RngStream,
) -> (WeightMap, Vec<f64>) {
    let clamped = w.clamped(DEFAULT_CLAMP_MARGIN);
    let mut relaxed = Vec::with_capacity(clamped.len());
    let mut chain = Vec::with_capacity(clamped.len());
    for &p in clamped.probs() {
        let logit = (p / (1.0 - p)).ln();
        let noise = rng.next_logistic();
        let b = sigmoid((logit + noise) / temperature);
        relaxed.push(b);
        // d b / d w = sigma'(z) * (1/temp) * d logit / d w
        chain.push(b * (1.0 - b) / (temperature * p * (1.0 - p)));
    }
    (
        WeightMap::new(relaxed).expect("sigmoid output in range"),
        chain,
    )
}

/// Gumbel-Softmax (binary concrete) estimator: relaxed samples
/// `sigmoid((logit(w) + L) / temperature)` with logistic noise `L`, fuzzy
/// forward pass, exact reverse-mode through the relaxation.
pub fn gumbel_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    temperature: f64,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "gumbel needs at least 1 sample".into(),
        ));
    }
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::InvalidArgument(
            "temperature must be positive".into(),
        ));
    }
    let n = phi.num_vars();
    let mut grad = vec![0.0; n];
    let mut value = 0.0;
    for _ in 0..s {
        ctx.check_deadline("gumbel")?;
        let (relaxed, chain) = gumbel_relaxed_sample(w, temperature, rng);
        let (v, g) = product_tnorm_value_grad(phi, &relaxed);
        value += v / s as f64;
        for i in 0..n {
            grad[i] += g[i] * chain[i] / s as f64;
        }
    }
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(value)
            .with_samples(s as u64),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::TNorm;

    fn example() -> (CnfFormula, WeightMap) {
        (
            CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-2, 3]]).unwrap(),
            WeightMap::new(vec![0.5, 0.1, 0.25]).unwrap(),
        )
    }

    #[test]
    fn ste_at_deterministic_weights_is_the_tnorm_gradient_at_the_forced_sample() {
        let (phi, _) = example();
        let w = WeightMap::new(vec![1.0, 0.0, 1.0]).unwrap();
        let ctx = EstimatorContext::default();
        let r = ste_grad(&phi, &w, 3, &ctx, &mut RngStream::new(9)).unwrap();
        let forced = super::super::tnorm_grad(&phi, &w, TNorm::Product);
        assert_eq!(r.gradient.values(), forced.gradient.values());
        assert_eq!(r.value_estimate, forced.value_estimate);
    }

    #[test]
    fn ste_fixed_seed_regression() {
        let (phi, w) = example();
        let ctx = EstimatorContext::default();
        let r = ste_grad(&phi, &w, 10, &ctx, &mut RngStream::new(2024)).unwrap();
        let again = ste_grad(&phi, &w, 10, &ctx, &mut RngStream::new(2024)).unwrap();
        assert_eq!(r.gradient.values(), again.gradient.values());
        // frozen from the documented RNG; guards the sampling layout
        let expect = [0.8999999999999999, 0.3, 0.1];
        for (g, e) in r.gradient.values().iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "{:?}", r.gradient.values());
        }
        assert_eq!(r.value_estimate, Some(0.30000000000000004));
    }

    #[test]
    fn ste_mean_vs_tnorm_divergence_is_bounded() {
        // The STE average need not converge to the fuzzy gradient at w; this
        // documents the (bounded) divergence.
        let (phi, w) = example();
        let ctx = EstimatorContext::default();
        let mut rng = RngStream::new(77);
        let r = ste_grad(&phi, &w, 10_000, &ctx, &mut rng).unwrap();
        let soft = super::super::tnorm_grad(&phi, &w, TNorm::Product);
        let mut div = 0.0f64;
        for (a, b) in r.gradient.values().iter().zip(soft.gradient.values()) {
            div = div.max((a - b).abs());
        }
        println!("ste-vs-tnorm max coordinate divergence: {div:.4}");
        assert!(div.is_finite());
        assert!(div < 1.0, "bounded divergence, got {div}");
    }

    #[test]
    fn gumbel_high_temperature_limit() {
        let (phi, w) = example();
        let temperature = 1e6;
        let mut rng = RngStream::new(5);
        // Relaxed samples collapse to 1/2 and the chain factor kills the
        // gradient; the downstream fuzzy gradient matches the t-norm
        // gradient at uniform weights.
        let half = WeightMap::uniform(3, 0.5);
        let at_half = super::super::tnorm_grad(&phi, &half, TNorm::Product);
        for _ in 0..20 {
            let (relaxed, chain) = gumbel_relaxed_sample(&w, temperature, &mut rng);
            for &b in relaxed.probs() {
                assert!((b - 0.5).abs() < 1e-3, "relaxed sample {b}");
            }
            let (_, downstream) = product_tnorm_value_grad(&phi, &relaxed);
            for (d, e) in downstream.iter().zip(at_half.gradient.values()) {
                assert!((d - e).abs() < 1e-3, "downstream {d} vs {e}");
            }
            for &c in &chain {
                assert!(c < 1e-5, "chain factor vanishes, got {c}");
            }
        }
        let ctx = EstimatorContext::default();
        let r = gumbel_grad(&phi, &w, 10, temperature, &ctx, &mut rng).unwrap();
        assert!(r.gradient.norm() < 1e-3);
    }

    #[test]
    fn gumbel_fixed_seed_regression() {
        let (phi, w) = example();
        let ctx = EstimatorContext::default();
        let r = gumbel_grad(&phi, &w, 10, 2.0, &ctx, &mut RngStream::new(2024)).unwrap();
        let again = gumbel_grad(&phi, &w, 10, 2.0, &ctx, &mut RngStream::new(2024)).unwrap();
        assert_eq!(r.gradient.values(), again.gradient.values());
        assert!(r.gradient.is_finite());
        assert!(r.value_estimate.unwrap() > 0.0);
    }

    #[test]
    fn gumbel_rejects_bad_parameters() {
        let (phi, w) = example();
        let ctx = EstimatorContext::default();
        assert!(gumbel_grad(&phi, &w, 0, 2.0, &ctx, &mut RngStream::new(1)).is_err());
        assert!(gumbel_grad(&phi, &w, 5, 0.0, &ctx, &mut RngStream::new(1)).is_err());
    }
}
