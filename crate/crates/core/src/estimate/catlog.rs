//! Per-variable conditioned-difference wrapper around a value approximator:
//! `partial(x) = inner(phi | x) - inner(phi | not x)`, which is exact when
//! the inner approximator is exact. Costs two inner evaluations per
//! variable.

use super::relax::gumbel_relaxed_sample;
use super::{EstimatorContext, EstimatorReport};
use crate::compile::{compile_with, wmc_eval};
use crate::error::{Error, Result};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{fuzzy_eval, CnfFormula, Literal, TNorm, WeightMap};
use crate::sample::RngStream;

/// The value approximators the wrapper accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatLogInner {
    /// Exact WMC of the conditioned formulas; reproduces the true gradient.
    Exact,
    TnormProduct,
    TnormGoedel,
    Gumbel,
}

impl std::fmt::Display for CatLogInner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CatLogInner::Exact => write!(f, "exact"),
            CatLogInner::TnormProduct => write!(f, "tnorm-product"),
            CatLogInner::TnormGoedel => write!(f, "tnorm-goedel"),
            CatLogInner::Gumbel => write!(f, "gumbel"),
        }
    }
}

fn inner_value(
    inner: CatLogInner,
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    temperature: f64,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<f64> {
    match inner {
        CatLogInner::Exact => {
            let circuit = compile_with(phi, &ctx.compile_options())?;
            Ok(wmc_eval(&circuit, w).value)
        }
        CatLogInner::TnormProduct => Ok(fuzzy_eval(phi, w, TNorm::Product)),
        CatLogInner::TnormGoedel => Ok(fuzzy_eval(phi, w, TNorm::Goedel)),
        CatLogInner::Gumbel => {
            if s == 0 {
                return Err(Error::InvalidArgument(
                    "gumbel inner needs at least 1 sample".into(),
                ));
            }
            let mut total = 0.0;
            for _ in 0..s {
                let (relaxed, _) = gumbel_relaxed_sample(w, temperature, rng);
                total += fuzzy_eval(phi, &relaxed, TNorm::Product);
            }
            Ok(total / s as f64)
        }
    }
}

pub fn catlog_wrap(
    inner: CatLogInner,
    phi: &CnfFormula,
    w: &WeightMap,
    s: usize,
    temperature: f64,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    let n = phi.num_vars();
    let mut grad = vec![0.0; n];
    let mut evals = 0u64;
    for v in phi.variables() {
        ctx.check_deadline("catlog")?;
        let hi = inner_value(
            inner,
            &phi.condition(Literal::positive(v)),
            w,
            s,
            temperature,
            ctx,
            rng,
        )?;
        let lo = inner_value(
            inner,
            &phi.condition(Literal::negative(v)),
            w,
            s,
            temperature,
            ctx,
            rng,
        )?;
        grad[v.pos()] = hi - lo;
        evals += 2;
    }
    let value = inner_value(inner, phi, w, s, temperature, ctx, rng)?;
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(value)
            .with_samples(evals),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, wmc_grad};

    fn example() -> (CnfFormula, WeightMap) {
        (
            CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-2, 3]]).unwrap(),
            WeightMap::new(vec![0.5, 0.1, 0.25]).unwrap(),
        )
    }

    #[test]
    fn exact_inner_reproduces_the_exact_gradient() {
        let mut rng = RngStream::new(0xCA);
        for _ in 0..5 {
            let n = 4 + rng.next_below(6) as usize;
            let phi = crate::gen::random_3cnf(n, 3 * n, &mut rng);
            let w = crate::gen::random_weights(n, 0.1, 0.9, &mut rng);
            let ctx = EstimatorContext::default();
            let r = catlog_wrap(CatLogInner::Exact, &phi, &w, 1, 2.0, &ctx, &mut rng).unwrap();
            let (_, exact) = wmc_grad(&compile(&phi).unwrap(), &w);
            for (a, b) in r.gradient.values().iter().zip(exact.values()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tnorm_inner_on_independent_clauses_is_exact() {
        let phi = CnfFormula::from_dimacs_clauses(4, &[&[1, 2], &[-3, 4]]).unwrap();
        let w = WeightMap::new(vec![0.3, 0.6, 0.2, 0.8]).unwrap();
        let ctx = EstimatorContext::default();
        let mut rng = RngStream::new(1);
        let r = catlog_wrap(CatLogInner::TnormProduct, &phi, &w, 1, 2.0, &ctx, &mut rng).unwrap();
        let (_, exact) = wmc_grad(&compile(&phi).unwrap(), &w);
        for (a, b) in r.gradient.values().iter().zip(exact.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tnorm_inner_on_example_matches_hand_computation() {
        let (phi, w) = example();
        let ctx = EstimatorContext::default();
        let mut rng = RngStream::new(1);
        let r = catlog_wrap(CatLogInner::TnormProduct, &phi, &w, 1, 2.0, &ctx, &mut rng).unwrap();
        let g = r.gradient.values();
        // fuzzy(phi|b) = w(c) = 0.25, fuzzy(phi|-b) = w(a) = 0.5
        assert!((g[1] - (0.25 - 0.5)).abs() < 1e-12, "{g:?}");
        // fuzzy(phi|a) = 0.925, fuzzy(phi|-a) = 0.1 * 0.925
        assert!((g[0] - (0.925 - 0.0925)).abs() < 1e-12, "{g:?}");
        assert_eq!(r.samples_used, 6);
    }

    #[test]
    fn gumbel_inner_is_seed_deterministic() {
        let (phi, w) = example();
        let ctx = EstimatorContext::default();
        let a = catlog_wrap(
            CatLogInner::Gumbel,
            &phi,
            &w,
            10,
            2.0,
            &ctx,
            &mut RngStream::new(7),
        )
        .unwrap();
        let b = catlog_wrap(
            CatLogInner::Gumbel,
            &phi,
            &w,
            10,
            2.0,
            &ctx,
            &mut RngStream::new(7),
        )
        .unwrap();
        assert_eq!(a.gradient.values(), b.gradient.values());
    }
}
