//! Unbiasedness and quality checks of the sampling estimators against
//! enumeration oracles and the exact circuit gradient.

use wmcgrad_core::compile::{compile, wmc_grad, wmc_log_grad};
use wmcgrad_core::estimate::{
    indecater_expectation, sfe_expectation, weightme_expectation, weightme_grad, EstimatorContext,
};
use wmcgrad_core::gen;
use wmcgrad_core::logic::{CnfFormula, WeightMap};
use wmcgrad_core::sample::{RngStream, SamplerKind};

fn satisfiable_case(max_n: usize, rng: &mut RngStream) -> (CnfFormula, WeightMap) {
    loop {
        let n = 4 + rng.next_below(max_n as u64 - 3) as usize;
        let m = rng.next_below(3 * n as u64) as usize;
        let phi = gen::random_3cnf(n, m, rng);
        let circuit = compile(&phi).unwrap();
        if circuit.is_false() {
            continue;
        }
        let w = gen::random_weights(n, 0.1, 0.9, rng);
        return (phi, w);
    }
}

#[test]
fn score_function_expectation_is_the_exact_gradient() {
    let mut rng = RngStream::new(0xB1A);
    for trial in 0..50 {
        let (phi, w) = satisfiable_case(12, &mut rng);
        let (_, exact) = wmc_grad(&compile(&phi).unwrap(), &w);
        let sfe = sfe_expectation(&phi, &w);
        let ind = indecater_expectation(&phi, &w);
        for v in phi.variables() {
            let e = exact.values()[v.pos()];
            assert!(
                (sfe.values()[v.pos()] - e).abs() < 1e-10,
                "trial {trial} sfe {v}"
            );
            assert!(
                (ind.values()[v.pos()] - e).abs() < 1e-10,
                "trial {trial} indecater {v}"
            );
        }
    }
}

#[test]
fn weightme_expectation_is_the_exact_log_gradient_on_50_formulas() {
    let mut rng = RngStream::new(0xB1B);
    for trial in 0..50 {
        let (phi, w) = satisfiable_case(12, &mut rng);
        let circuit = compile(&phi).unwrap();
        let (_, exact) = wmc_log_grad(&circuit, &w).unwrap();
        let expect = weightme_expectation(&phi, &w).unwrap();
        for v in phi.variables() {
            assert!(
                (expect.values()[v.pos()] - exact.values()[v.pos()]).abs() < 1e-10,
                "trial {trial} var {v}"
            );
        }
    }
}

#[test]
fn weightme_empirical_mean_within_three_standard_errors() {
    let mut rng = RngStream::new(0xB1C);
    let (phi, w) = satisfiable_case(12, &mut rng);
    let circuit = compile(&phi).unwrap();
    let (_, exact) = wmc_log_grad(&circuit, &w).unwrap();
    let ctx = EstimatorContext::with_circuit(&circuit);
    let s = 100_000;
    let r = weightme_grad(&phi, &w, SamplerKind::ExactModel, s, None, &ctx, &mut rng).unwrap();
    for v in phi.variables() {
        let got = r.gradient.values()[v.pos()];
        let expect = exact.values()[v.pos()];
        let bound = 1.0 / w.prob(v).min(1.0 - w.prob(v));
        let se = bound / (s as f64).sqrt();
        assert!(
            (got - expect).abs() < 3.0 * se,
            "{v}: {got} vs {expect} (se {se})"
        );
    }
}

#[test]
fn weightme_cosine_quality_is_monotone_in_sample_count() {
    // Mean cosine to the exact log-gradient must not decrease with more
    // samples, up to two pooled standard errors of noise.
    let mut rng = RngStream::new(0xB1D);
    let formulas: Vec<(CnfFormula, WeightMap)> =
        (0..20).map(|_| satisfiable_case(12, &mut rng)).collect();
    let trials = 100;
    let mut stats: Vec<(f64, f64)> = Vec::new(); // (mean, variance of the mean)
    for &s in &[1usize, 10, 100] {
        let mut cosines: Vec<f64> = Vec::with_capacity(formulas.len() * trials);
        for (phi, w) in &formulas {
            let circuit = compile(phi).unwrap();
            let (_, exact) = wmc_log_grad(&circuit, w).unwrap();
            let ctx = EstimatorContext::with_circuit(&circuit);
            for _ in 0..trials {
                let r = weightme_grad(phi, w, SamplerKind::ExactModel, s, None, &ctx, &mut rng)
                    .unwrap();
                let c = r.gradient.cosine(&exact).unwrap();
                cosines.push(if c.degenerate { 0.0 } else { c.value });
            }
        }
        let n = cosines.len() as f64;
        let mean = cosines.iter().sum::<f64>() / n;
        let var = cosines.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
        stats.push((mean, var / n));
    }
    println!("mean cosine by s: {stats:?}");
    for pair in stats.windows(2) {
        let (lo_mean, lo_var) = pair[0];
        let (hi_mean, hi_var) = pair[1];
        let pooled_se = (lo_var + hi_var).sqrt();
        assert!(
            hi_mean + 2.0 * pooled_se >= lo_mean,
            "quality degraded: {lo_mean} -> {hi_mean} (se {pooled_se})"
        );
    }
}
