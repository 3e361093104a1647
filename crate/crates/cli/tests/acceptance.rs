//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Tolerances and thresholds are pinned in the assertions.

use std::collections::HashMap;
use std::time::Duration;
use wmcgrad_cli::bench::{
    mean_std, run_grad_eval, run_optimize, GradSuiteConfig, OptimizeSuiteConfig, RunStatus,
};
use wmcgrad_cli::instances::{
    bundled_gradient_suite, bundled_optimization_suite, crafted_ids, single_model_suite,
    NamedInstance,
};
use wmcgrad_core::compile::{
    compile, enumerate_models, wmc_brute, wmc_eval, wmc_grad, wmc_log_grad,
};
use wmcgrad_core::estimate::{
    indecater_grad, required_samples_interpretation, required_samples_weightme,
    weightme_expectation, weightme_grad, EstimatorConfig, EstimatorContext, EstimatorKind,
};
use wmcgrad_core::gen;
use wmcgrad_core::logic::{CnfFormula, Interpretation, Literal, WeightMap};
use wmcgrad_core::optimize::{transition_trajectory, InitSpec, StepMethod, TrainOptions};
use wmcgrad_core::sample::{
    ExactModelSampler, HashModelSampler, RngStream, SamplerKind, SamplerSpec,
};

fn example() -> (CnfFormula, WeightMap) {
    (
        CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-2, 3]]).unwrap(),
        WeightMap::new(vec![0.5, 0.1, 0.25]).unwrap(),
    )
}

fn verdict(name: &str, pass: bool, detail: &str) {
    eprintln!(
        "criterion {name}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {name}: {detail}");
}

#[test]
fn criterion_01_worked_example() {
    let (phi, w) = example();
    let circuit = compile(&phi).unwrap();
    let wmc = wmc_eval(&circuit, &w).value;
    let count_ok = (wmc - 0.475).abs() < 1e-12;

    let models = enumerate_models(&phi, 16).unwrap();
    let mut probs: Vec<f64> = models.iter().map(|m| m.prob(&w)).collect();
    probs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let expected = [0.3375, 0.1125, 0.0125, 0.0125];
    let models_ok = models.len() == 4
        && probs
            .iter()
            .zip(expected)
            .all(|(p, e)| (p - e).abs() < 1e-12);

    verdict(
        "01 worked-example",
        count_ok && models_ok,
        &format!("count {wmc}, model probabilities {probs:?}"),
    );
}

#[test]
fn criterion_02_gradient_identity() {
    let mut rng = RngStream::new(0xA201);
    let mut max_gap = 0.0f64;
    let mut max_dummy_gap = 0.0f64;
    for _ in 0..200 {
        let n = 3 + rng.next_below(13) as usize;
        let m = rng.next_below(4 * n as u64 + 1) as usize;
        let phi = gen::random_3cnf(n, m, &mut rng);
        let w = gen::random_weights(n, 0.0, 1.0, &mut rng);
        let circuit = compile(&phi).unwrap();
        let (wmc, grad) = wmc_grad(&circuit, &w);

        // every partial equals the difference of conditioned counts
        for v in phi.variables() {
            let hi = wmc_eval(&compile(&phi.condition(Literal::positive(v))).unwrap(), &w).value;
            let lo = wmc_eval(&compile(&phi.condition(Literal::negative(v))).unwrap(), &w).value;
            max_gap = max_gap.max((grad.values()[v.pos()] - (hi - lo)).abs());
        }

        // a fresh conjoined variable's partial recovers the count itself
        let mut extended = CnfFormula::new(n + 1);
        for c in phi.clauses() {
            extended.push_clause(c.literals().to_vec()).unwrap();
        }
        let t = wmcgrad_core::Variable::new(n as u32 + 1);
        extended.push_clause(vec![Literal::positive(t)]).unwrap();
        let mut w_ext = w.probs().to_vec();
        w_ext.push(0.3 + 0.4 * rng.next_f64());
        let w_ext = WeightMap::new(w_ext).unwrap();
        let (_, grad_ext) = wmc_grad(&compile(&extended).unwrap(), &w_ext);
        max_dummy_gap = max_dummy_gap.max((grad_ext.values()[t.pos()] - wmc.value).abs());
    }
    verdict(
        "02 gradient-identity",
        max_gap < 1e-10 && max_dummy_gap < 1e-12,
        &format!("max conditioned gap {max_gap:.2e}, max dummy gap {max_dummy_gap:.2e}"),
    );
}

#[test]
fn criterion_03_oracle_equivalence() {
    let mut rng = RngStream::new(0xA301);
    let mut max_count_gap = 0.0f64;
    let mut max_fd_rel = 0.0f64;
    for _ in 0..200 {
        let n = 3 + rng.next_below(13) as usize;
        let m = rng.next_below(4 * n as u64 + 1) as usize;
        let phi = gen::random_3cnf(n, m, &mut rng);
        let mut w = gen::random_weights(n, 0.05, 0.95, &mut rng);
        let circuit = compile(&phi).unwrap();
        let brute = wmc_brute(&phi, &w).unwrap().value;
        let compiled = wmc_eval(&circuit, &w).value;
        max_count_gap = max_count_gap.max((brute - compiled).abs());

        let (_, grad) = wmc_grad(&circuit, &w);
        let h = 1e-5;
        for v in phi.variables() {
            let orig = w.prob(v);
            w.set_prob(v, orig + h);
            let up = wmc_eval(&circuit, &w).value;
            w.set_prob(v, orig - h);
            let down = wmc_eval(&circuit, &w).value;
            w.set_prob(v, orig);
            let fd = (up - down) / (2.0 * h);
            let got = grad.values()[v.pos()];
            let rel = (fd - got).abs() / (fd.abs().max(got.abs()).max(1e-3));
            if (fd - got).abs() > 1e-7 {
                max_fd_rel = max_fd_rel.max(rel);
            }
        }
    }
    verdict(
        "03 oracle-equivalence",
        max_count_gap < 1e-12 && max_fd_rel < 1e-4,
        &format!("max count gap {max_count_gap:.2e}, max fd relative error {max_fd_rel:.2e}"),
    );
}

#[test]
fn criterion_04_weightme_unbiased() {
    let mut rng = RngStream::new(0xA401);
    let mut max_gap = 0.0f64;
    let mut checked = 0;
    while checked < 50 {
        let n = 4 + rng.next_below(9) as usize;
        let m = rng.next_below(3 * n as u64) as usize;
        let phi = gen::random_3cnf(n, m, &mut rng);
        let circuit = compile(&phi).unwrap();
        if circuit.is_false() {
            continue;
        }
        checked += 1;
        let w = gen::random_weights(n, 0.1, 0.9, &mut rng);
        let (_, exact) = wmc_log_grad(&circuit, &w).unwrap();
        let expect = weightme_expectation(&phi, &w).unwrap();
        for v in phi.variables() {
            max_gap = max_gap.max((expect.values()[v.pos()] - exact.values()[v.pos()]).abs());
        }
    }

    // empirical mean over 1e5 exact model samples, per coordinate
    let mut empirical_ok = true;
    let mut worst_z = 0.0f64;
    let (phi, w) = {
        let mut rng2 = RngStream::new(0xA402);
        loop {
            let phi = gen::random_3cnf(10, 25, &mut rng2);
            if !compile(&phi).unwrap().is_false() {
                let w = gen::random_weights(10, 0.15, 0.85, &mut rng2);
                break (phi, w);
            }
        }
    };
    let circuit = compile(&phi).unwrap();
    let (_, exact) = wmc_log_grad(&circuit, &w).unwrap();
    let ctx = EstimatorContext::with_circuit(&circuit);
    let s = 100_000;
    let r = weightme_grad(&phi, &w, SamplerKind::ExactModel, s, None, &ctx, &mut rng).unwrap();
    for v in phi.variables() {
        let bound = 1.0 / w.prob(v).min(1.0 - w.prob(v));
        let se = bound / (s as f64).sqrt();
        let z = (r.gradient.values()[v.pos()] - exact.values()[v.pos()]).abs() / se;
        worst_z = worst_z.max(z);
        empirical_ok &= z < 3.0;
    }

    verdict(
        "04 weightme-unbiased",
        max_gap < 1e-10 && empirical_ok,
        &format!("max expectation gap {max_gap:.2e}, worst empirical z {worst_z:.2}"),
    );
}

fn total_variation_check(
    draws: usize,
    models: &[Interpretation],
    w: &WeightMap,
    mut draw: impl FnMut() -> Interpretation,
) -> f64 {
    let total: f64 = models.iter().map(|m| m.prob(w)).sum();
    let probs: HashMap<Vec<bool>, f64> = models
        .iter()
        .map(|m| (m.values().to_vec(), m.prob(w) / total))
        .collect();
    let mut counts: HashMap<Vec<bool>, usize> = HashMap::new();
    for _ in 0..draws {
        *counts.entry(draw().values().to_vec()).or_insert(0) += 1;
    }
    let mut tv = 0.0;
    for (model, p) in &probs {
        let freq = counts.get(model).copied().unwrap_or(0) as f64 / draws as f64;
        tv += (freq - p).abs();
    }
    let support: usize = probs.keys().filter_map(|k| counts.get(k)).sum();
    tv += (draws - support) as f64 / draws as f64;
    tv / 2.0
}

#[test]
fn criterion_05_sampler_fidelity() {
    let mut rng = RngStream::new(0xA501);
    // a case with a moderate model set and one that needs parity constraints
    let pick = |target_min: usize, target_max: usize, rng: &mut RngStream| loop {
        let n = 10 + rng.next_below(3) as usize;
        let m = n + rng.next_below(2 * n as u64) as usize;
        let phi = gen::random_3cnf(n, m, rng);
        if let Ok(models) = enumerate_models(&phi, target_max) {
            if models.len() >= target_min {
                let w = gen::random_weights(n, 0.2, 0.8, rng);
                return (phi, w, models);
            }
        }
    };
    let draws = 100_000;

    let (phi, w, models) = pick(8, 300, &mut rng);
    let circuit = compile(&phi).unwrap();
    let sampler = ExactModelSampler::new(&circuit, &w).unwrap();
    let mut rng_draw = RngStream::new(0xA502);
    let tv_exact = total_variation_check(draws, &models, &w, || sampler.sample(&mut rng_draw));

    let (phi_h, w_h, models_h) = pick(90, 320, &mut rng);
    let spec = SamplerSpec::new(SamplerKind::HashModel);
    assert!(models_h.len() > spec.pivot, "constrained path exercised");
    let mut hash_sampler = HashModelSampler::new(&phi_h, &w_h, spec).unwrap();
    let mut rng_hash = RngStream::new(0xA503);
    let tv_hash = total_variation_check(draws, &models_h, &w_h, || {
        hash_sampler.sample(&mut rng_hash).unwrap()
    });

    verdict(
        "05 sampler-fidelity",
        tv_exact < 0.01 && tv_hash < 0.05,
        &format!(
            "exact TV {tv_exact:.4} over {} models, hash TV {tv_hash:.4} over {} models",
            models.len(),
            models_h.len()
        ),
    );
}

#[test]
fn criterion_06_sample_complexity_calculators() {
    let spec = SamplerSpec::new(SamplerKind::Interpretation)
        .with_epsilon(0.1)
        .with_delta(0.05);
    let weightme_738 = required_samples_weightme(&spec, 0.5).unwrap();

    // the weighted-model bound never looks at a formula, so it cannot vary
    // with size; pin the value and its repeatability
    let invariant = (0..5).all(|_| required_samples_weightme(&spec, 0.5).unwrap() == 738);

    let base = required_samples_interpretation(&spec, 1.0).unwrap();
    let mut scaling_ok = base == 369;
    for k in 1..=20u32 {
        let scaled = required_samples_interpretation(&spec, 2f64.powi(-(k as i32))).unwrap();
        scaling_ok &= scaled == 369u64 << k;
    }

    verdict(
        "06 sample-complexity",
        weightme_738 == 738 && invariant && scaling_ok,
        &format!("weightme(0.1, 0.05, 0.5) = {weightme_738}, interpretation base {base} with exact 1/lower scaling"),
    );
}

#[test]
fn criterion_07_variance_facts() {
    // conditioned-difference estimator at binary weights: exact, zero spread
    let (phi, _) = example();
    let w = WeightMap::new(vec![1.0, 0.0, 1.0]).unwrap();
    let (_, exact) = wmc_grad(&compile(&phi).unwrap(), &w);
    let ctx = EstimatorContext::default();
    let mut indecater_ok = true;
    let mut first: Option<Vec<f64>> = None;
    for seed in 0..100 {
        let r = indecater_grad(&phi, &w, 1, &ctx, &mut RngStream::new(seed)).unwrap();
        let g = r.gradient.values().to_vec();
        indecater_ok &= g.iter().zip(exact.values()).all(|(a, b)| a == b);
        match &first {
            None => first = Some(g),
            Some(f) => indecater_ok &= f == &g,
        }
    }

    // single-model formulas: every weighted model sample is the model, so
    // the estimate never varies
    let single = CnfFormula::from_dimacs_clauses(3, &[&[1], &[-2], &[3]]).unwrap();
    let ws = WeightMap::new(vec![0.3, 0.7, 0.6]).unwrap();
    let circuit = compile(&single).unwrap();
    let sctx = EstimatorContext::with_circuit(&circuit);
    let mut weightme_ok = true;
    let mut reference: Option<Vec<f64>> = None;
    for s in [1usize, 5, 50] {
        // identical output for every random stream at a fixed sample count
        let mut per_s: Option<Vec<f64>> = None;
        for seed in 0..100 {
            let r = weightme_grad(
                &single,
                &ws,
                SamplerKind::ExactModel,
                s,
                None,
                &sctx,
                &mut RngStream::new(seed),
            )
            .unwrap();
            let g = r.gradient.values().to_vec();
            match &per_s {
                None => per_s = Some(g),
                Some(f) => weightme_ok &= f == &g,
            }
        }
        // and sample counts only differ by float-averaging rounding
        let g = per_s.unwrap();
        match &reference {
            None => reference = Some(g),
            Some(f) => {
                weightme_ok &= f
                    .iter()
                    .zip(&g)
                    .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    verdict(
        "07 variance-facts",
        indecater_ok && weightme_ok,
        "binary-weight conditioned differences and single-model weighted samples have zero spread",
    );
}

#[test]
fn criterion_08_estimator_ordering() {
    let suite = bundled_gradient_suite();
    let config = GradSuiteConfig {
        estimators: vec![
            EstimatorConfig::parse("weightme:s=100,sampler=exact").unwrap(),
            EstimatorConfig::parse("weightme:s=25,sampler=hash").unwrap(),
            EstimatorConfig::parse("tnorm-product").unwrap(),
            EstimatorConfig::parse("tnorm-goedel").unwrap(),
        ],
        seeds: vec![1, 2, 3, 4, 5],
        timeout: Duration::from_secs(300),
        weight_sigma: 0.15,
        master_seed: 0xACE8,
        omit_timing: true,
    };
    let out = run_grad_eval(&suite, &config).unwrap();
    for r in &out.records {
        assert_eq!(r.status, RunStatus::Ok, "{r:?}");
    }
    let stats = |name: &str| {
        let cosines = out.cosines_of(name);
        let (mean, std) = mean_std(&cosines);
        (mean, std / (cosines.len() as f64).sqrt())
    };
    let (m_we, se_we) = stats("weightme:s=100,sampler=exact");
    let (m_wh, se_wh) = stats("weightme:s=25,sampler=hash");
    let (m_p, se_p) = stats("tnorm-product");
    let (m_g, se_g) = stats("tnorm-goedel");
    let margin = |a: f64, sa: f64, b: f64, sb: f64| (a - b) / (sa * sa + sb * sb).sqrt();
    let we_over_p = margin(m_we, se_we, m_p, se_p);
    let wh_over_p = margin(m_wh, se_wh, m_p, se_p);
    let p_over_g = margin(m_p, se_p, m_g, se_g);

    // interpretation sampling on planted single-model instances: no hits,
    // no direction
    let sfe_config = GradSuiteConfig {
        estimators: vec![EstimatorConfig::parse("sfe:s=10000").unwrap()],
        seeds: vec![1, 2, 3, 4, 5],
        omit_timing: true,
        ..config.clone()
    };
    let sfe_out = run_grad_eval(&single_model_suite(), &sfe_config).unwrap();
    let sfe_cosines = sfe_out.cosines_of("sfe:s=10000");
    let sfe_near_zero = sfe_cosines.iter().all(|c| c.abs() < 0.05);

    let pass = we_over_p > 2.0 && wh_over_p > 2.0 && p_over_g > 2.0 && sfe_near_zero;
    verdict(
        "08 estimator-ordering",
        pass,
        &format!(
            "weightme-exact {m_we:.3} / weightme-hash {m_wh:.3} > product {m_p:.3} > goedel {m_g:.3} \
             (margins {we_over_p:.1}, {wh_over_p:.1}, {p_over_g:.1} pooled SEs); \
             single-model sfe max |cos| {:.4}",
            sfe_cosines.iter().fold(0.0f64, |a, c| a.max(c.abs()))
        ),
    );
}

#[test]
fn criterion_09_sampling_transition() {
    let threshold = 2.0;
    let mut passes = 0;
    let seeds = 10;
    for seed in 0..seeds {
        let mut rng = RngStream::new(9000 + seed);
        let (phi, _) = gen::single_model_3cnf(20, &mut rng);
        let probe = EstimatorConfig::new(EstimatorKind::Sfe {
            s: 1000,
            plain: true,
        });
        let options = TrainOptions {
            iterations: 1500,
            lr: 0.1,
            method: StepMethod::Adaptive,
            early_stop_nll: 1e-2,
            ..Default::default()
        };
        let traj = transition_trajectory(
            &phi,
            &probe,
            &InitSpec::GaussianHalf { sigma: 0.1 },
            &options,
            &mut rng,
        )
        .unwrap();
        let starts_unfaithful = traj[0].cosine < 0.9;
        let t0 = traj.iter().find(|p| p.nll < threshold).map(|p| p.iteration);
        let stays = match t0 {
            None => false,
            Some(t0) => traj
                .iter()
                .filter(|p| p.iteration >= t0)
                .all(|p| p.cosine >= 0.9),
        };
        if starts_unfaithful && stays {
            passes += 1;
        }
    }
    verdict(
        "09 sampling-transition",
        passes >= 8,
        &format!("{passes}/{seeds} seeds cross and hold cosine 0.9 after NLL < {threshold}"),
    );
}

#[test]
fn criterion_10_optimization_sweep() {
    let estimators: Vec<EstimatorConfig> = [
        "exact",
        "weightme:s=10,sampler=exact",
        "tnorm-product",
        "tnorm-goedel",
        "ste:s=10",
        "gumbel:s=10,temp=2",
    ]
    .iter()
    .map(|t| EstimatorConfig::parse(t).unwrap())
    .collect();
    let instances = bundled_optimization_suite();
    let base = OptimizeSuiteConfig {
        estimators: estimators.clone(),
        seeds: vec![1, 2],
        iterations: 10_000,
        lr: 0.05,
        early_stop_nll: 1e-2,
        supervised_fraction: None,
        master_seed: 0xACE,
        omit_timing: true,
        trace_dir: None,
    };
    let unsupervised = run_optimize(&instances, &base).unwrap();
    let supervised = run_optimize(
        &instances,
        &OptimizeSuiteConfig {
            supervised_fraction: Some(0.9),
            ..base.clone()
        },
    )
    .unwrap();

    let solved = |rows: &[wmcgrad_cli::bench::OptimizeRecord], est: &str| {
        rows.iter()
            .filter(|r| r.estimator == est)
            .all(|r| r.best_nll < 1e-2)
    };
    let exact_ok = solved(&unsupervised, "exact");
    let weightme_ok = solved(&unsupervised, "weightme:s=10,sampler=exact");

    // at least one polynomial relaxation stalls on a crafted instance
    let crafted = crafted_ids();
    let poly = ["tnorm-goedel", "ste:s=10", "tnorm-product"];
    let crafted_failure = unsupervised.iter().any(|r| {
        poly.contains(&r.estimator.as_str())
            && crafted.contains(&r.instance.as_str())
            && r.best_nll > 0.5
    });

    // supervision improves every estimator's mean best loss (within the
    // early-stop resolution) yet leaves at least one failure
    let mean_best = |rows: &[wmcgrad_cli::bench::OptimizeRecord], est: &str| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.estimator == est)
            .map(|r| r.best_nll.min(1e6))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let mut improvement_ok = true;
    let mut improvement_report = String::new();
    for est in estimators.iter().map(|e| e.to_string()) {
        let before = mean_best(&unsupervised, &est);
        let after = mean_best(&supervised, &est);
        improvement_ok &= after <= before + 1e-3;
        if before > 0.1 {
            improvement_ok &= after < before - 0.05;
        }
        improvement_report.push_str(&format!("{est}: {before:.3}->{after:.3}; "));
    }
    let supervised_failure = supervised.iter().any(|r| r.best_nll > 0.1);

    let pass = exact_ok && weightme_ok && crafted_failure && improvement_ok && supervised_failure;
    verdict(
        "10 optimization-sweep",
        pass,
        &format!(
            "exact solves all: {exact_ok}; weightme solves all: {weightme_ok}; crafted failure: \
             {crafted_failure}; supervision means: {improvement_report}residual failure: {supervised_failure}"
        ),
    );
}

#[test]
fn criterion_11_deterministic_csv() {
    let instances: Vec<NamedInstance> = bundled_gradient_suite().into_iter().take(2).collect();
    let config = GradSuiteConfig {
        estimators: vec![
            EstimatorConfig::parse("exact").unwrap(),
            EstimatorConfig::parse("weightme:s=20,sampler=exact").unwrap(),
            EstimatorConfig::parse("gumbel:s=5,temp=2").unwrap(),
        ],
        seeds: vec![3, 9],
        omit_timing: true,
        ..Default::default()
    };
    let a = run_grad_eval(&instances, &config).unwrap().to_csv(true);
    let b = run_grad_eval(&instances, &config).unwrap().to_csv(true);

    let opt_instances = bundled_optimization_suite();
    let opt_config = OptimizeSuiteConfig {
        estimators: vec![EstimatorConfig::parse("tnorm-product").unwrap()],
        seeds: vec![1],
        iterations: 500,
        omit_timing: true,
        ..Default::default()
    };
    let oa = wmcgrad_cli::bench::optimize_records_to_csv(
        &run_optimize(&opt_instances, &opt_config).unwrap(),
        true,
    );
    let ob = wmcgrad_cli::bench::optimize_records_to_csv(
        &run_optimize(&opt_instances, &opt_config).unwrap(),
        true,
    );

    verdict(
        "11 deterministic-csv",
        a == b && oa == ob,
        &format!(
            "grad-eval CSV {} bytes, optimize CSV {} bytes, both byte-identical across runs \
             (timing columns omitted)",
            a.len(),
            oa.len()
        ),
    );
}
