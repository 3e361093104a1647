//! End-to-end optimization behavior: convergence with exact and sampled
//! gradients, near-monotone ascent, and the sampling-becomes-faithful
//! transition during training.

use wmcgrad_core::estimate::{EstimatorConfig, EstimatorKind};
use wmcgrad_core::gen;
use wmcgrad_core::optimize::{
    train, transition_trajectory, InitSpec, StepMethod, TrainOptions, TrainStatus,
};
use wmcgrad_core::sample::{RngStream, SamplerKind};

#[test]
fn weightme_training_solves_random_satisfiable_formulas() {
    // 20 seeds of n <= 20 planted 3-CNF; at least 90% must reach NLL < 0.1
    // within the iteration budget.
    let mut successes = 0;
    let seeds = 20;
    for seed in 0..seeds {
        let mut rng = RngStream::new(0x77AA + seed);
        let n = 12 + rng.next_below(9) as usize; // 12..=20
        let (phi, _) = gen::planted_3cnf(n, 4 * n, &mut rng);
        let config = EstimatorConfig::new(EstimatorKind::WeightMe {
            s: 10,
            sampler: SamplerKind::ExactModel,
        });
        let options = TrainOptions {
            iterations: 10_000,
            lr: 0.05,
            method: StepMethod::Adaptive,
            early_stop_nll: 0.1,
            ..Default::default()
        };
        let trace = train(&phi, &config, &InitSpec::default(), &options, &mut rng).unwrap();
        if trace.best_nll < 0.1 {
            successes += 1;
        }
    }
    assert!(
        successes * 10 >= seeds * 9,
        "{successes}/{seeds} runs reached NLL < 0.1"
    );
}

#[test]
fn exact_sgd_small_lr_is_nearly_monotone() {
    // With exact gradients and a small step, the NLL may only rarely
    // increase (numerical wiggle at plateaus).
    let mut rng = RngStream::new(0x3A1);
    let mut total = 0usize;
    let mut non_increasing = 0usize;
    for _ in 0..10 {
        let n = 6 + rng.next_below(10) as usize; // up to 15
        let (phi, _) = gen::planted_3cnf(n, 3 * n, &mut rng);
        let config = EstimatorConfig::new(EstimatorKind::Exact);
        let options = TrainOptions {
            iterations: 300,
            lr: 0.05,
            method: StepMethod::Sgd,
            early_stop_nll: 1e-4,
            ..Default::default()
        };
        let trace = train(&phi, &config, &InitSpec::default(), &options, &mut rng).unwrap();
        for pair in trace.rows.windows(2) {
            total += 1;
            if pair[1].nll <= pair[0].nll + 1e-12 {
                non_increasing += 1;
            }
        }
    }
    assert!(
        non_increasing as f64 >= 0.95 * total as f64,
        "{non_increasing}/{total} iterations non-increasing"
    );
}

#[test]
fn sampling_becomes_faithful_after_the_nll_transition() {
    // Exact-gradient training on single-model formulas while probing with
    // the plain score-function estimator (s = 1000): before the weights
    // concentrate the probe never samples a model and its gradient is the
    // zero vector (cosine 0); once the NLL crosses the threshold the probe
    // direction locks onto the true gradient and stays there.
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
        assert!(
            traj[0].cosine < 0.9,
            "seed {seed}: the probe must start unfaithful"
        );
        let t0 = traj.iter().find(|p| p.nll < threshold).map(|p| p.iteration);
        let ok = match t0 {
            None => false,
            Some(t0) => traj
                .iter()
                .filter(|p| p.iteration >= t0)
                .all(|p| p.cosine >= 0.9),
        };
        if ok {
            passes += 1;
        }
    }
    assert!(passes >= 8, "{passes}/{seeds} seeds show the transition");
}

#[test]
fn training_statuses_are_reported() {
    let mut rng = RngStream::new(0x3A2);
    let (phi, _) = gen::planted_3cnf(8, 24, &mut rng);
    let config = EstimatorConfig::new(EstimatorKind::Exact);
    let capped = TrainOptions {
        iterations: 2,
        early_stop_nll: 0.0,
        ..Default::default()
    };
    let trace = train(&phi, &config, &InitSpec::default(), &capped, &mut rng).unwrap();
    assert_eq!(trace.status, TrainStatus::ReachedMaxIterations);
    assert_eq!(trace.iterations_run, 2);
    assert!(trace.rows.iter().all(|r| r.nll.is_finite()));
}
