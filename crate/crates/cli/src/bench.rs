//! Benchmark harness: gradient quality at initialization and optimization
//! sweeps, fanned out over a worker pool with deterministic aggregation.

use crate::instances::NamedInstance;
use anyhow::Result;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::time::{Duration, Instant};
use wmcgrad_core::compile::{compile_with, wmc_grad, CompileOptions, DecisionDnnf};
use wmcgrad_core::estimate::{run_estimator, EstimatorConfig, EstimatorContext};
use wmcgrad_core::grad::GradTarget;
use wmcgrad_core::optimize::{train, InitSpec, StepMethod, TrainOptions, TrainStatus};
use wmcgrad_core::sample::RngStream;
use wmcgrad_core::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Timeout,
    Error(String),
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunStatus::Ok => write!(f, "ok"),
            RunStatus::Timeout => write!(f, "timeout"),
            RunStatus::Error(msg) => write!(f, "error: {}", msg.replace([',', '\n'], ";")),
        }
    }
}

/// One (instance, estimator, seed) gradient evaluation.
#[derive(Debug, Clone)]
pub struct BenchmarkRecord {
    pub instance: String,
    pub estimator: String,
    pub seed: u64,
    pub target: GradTarget,
    /// 0 with `degenerate` set when either gradient had zero norm.
    pub cosine: f64,
    pub degenerate: bool,
    pub samples_used: u64,
    pub wall: Duration,
    pub status: RunStatus,
}

#[derive(Debug, Clone)]
pub struct GradSuiteConfig {
    pub estimators: Vec<EstimatorConfig>,
    pub seeds: Vec<u64>,
    /// Per-gradient wall budget (the ground truth is exempt).
    pub timeout: Duration,
    /// Gaussian spread of the benchmark weights around 1/2.
    pub weight_sigma: f64,
    pub master_seed: u64,
    /// Leave timing fields empty in the CSV so repeated runs are
    /// byte-identical.
    pub omit_timing: bool,
}

impl Default for GradSuiteConfig {
    fn default() -> Self {
        GradSuiteConfig {
            estimators: Vec::new(),
            seeds: vec![1],
            timeout: Duration::from_secs(300),
            weight_sigma: 0.15,
            master_seed: 0xACE,
            omit_timing: false,
        }
    }
}

struct GroundTruth {
    circuit: DecisionDnnf,
    id: String,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub mean_cosine: f64,
    pub std_cosine: f64,
    pub ok: usize,
    pub total: usize,
}

pub struct GradEvalOutcome {
    pub records: Vec<BenchmarkRecord>,
    pub summaries: Vec<EstimatorSummary>,
}

impl GradEvalOutcome {
    pub fn cosines_of(&self, estimator: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.estimator == estimator && r.status == RunStatus::Ok)
            .map(|r| r.cosine)
            .collect()
    }

    /// Versioned CSV: sample rows then summary rows, deterministically
    /// ordered.
    pub fn to_csv(&self, omit_timing: bool) -> String {
        let mut out = String::from("# wmcgrad grad-eval v1\n");
        out.push_str(
            "record,instance,estimator,seed,target,cosine,cosine_std,degenerate,samples,wall_ms,status,n_ok,n_total\n",
        );
        for r in &self.records {
            let wall = if omit_timing {
                String::new()
            } else {
                r.wall.as_millis().to_string()
            };
            let _ = writeln!(
                out,
                "row,{},{},{},{},{:.9},,{},{},{},{},,",
                r.instance,
                r.estimator,
                r.seed,
                r.target,
                r.cosine,
                r.degenerate,
                r.samples_used,
                wall,
                r.status
            );
        }
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "summary,*,{},,,{:.9},{:.9},,,,ok,{},{}",
                s.estimator, s.mean_cosine, s.std_cosine, s.ok, s.total
            );
        }
        out
    }
}

/// Runs the gradient-quality protocol: exact gradient per (instance, seed),
/// then every estimator under the timeout, recording cosine similarity
/// against the matching target (WMC or log-WMC gradient).
pub fn run_grad_eval(
    instances: &[NamedInstance],
    config: &GradSuiteConfig,
) -> Result<GradEvalOutcome> {
    // Ground truths compile once per instance, in parallel, unbudgeted.
    let truths: Vec<Option<GroundTruth>> = instances
        .par_iter()
        .map(|inst| {
            compile_with(inst.formula(), &CompileOptions::unbounded())
                .ok()
                .map(|circuit| GroundTruth {
                    circuit,
                    id: inst.id.clone(),
                })
        })
        .collect();

    let mut jobs: Vec<(usize, usize, u64)> = Vec::new();
    for i in 0..instances.len() {
        for e in 0..config.estimators.len() {
            for &seed in &config.seeds {
                jobs.push((i, e, seed));
            }
        }
    }

    let mut records: Vec<BenchmarkRecord> = jobs
        .par_iter()
        .map(|&(i, e, seed)| {
            let inst = &instances[i];
            let estimator = &config.estimators[e];
            let estimator_name = estimator.to_string();
            let truth = match &truths[i] {
                Some(t) => t,
                None => {
                    return BenchmarkRecord {
                        instance: inst.id.clone(),
                        estimator: estimator_name,
                        seed,
                        target: GradTarget::Wmc,
                        cosine: 0.0,
                        degenerate: true,
                        samples_used: 0,
                        wall: Duration::ZERO,
                        status: RunStatus::Error("ground truth failed".into()),
                    }
                }
            };
            run_one_gradient(inst, truth, estimator, &estimator_name, seed, config)
        })
        .collect();

    records.sort_by(|a, b| {
        a.instance
            .cmp(&b.instance)
            .then(a.estimator.cmp(&b.estimator))
            .then(a.seed.cmp(&b.seed))
    });

    let mut summaries: Vec<EstimatorSummary> = config
        .estimators
        .iter()
        .map(|est| {
            let name = est.to_string();
            let ok: Vec<f64> = records
                .iter()
                .filter(|r| r.estimator == name && r.status == RunStatus::Ok)
                .map(|r| r.cosine)
                .collect();
            let total = records.iter().filter(|r| r.estimator == name).count();
            let (mean, std) = mean_std(&ok);
            EstimatorSummary {
                estimator: name,
                mean_cosine: mean,
                std_cosine: std,
                ok: ok.len(),
                total,
            }
        })
        .collect();
    summaries.sort_by(|a, b| a.estimator.cmp(&b.estimator));
    summaries.dedup_by(|a, b| a.estimator == b.estimator);

    Ok(GradEvalOutcome { records, summaries })
}

fn run_one_gradient(
    inst: &NamedInstance,
    truth: &GroundTruth,
    estimator: &EstimatorConfig,
    estimator_name: &str,
    seed: u64,
    config: &GradSuiteConfig,
) -> BenchmarkRecord {
    debug_assert_eq!(truth.id, inst.id);
    let w = inst.weights_for(seed, config.weight_sigma);
    let (wmc, exact_wmc_grad) = wmc_grad(&truth.circuit, &w);

    let mut job_rng = RngStream::new(config.master_seed)
        .fork(seed)
        .fork(name_tag(&inst.id))
        .fork(name_tag(estimator_name));
    let start = Instant::now();
    let ctx = EstimatorContext {
        circuit: Some(&truth.circuit),
        exact_wmc: None,
        deadline: Some(start + config.timeout),
        compile_options: None,
        mpe_options: None,
    };

    match run_estimator(estimator, inst.formula(), &w, &ctx, &mut job_rng) {
        Ok(report) => {
            let reference = match report.gradient.target() {
                GradTarget::Wmc => exact_wmc_grad.clone(),
                GradTarget::LogWmc => {
                    if wmc.value > 0.0 {
                        exact_wmc_grad.scaled(1.0 / wmc.value, GradTarget::LogWmc)
                    } else {
                        exact_wmc_grad.clone()
                    }
                }
            };
            let cosine = report.gradient.cosine(&reference).expect("equal lengths");
            BenchmarkRecord {
                instance: inst.id.clone(),
                estimator: estimator_name.to_string(),
                seed,
                target: report.gradient.target(),
                cosine: cosine.value,
                degenerate: cosine.degenerate,
                samples_used: report.samples_used,
                wall: report.wall_time,
                status: RunStatus::Ok,
            }
        }
        Err(err) => {
            let status = match err {
                Error::BudgetExceeded { .. } => RunStatus::Timeout,
                other => RunStatus::Error(other.to_string()),
            };
            BenchmarkRecord {
                instance: inst.id.clone(),
                estimator: estimator_name.to_string(),
                seed,
                target: GradTarget::Wmc,
                cosine: 0.0,
                degenerate: true,
                samples_used: 0,
                wall: start.elapsed(),
                status,
            }
        }
    }
}

fn name_tag(name: &str) -> u64 {
    let mut tag = 0xcbf29ce484222325u64;
    for b in name.bytes() {
        tag = (tag ^ b as u64).wrapping_mul(0x100000001b3);
    }
    tag
}

/// One optimization run's outcome.
#[derive(Debug, Clone)]
pub struct OptimizeRecord {
    pub instance: String,
    pub estimator: String,
    pub init: String,
    pub seed: u64,
    pub best_nll: f64,
    pub iterations: usize,
    pub status: RunStatus,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct OptimizeSuiteConfig {
    pub estimators: Vec<EstimatorConfig>,
    pub seeds: Vec<u64>,
    pub iterations: usize,
    pub lr: f64,
    pub early_stop_nll: f64,
    /// Concept-supervision fraction; None is the Gaussian-around-1/2 init.
    pub supervised_fraction: Option<f64>,
    pub master_seed: u64,
    pub omit_timing: bool,
    /// Directory for per-run trace CSVs.
    pub trace_dir: Option<std::path::PathBuf>,
}

impl Default for OptimizeSuiteConfig {
    fn default() -> Self {
        OptimizeSuiteConfig {
            estimators: Vec::new(),
            seeds: vec![1],
            iterations: 10_000,
            lr: 0.05,
            early_stop_nll: 1e-2,
            supervised_fraction: None,
            master_seed: 0xACE,
            omit_timing: false,
            trace_dir: None,
        }
    }
}

pub fn run_optimize(
    instances: &[NamedInstance],
    config: &OptimizeSuiteConfig,
) -> Result<Vec<OptimizeRecord>> {
    let init = match config.supervised_fraction {
        Some(fraction) => InitSpec::ConceptSupervised {
            fraction,
            sigma: 0.1,
        },
        None => InitSpec::GaussianHalf { sigma: 0.1 },
    };
    let init_name = match init {
        InitSpec::GaussianHalf { .. } => "gaussian-half".to_string(),
        InitSpec::ConceptSupervised { fraction, .. } => format!("supervised-{fraction}"),
    };

    let mut jobs: Vec<(usize, usize, u64)> = Vec::new();
    for i in 0..instances.len() {
        for e in 0..config.estimators.len() {
            for &seed in &config.seeds {
                jobs.push((i, e, seed));
            }
        }
    }

    let mut records: Vec<OptimizeRecord> = jobs
        .par_iter()
        .map(|&(i, e, seed)| {
            let inst = &instances[i];
            let estimator = &config.estimators[e];
            let estimator_name = estimator.to_string();
            let mut rng = RngStream::new(config.master_seed)
                .fork(seed)
                .fork(name_tag(&inst.id))
                .fork(name_tag(&estimator_name));
            let options = TrainOptions {
                iterations: config.iterations,
                lr: config.lr,
                method: StepMethod::Adaptive,
                early_stop_nll: config.early_stop_nll,
                track_exact: true,
                compile_options: CompileOptions::default(),
            };
            let start = Instant::now();
            let outcome = train(inst.formula(), estimator, &init, &options, &mut rng);
            let wall = start.elapsed();
            match outcome {
                Ok(trace) => {
                    if let Some(dir) = &config.trace_dir {
                        let path = dir.join(format!(
                            "{}__{}__{}__{}.csv",
                            inst.id,
                            sanitize(&estimator_name),
                            sanitize(&init_name),
                            seed
                        ));
                        let _ = std::fs::write(path, trace.to_csv());
                    }
                    let status = match trace.status {
                        TrainStatus::Aborted => RunStatus::Error(
                            trace
                                .error
                                .map(|e| e.to_string())
                                .unwrap_or_else(|| "aborted".into()),
                        ),
                        _ => RunStatus::Ok,
                    };
                    OptimizeRecord {
                        instance: inst.id.clone(),
                        estimator: estimator_name,
                        init: init_name.clone(),
                        seed,
                        best_nll: trace.best_nll,
                        iterations: trace.iterations_run,
                        status,
                        wall,
                    }
                }
                Err(err) => OptimizeRecord {
                    instance: inst.id.clone(),
                    estimator: estimator_name,
                    init: init_name.clone(),
                    seed,
                    best_nll: f64::INFINITY,
                    iterations: 0,
                    status: RunStatus::Error(err.to_string()),
                    wall,
                },
            }
        })
        .collect();

    // Plot-ready: per estimator from best to worst achieved loss.
    records.sort_by(|a, b| {
        a.estimator
            .cmp(&b.estimator)
            .then(a.best_nll.partial_cmp(&b.best_nll).unwrap())
            .then(a.instance.cmp(&b.instance))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(records)
}

fn sanitize(name: &str) -> String {
    name.replace([':', ',', '=', '/'], "_")
}

pub fn optimize_records_to_csv(records: &[OptimizeRecord], omit_timing: bool) -> String {
    let mut out = String::from("# wmcgrad optimize v1\n");
    out.push_str("instance,estimator,init,seed,best_nll,iterations,wall_ms,status\n");
    for r in records {
        let wall = if omit_timing {
            String::new()
        } else {
            r.wall.as_millis().to_string()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{:.9e},{},{},{}",
            r.instance, r.estimator, r.init, r.seed, r.best_nll, r.iterations, wall, r.status
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::NamedInstance;
    use wmcgrad_core::CnfFormula;

    fn tiny_suite() -> Vec<NamedInstance> {
        vec![
            NamedInstance::from_formula(
                "example",
                CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-2, 3]]).unwrap(),
            ),
            NamedInstance::from_formula(
                "chain",
                CnfFormula::from_dimacs_clauses(4, &[&[1, 2], &[-2, 3], &[-3, 4]]).unwrap(),
            ),
        ]
    }

    #[test]
    fn exact_estimator_scores_cosine_one() {
        let config = GradSuiteConfig {
            estimators: vec![EstimatorConfig::parse("exact").unwrap()],
            seeds: vec![1, 2],
            ..Default::default()
        };
        let out = run_grad_eval(&tiny_suite(), &config).unwrap();
        assert_eq!(out.records.len(), 4);
        for r in &out.records {
            assert_eq!(r.status, RunStatus::Ok);
            assert!((r.cosine - 1.0).abs() < 1e-9, "{r:?}");
        }
        let s = &out.summaries[0];
        assert!((s.mean_cosine - 1.0).abs() < 1e-9);
        assert!(s.std_cosine.abs() < 1e-9);
    }

    #[test]
    fn summary_statistics_recompute_from_rows() {
        let config = GradSuiteConfig {
            estimators: vec![
                EstimatorConfig::parse("tnorm-product").unwrap(),
                EstimatorConfig::parse("ste:s=5").unwrap(),
            ],
            seeds: vec![1, 2, 3],
            ..Default::default()
        };
        let out = run_grad_eval(&tiny_suite(), &config).unwrap();
        for summary in &out.summaries {
            let cosines = out.cosines_of(&summary.estimator);
            let (mean, std) = mean_std(&cosines);
            assert!((summary.mean_cosine - mean).abs() < 1e-12);
            assert!((summary.std_cosine - std).abs() < 1e-12);
            assert_eq!(summary.ok, cosines.len());
        }
    }

    #[test]
    fn csv_is_byte_identical_across_runs_without_timing() {
        let config = GradSuiteConfig {
            estimators: vec![
                EstimatorConfig::parse("exact").unwrap(),
                EstimatorConfig::parse("gumbel:s=5").unwrap(),
            ],
            seeds: vec![3, 1],
            omit_timing: true,
            ..Default::default()
        };
        let a = run_grad_eval(&tiny_suite(), &config).unwrap().to_csv(true);
        let b = run_grad_eval(&tiny_suite(), &config).unwrap().to_csv(true);
        assert_eq!(a, b);
        assert!(a.starts_with("# wmcgrad grad-eval v1\n"));
    }

    #[test]
    fn optimize_runs_and_sorts_by_best_loss() {
        let config = OptimizeSuiteConfig {
            estimators: vec![
                EstimatorConfig::parse("exact").unwrap(),
                EstimatorConfig::parse("tnorm-goedel").unwrap(),
            ],
            seeds: vec![1],
            iterations: 2000,
            ..Default::default()
        };
        let records = run_optimize(&tiny_suite(), &config).unwrap();
        assert_eq!(records.len(), 4);
        for pair in records.windows(2) {
            if pair[0].estimator == pair[1].estimator {
                assert!(pair[0].best_nll <= pair[1].best_nll);
            }
        }
        let exact_rows: Vec<_> = records.iter().filter(|r| r.estimator == "exact").collect();
        for r in exact_rows {
            assert!(r.best_nll < 1e-2, "exact solves the tiny instances: {r:?}");
        }
    }

    #[test]
    fn timeouts_are_reported_not_fatal() {
        let config = GradSuiteConfig {
            estimators: vec![EstimatorConfig::parse("weightme:s=100000,sampler=hash").unwrap()],
            seeds: vec![1],
            timeout: Duration::from_millis(1),
            ..Default::default()
        };
        let out = run_grad_eval(&tiny_suite(), &config).unwrap();
        for r in &out.records {
            assert!(
                matches!(r.status, RunStatus::Timeout | RunStatus::Ok),
                "{r:?}"
            );
        }
    }
}
