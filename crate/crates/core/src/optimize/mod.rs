//! Gradient ascent on log WMC with logit-parametrized weights, plus the
//! benchmark weight initializations.

use crate::compile::{compile_with, node_values, CompileOptions, DecisionDnnf};
use crate::error::{Error, Result};
use crate::estimate::{run_estimator, EstimatorConfig, EstimatorContext};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{CnfFormula, Interpretation, WeightMap};
use crate::sample::RngStream;
use crate::sat::{SatEngine, SatInstance};
use std::time::{Duration, Instant};

/// Per-variable logits; weights are `sigmoid(logit)`, so they can never
/// leave the open interval during training.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    logits: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl Params {
    pub fn from_weights(w: &WeightMap) -> Self {
        let clamped = w.clamped(crate::logic::DEFAULT_CLAMP_MARGIN);
        Params {
            logits: clamped.probs().iter().map(|&p| logit(p)).collect(),
        }
    }

    pub fn from_logits(logits: Vec<f64>) -> Self {
        Params { logits }
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn weights(&self) -> WeightMap {
        WeightMap::new(self.logits.iter().map(|&z| sigmoid(z)).collect())
            .expect("sigmoid stays in range")
    }
}

/// How weights are initialized before optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// `w = clamp(0.5 + sigma N(0,1))`.
    GaussianHalf { sigma: f64 },
    /// A random fraction of the variables is set confidently (weight 0.9)
    /// toward a model of the formula; the rest are Gaussian around 1/2.
    ConceptSupervised { fraction: f64, sigma: f64 },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::GaussianHalf { sigma: 0.1 }
    }
}

/// Initial parameters under the spec; supervised mode solves for a target
/// model first and fails on unsatisfiable formulas.
pub fn init_weights(phi: &CnfFormula, spec: &InitSpec, rng: &mut RngStream) -> Result<Params> {
    let n = phi.num_vars();
    let gaussian = |rng: &mut RngStream, sigma: f64| -> f64 {
        (0.5 + sigma * rng.next_gaussian()).clamp(1e-6, 1.0 - 1e-6)
    };
    match *spec {
        InitSpec::GaussianHalf { sigma } => {
            let probs: Vec<f64> = (0..n).map(|_| gaussian(rng, sigma)).collect();
            Ok(Params::from_weights(&WeightMap::new(probs)?))
        }
        InitSpec::ConceptSupervised { fraction, sigma } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::InvalidArgument(
                    "supervision fraction must be in [0, 1]".into(),
                ));
            }
            let target = crate::sat::solve(&SatInstance::new(phi.clone()))?
                .model()
                .ok_or(Error::Unsat)?;
            let supervised_count = (fraction * n as f64).ceil() as usize;
            let mut pool: Vec<usize> = (0..n).collect();
            let mut supervised = vec![false; n];
            for _ in 0..supervised_count.min(n) {
                let i = rng.next_below(pool.len() as u64) as usize;
                supervised[pool.swap_remove(i)] = true;
            }
            let probs: Vec<f64> = (0..n)
                .map(|i| {
                    if supervised[i] {
                        if target.values()[i] {
                            0.9
                        } else {
                            0.1
                        }
                    } else {
                        gaussian(rng, sigma)
                    }
                })
                .collect();
            Ok(Params::from_weights(&WeightMap::new(probs)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    Sgd,
    /// First/second-moment adaptive steps (beta1 0.9, beta2 0.999,
    /// eps 1e-8) with bias correction.
    Adaptive,
}

/// Ascent stepper over logits. The gradient comes in weight space; the chain
/// rule through the sigmoid is applied here.
#[derive(Debug, Clone)]
pub struct Optimizer {
    method: StepMethod,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(method: StepMethod, lr: f64, num_vars: usize) -> Self {
        Optimizer {
            method,
            lr,
            m: vec![0.0; num_vars],
            v: vec![0.0; num_vars],
            t: 0,
        }
    }

    /// One ascent step on log WMC. `grad_w` must be the gradient with
    /// respect to the weights; non-finite entries are rejected.
    pub fn step(&mut self, params: &mut Params, grad_w: &[f64]) -> Result<()> {
        if grad_w.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        assert_eq!(params.len(), grad_w.len());
        self.t += 1;
        for (i, (logit, &gw)) in params.logits.iter_mut().zip(grad_w).enumerate() {
            let w = sigmoid(*logit);
            let g = gw * w * (1.0 - w); // d logit via sigmoid'
            match self.method {
                StepMethod::Sgd => *logit += self.lr * g,
                StepMethod::Adaptive => {
                    self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
                    self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
                    let m_hat = self.m[i] / (1.0 - BETA1.powi(self.t as i32));
                    let v_hat = self.v[i] / (1.0 - BETA2.powi(self.t as i32));
                    *logit += self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Negative natural log of the WMC (exact when tracked, otherwise the
    /// estimator's own value estimate).
    pub nll: f64,
    pub grad_norm: f64,
    pub wall: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    /// Early-stopped under the NLL threshold.
    Converged,
    ReachedMaxIterations,
    /// The estimator failed; the trace holds the iterations that ran.
    Aborted,
}

#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
    pub best_nll: f64,
    pub iterations_run: usize,
    pub status: TrainStatus,
    /// Set when the run aborted.
    pub error: Option<Error>,
    pub final_params: Params,
}

impl TrainTrace {
    /// CSV rendering: `iteration,nll,grad_norm,wall_ms` under a versioned
    /// comment header.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("# wmcgrad train-trace v1\niteration,nll,grad_norm,wall_ms\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{}",
                row.iteration,
                row.nll,
                row.grad_norm,
                row.wall.as_millis()
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub iterations: usize,
    pub lr: f64,
    pub method: StepMethod,
    /// Stop once the NLL drops below this many nats.
    pub early_stop_nll: f64,
    /// Track the exact NLL through a compiled circuit when compilation
    /// succeeds within budget.
    pub track_exact: bool,
    pub compile_options: CompileOptions,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            iterations: 10_000,
            lr: 0.05,
            method: StepMethod::Adaptive,
            early_stop_nll: 1e-2,
            track_exact: true,
            compile_options: CompileOptions::default(),
        }
    }
}

/// Maximizes log WMC with the chosen estimator. Each iteration draws a
/// gradient, converts it to log-space if needed, and steps the logits;
/// the NLL is recorded from the exact circuit when available, otherwise
/// from the estimator's value estimate.
pub fn train(
    phi: &CnfFormula,
    estimator: &EstimatorConfig,
    init: &InitSpec,
    options: &TrainOptions,
    rng: &mut RngStream,
) -> Result<TrainTrace> {
    if options.iterations == 0 {
        return Err(Error::InvalidArgument(
            "training needs at least 1 iteration".into(),
        ));
    }
    let start = Instant::now();
    let mut params = init_weights(phi, init, rng)?;
    let circuit: Option<DecisionDnnf> = if options.track_exact {
        compile_with(phi, &options.compile_options).ok()
    } else {
        None
    };

    let mut rows = Vec::with_capacity(options.iterations.min(4096));
    let mut best_nll = f64::INFINITY;
    let mut optimizer = Optimizer::new(options.method, options.lr, phi.num_vars());
    let mut status = TrainStatus::ReachedMaxIterations;
    let mut error = None;

    for iteration in 0..options.iterations {
        let w = params.weights();
        let ctx = match &circuit {
            Some(c) => EstimatorContext::with_circuit(c),
            None => EstimatorContext::default(),
        };
        let report = match run_estimator(estimator, phi, &w, &ctx, rng) {
            Ok(r) => r,
            Err(e) => {
                status = TrainStatus::Aborted;
                error = Some(e);
                break;
            }
        };

        let exact_wmc = circuit.as_ref().map(|c| {
            let values = node_values(c, &w);
            values[c.root().index()]
        });
        let value_for_nll = exact_wmc.or(report.value_estimate);
        let nll = match value_for_nll {
            Some(v) if v > 0.0 => -v.ln(),
            _ => f64::INFINITY,
        };
        best_nll = best_nll.min(nll);

        let log_grad = to_log_gradient(&report.gradient, value_for_nll);
        let grad_norm = log_grad.norm();
        rows.push(TraceRow {
            iteration,
            nll,
            grad_norm,
            wall: start.elapsed(),
        });

        if nll < options.early_stop_nll {
            status = TrainStatus::Converged;
            break;
        }
        if let Err(e) = optimizer.step(&mut params, log_grad.values()) {
            status = TrainStatus::Aborted;
            error = Some(e);
            break;
        }
    }

    Ok(TrainTrace {
        iterations_run: rows.len(),
        rows,
        best_nll,
        status,
        error,
        final_params: params,
    })
}

/// Rescales a WMC gradient into log space when a positive value is known;
/// log-space gradients pass through.
fn to_log_gradient(grad: &GradientVector, value: Option<f64>) -> GradientVector {
    match grad.target() {
        GradTarget::LogWmc => grad.clone(),
        GradTarget::Wmc => match value {
            Some(v) if v > 1e-300 => grad.scaled(1.0 / v, GradTarget::LogWmc),
            _ => grad.scaled(1.0, GradTarget::LogWmc),
        },
    }
}

/// Cosine trajectory between an estimator and the exact gradient along an
/// exact-gradient ascent; used to observe when sampling becomes faithful
/// during training.
pub struct TransitionPoint {
    pub iteration: usize,
    pub nll: f64,
    pub cosine: f64,
}

pub fn transition_trajectory(
    phi: &CnfFormula,
    probe: &EstimatorConfig,
    init: &InitSpec,
    options: &TrainOptions,
    rng: &mut RngStream,
) -> Result<Vec<TransitionPoint>> {
    let circuit = compile_with(phi, &options.compile_options)?;
    let mut params = init_weights(phi, init, rng)?;
    let mut optimizer = Optimizer::new(options.method, options.lr, phi.num_vars());
    let mut out = Vec::new();
    for iteration in 0..options.iterations {
        let w = params.weights();
        let (res, exact_grad) = crate::compile::wmc_grad(&circuit, &w);
        if res.value <= 0.0 {
            return Err(Error::ZeroWmc);
        }
        let ctx = EstimatorContext::with_circuit(&circuit);
        let report = run_estimator(probe, phi, &w, &ctx, rng)?;
        let cosine = match report.gradient.target() {
            GradTarget::Wmc => report.gradient.cosine(&exact_grad)?,
            GradTarget::LogWmc => {
                let log_grad = exact_grad.scaled(1.0 / res.value, GradTarget::LogWmc);
                report.gradient.cosine(&log_grad)?
            }
        };
        let nll = -res.value.ln();
        out.push(TransitionPoint {
            iteration,
            nll,
            cosine: cosine.value,
        });
        if nll < options.early_stop_nll {
            break;
        }
        let log_grad = exact_grad.scaled(1.0 / res.value, GradTarget::LogWmc);
        optimizer.step(&mut params, log_grad.values())?;
    }
    Ok(out)
}

/// Uniqueness-checked model enumeration helper for supervised experiments.
pub fn some_model(phi: &CnfFormula) -> Result<Interpretation> {
    SatEngine::new(phi).solve_with(&[])?.ok_or(Error::Unsat)
}
