//! Gradient estimators for the weighted model count, from the exact circuit
//! gradient through sampling, search and relaxation based approximations,
//! plus the sample-complexity calculators.

mod bounds;
mod catlog;
mod hybrid;
mod relax;
mod score;
mod search;
mod strengthen;
mod tnorm;
mod weightme;

pub use bounds::{
    check_tractability_condition, required_samples_interpretation, required_samples_weightme,
    tau_supervision,
};
pub use catlog::{catlog_wrap, CatLogInner};
pub use hybrid::sample_tnorm_hybrid_grad;
pub use relax::{gumbel_grad, ste_grad};
pub use score::{indecater_expectation, indecater_grad, sfe_expectation, sfe_grad};
pub use search::{imle_grad, kbest_grad, mpe_grad};
pub use strengthen::semantic_strengthening_grad;
pub use tnorm::tnorm_grad;
pub use weightme::{weightme_expectation, weightme_grad, ModelSampler};

use crate::compile::{compile_with, wmc_grad, CompileOptions, DecisionDnnf};
use crate::error::{Error, Result};
use crate::grad::GradientVector;
use crate::logic::{CnfFormula, TNorm, WeightMap};
use crate::sample::{RngStream, SamplerKind};
use crate::sat::MpeOptions;
use std::time::{Duration, Instant};

/// Output of one gradient estimation.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    /// The estimate; its target says whether it approximates the gradient of
    /// WMC or of log WMC.
    pub gradient: GradientVector,
    /// The estimator's own value approximation, when it has one.
    pub value_estimate: Option<f64>,
    pub samples_used: u64,
    pub wall_time: Duration,
}

impl EstimatorReport {
    pub(crate) fn new(gradient: GradientVector) -> Self {
        EstimatorReport {
            gradient,
            value_estimate: None,
            samples_used: 0,
            wall_time: Duration::ZERO,
        }
    }

    pub(crate) fn with_value(mut self, value: f64) -> Self {
        self.value_estimate = Some(value);
        self
    }

    pub(crate) fn with_samples(mut self, samples: u64) -> Self {
        self.samples_used = samples;
        self
    }
}

/// Shared resources and budgets for estimator runs.
#[derive(Default)]
pub struct EstimatorContext<'a> {
    /// Compiled circuit of the formula, when the caller already has one.
    pub circuit: Option<&'a DecisionDnnf>,
    /// Exact WMC, for estimators that rescale log-gradients.
    pub exact_wmc: Option<f64>,
    /// Wall-clock cutoff; long-running estimators poll it.
    pub deadline: Option<Instant>,
    pub compile_options: Option<CompileOptions>,
    pub mpe_options: Option<MpeOptions>,
}

impl<'a> EstimatorContext<'a> {
    pub fn with_circuit(circuit: &'a DecisionDnnf) -> Self {
        EstimatorContext {
            circuit: Some(circuit),
            ..Default::default()
        }
    }

    pub(crate) fn check_deadline(&self, what: &'static str) -> Result<()> {
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                return Err(Error::BudgetExceeded { what });
            }
        }
        Ok(())
    }

    pub(crate) fn compile_options(&self) -> CompileOptions {
        let mut opts = self.compile_options.unwrap_or_default();
        if let Some(deadline) = self.deadline {
            let left = deadline.saturating_duration_since(Instant::now());
            opts.time_budget = Some(opts.time_budget.map_or(left, |b| b.min(left)));
        }
        opts
    }

    pub(crate) fn mpe_options(&self) -> MpeOptions {
        let mut opts = self.mpe_options.unwrap_or_default();
        if opts.deadline.is_none() {
            opts.deadline = self.deadline;
        }
        opts
    }

    /// Borrows the shared circuit or compiles one.
    pub(crate) fn circuit_or_compile(
        &self,
        phi: &CnfFormula,
    ) -> Result<std::borrow::Cow<'a, DecisionDnnf>> {
        match self.circuit {
            Some(c) => Ok(std::borrow::Cow::Borrowed(c)),
            None => Ok(std::borrow::Cow::Owned(compile_with(
                phi,
                &self.compile_options(),
            )?)),
        }
    }
}

/// Estimator selection with per-kind parameters. Defaults mirror the
/// benchmark configuration of each method.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    /// Circuit gradient; the ground truth.
    Exact,
    /// Score function estimator (REINFORCE); leave-one-out baseline unless
    /// `plain`.
    Sfe {
        s: usize,
        plain: bool,
    },
    /// Per-variable conditioned difference with common random numbers.
    Indecater {
        s: usize,
    },
    /// Weighted model sampling estimator of the log-WMC gradient.
    WeightMe {
        s: usize,
        sampler: SamplerKind,
    },
    /// WeightMe over approximately uniform model samples, ignoring weights.
    UniformModel {
        s: usize,
    },
    TnormProduct,
    TnormGoedel,
    Ste {
        s: usize,
    },
    Gumbel {
        s: usize,
        temperature: f64,
    },
    KBest {
        k: usize,
    },
    KOptimal {
        k: usize,
    },
    Mpe,
    Imle {
        s: usize,
        noise_scale: f64,
    },
    SemanticStrengthening {
        kappa: usize,
    },
    CatLog {
        inner: CatLogInner,
        s: usize,
        temperature: f64,
    },
    SampleTnormHybrid {
        s: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorConfig { kind }
    }

    /// Parses the CLI estimator grammar: `name[:key=value,...]`, e.g.
    /// `weightme:s=100,sampler=hash` or `gumbel:s=10,temp=2.0`. `Display`
    /// emits the same grammar canonically, so configs round-trip.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = Error::InvalidArgument;
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), r),
            None => (text.trim(), ""),
        };
        let mut s: Option<usize> = None;
        let mut k: Option<usize> = None;
        let mut kappa: Option<usize> = None;
        let mut temp: Option<f64> = None;
        let mut noise: Option<f64> = None;
        let mut sampler: Option<SamplerKind> = None;
        let mut plain: Option<bool> = None;
        let mut inner: Option<CatLogInner> = None;
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "s" => s = Some(value.parse().map_err(|_| bad(format!("bad s={value}")))?),
                "k" => k = Some(value.parse().map_err(|_| bad(format!("bad k={value}")))?),
                "kappa" => {
                    kappa = Some(
                        value
                            .parse()
                            .map_err(|_| bad(format!("bad kappa={value}")))?,
                    )
                }
                "temp" => {
                    temp = Some(
                        value
                            .parse()
                            .map_err(|_| bad(format!("bad temp={value}")))?,
                    )
                }
                "noise" => {
                    noise = Some(
                        value
                            .parse()
                            .map_err(|_| bad(format!("bad noise={value}")))?,
                    )
                }
                "plain" => {
                    plain = Some(
                        value
                            .parse()
                            .map_err(|_| bad(format!("bad plain={value}")))?,
                    )
                }
                "sampler" => {
                    sampler = Some(match value {
                        "exact" => SamplerKind::ExactModel,
                        "hash" => SamplerKind::HashModel,
                        "uniform" => SamplerKind::UniformModel,
                        _ => return Err(bad(format!("unknown sampler {value:?}"))),
                    })
                }
                "inner" => {
                    inner = Some(match value {
                        "exact" => CatLogInner::Exact,
                        "tnorm-product" => CatLogInner::TnormProduct,
                        "tnorm-goedel" => CatLogInner::TnormGoedel,
                        "gumbel" => CatLogInner::Gumbel,
                        _ => return Err(bad(format!("unknown inner {value:?}"))),
                    })
                }
                _ => return Err(bad(format!("unknown parameter {key:?}"))),
            }
        }
        let kind = match name {
            "exact" => EstimatorKind::Exact,
            "sfe" => EstimatorKind::Sfe {
                s: s.unwrap_or(10_000),
                plain: plain.unwrap_or(false),
            },
            "indecater" => EstimatorKind::Indecater { s: s.unwrap_or(10) },
            "weightme" => EstimatorKind::WeightMe {
                s: s.unwrap_or(100),
                sampler: sampler.unwrap_or(SamplerKind::ExactModel),
            },
            "uniform-model" => EstimatorKind::UniformModel {
                s: s.unwrap_or(100),
            },
            "tnorm-product" => EstimatorKind::TnormProduct,
            "tnorm-goedel" => EstimatorKind::TnormGoedel,
            "ste" => EstimatorKind::Ste { s: s.unwrap_or(10) },
            "gumbel" => EstimatorKind::Gumbel {
                s: s.unwrap_or(10),
                temperature: temp.unwrap_or(2.0),
            },
            "kbest" => EstimatorKind::KBest {
                k: k.unwrap_or(100),
            },
            "koptimal" => EstimatorKind::KOptimal {
                k: k.unwrap_or(100),
            },
            "mpe" => EstimatorKind::Mpe,
            "imle" => EstimatorKind::Imle {
                s: s.unwrap_or(10),
                noise_scale: noise.unwrap_or(1.0),
            },
            "semantic-strengthening" => EstimatorKind::SemanticStrengthening {
                kappa: kappa.unwrap_or(100),
            },
            "catlog" => EstimatorKind::CatLog {
                inner: inner.unwrap_or(CatLogInner::TnormProduct),
                s: s.unwrap_or(10),
                temperature: temp.unwrap_or(2.0),
            },
            "hybrid" => EstimatorKind::SampleTnormHybrid {
                s: s.unwrap_or(100),
            },
            _ => return Err(bad(format!("unknown estimator {name:?}"))),
        };
        Ok(EstimatorConfig { kind })
    }
}

impl std::fmt::Display for EstimatorConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            EstimatorKind::Exact => write!(f, "exact"),
            EstimatorKind::Sfe { s, plain } => {
                if *plain {
                    write!(f, "sfe:s={s},plain=true")
                } else {
                    write!(f, "sfe:s={s}")
                }
            }
            EstimatorKind::Indecater { s } => write!(f, "indecater:s={s}"),
            EstimatorKind::WeightMe { s, sampler } => {
                write!(f, "weightme:s={s},sampler={sampler}")
            }
            EstimatorKind::UniformModel { s } => write!(f, "uniform-model:s={s}"),
            EstimatorKind::TnormProduct => write!(f, "tnorm-product"),
            EstimatorKind::TnormGoedel => write!(f, "tnorm-goedel"),
            EstimatorKind::Ste { s } => write!(f, "ste:s={s}"),
            EstimatorKind::Gumbel { s, temperature } => {
                write!(f, "gumbel:s={s},temp={temperature}")
            }
            EstimatorKind::KBest { k } => write!(f, "kbest:k={k}"),
            EstimatorKind::KOptimal { k } => write!(f, "koptimal:k={k}"),
            EstimatorKind::Mpe => write!(f, "mpe"),
            EstimatorKind::Imle { s, noise_scale } => {
                write!(f, "imle:s={s},noise={noise_scale}")
            }
            EstimatorKind::SemanticStrengthening { kappa } => {
                write!(f, "semantic-strengthening:kappa={kappa}")
            }
            EstimatorKind::CatLog {
                inner,
                s,
                temperature,
            } => match inner {
                CatLogInner::Gumbel => write!(f, "catlog:inner={inner},s={s},temp={temperature}"),
                _ => write!(f, "catlog:inner={inner}"),
            },
            EstimatorKind::SampleTnormHybrid { s } => write!(f, "hybrid:s={s}"),
        }
    }
}

/// Runs one estimator, timing it.
pub fn run_estimator(
    config: &EstimatorConfig,
    phi: &CnfFormula,
    w: &WeightMap,
    ctx: &EstimatorContext,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    let start = Instant::now();
    let mut report = match &config.kind {
        EstimatorKind::Exact => {
            let circuit = ctx.circuit_or_compile(phi)?;
            let (res, grad) = wmc_grad(&circuit, w);
            EstimatorReport::new(grad).with_value(res.value)
        }
        EstimatorKind::Sfe { s, plain } => sfe_grad(phi, w, *s, *plain, ctx, rng)?,
        EstimatorKind::Indecater { s } => indecater_grad(phi, w, *s, ctx, rng)?,
        EstimatorKind::WeightMe { s, sampler } => {
            weightme_grad(phi, w, *sampler, *s, ctx.exact_wmc, ctx, rng)?
        }
        EstimatorKind::UniformModel { s } => weightme_grad(
            phi,
            w,
            SamplerKind::UniformModel,
            *s,
            ctx.exact_wmc,
            ctx,
            rng,
        )?,
        EstimatorKind::TnormProduct => tnorm_grad(phi, w, TNorm::Product),
        EstimatorKind::TnormGoedel => tnorm_grad(phi, w, TNorm::Goedel),
        EstimatorKind::Ste { s } => ste_grad(phi, w, *s, ctx, rng)?,
        EstimatorKind::Gumbel { s, temperature } => {
            gumbel_grad(phi, w, *s, *temperature, ctx, rng)?
        }
        EstimatorKind::KBest { k } => kbest_grad(phi, w, *k, ctx)?,
        EstimatorKind::KOptimal { k } => kbest_grad(phi, w, *k, ctx)?,
        EstimatorKind::Mpe => mpe_grad(phi, w, ctx)?,
        EstimatorKind::Imle { s, noise_scale } => imle_grad(phi, w, *s, *noise_scale, ctx, rng)?,
        EstimatorKind::SemanticStrengthening { kappa } => {
            semantic_strengthening_grad(phi, w, *kappa, ctx)?
        }
        EstimatorKind::CatLog {
            inner,
            s,
            temperature,
        } => catlog_wrap(*inner, phi, w, *s, *temperature, ctx, rng)?,
        EstimatorKind::SampleTnormHybrid { s } => sample_tnorm_hybrid_grad(phi, w, *s, ctx, rng)?,
    };
    report.wall_time = start.elapsed();
    if !report.gradient.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_grammar_round_trips() {
        let cases = [
            "exact",
            "sfe:s=10000",
            "sfe:s=500,plain=true",
            "indecater:s=10",
            "weightme:s=100,sampler=exact",
            "weightme:s=25,sampler=hash",
            "uniform-model:s=100",
            "tnorm-product",
            "tnorm-goedel",
            "ste:s=10",
            "gumbel:s=10,temp=2",
            "kbest:k=100",
            "koptimal:k=100",
            "mpe",
            "imle:s=10,noise=1",
            "semantic-strengthening:kappa=100",
            "catlog:inner=tnorm-product",
            "catlog:inner=gumbel,s=10,temp=2",
            "hybrid:s=100",
        ];
        for text in cases {
            let config = EstimatorConfig::parse(text).unwrap();
            let shown = config.to_string();
            let again = EstimatorConfig::parse(&shown).unwrap();
            assert_eq!(config, again, "round trip of {text:?} via {shown:?}");
        }
    }

    #[test]
    fn config_defaults_match_benchmark_settings() {
        assert_eq!(
            EstimatorConfig::parse("sfe").unwrap().kind,
            EstimatorKind::Sfe {
                s: 10_000,
                plain: false
            }
        );
        assert_eq!(
            EstimatorConfig::parse("gumbel").unwrap().kind,
            EstimatorKind::Gumbel {
                s: 10,
                temperature: 2.0
            }
        );
        assert_eq!(
            EstimatorConfig::parse("ste").unwrap().kind,
            EstimatorKind::Ste { s: 10 }
        );
        assert_eq!(
            EstimatorConfig::parse("weightme").unwrap().kind,
            EstimatorKind::WeightMe {
                s: 100,
                sampler: crate::sample::SamplerKind::ExactModel
            }
        );
        assert_eq!(
            EstimatorConfig::parse("semantic-strengthening")
                .unwrap()
                .kind,
            EstimatorKind::SemanticStrengthening { kappa: 100 }
        );
        assert_eq!(
            EstimatorConfig::parse("koptimal").unwrap().kind,
            EstimatorKind::KOptimal { k: 100 }
        );
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(EstimatorConfig::parse("nope").is_err());
        assert!(EstimatorConfig::parse("sfe:s=abc").is_err());
        assert!(EstimatorConfig::parse("weightme:sampler=bogus").is_err());
        assert!(EstimatorConfig::parse("sfe:k").is_err());
    }
}
