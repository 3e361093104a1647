//! `wmcgrad`: weighted model counts, their gradients, model sampling, and
//! the benchmark harness.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;
use wmcgrad_cli::bench::{
    optimize_records_to_csv, run_grad_eval, run_optimize, GradSuiteConfig, OptimizeSuiteConfig,
};
use wmcgrad_cli::instances::{
    bundled_gradient_suite, bundled_optimization_suite, single_model_suite, NamedInstance,
};
use wmcgrad_core::compile::{compile_with, wmc_eval, CompileOptions};
use wmcgrad_core::estimate::EstimatorConfig;
use wmcgrad_core::gen;
use wmcgrad_core::logic::serialize_dimacs;
use wmcgrad_core::sample::{
    ExactModelSampler, HashModelSampler, RngStream, SamplerKind, SamplerSpec,
};
use wmcgrad_core::Error;

#[derive(Parser)]
#[command(
    name = "wmcgrad",
    about = "Weighted model counting, gradients, model sampling and benchmarks over DIMACS CNF"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact weighted model count of a DIMACS file.
    Count(CountArgs),
    /// Gradient quality of estimators against the exact gradient.
    GradEval(GradEvalArgs),
    /// Log-likelihood optimization sweep.
    Optimize(OptimizeArgs),
    /// Draw models from a formula.
    Sample(SampleArgs),
    /// Generate benchmark instances as DIMACS files.
    Gen(GenArgs),
}

#[derive(Args)]
struct CountArgs {
    /// DIMACS CNF file.
    path: PathBuf,
    /// Remove the node/time compilation budgets.
    #[arg(long)]
    unbounded: bool,
    /// Write the compiled circuit in a line-based NNF text format.
    #[arg(long)]
    dump_nnf: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// DIMACS files; defaults to the bundled suite when empty.
    paths: Vec<PathBuf>,
    /// Estimator configs, e.g. `weightme:s=100,sampler=hash` `tnorm-product`.
    #[arg(long, value_delimiter = ',', required = true)]
    estimators: Vec<String>,
    /// Seeds, one run per seed.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    /// Master seed mixed into every per-job stream.
    #[arg(long, default_value_t = 0xACE)]
    master_seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave timing columns empty so repeated runs are byte-identical.
    #[arg(long)]
    omit_timing: bool,
    /// Worker threads (also WMCGRAD_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GradEvalArgs {
    #[command(flatten)]
    suite: SuiteArgs,
    /// Include the bundled single-model instances as well.
    #[arg(long)]
    with_single_model: bool,
    /// Per-gradient timeout in seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
    /// Gaussian spread of benchmark weights around 1/2.
    #[arg(long, default_value_t = 0.15)]
    sigma: f64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Early-stop NLL in nats.
    #[arg(long, default_value_t = 1e-2)]
    early_stop: f64,
    /// Concept-supervision fraction (e.g. 0.9); off when omitted.
    #[arg(long)]
    supervised: Option<f64>,
    /// Directory for per-run trace CSVs.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// DIMACS CNF file.
    path: PathBuf,
    /// exact | hash | uniform
    #[arg(long, default_value = "exact")]
    sampler: String,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Hash-sampler cell size.
    #[arg(long, default_value_t = 73)]
    pivot: usize,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Variable counts.
    #[arg(long, value_delimiter = ',', default_value = "50,100,150,200")]
    sizes: Vec<usize>,
    /// Clause-to-variable ratio of the planted instances.
    #[arg(long, default_value_t = 5.0)]
    ratio: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Force exactly one model per instance (practical up to ~30 variables).
    #[arg(long)]
    single_model: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Count(args) => cmd_count(args),
        Command::GradEval(args) => cmd_grad_eval(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // IO and parse problems exit 2, everything else 1
            let io_like = err.chain().any(|c| {
                c.downcast_ref::<std::io::Error>().is_some()
                    || matches!(c.downcast_ref::<Error>(), Some(Error::Parse { .. }))
            });
            ExitCode::from(if io_like { 2 } else { 1 })
        }
    }
}

fn setup_threads(requested: Option<usize>) {
    let threads = requested.or_else(|| {
        std::env::var("WMCGRAD_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn load_instances(paths: &[PathBuf]) -> Result<Vec<NamedInstance>> {
    paths.iter().map(|p| NamedInstance::load(p)).collect()
}

fn parse_estimators(texts: &[String]) -> Result<Vec<EstimatorConfig>> {
    texts
        .iter()
        .map(|t| EstimatorConfig::parse(t).map_err(anyhow::Error::from))
        .collect()
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_count(args: CountArgs) -> Result<ExitCode> {
    let inst = NamedInstance::load(&args.path)?;
    let options = if args.unbounded {
        CompileOptions::unbounded()
    } else {
        CompileOptions::default()
    };
    let circuit = compile_with(inst.formula(), &options)?;
    if let Some(path) = &args.dump_nnf {
        std::fs::write(path, circuit.dump_nnf())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let res = wmc_eval(&circuit, &inst.instance.weights)
        .with_normalization(inst.instance.normalization_exponent);
    println!("{}", res.normalized_value());
    println!(
        "c raw {} normalization 2^{} nodes {} decisions {} cache-hits {} wall-ms {}",
        res.value,
        res.normalization_exponent,
        circuit.stats().nodes,
        circuit.stats().decisions,
        circuit.stats().cache_hits,
        circuit.stats().wall.as_millis()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_grad_eval(args: GradEvalArgs) -> Result<ExitCode> {
    setup_threads(args.suite.threads);
    let mut instances = if args.suite.paths.is_empty() {
        bundled_gradient_suite()
    } else {
        load_instances(&args.suite.paths)?
    };
    if args.with_single_model {
        instances.extend(single_model_suite());
    }
    let config = GradSuiteConfig {
        estimators: parse_estimators(&args.suite.estimators)?,
        seeds: args.suite.seeds.clone(),
        timeout: Duration::from_secs(args.timeout),
        weight_sigma: args.sigma,
        master_seed: args.suite.master_seed,
        omit_timing: args.suite.omit_timing,
    };
    let outcome = run_grad_eval(&instances, &config)?;
    write_output(&args.suite.out, &outcome.to_csv(config.omit_timing))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<ExitCode> {
    setup_threads(args.suite.threads);
    let instances = if args.suite.paths.is_empty() {
        bundled_optimization_suite()
    } else {
        load_instances(&args.suite.paths)?
    };
    if let Some(dir) = &args.traces {
        std::fs::create_dir_all(dir)?;
    }
    let config = OptimizeSuiteConfig {
        estimators: parse_estimators(&args.suite.estimators)?,
        seeds: args.suite.seeds.clone(),
        iterations: args.iterations,
        lr: args.lr,
        early_stop_nll: args.early_stop,
        supervised_fraction: args.supervised,
        master_seed: args.suite.master_seed,
        omit_timing: args.suite.omit_timing,
        trace_dir: args.traces.clone(),
    };
    let records = run_optimize(&instances, &config)?;
    write_output(
        &args.suite.out,
        &optimize_records_to_csv(&records, config.omit_timing),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(args: SampleArgs) -> Result<ExitCode> {
    let inst = NamedInstance::load(&args.path)?;
    let phi = inst.formula();
    let w = &inst.instance.weights;
    let mut rng = RngStream::new(args.seed);
    let mut lines = Vec::with_capacity(args.count);
    let outcome: Result<(), Error> = (|| {
        match args.sampler.as_str() {
            "exact" => {
                let circuit = compile_with(phi, &CompileOptions::default())?;
                if circuit.is_false() {
                    return Err(Error::Unsat);
                }
                let sampler = ExactModelSampler::new(&circuit, w)?;
                for _ in 0..args.count {
                    lines.push(sampler.sample(&mut rng).to_dimacs());
                }
            }
            "hash" => {
                let spec = SamplerSpec::new(SamplerKind::HashModel).with_pivot(args.pivot);
                let mut sampler = HashModelSampler::new(phi, w, spec)?;
                for _ in 0..args.count {
                    lines.push(sampler.sample(&mut rng)?.to_dimacs());
                }
            }
            "uniform" => {
                let spec = SamplerSpec::new(SamplerKind::UniformModel).with_pivot(args.pivot);
                let mut sampler = HashModelSampler::uniform(phi, spec)?;
                for _ in 0..args.count {
                    lines.push(sampler.sample(&mut rng)?.to_dimacs());
                }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown sampler {other:?} (expected exact, hash or uniform)"
                )))
            }
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => {
            for line in lines {
                println!("{line}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(Error::Unsat) => {
            eprintln!("error: formula is unsatisfiable");
            Ok(ExitCode::FAILURE)
        }
        Err(e) => bail!(e),
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    std::fs::create_dir_all(&args.out)?;
    for (i, &n) in args.sizes.iter().enumerate() {
        let mut rng = RngStream::new(args.seed).fork(i as u64);
        let (phi, name) = if args.single_model {
            let (phi, _) = gen::single_model_3cnf(n, &mut rng);
            (phi, format!("single_n{n:03}.cnf"))
        } else {
            let m = (args.ratio * n as f64).round() as usize;
            let (phi, _) = gen::planted_3cnf(n, m, &mut rng);
            (phi, format!("rand3_n{n:03}.cnf"))
        };
        let named = NamedInstance::from_formula(name.trim_end_matches(".cnf"), phi);
        let path = args.out.join(&name);
        std::fs::write(&path, serialize_dimacs(&named.instance))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
