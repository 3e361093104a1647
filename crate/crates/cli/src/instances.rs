//! Bundled benchmark instances, generated deterministically from fixed
//! seeds. Competition files are not redistributed; user DIMACS files load
//! through the same type.

use anyhow::{Context, Result};
use std::path::Path;
use wmcgrad_core::gen;
use wmcgrad_core::logic::{parse_dimacs, ParsedInstance};
use wmcgrad_core::sample::RngStream;
use wmcgrad_core::{CnfFormula, WeightMap};

#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub id: String,
    pub instance: ParsedInstance,
}

impl NamedInstance {
    pub fn from_formula(id: impl Into<String>, formula: CnfFormula) -> Self {
        let n = formula.num_vars();
        NamedInstance {
            id: id.into(),
            instance: ParsedInstance {
                formula,
                weights: WeightMap::uniform(n, 0.5),
                normalization_exponent: n as u32,
                declared: vec![false; n],
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let instance =
            parse_dimacs(&text).with_context(|| format!("parsing {}", path.display()))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(NamedInstance { id, instance })
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.instance.formula
    }

    /// Benchmark weights: declared weights are kept, undeclared variables
    /// get a Gaussian draw around 1/2, deterministic in `(id, seed)`.
    pub fn weights_for(&self, seed: u64, sigma: f64) -> WeightMap {
        let mut tag = 0xB591u64;
        for b in self.id.bytes() {
            tag = tag.wrapping_mul(0x100000001B3).wrapping_add(b as u64);
        }
        let mut rng = RngStream::new(tag).fork(seed);
        let mut probs = self.instance.weights.probs().to_vec();
        for (i, p) in probs.iter_mut().enumerate() {
            if !self.instance.declared[i] {
                *p = (0.5 + sigma * rng.next_gaussian()).clamp(1e-6, 1.0 - 1e-6);
            }
        }
        WeightMap::new(probs).expect("clamped weights")
    }
}

/// Gradient-quality suite: 20 planted 3-CNFs spanning 50 to 200 variables
/// at clause ratio 5, where exact compilation stays comfortable.
pub fn bundled_gradient_suite() -> Vec<NamedInstance> {
    let sizes = [
        50, 55, 60, 65, 70, 75, 80, 90, 100, 110, 120, 130, 140, 150, 160, 170, 180, 190, 195, 200,
    ];
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut rng = RngStream::new(0x9AD0 + i as u64);
            let m = 5 * n;
            let (phi, _) = gen::planted_3cnf(n, m, &mut rng);
            NamedInstance::from_formula(format!("rand3_n{n:03}"), phi)
        })
        .collect()
}

/// Instances with exactly one model; interpretation sampling is hopeless
/// here at initialization.
pub fn single_model_suite() -> Vec<NamedInstance> {
    [20usize, 24, 28]
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut rng = RngStream::new(0x51E0 + i as u64);
            let (phi, _) = gen::single_model_3cnf(n, &mut rng);
            NamedInstance::from_formula(format!("single_n{n:03}"), phi)
        })
        .collect()
}

/// Optimization suite: small planted instances that everything should
/// solve, single-model instances, and crafted parity instances whose
/// clause-independence structure misleads fuzzy relaxations.
pub fn bundled_optimization_suite() -> Vec<NamedInstance> {
    let mut out = Vec::new();
    for (i, n) in [20usize, 30].into_iter().enumerate() {
        let mut rng = RngStream::new(0x0B70 + i as u64);
        let (phi, _) = gen::planted_3cnf(n, 4 * n, &mut rng);
        out.push(NamedInstance::from_formula(format!("rand3_n{n:03}"), phi));
    }
    let mut rng = RngStream::new(0x0B80);
    let (phi, _) = gen::single_model_3cnf(20, &mut rng);
    out.push(NamedInstance::from_formula("single_n020", phi));
    out.push(NamedInstance::from_formula(
        "parity_k5",
        gen::parity_cnf(5, true),
    ));
    out.push(NamedInstance::from_formula(
        "parity_k7",
        gen::parity_cnf(7, true),
    ));
    out
}

/// The crafted instances (dependent clauses by construction).
pub fn crafted_ids() -> Vec<&'static str> {
    vec!["parity_k5", "parity_k7"]
}
