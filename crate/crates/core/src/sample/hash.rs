//! Hash-based approximate weighted model sampling.
//!
//! Random parity constraints partition the assignment space into cells
//! (each variable joins a constraint with probability 1/2, random parity
//! bit). Constraints are added until at most `pivot` models survive, the
//! surviving cell is enumerated, and one model is drawn with probability
//! proportional to its weight. With a pairwise-independent hash family the
//! result approximates `P(M) / WMC`; at most `pivot` models in total the
//! sampler is exact because no constraints are needed.

use super::{RngStream, SamplerSpec};
use crate::error::{Error, Result};
use crate::logic::{CnfFormula, Interpretation, Variable, WeightMap};
use crate::sat::{ParityConstraint, SatEngine};

/// Resizing attempts per draw before giving up.
const DRAW_ATTEMPTS: usize = 64;
/// Empty cells tolerated at one constraint count before backing off.
const EMPTY_RETRIES: usize = 4;
/// Expected constraint width cap. Below `2 * cap` variables the family is
/// the dense include-each-variable-with-probability-1/2 one; above that the
/// inclusion probability is lowered so chains stay short enough for CDCL,
/// trading a little pairwise independence for tractable probes.
const TARGET_XOR_WIDTH: f64 = 24.0;
/// Conflicts allowed per cell probe before the hash is redrawn.
const PROBE_CONFLICT_BUDGET: u64 = 200_000;

pub struct HashModelSampler {
    phi: CnfFormula,
    weights: WeightMap,
    spec: SamplerSpec,
    /// Entire model set when it fits within the pivot: the exact fast path.
    full_cell: Option<(Vec<Interpretation>, Vec<f64>)>,
    /// Constraint count that produced a good cell last time.
    last_m: usize,
}

impl HashModelSampler {
    pub fn new(phi: &CnfFormula, weights: &WeightMap, spec: SamplerSpec) -> Result<Self> {
        spec.validate()?;
        assert_eq!(weights.len(), phi.num_vars());
        let mut engine = SatEngine::new(phi);
        if engine.solve_with(&[])?.is_none() {
            return Err(Error::Unsat);
        }
        let probe = engine.enumerate_up_to(spec.pivot)?;
        let full_cell = if probe.len() <= spec.pivot {
            let masses: Vec<f64> = probe.iter().map(|m| m.prob(weights)).collect();
            Some((probe, masses))
        } else {
            None
        };
        Ok(HashModelSampler {
            phi: phi.clone(),
            weights: weights.clone(),
            spec,
            full_cell,
            last_m: 1,
        })
    }

    /// Hash sampler over forced-uniform weights: unweighted model sampling.
    pub fn uniform(phi: &CnfFormula, spec: SamplerSpec) -> Result<Self> {
        let w = WeightMap::uniform(phi.num_vars(), 0.5);
        HashModelSampler::new(phi, &w, spec)
    }

    fn random_parity(&self, rng: &mut RngStream) -> ParityConstraint {
        let n = self.phi.num_vars();
        let include = (TARGET_XOR_WIDTH / n as f64).min(0.5);
        let vars: Vec<Variable> = (1..=n as u32)
            .filter(|_| rng.next_f64() < include)
            .map(Variable::new)
            .collect();
        ParityConstraint {
            vars,
            parity: rng.next_bool(),
        }
    }

    /// Enumerates the cell under `m` fresh random constraints; saturates at
    /// `pivot + 1` models. `None` means the probe blew its conflict budget
    /// and the hash should be redrawn.
    fn probe_cell(&self, m: usize, rng: &mut RngStream) -> Result<Option<Vec<Interpretation>>> {
        let mut engine = SatEngine::new(&self.phi);
        engine.set_conflict_budget(PROBE_CONFLICT_BUDGET);
        for _ in 0..m {
            engine.add_parity(&self.random_parity(rng))?;
        }
        match engine.enumerate_up_to(self.spec.pivot) {
            Ok(cell) => Ok(Some(cell)),
            Err(Error::BudgetExceeded { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn draw_from_cell(
        cell: &[Interpretation],
        masses: &[f64],
        rng: &mut RngStream,
    ) -> Interpretation {
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            // All cell models have zero weight; fall back to uniform choice.
            let i = rng.next_below(cell.len() as u64) as usize;
            return cell[i].clone();
        }
        let mut u = rng.next_f64() * total;
        for (m, &mass) in cell.iter().zip(masses) {
            u -= mass;
            if u < 0.0 {
                return m.clone();
            }
        }
        cell.last().expect("nonempty cell").clone()
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> Result<Interpretation> {
        if let Some((cell, masses)) = &self.full_cell {
            return Ok(Self::draw_from_cell(cell, masses, rng));
        }

        // Climb one constraint at a time: oversized-cell probes stay on the
        // cheap satisfiable side, and the first workable count is at most
        // one past the boundary, which keeps the XOR systems underconstrained.
        let max_m = self.phi.num_vars() + 4;
        let mut m = self.last_m.saturating_sub(1).clamp(1, max_m);
        let mut known_low = 0usize; // cells at this count were too big
        let mut empties_here = 0usize;
        for _ in 0..DRAW_ATTEMPTS {
            let cell = match self.probe_cell(m, rng)? {
                Some(cell) => cell,
                None => continue, // hard probe: redraw the hash
            };
            if cell.len() > self.spec.pivot {
                known_low = known_low.max(m);
                empties_here = 0;
                m = (m + 1).min(max_m);
                continue;
            }
            if cell.is_empty() {
                empties_here += 1;
                if empties_here > EMPTY_RETRIES && m > known_low + 1 {
                    // Too fine: back off toward the boundary.
                    m -= 1;
                    empties_here = 0;
                }
                continue;
            }
            self.last_m = m;
            let masses: Vec<f64> = cell.iter().map(|i| i.prob(&self.weights)).collect();
            return Ok(Self::draw_from_cell(&cell, &masses, rng));
        }
        Err(Error::BudgetExceeded {
            what: "hash sampler sizing",
        })
    }
}

/// One-shot approximate weighted model sample.
pub fn hash_model_sample(
    phi: &CnfFormula,
    w: &WeightMap,
    spec: SamplerSpec,
    rng: &mut RngStream,
) -> Result<Interpretation> {
    HashModelSampler::new(phi, w, spec)?.sample(rng)
}

/// One-shot approximately-uniform model sample: hash sampling with all
/// weights forced to 1/2.
pub fn uniform_model_sample(
    phi: &CnfFormula,
    spec: SamplerSpec,
    rng: &mut RngStream,
) -> Result<Interpretation> {
    HashModelSampler::uniform(phi, spec)?.sample(rng)
}
