//! Enumeration oracles: brute-force WMC and model listing.

use super::WmcResult;
use crate::error::{Error, Result};
use crate::logic::{CnfFormula, Interpretation, WeightMap};
use crate::sat::SatEngine;

/// Largest variable count accepted by the brute-force counter.
pub const BRUTE_FORCE_VAR_LIMIT: usize = 24;

/// Exact WMC by summing the probability of every satisfying assignment.
/// Independent of the compilation route; the testing oracle.
pub fn wmc_brute(phi: &CnfFormula, w: &WeightMap) -> Result<WmcResult> {
    wmc_brute_limit(phi, w, BRUTE_FORCE_VAR_LIMIT)
}

pub fn wmc_brute_limit(phi: &CnfFormula, w: &WeightMap, limit: usize) -> Result<WmcResult> {
    let n = phi.num_vars();
    if n > limit {
        return Err(Error::TooManyVariables { n, limit });
    }
    assert!(w.len() >= n, "weight map too short");
    let mut total = 0.0;
    for code in 0..1u64 << n {
        let i = Interpretation::from_index(n, code);
        if phi.evaluate(&i) {
            total += i.prob(w);
        }
    }
    Ok(WmcResult::new(total))
}

/// All models of the formula, found by a blocking-clause loop over the SAT
/// engine. Errors out when more than `limit` models exist.
pub fn enumerate_models(phi: &CnfFormula, limit: usize) -> Result<Vec<Interpretation>> {
    SatEngine::new(phi).enumerate(limit)
}
