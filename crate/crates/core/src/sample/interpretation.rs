//! I.i.d. sampling from the interpretation distribution `P(I; w)`.

use super::RngStream;
use crate::error::{Error, Result};
use crate::logic::{Interpretation, WeightMap};

/// Draws `s` interpretations, each variable independently true with its
/// weight.
pub fn sample_interpretations(
    w: &WeightMap,
    s: usize,
    rng: &mut RngStream,
) -> Result<Vec<Interpretation>> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    Ok((0..s).map(|_| sample_one(w, rng)).collect())
}

pub(crate) fn sample_one(w: &WeightMap, rng: &mut RngStream) -> Interpretation {
    Interpretation::new(w.probs().iter().map(|&p| rng.next_f64() < p).collect())
}
