//! Chain encoding of a categorical variable into Boolean CNF.
//!
//! A distribution over outcomes `a_1..a_k` becomes indicator variables plus
//! selector variables `theta_i` with
//! `w(theta_i) = P(a_i) / P(A != a_1, .., a_{i-1})`:
//!
//! ```text
//! a_1 <-> theta_1
//! a_i <-> -a_1 & .. & -a_{i-1} & theta_i    (1 < i < k)
//! a_k <-> -a_1 & .. & -a_{k-1}
//! ```
//!
//! Indicators carry weight 0.5 and bump the normalization exponent, so
//! `WMC(fragment & a_i) * 2^u = P(a_i)`.

use super::{CnfFormula, Literal, Variable, WeightMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalEncoding {
    pub formula: CnfFormula,
    pub weights: WeightMap,
    /// Indicator variable of each outcome, in input order.
    pub outcomes: Vec<Variable>,
    /// Selector variables `theta_1..theta_{k-1}`.
    pub selectors: Vec<Variable>,
    /// One per indicator variable.
    pub normalization_exponent: u32,
}

const SUM_TOLERANCE: f64 = 1e-9;

pub fn encode_categorical(probabilities: &[f64]) -> Result<CategoricalEncoding> {
    let k = probabilities.len();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "categorical encoding needs at least 2 outcomes".into(),
        ));
    }
    for &p in probabilities {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "outcome probability {p} outside [0, 1]"
            )));
        }
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "outcome probabilities sum to {total}, not 1"
        )));
    }

    // Conditional selector weights; fails on degenerate tails where the
    // remaining mass vanishes before the last outcome.
    let mut selector_weights = Vec::with_capacity(k - 1);
    let mut remaining = 1.0;
    for &p in &probabilities[..k - 1] {
        if remaining <= SUM_TOLERANCE {
            return Err(Error::InvalidArgument(
                "degenerate distribution: no probability mass left for tail outcomes".into(),
            ));
        }
        selector_weights.push(p / remaining);
        remaining -= p;
    }

    let outcomes: Vec<Variable> = (1..=k as u32).map(Variable::new).collect();
    let selectors: Vec<Variable> = (k as u32 + 1..=(2 * k - 1) as u32)
        .map(Variable::new)
        .collect();
    let mut phi = CnfFormula::new(2 * k - 1);

    for i in 0..k {
        let a_i = Literal::positive(outcomes[i]);
        let priors: Vec<Literal> = outcomes[..i]
            .iter()
            .map(|&v| Literal::negative(v))
            .collect();
        if i < k - 1 {
            let theta = Literal::positive(selectors[i]);
            // a_i -> each conjunct
            for &p in &priors {
                phi.push_clause(vec![!a_i, p])?;
            }
            phi.push_clause(vec![!a_i, theta])?;
            // conjunction -> a_i
            let mut back: Vec<Literal> = vec![a_i];
            back.extend(priors.iter().map(|&p| !p));
            back.push(!theta);
            phi.push_clause(back)?;
        } else {
            for &p in &priors {
                phi.push_clause(vec![!a_i, p])?;
            }
            let mut back: Vec<Literal> = vec![a_i];
            back.extend(priors.iter().map(|&p| !p));
            phi.push_clause(back)?;
        }
    }

    let mut probs = vec![0.5; k];
    probs.extend(selector_weights);
    Ok(CategoricalEncoding {
        formula: phi,
        weights: WeightMap::new(probs)?,
        outcomes,
        selectors,
        normalization_exponent: k as u32,
    })
}
