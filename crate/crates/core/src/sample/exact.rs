//! Exact weighted model sampling by top-down traversal of a compiled
//! circuit: every model `M` is drawn with probability `P(M) / WMC`.

use super::RngStream;
use crate::compile::{node_values, DecisionDnnf, Node};
use crate::error::{Error, Result};
use crate::logic::{Interpretation, WeightMap};

pub struct ExactModelSampler<'a> {
    circuit: &'a DecisionDnnf,
    weights: WeightMap,
    values: Vec<f64>,
}

impl<'a> ExactModelSampler<'a> {
    pub fn new(circuit: &'a DecisionDnnf, weights: &WeightMap) -> Result<Self> {
        let values = node_values(circuit, weights);
        if values[circuit.root().index()] <= 0.0 {
            return Err(Error::ZeroWmc);
        }
        Ok(ExactModelSampler {
            circuit,
            weights: weights.clone(),
            values,
        })
    }

    pub fn wmc(&self) -> f64 {
        self.values[self.circuit.root().index()]
    }

    pub fn sample(&self, rng: &mut RngStream) -> Interpretation {
        let n = self.circuit.num_vars();
        let mut assignment: Vec<Option<bool>> = vec![None; n];
        let mut stack = vec![self.circuit.root()];
        while let Some(id) = stack.pop() {
            match self.circuit.node(id) {
                Node::True => {}
                Node::False => unreachable!("zero-probability branch taken"),
                Node::Literal(l) => {
                    assignment[l.var().pos()] = Some(l.is_positive());
                }
                Node::And(children) => stack.extend(children.iter().copied()),
                Node::Decision { var, hi, lo } => {
                    let p = self.weights.prob(*var);
                    let hi_mass = p * self.values[hi.index()];
                    let total = hi_mass + (1.0 - p) * self.values[lo.index()];
                    let take_hi = rng.next_f64() * total < hi_mass;
                    assignment[var.pos()] = Some(take_hi);
                    stack.push(if take_hi { *hi } else { *lo });
                }
            }
        }
        // Variables the circuit never mentions are free: sample from w.
        Interpretation::new(
            assignment
                .iter()
                .enumerate()
                .map(|(i, a)| a.unwrap_or_else(|| rng.next_f64() < self.weights.probs()[i]))
                .collect(),
        )
    }
}

/// One-shot draw; building a sampler amortizes better for many draws.
pub fn exact_model_sample(
    circuit: &DecisionDnnf,
    w: &WeightMap,
    rng: &mut RngStream,
) -> Result<Interpretation> {
    Ok(ExactModelSampler::new(circuit, w)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile;
    use crate::logic::CnfFormula;

    #[test]
    fn single_model_formula_always_returns_it() {
        let phi = CnfFormula::from_dimacs_clauses(3, &[&[1], &[-2], &[3]]).unwrap();
        let w = WeightMap::new(vec![0.3, 0.8, 0.6]).unwrap();
        let circuit = compile(&phi).unwrap();
        let sampler = ExactModelSampler::new(&circuit, &w).unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..200 {
            assert_eq!(sampler.sample(&mut rng).values(), &[true, false, true]);
        }
    }

    #[test]
    fn zero_wmc_rejected() {
        let mut phi = CnfFormula::new(2);
        phi.push_clause(vec![]).unwrap();
        let circuit = compile(&phi).unwrap();
        let w = WeightMap::uniform(2, 0.5);
        assert!(matches!(
            ExactModelSampler::new(&circuit, &w),
            Err(Error::ZeroWmc)
        ));
    }

    #[test]
    fn example_model_frequency() {
        let phi = CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-2, 3]]).unwrap();
        let w = WeightMap::new(vec![0.5, 0.1, 0.25]).unwrap();
        let circuit = compile(&phi).unwrap();
        let sampler = ExactModelSampler::new(&circuit, &w).unwrap();
        let target = Interpretation::new(vec![true, false, false]);
        let p = 0.3375 / 0.475;
        let s = 100_000;
        let mut rng = RngStream::new(41);
        let mut hits = 0;
        for _ in 0..s {
            let m = sampler.sample(&mut rng);
            assert!(phi.evaluate(&m), "sampler must return models");
            if m == target {
                hits += 1;
            }
        }
        let freq = hits as f64 / s as f64;
        let sigma = (p * (1.0 - p) / s as f64).sqrt();
        assert!(
            (freq - p).abs() < 3.0 * sigma,
            "freq {freq} vs {p} (sigma {sigma})"
        );
    }
}
