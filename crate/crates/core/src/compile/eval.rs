//! Weighted counting and gradients over compiled circuits.

use super::{DecisionDnnf, Node, WmcResult};
use crate::error::{Error, Result};
use crate::grad::{GradTarget, GradientVector};
use crate::logic::WeightMap;

/// Bottom-up weighted model count. Nodes are stored children-first, so a
/// single forward sweep suffices.
pub fn wmc_eval(circuit: &DecisionDnnf, w: &WeightMap) -> WmcResult {
    assert!(w.len() >= circuit.num_vars(), "weight map too short");
    let values = node_values(circuit, w);
    let mut res = WmcResult::new(values[circuit.root().index()]);
    res.stats = *circuit.stats();
    res
}

pub(crate) fn node_values(circuit: &DecisionDnnf, w: &WeightMap) -> Vec<f64> {
    let mut values = vec![0.0; circuit.nodes().len()];
    for (i, node) in circuit.nodes().iter().enumerate() {
        values[i] = match node {
            Node::False => 0.0,
            Node::True => 1.0,
            Node::Literal(l) => w.literal_prob(*l),
            Node::And(children) => children.iter().map(|c| values[c.index()]).product(),
            Node::Decision { var, hi, lo } => {
                let p = w.prob(*var);
                p * values[hi.index()] + (1.0 - p) * values[lo.index()]
            }
        };
    }
    values
}

/// One reverse sweep computes every partial `d WMC / d w(x)` at once.
/// Variables absent from the circuit get partial 0.
pub fn wmc_grad(circuit: &DecisionDnnf, w: &WeightMap) -> (WmcResult, GradientVector) {
    let values = node_values(circuit, w);
    let mut adjoint = vec![0.0; circuit.nodes().len()];
    let mut grad = vec![0.0; circuit.num_vars()];
    adjoint[circuit.root().index()] = 1.0;

    for (i, node) in circuit.nodes().iter().enumerate().rev() {
        let d = adjoint[i];
        if d == 0.0 {
            continue;
        }
        match node {
            Node::False | Node::True => {}
            Node::Literal(l) => {
                let sign = if l.is_positive() { 1.0 } else { -1.0 };
                grad[l.var().pos()] += sign * d;
            }
            Node::And(children) => {
                // Prefix/suffix products avoid dividing by zero-valued children.
                let k = children.len();
                let mut prefix = vec![1.0; k + 1];
                for (j, c) in children.iter().enumerate() {
                    prefix[j + 1] = prefix[j] * values[c.index()];
                }
                let mut suffix = 1.0;
                for j in (0..k).rev() {
                    adjoint[children[j].index()] += d * prefix[j] * suffix;
                    suffix *= values[children[j].index()];
                }
            }
            Node::Decision { var, hi, lo } => {
                let p = w.prob(*var);
                adjoint[hi.index()] += d * p;
                adjoint[lo.index()] += d * (1.0 - p);
                grad[var.pos()] += d * (values[hi.index()] - values[lo.index()]);
            }
        }
    }

    let mut res = WmcResult::new(values[circuit.root().index()]);
    res.stats = *circuit.stats();
    (res, GradientVector::new(grad, GradTarget::Wmc))
}

/// `(log WMC, grad of log WMC)`. Fails on a zero count.
pub fn wmc_log_grad(circuit: &DecisionDnnf, w: &WeightMap) -> Result<(f64, GradientVector)> {
    let (res, grad) = wmc_grad(circuit, w);
    if res.value <= 0.0 {
        return Err(Error::ZeroWmc);
    }
    Ok((
        res.value.ln(),
        grad.scaled(1.0 / res.value, GradTarget::LogWmc),
    ))
}
