//! Fuzzy t-norm gradients.
//!
//! The product t-norm treats clauses as independent events, so the value is
//! the product of clause probabilities and the gradient follows from the
//! product rule. The Goedel t-norm is min/max; its subgradient is 1 on the
//! single active literal (lowest clause, then lowest variable index on ties)
//! and 0 everywhere else.

use super::EstimatorReport;
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{Clause, CnfFormula, TNorm, WeightMap};

/// A differentiable factor of a product: its value and its dense gradient
/// contribution scaled by `outer` (the product of all other factors).
pub(crate) trait ProductFactor {
    fn value(&self) -> f64;
    fn accumulate_grad(&self, outer: f64, grad: &mut [f64]);
}

/// Clause probability `1 - prod w(-l)` as a factor.
pub(crate) struct ClauseFactor {
    value: f64,
    /// (variable position, d value / d w(x)) pairs
    partials: Vec<(usize, f64)>,
}

impl ClauseFactor {
    pub fn new(clause: &Clause, w: &WeightMap) -> Self {
        let lits = clause.literals();
        let k = lits.len();
        // miss(l) = w(-l); value = 1 - prod miss
        let misses: Vec<f64> = lits.iter().map(|&l| w.literal_prob(!l)).collect();
        let mut prefix = vec![1.0; k + 1];
        for i in 0..k {
            prefix[i + 1] = prefix[i] * misses[i];
        }
        let mut partials = Vec::with_capacity(k);
        let mut suffix = 1.0;
        for i in (0..k).rev() {
            let others = prefix[i] * suffix;
            // d value / d w(x): +others when the literal is positive
            // (miss = 1 - w(x)), -others when negative (miss = w(x)).
            let sign = if lits[i].is_positive() { 1.0 } else { -1.0 };
            partials.push((lits[i].var().pos(), sign * others));
            suffix *= misses[i];
        }
        partials.reverse();
        ClauseFactor {
            value: 1.0 - prefix[k],
            partials,
        }
    }
}

impl ProductFactor for ClauseFactor {
    fn value(&self) -> f64 {
        self.value
    }

    fn accumulate_grad(&self, outer: f64, grad: &mut [f64]) {
        for &(pos, d) in &self.partials {
            grad[pos] += outer * d;
        }
    }
}

/// Differentiates a product of factors, handling zero-valued factors without
/// division: with two or more zeros every partial vanishes, with exactly one
/// zero only that factor's partials survive.
pub(crate) fn combine_product_factors(
    factors: &[Box<dyn ProductFactor + '_>],
    num_vars: usize,
) -> (f64, Vec<f64>) {
    let k = factors.len();
    let mut grad = vec![0.0; num_vars];
    let mut prefix = vec![1.0; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] * factors[i].value();
    }
    let mut suffix = 1.0;
    // outer_i = prod_{j != i} value_j via prefix/suffix products
    for i in (0..k).rev() {
        factors[i].accumulate_grad(prefix[i] * suffix, &mut grad);
        suffix *= factors[i].value();
    }
    (prefix[k], grad)
}

pub(crate) fn product_tnorm_value_grad(phi: &CnfFormula, w: &WeightMap) -> (f64, Vec<f64>) {
    let factors: Vec<Box<dyn ProductFactor>> = phi
        .clauses()
        .iter()
        .map(|c| Box::new(ClauseFactor::new(c, w)) as Box<dyn ProductFactor>)
        .collect();
    combine_product_factors(&factors, phi.num_vars())
}

fn goedel_value_grad(phi: &CnfFormula, w: &WeightMap) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; phi.num_vars()];
    if phi.clauses().is_empty() {
        return (1.0, grad);
    }
    let mut min_value = f64::INFINITY;
    let mut active: Option<crate::logic::Literal> = None;
    for clause in phi.clauses() {
        let mut best = 0.0;
        let mut best_lit = None;
        for &l in clause.literals() {
            let p = w.literal_prob(l);
            // strict: the first (lowest-variable) literal wins ties
            if best_lit.is_none() || p > best {
                best = p;
                best_lit = Some(l);
            }
        }
        // strict: the first (lowest-index) clause wins ties
        if best < min_value {
            min_value = best;
            active = best_lit;
        }
    }
    if let Some(l) = active {
        grad[l.var().pos()] = if l.is_positive() { 1.0 } else { -1.0 };
    }
    (min_value, grad)
}

/// Exact gradient of the fuzzy relaxation under the chosen t-norm.
pub fn tnorm_grad(phi: &CnfFormula, w: &WeightMap, tnorm: TNorm) -> EstimatorReport {
    let (value, grad) = match tnorm {
        TNorm::Product => product_tnorm_value_grad(phi, w),
        TNorm::Goedel => goedel_value_grad(phi, w),
    };
    EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc)).with_value(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::fuzzy_eval;

    fn example() -> (CnfFormula, WeightMap) {
        (
            CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-2, 3]]).unwrap(),
            WeightMap::new(vec![0.5, 0.1, 0.25]).unwrap(),
        )
    }

    #[test]
    fn product_gradient_on_example() {
        let (phi, w) = example();
        let report = tnorm_grad(&phi, &w, TNorm::Product);
        assert!((report.value_estimate.unwrap() - 0.50875).abs() < 1e-15);
        let g = report.gradient.values();
        // d/dw(a) [1 - (1-a)(1-b)] * 0.925 = (1 - 0.1) * 0.925
        assert!((g[0] - 0.8325).abs() < 1e-12, "{g:?}");
        // clause 1 contributes 0.5 * 0.925', clause 2 contributes 0.55 * (-0.75)
        let expect_b = 0.925 * 0.5 + 0.55 * (-0.75);
        assert!((g[1] - expect_b).abs() < 1e-12, "{g:?}");
        assert!((g[2] - 0.55 * 0.1).abs() < 1e-12, "{g:?}");
    }

    #[test]
    fn product_gradient_matches_finite_differences() {
        let mut rng = crate::sample::RngStream::new(0xFD);
        for _ in 0..20 {
            let n = 3 + rng.next_below(8) as usize;
            let phi = crate::gen::random_3cnf(n, 3 * n, &mut rng);
            let mut w = crate::gen::random_weights(n, 0.1, 0.9, &mut rng);
            let g = tnorm_grad(&phi, &w, TNorm::Product);
            let h = 1e-6;
            for v in phi.variables() {
                let orig = w.prob(v);
                w.set_prob(v, orig + h);
                let up = fuzzy_eval(&phi, &w, TNorm::Product);
                w.set_prob(v, orig - h);
                let down = fuzzy_eval(&phi, &w, TNorm::Product);
                w.set_prob(v, orig);
                let fd = (up - down) / (2.0 * h);
                let got = g.gradient.values()[v.pos()];
                assert!(
                    (fd - got).abs() < 1e-6 * (1.0 + fd.abs()),
                    "{v}: fd {fd} vs {got}"
                );
            }
        }
    }

    #[test]
    fn goedel_single_active_partial() {
        let (phi, w) = example();
        let report = tnorm_grad(&phi, &w, TNorm::Goedel);
        assert!((report.value_estimate.unwrap() - 0.5).abs() < 1e-15);
        let g = report.gradient.values();
        assert_eq!(g, &[1.0, 0.0, 0.0], "active path is w(a) in clause 1");
        assert_eq!(g.iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn independent_clauses_product_equals_exact_gradient() {
        // Clauses over disjoint variables: independence is real.
        let phi = CnfFormula::from_dimacs_clauses(6, &[&[1, -2], &[3, 4], &[-5, -6]]).unwrap();
        let mut rng = crate::sample::RngStream::new(7);
        let w = crate::gen::random_weights(6, 0.1, 0.9, &mut rng);
        let report = tnorm_grad(&phi, &w, TNorm::Product);
        let circuit = crate::compile::compile(&phi).unwrap();
        let (res, exact) = crate::compile::wmc_grad(&circuit, &w);
        assert!((report.value_estimate.unwrap() - res.value).abs() < 1e-12);
        for (a, b) in report.gradient.values().iter().zip(exact.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn false_and_true_formulas() {
        let w = WeightMap::uniform(2, 0.3);
        let truef = CnfFormula::new(2);
        let r = tnorm_grad(&truef, &w, TNorm::Product);
        assert_eq!(r.value_estimate.unwrap(), 1.0);
        assert_eq!(r.gradient.values(), &[0.0, 0.0]);

        let mut falsy = CnfFormula::new(2);
        falsy.push_clause(vec![]).unwrap();
        let r = tnorm_grad(&falsy, &w, TNorm::Goedel);
        assert_eq!(r.value_estimate.unwrap(), 0.0);
        assert_eq!(r.gradient.values(), &[0.0, 0.0]);
    }
}
