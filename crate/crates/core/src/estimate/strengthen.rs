//! Semantic strengthening: exact compilation for the clause pairs that
//! violate the independence assumption most, product t-norm for the rest.
//!
//! Pairwise mutual information between clause-satisfaction events is
//! computed in closed form by inclusion-exclusion, the `kappa` highest-MI
//! dependent pairs are merged into groups with union-find, each group is
//! compiled exactly and treated as one factor of the product.

use super::tnorm::{combine_product_factors, ClauseFactor, ProductFactor};
use super::{EstimatorContext, EstimatorReport};
use crate::compile::{compile_with, wmc_grad};
use crate::error::Result;
use crate::grad::{GradTarget, GradientVector};
use crate::logic::{Clause, CnfFormula, WeightMap};
use std::collections::HashMap;

/// Pairs with MI at or below this are treated as independent and never
/// merged, so disjoint-variable clauses stay factorized at any budget.
const MI_EPS: f64 = 1e-12;

fn miss_prob(clause: &Clause, w: &WeightMap) -> f64 {
    clause
        .literals()
        .iter()
        .map(|&l| w.literal_prob(!l))
        .product()
}

/// P(both clauses falsified): the union of the forced all-false assignments,
/// zero on conflicting polarities.
fn joint_miss_prob(a: &Clause, b: &Clause, w: &WeightMap) -> f64 {
    let mut forced: HashMap<u32, bool> = HashMap::new();
    let mut p = 1.0;
    for &l in a.literals().iter().chain(b.literals()) {
        let var = l.var();
        let value = !l.is_positive(); // the literal must be false
        match forced.insert(var.index(), value) {
            None => p *= w.literal_prob(!l),
            Some(prev) => {
                if prev != value {
                    return 0.0;
                }
            }
        }
    }
    p
}

fn xlog(p: f64, q: f64) -> f64 {
    if p <= 0.0 || q <= 0.0 {
        0.0
    } else {
        p * (p / q).ln()
    }
}

/// Mutual information between the satisfaction indicators of two clauses
/// under the independent interpretation distribution.
pub(crate) fn clause_pair_mi(a: &Clause, b: &Clause, w: &WeightMap) -> f64 {
    let miss_a = miss_prob(a, w);
    let miss_b = miss_prob(b, w);
    let p00 = joint_miss_prob(a, b, w);
    let p01 = (miss_a - p00).max(0.0); // a falsified, b satisfied
    let p10 = (miss_b - p00).max(0.0);
    let p11 = (1.0 - miss_a - miss_b + p00).max(0.0);
    let sat_a = 1.0 - miss_a;
    let sat_b = 1.0 - miss_b;
    let mi = xlog(p00, miss_a * miss_b)
        + xlog(p01, miss_a * sat_b)
        + xlog(p10, sat_a * miss_b)
        + xlog(p11, sat_a * sat_b);
    mi.max(0.0)
}

struct CircuitFactor {
    value: f64,
    grad: Vec<f64>,
}

impl ProductFactor for CircuitFactor {
    fn value(&self) -> f64 {
        self.value
    }

    fn accumulate_grad(&self, outer: f64, grad: &mut [f64]) {
        for (acc, g) in grad.iter_mut().zip(&self.grad) {
            *acc += outer * g;
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // lower root wins, keeping group order stable
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// At `kappa = 0` this is exactly the product t-norm gradient; with every
/// dependent pair merged it is the exact gradient of each connected factor.
pub fn semantic_strengthening_grad(
    phi: &CnfFormula,
    w: &WeightMap,
    kappa: usize,
    ctx: &EstimatorContext,
) -> Result<EstimatorReport> {
    let m = phi.clauses().len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    if kappa > 0 {
        for i in 0..m {
            for j in i + 1..m {
                let mi = clause_pair_mi(&phi.clauses()[i], &phi.clauses()[j], w);
                if mi > MI_EPS {
                    pairs.push((mi, i, j));
                }
            }
        }
        pairs.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
    }

    let mut uf = UnionFind::new(m);
    for &(_, i, j) in pairs.iter().take(kappa) {
        uf.union(i, j);
    }

    // Group clauses by root, keeping clause order inside and across groups.
    let mut group_of_root: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for ci in 0..m {
        let root = uf.find(ci);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(ci);
    }

    let mut factors: Vec<Box<dyn ProductFactor>> = Vec::with_capacity(groups.len());
    let mut compiled_groups = 0u64;
    for group in &groups {
        if group.len() == 1 {
            factors.push(Box::new(ClauseFactor::new(&phi.clauses()[group[0]], w)));
        } else {
            ctx.check_deadline("semantic strengthening")?;
            let mut sub = CnfFormula::new(phi.num_vars());
            for &ci in group {
                sub.push_clause(phi.clauses()[ci].literals().to_vec())?;
            }
            let circuit = compile_with(&sub, &ctx.compile_options())?;
            let (res, grad) = wmc_grad(&circuit, w);
            compiled_groups += 1;
            factors.push(Box::new(CircuitFactor {
                value: res.value,
                grad: grad.values().to_vec(),
            }));
        }
    }

    let (value, grad) = combine_product_factors(&factors, phi.num_vars());
    Ok(
        EstimatorReport::new(GradientVector::new(grad, GradTarget::Wmc))
            .with_value(value)
            .with_samples(compiled_groups),
    )
}
