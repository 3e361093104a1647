//! Seeded instance generators shared by tests and the benchmark harness.

use crate::logic::{CnfFormula, Interpretation, Literal, Variable, WeightMap};
use crate::sample::RngStream;
use crate::sat::SatEngine;

/// Uniformly random 3-CNF: `m` clauses over `n >= 3` variables, distinct
/// variables per clause, random polarities, tautology-free by construction.
pub fn random_3cnf(n: usize, m: usize, rng: &mut RngStream) -> CnfFormula {
    assert!(n >= 3, "need at least 3 variables");
    let mut phi = CnfFormula::new(n);
    for _ in 0..m {
        phi.push_clause(random_clause(n, 3, None, rng))
            .expect("in range");
    }
    phi
}

/// Random satisfiable 3-CNF: every clause is satisfied by a hidden planted
/// assignment, which is returned alongside the formula.
pub fn planted_3cnf(n: usize, m: usize, rng: &mut RngStream) -> (CnfFormula, Interpretation) {
    assert!(n >= 3);
    let planted = Interpretation::new((0..n).map(|_| rng.next_bool()).collect());
    let mut phi = CnfFormula::new(n);
    for _ in 0..m {
        phi.push_clause(random_clause(n, 3, Some(&planted), rng))
            .expect("in range");
    }
    (phi, planted)
}

/// A clause over `width` distinct variables; when `satisfy` is given, the
/// clause is redrawn until the assignment satisfies it.
fn random_clause(
    n: usize,
    width: usize,
    satisfy: Option<&Interpretation>,
    rng: &mut RngStream,
) -> Vec<Literal> {
    loop {
        let mut vars = Vec::with_capacity(width);
        while vars.len() < width {
            let v = rng.next_below(n as u64) as u32 + 1;
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let lits: Vec<Literal> = vars
            .iter()
            .map(|&v| Literal::new(Variable::new(v), rng.next_bool()))
            .collect();
        match satisfy {
            None => return lits,
            Some(model) => {
                if lits.iter().any(|&l| model.satisfies(l)) {
                    return lits;
                }
            }
        }
    }
}

/// Builds a 3-CNF whose only model is the planted assignment, by adding
/// planted-satisfying clauses until uniqueness holds. Practical for
/// `n` up to a few dozen.
pub fn single_model_3cnf(n: usize, rng: &mut RngStream) -> (CnfFormula, Interpretation) {
    assert!(n >= 3);
    let planted = Interpretation::new((0..n).map(|_| rng.next_bool()).collect());
    let mut phi = CnfFormula::new(n);
    for _ in 0..4 * n {
        phi.push_clause(random_clause(n, 3, Some(&planted), rng))
            .expect("in range");
    }
    loop {
        let mut engine = SatEngine::new(&phi);
        engine.block_model(&planted);
        match engine.solve_with(&[]).expect("within budget") {
            None => return (phi, planted),
            Some(other) => {
                // Block `other` with a planted-satisfying 3-clause that it
                // falsifies: pick 3 vars where the two assignments differ.
                let diff: Vec<u32> = (1..=n as u32)
                    .filter(|&v| planted.value(Variable::new(v)) != other.value(Variable::new(v)))
                    .collect();
                let lits: Vec<Literal> = pick_some(&diff, 3, rng)
                    .into_iter()
                    .map(|v| {
                        let var = Variable::new(v);
                        Literal::new(var, planted.value(var))
                    })
                    .collect();
                phi.push_clause(lits).expect("in range");
            }
        }
    }
}

fn pick_some(pool: &[u32], k: usize, rng: &mut RngStream) -> Vec<u32> {
    let mut pool = pool.to_vec();
    let mut out = Vec::with_capacity(k.min(pool.len()));
    while !pool.is_empty() && out.len() < k {
        let i = rng.next_below(pool.len() as u64) as usize;
        out.push(pool.swap_remove(i));
    }
    out
}

/// CNF encoding of `x_1 xor .. xor x_k = parity` over variables `1..=k`:
/// all sign patterns with the wrong parity are forbidden. `2^(k-1)` clauses
/// of width `k`.
pub fn parity_cnf(k: usize, parity: bool) -> CnfFormula {
    assert!(k >= 2);
    let mut phi = CnfFormula::new(k);
    for pattern in 0..1u64 << k {
        let ones = pattern.count_ones() as usize;
        if (ones % 2 == 1) != parity {
            // Forbidden assignment: add the clause negating it.
            let lits: Vec<Literal> = (0..k)
                .map(|i| {
                    let value = pattern >> i & 1 == 1;
                    Literal::new(Variable::new(i as u32 + 1), !value)
                })
                .collect();
            phi.push_clause(lits).expect("in range");
        }
    }
    phi
}

/// Independent weights uniform in `[lo, hi]`.
pub fn random_weights(n: usize, lo: f64, hi: f64, rng: &mut RngStream) -> WeightMap {
    WeightMap::new((0..n).map(|_| lo + (hi - lo) * rng.next_f64()).collect())
        .expect("weights in range")
}

/// Weights drawn as `clamp(0.5 + sigma * N(0,1))`, the benchmark
/// initialization.
pub fn gaussian_half_weights(n: usize, sigma: f64, rng: &mut RngStream) -> WeightMap {
    WeightMap::new(
        (0..n)
            .map(|_| (0.5 + sigma * rng.next_gaussian()).clamp(1e-6, 1.0 - 1e-6))
            .collect(),
    )
    .expect("clamped in range")
}
