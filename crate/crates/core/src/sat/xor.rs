//! Tseitin chain encoding of parity constraints.

use super::solver::{Lit, Solver};
use super::ParityConstraint;

/// Adds clauses enforcing `xor(vars) = parity`. Fresh accumulator variables
/// are functionally determined by the originals, so model counts over the
/// original variables are unchanged.
pub(super) fn encode_parity(solver: &mut Solver, pc: &ParityConstraint) {
    let mut lits: Vec<Lit> = pc.vars.iter().map(|v| Lit::new(v.pos(), true)).collect();
    lits.sort_by_key(|l| l.code());
    lits.dedup();
    // x xor x cancels; drop variable pairs.
    let mut reduced = Vec::with_capacity(lits.len());
    let mut i = 0;
    while i < lits.len() {
        if i + 1 < lits.len() && lits[i].var() == lits[i + 1].var() {
            i += 2;
        } else {
            reduced.push(lits[i]);
            i += 1;
        }
    }

    match reduced.len() {
        0 => {
            if pc.parity {
                solver.add_clause(&[]); // 0 = 1: unsatisfiable
            }
        }
        1 => {
            let l = if pc.parity {
                reduced[0]
            } else {
                reduced[0].negate()
            };
            solver.add_clause(&[l]);
        }
        _ => {
            // acc_1 = x_1; acc_{i} <-> acc_{i-1} xor x_i; acc_k = parity.
            let mut acc = reduced[0];
            for &x in &reduced[1..] {
                let t = Lit::new(solver.new_var(), true);
                add_xor3(solver, t, acc, x);
                acc = t;
            }
            let l = if pc.parity { acc } else { acc.negate() };
            solver.add_clause(&[l]);
        }
    }
}

/// Clauses for `t <-> (a xor b)`.
fn add_xor3(solver: &mut Solver, t: Lit, a: Lit, b: Lit) {
    solver.add_clause(&[t.negate(), a, b]);
    solver.add_clause(&[t.negate(), a.negate(), b.negate()]);
    solver.add_clause(&[t, a.negate(), b]);
    solver.add_clause(&[t, a, b.negate()]);
}
