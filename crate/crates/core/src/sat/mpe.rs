//! Most probable explanation and top-k model search by branch and bound
//! over log-weights, with an admissible per-variable max bound.

use crate::error::{Error, Result};
use crate::logic::{CnfFormula, Interpretation, Literal, WeightMap, DEFAULT_CLAMP_MARGIN};
use std::time::Instant;

/// A model together with its log probability under the query weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MpeResult {
    pub model: Interpretation,
    pub log_prob: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct MpeOptions {
    /// Search nodes (assignments tried) before giving up.
    pub node_budget: u64,
    pub deadline: Option<Instant>,
}

impl Default for MpeOptions {
    fn default() -> Self {
        MpeOptions {
            node_budget: 2_000_000,
            deadline: None,
        }
    }
}

/// Window within which two log-probabilities count as tied; ties resolve to
/// the lexicographically smallest model.
const TIE_EPS: f64 = 1e-9;

struct BnB {
    clauses: Vec<Vec<Literal>>,
    // occurrence lists per (var, polarity)
    occ_pos: Vec<Vec<usize>>,
    occ_neg: Vec<Vec<usize>>,
    sat_count: Vec<u32>,
    free_count: Vec<u32>,
    assignment: Vec<Option<bool>>,
    log_pos: Vec<f64>,
    log_neg: Vec<f64>,
    branch_order: Vec<usize>,
    current_log: f64,
    rest_max: f64,
    best_log: f64,
    best_model: Option<Vec<bool>>,
    nodes: u64,
    options: MpeOptions,
}

enum Assign {
    Ok(Vec<usize>),
    Conflict(Vec<usize>),
}

impl BnB {
    fn new(phi: &CnfFormula, w: &WeightMap, extra: &[Vec<Literal>], options: MpeOptions) -> Self {
        let n = phi.num_vars();
        let w = w.clamped(DEFAULT_CLAMP_MARGIN);
        let mut clauses: Vec<Vec<Literal>> = phi
            .clauses()
            .iter()
            .map(|c| c.literals().to_vec())
            .collect();
        clauses.extend(extra.iter().cloned());
        let mut occ_pos = vec![Vec::new(); n];
        let mut occ_neg = vec![Vec::new(); n];
        for (ci, c) in clauses.iter().enumerate() {
            for &l in c {
                if l.is_positive() {
                    occ_pos[l.var().pos()].push(ci);
                } else {
                    occ_neg[l.var().pos()].push(ci);
                }
            }
        }
        let log_pos: Vec<f64> = (0..n).map(|i| w.probs()[i].ln()).collect();
        let log_neg: Vec<f64> = (0..n).map(|i| (1.0 - w.probs()[i]).ln()).collect();
        let rest_max: f64 = (0..n).map(|i| log_pos[i].max(log_neg[i])).sum();
        // Most skewed variables first; ties toward the lower index.
        let mut branch_order: Vec<usize> = (0..n).collect();
        branch_order.sort_by(|&a, &b| {
            let ga = (log_pos[a] - log_neg[a]).abs();
            let gb = (log_pos[b] - log_neg[b]).abs();
            gb.partial_cmp(&ga).unwrap().then(a.cmp(&b))
        });
        let sat_count = vec![0; clauses.len()];
        let free_count = clauses.iter().map(|c| c.len() as u32).collect();
        BnB {
            clauses,
            occ_pos,
            occ_neg,
            sat_count,
            free_count,
            assignment: vec![None; n],
            log_pos,
            log_neg,
            branch_order,
            current_log: 0.0,
            rest_max,
            best_log: f64::NEG_INFINITY,
            best_model: None,
            nodes: 0,
            options,
        }
    }

    /// Assigns `var = value` and unit-propagates. Returns the trail of
    /// assigned variables; on conflict the caller must undo it.
    fn assign(&mut self, var: usize, value: bool) -> Assign {
        let mut trail = Vec::new();
        let mut queue = vec![(var, value)];
        while let Some((v, b)) = queue.pop() {
            match self.assignment[v] {
                Some(cur) => {
                    if cur == b {
                        continue;
                    }
                    return Assign::Conflict(trail);
                }
                None => {
                    self.assignment[v] = Some(b);
                    trail.push(v);
                    self.current_log += if b { self.log_pos[v] } else { self.log_neg[v] };
                    self.rest_max -= self.log_pos[v].max(self.log_neg[v]);
                    let (true_occ, false_occ) = if b {
                        (&self.occ_pos[v], &self.occ_neg[v])
                    } else {
                        (&self.occ_neg[v], &self.occ_pos[v])
                    };
                    for &ci in true_occ {
                        self.sat_count[ci] += 1;
                        self.free_count[ci] -= 1;
                    }
                    for &ci in false_occ {
                        self.free_count[ci] -= 1;
                    }
                    // All counters for `v` are updated; safe to bail out now.
                    let mut implied: Vec<(usize, bool)> = Vec::new();
                    let mut conflict = false;
                    for &ci in false_occ {
                        if self.sat_count[ci] == 0 {
                            match self.free_count[ci] {
                                0 => {
                                    conflict = true;
                                    break;
                                }
                                1 => {
                                    let l = self.clauses[ci]
                                        .iter()
                                        .copied()
                                        .find(|l| self.assignment[l.var().pos()].is_none())
                                        .expect("one free literal");
                                    implied.push((l.var().pos(), l.is_positive()));
                                }
                                _ => {}
                            }
                        }
                    }
                    if conflict {
                        return Assign::Conflict(trail);
                    }
                    queue.extend(implied);
                }
            }
        }
        Assign::Ok(trail)
    }

    fn undo(&mut self, trail: &[usize]) {
        for &v in trail.iter().rev() {
            let b = self.assignment[v].expect("assigned");
            self.assignment[v] = None;
            self.current_log -= if b { self.log_pos[v] } else { self.log_neg[v] };
            self.rest_max += self.log_pos[v].max(self.log_neg[v]);
            let (true_occ, false_occ) = if b {
                (&self.occ_pos[v], &self.occ_neg[v])
            } else {
                (&self.occ_neg[v], &self.occ_pos[v])
            };
            for &ci in true_occ {
                self.sat_count[ci] -= 1;
                self.free_count[ci] += 1;
            }
            for &ci in false_occ {
                self.free_count[ci] += 1;
            }
        }
    }

    fn record_leaf(&mut self) {
        let model: Vec<bool> = self.assignment.iter().map(|a| a.unwrap()).collect();
        let log = self.current_log;
        if log > self.best_log + TIE_EPS {
            self.best_log = log;
            self.best_model = Some(model);
        } else if log >= self.best_log - TIE_EPS {
            if let Some(best) = &self.best_model {
                // false < true, lowest index decides
                if model < *best {
                    self.best_log = log.max(self.best_log);
                    self.best_model = Some(model);
                }
            }
        }
    }

    fn search(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.options.node_budget {
            return Err(Error::BudgetExceeded { what: "mpe node" });
        }
        if self.nodes.is_multiple_of(1024) {
            if let Some(deadline) = self.options.deadline {
                if Instant::now() >= deadline {
                    return Err(Error::BudgetExceeded { what: "mpe time" });
                }
            }
        }
        if self.current_log + self.rest_max < self.best_log - TIE_EPS {
            return Ok(());
        }
        let var = self
            .branch_order
            .iter()
            .copied()
            .find(|&v| self.assignment[v].is_none());
        let var = match var {
            None => {
                self.record_leaf();
                return Ok(());
            }
            Some(v) => v,
        };
        // Higher-weight polarity first; false first on a tie.
        let first = self.log_pos[var] > self.log_neg[var];
        for value in [first, !first] {
            match self.assign(var, value) {
                Assign::Ok(trail) => {
                    let r = self.search();
                    self.undo(&trail);
                    r?;
                }
                Assign::Conflict(trail) => {
                    self.undo(&trail);
                }
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<Option<Vec<bool>>> {
        // Propagate unit clauses present up front.
        let units: Vec<Literal> = self
            .clauses
            .iter()
            .filter(|c| c.len() == 1)
            .map(|c| c[0])
            .collect();
        if self.clauses.iter().any(|c| c.is_empty()) {
            return Ok(None);
        }
        let mut root_trail = Vec::new();
        for u in units {
            match self.assign(u.var().pos(), u.is_positive()) {
                Assign::Ok(t) => root_trail.extend(t),
                Assign::Conflict(t) => {
                    self.undo(&t);
                    self.undo(&root_trail);
                    return Ok(None);
                }
            }
        }
        self.search()?;
        Ok(self.best_model)
    }
}

/// The model maximizing the interpretation probability. Weights are clamped
/// into the open interval for the log-space search; the reported `log_prob`
/// uses the original weights.
pub fn mpe(phi: &CnfFormula, w: &WeightMap, options: &MpeOptions) -> Result<MpeResult> {
    mpe_blocked(phi, w, &[], options)
}

fn mpe_blocked(
    phi: &CnfFormula,
    w: &WeightMap,
    blocked: &[Vec<Literal>],
    options: &MpeOptions,
) -> Result<MpeResult> {
    assert_eq!(w.len(), phi.num_vars());
    let bnb = BnB::new(phi, w, blocked, *options);
    match bnb.run()? {
        None => Err(Error::Unsat),
        Some(values) => {
            let model = Interpretation::new(values);
            let log_prob = model.literals().map(|l| w.literal_prob(l).ln()).sum();
            Ok(MpeResult { model, log_prob })
        }
    }
}

/// Up to `k` distinct models in non-increasing probability order, found by
/// repeated MPE search under blocking clauses.
pub fn top_k_models(
    phi: &CnfFormula,
    w: &WeightMap,
    k: usize,
    options: &MpeOptions,
) -> Result<Vec<MpeResult>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut out: Vec<MpeResult> = Vec::with_capacity(k);
    let mut blocked: Vec<Vec<Literal>> = Vec::new();
    for i in 0..k {
        match mpe_blocked(phi, w, &blocked, options) {
            Ok(res) => {
                blocked.push(res.model.literals().map(|l| !l).collect());
                out.push(res);
            }
            Err(Error::Unsat) => {
                if i == 0 {
                    return Err(Error::Unsat);
                }
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Greedy maximum-coverage k-DNF over full models. With total models every
/// new model covers disjoint mass, so the greedy step coincides with the
/// next most probable unblocked model and this is `top_k_models` by another
/// name; it is kept as its own entry point because callers ask for coverage
/// rather than ranking.
pub fn k_optimal_dnf(
    phi: &CnfFormula,
    w: &WeightMap,
    k: usize,
    options: &MpeOptions,
) -> Result<Vec<Interpretation>> {
    Ok(top_k_models(phi, w, k, options)?
        .into_iter()
        .map(|r| r.model)
        .collect())
}
