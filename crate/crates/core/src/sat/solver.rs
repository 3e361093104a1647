//! CDCL satisfiability solver with two-watched-literal propagation, 1UIP
//! clause learning, activity-based branching, phase saving, Luby restarts
//! and learnt-clause reduction. Deterministic: ties in the branching order
//! break toward the lowest variable index.

use crate::error::{Error, Result};

/// Internal literal: `code = 2 * var + sign`, variables 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit((var << 1) as u32 | u32::from(!positive))
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn negate(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Undef,
    True,
    False,
}

struct ClauseData {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: usize,
    blocker: Lit,
}

/// Indexed max-heap over variable activities; ties break toward the lower
/// variable index so that runs are reproducible.
struct VarHeap {
    heap: Vec<usize>,
    index: Vec<Option<usize>>,
}

impl VarHeap {
    fn new(n: usize) -> Self {
        VarHeap {
            heap: (0..n).collect(),
            index: (0..n).map(Some).collect(),
        }
    }

    fn grow(&mut self) {
        let v = self.index.len();
        self.index.push(None);
        self.insert(v, &[]);
    }

    fn before(a: usize, b: usize, act: &[f64]) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if Self::before(self.heap[i], self.heap[parent], act) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            let mut best = i;
            if l < self.heap.len() && Self::before(self.heap[l], self.heap[best], act) {
                best = l;
            }
            if r < self.heap.len() && Self::before(self.heap[r], self.heap[best], act) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.index[self.heap[i]] = Some(i);
        self.index[self.heap[j]] = Some(j);
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.index[v].is_some() {
            return;
        }
        self.heap.push(v);
        self.index[v] = Some(self.heap.len() - 1);
        if !act.is_empty() {
            self.sift_up(self.heap.len() - 1, act);
        }
    }

    fn update(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.index[v] {
            self.sift_up(i, act);
            self.sift_down(self.index[v].unwrap(), act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.index[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.index[last] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }
}

/// Result of a single `solve` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SolveResult {
    Sat(Vec<bool>),
    Unsat,
}

pub(crate) struct Solver {
    num_vars: usize,
    clauses: Vec<ClauseData>,
    watches: Vec<Vec<Watcher>>,
    values: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    prop_head: usize,
    activity: Vec<f64>,
    var_inc: f64,
    clause_inc: f64,
    order: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    /// Becomes true when a top-level conflict proves global unsatisfiability.
    unsat: bool,
    pub conflict_budget: u64,
    num_learnts: usize,
}

const VAR_DECAY: f64 = 1.0 / 0.95;
const CLAUSE_DECAY: f64 = 1.0 / 0.999;
const RESCALE: f64 = 1e100;

impl Solver {
    pub fn new(num_vars: usize) -> Self {
        Solver {
            num_vars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            values: vec![Value::Undef; num_vars],
            level: vec![0; num_vars],
            reason: vec![None; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            prop_head: 0,
            activity: vec![0.0; num_vars],
            var_inc: 1.0,
            clause_inc: 1.0,
            order: VarHeap::new(num_vars),
            phase: vec![false; num_vars],
            seen: vec![false; num_vars],
            unsat: false,
            conflict_budget: 1_000_000,
            num_learnts: 0,
        }
    }

    pub fn new_var(&mut self) -> usize {
        let v = self.num_vars;
        self.num_vars += 1;
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.values.push(Value::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.order.grow();
        v
    }

    fn value_lit(&self, l: Lit) -> Value {
        match self.values[l.var()] {
            Value::Undef => Value::Undef,
            Value::True => {
                if l.is_positive() {
                    Value::True
                } else {
                    Value::False
                }
            }
            Value::False => {
                if l.is_positive() {
                    Value::False
                } else {
                    Value::True
                }
            }
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause, simplifying against the top-level assignment. Must be
    /// called with the trail backtracked to level 0.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        debug_assert_eq!(self.decision_level(), 0);
        if self.unsat {
            return;
        }
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.value_lit(l) {
                Value::True => return, // satisfied at top level
                Value::False => continue,
                Value::Undef => c.push(l),
            }
        }
        c.sort_by_key(|l| l.code());
        c.dedup();
        for pair in c.windows(2) {
            if pair[0].var() == pair[1].var() {
                return; // tautology
            }
        }
        match c.len() {
            0 => self.unsat = true,
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
            }
            _ => {
                let cref = self.clauses.len();
                self.watches[c[0].negate().code()].push(Watcher {
                    cref,
                    blocker: c[1],
                });
                self.watches[c[1].negate().code()].push(Watcher {
                    cref,
                    blocker: c[0],
                });
                self.clauses.push(ClauseData {
                    lits: c,
                    learnt: false,
                    activity: 0.0,
                });
            }
        }
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        debug_assert_eq!(self.value_lit(l), Value::Undef);
        self.values[l.var()] = if l.is_positive() {
            Value::True
        } else {
            Value::False
        };
        self.level[l.var()] = self.decision_level() as u32;
        self.reason[l.var()] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns the conflicting clause if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.prop_head < self.trail.len() {
            let p = self.trail[self.prop_head];
            self.prop_head += 1;
            let false_lit = p.negate();
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let mut i = 0;
            let mut conflict = None;
            'watchers: while i < ws.len() {
                let w = ws[i];
                if self.value_lit(w.blocker) == Value::True {
                    i += 1;
                    continue;
                }
                // Make sure the false literal is at position 1.
                let (first, unit) = {
                    let lits = &mut self.clauses[w.cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                    debug_assert_eq!(lits[1], false_lit);
                    (lits[0], lits.len() == 1)
                };
                debug_assert!(!unit);
                if first != w.blocker && self.value_lit(first) == Value::True {
                    ws[i] = Watcher {
                        cref: w.cref,
                        blocker: first,
                    };
                    i += 1;
                    continue;
                }
                // Look for a new literal to watch.
                let len = self.clauses[w.cref].lits.len();
                for k in 2..len {
                    let lk = self.clauses[w.cref].lits[k];
                    if self.value_lit(lk) != Value::False {
                        self.clauses[w.cref].lits.swap(1, k);
                        self.watches[lk.negate().code()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                        });
                        ws.swap_remove(i);
                        continue 'watchers;
                    }
                }
                // Clause is unit or conflicting.
                ws[i] = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                i += 1;
                if self.value_lit(first) == Value::False {
                    conflict = Some(w.cref);
                    self.prop_head = self.trail.len();
                    break;
                }
                self.enqueue(first, Some(w.cref));
            }
            debug_assert!(self.watches[p.code()].is_empty());
            self.watches[p.code()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > RESCALE {
            for a in &mut self.activity {
                *a *= 1.0 / RESCALE;
            }
            self.var_inc *= 1.0 / RESCALE;
        }
        self.order.update(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        if !c.learnt {
            return;
        }
        c.activity += self.clause_inc;
        if c.activity > RESCALE {
            for c in &mut self.clauses {
                c.activity *= 1.0 / RESCALE;
            }
            self.clause_inc *= 1.0 / RESCALE;
        }
    }

    /// First-UIP conflict analysis; returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut conflict: usize) -> (Vec<Lit>, usize) {
        let mut learnt: Vec<Lit> = vec![Lit::new(0, true)]; // placeholder
        let mut counter = 0usize;
        let mut p: Option<Lit> = None;
        let mut trail_idx = self.trail.len();

        loop {
            self.bump_clause(conflict);
            let start = usize::from(p.is_some());
            for k in start..self.clauses[conflict].lits.len() {
                let q = self.clauses[conflict].lits[k];
                if !self.seen[q.var()] && self.level[q.var()] > 0 {
                    self.seen[q.var()] = true;
                    self.bump_var(q.var());
                    if self.level[q.var()] as usize >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // Pick the next seen literal from the trail.
            loop {
                trail_idx -= 1;
                if self.seen[self.trail[trail_idx].var()] {
                    break;
                }
            }
            let q = self.trail[trail_idx];
            self.seen[q.var()] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = q.negate();
                break;
            }
            p = Some(q);
            conflict = self.reason[q.var()].expect("implied literal has a reason");
        }

        // Cheap clause minimization: drop literals implied by the rest.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| i == 0 || !self.literal_redundant(l))
            .collect();
        let mut minimized: Vec<Lit> = learnt
            .iter()
            .zip(&keep)
            .filter_map(|(&l, &k)| k.then_some(l))
            .collect();

        for l in &minimized {
            self.seen[l.var()] = false;
        }
        for l in &learnt {
            self.seen[l.var()] = false;
        }

        let backjump = if minimized.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..minimized.len() {
                if self.level[minimized[i].var()] > self.level[minimized[max_i].var()] {
                    max_i = i;
                }
            }
            minimized.swap(1, max_i);
            self.level[minimized[1].var()] as usize
        };
        (minimized, backjump)
    }

    /// A literal is redundant when its reason clause only contains seen
    /// literals (one-step self-subsumption).
    fn literal_redundant(&self, l: Lit) -> bool {
        match self.reason[l.var()] {
            None => false,
            Some(cref) => self.clauses[cref].lits[1..]
                .iter()
                .all(|q| self.seen[q.var()] || self.level[q.var()] == 0),
        }
    }

    fn backtrack(&mut self, target_level: usize) {
        if self.decision_level() <= target_level {
            return;
        }
        let bound = self.trail_lim[target_level];
        for i in (bound..self.trail.len()).rev() {
            let l = self.trail[i];
            self.values[l.var()] = Value::Undef;
            self.phase[l.var()] = l.is_positive();
            self.reason[l.var()] = None;
            self.order.insert(l.var(), &self.activity);
        }
        self.trail.truncate(bound);
        self.trail_lim.truncate(target_level);
        self.prop_head = self.trail.len();
    }

    fn record_learnt(&mut self, lits: Vec<Lit>) {
        if lits.len() == 1 {
            self.enqueue(lits[0], None);
            return;
        }
        let cref = self.clauses.len();
        self.watches[lits[0].negate().code()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].negate().code()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        let asserting = lits[0];
        self.clauses.push(ClauseData {
            lits,
            learnt: true,
            activity: self.clause_inc,
        });
        self.num_learnts += 1;
        self.enqueue(asserting, Some(cref));
    }

    /// Removes the less active half of the learnt clauses that are not
    /// currently reasons.
    fn reduce_db(&mut self) {
        let mut learnt_refs: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| self.clauses[i].learnt && self.clauses[i].lits.len() > 2)
            .collect();
        learnt_refs.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .unwrap()
                .then(b.cmp(&a))
        });
        let locked: std::collections::HashSet<usize> = self
            .trail
            .iter()
            .filter_map(|l| self.reason[l.var()])
            .collect();
        let drop_set: std::collections::HashSet<usize> = learnt_refs
            .iter()
            .take(learnt_refs.len() / 2)
            .copied()
            .filter(|i| !locked.contains(i))
            .collect();
        if drop_set.is_empty() {
            return;
        }
        // Rebuild the clause arena and remap references.
        let mut remap: Vec<Option<usize>> = Vec::with_capacity(self.clauses.len());
        let mut new_clauses: Vec<ClauseData> = Vec::with_capacity(self.clauses.len());
        for (i, c) in self.clauses.drain(..).enumerate() {
            if drop_set.contains(&i) {
                remap.push(None);
            } else {
                remap.push(Some(new_clauses.len()));
                new_clauses.push(c);
            }
        }
        self.clauses = new_clauses;
        self.num_learnts -= drop_set.len();
        for ws in &mut self.watches {
            ws.retain_mut(|w| match remap[w.cref] {
                Some(n) => {
                    w.cref = n;
                    true
                }
                None => false,
            });
        }
        for r in &mut self.reason {
            if let Some(cref) = *r {
                *r = remap[cref];
            }
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.values[v] == Value::Undef {
                return Some(Lit::new(v, self.phase[v]));
            }
        }
        None
    }

    fn luby(mut i: u64) -> u64 {
        let mut k = 1u64;
        while (1u64 << (k + 1)) - 1 <= i {
            k += 1;
        }
        while i != (1 << k) - 1 {
            i -= (1 << k) - 1;
            k = 1;
            while (1u64 << (k + 1)) - 1 <= i {
                k += 1;
            }
        }
        1 << (k - 1)
    }

    /// Solves under the given assumptions. The clause database (including
    /// learnt clauses) persists across calls, so blocking-clause loops are
    /// incremental.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveResult> {
        self.backtrack(0);
        if self.unsat {
            return Ok(SolveResult::Unsat);
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return Ok(SolveResult::Unsat);
        }

        let mut conflicts_total: u64 = 0;
        let mut restart_idx: u64 = 1;
        let mut restart_budget = 100 * Self::luby(restart_idx);
        let mut conflicts_since_restart: u64 = 0;
        let mut max_learnts = (self.clauses.len() / 3).max(4000);

        loop {
            if let Some(conflict) = self.propagate() {
                conflicts_total += 1;
                conflicts_since_restart += 1;
                if conflicts_total > self.conflict_budget {
                    self.backtrack(0);
                    return Err(Error::BudgetExceeded {
                        what: "solver conflict",
                    });
                }
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return Ok(SolveResult::Unsat);
                }
                let (learnt, backjump) = self.analyze(conflict);
                self.backtrack(backjump);
                self.record_learnt(learnt);
                self.var_inc *= VAR_DECAY;
                self.clause_inc *= CLAUSE_DECAY;
                if self.num_learnts > max_learnts {
                    self.reduce_db();
                    max_learnts += max_learnts / 2;
                }
            } else {
                if conflicts_since_restart >= restart_budget {
                    restart_idx += 1;
                    restart_budget = 100 * Self::luby(restart_idx);
                    conflicts_since_restart = 0;
                    self.backtrack(0);
                    continue;
                }
                // Extend assumptions first.
                if self.decision_level() < assumptions.len() {
                    let a = assumptions[self.decision_level()];
                    match self.value_lit(a) {
                        Value::True => {
                            self.trail_lim.push(self.trail.len());
                            continue;
                        }
                        Value::False => {
                            return Ok(SolveResult::Unsat);
                        }
                        Value::Undef => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(a, None);
                            continue;
                        }
                    }
                }
                match self.pick_branch() {
                    None => {
                        let model = (0..self.num_vars)
                            .map(|v| self.values[v] == Value::True)
                            .collect();
                        self.backtrack(0);
                        return Ok(SolveResult::Sat(model));
                    }
                    Some(l) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }
}
