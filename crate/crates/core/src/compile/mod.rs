//! Compilation of CNF into decision-DNNF: exhaustive DPLL with unit
//! propagation, connected-component decomposition and formula-keyed caching.
//! The resulting circuit supports linear-time weighted counting, a one-pass
//! gradient, and exact model sampling.

mod brute;
mod eval;

pub use brute::{enumerate_models, wmc_brute, wmc_brute_limit, BRUTE_FORCE_VAR_LIMIT};
pub(crate) use eval::node_values;
pub use eval::{wmc_eval, wmc_grad, wmc_log_grad};

use crate::error::{Error, Result};
use crate::logic::{CnfFormula, Literal, Variable};
use std::collections::HashMap;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Circuit node. `And` children mention disjoint variable sets; `Decision`
/// children are the cofactors of `var`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    False,
    True,
    Literal(Literal),
    And(Box<[NodeId]>),
    Decision {
        var: Variable,
        hi: NodeId,
        lo: NodeId,
    },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompileStats {
    pub nodes: usize,
    pub cache_hits: u64,
    pub cache_entries: usize,
    pub decisions: u64,
    pub wall: Duration,
}

/// Exact weighted model count with bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct WmcResult {
    pub value: f64,
    /// Powers of two dropped by unweighted-variable normalization; the
    /// unit-weight count is `value * 2^normalization_exponent`.
    pub normalization_exponent: u32,
    pub stats: CompileStats,
}

impl WmcResult {
    pub fn new(value: f64) -> Self {
        WmcResult {
            value,
            normalization_exponent: 0,
            stats: CompileStats::default(),
        }
    }

    pub fn with_normalization(mut self, exponent: u32) -> Self {
        self.normalization_exponent = exponent;
        self
    }

    pub fn normalized_value(&self) -> f64 {
        self.value * 2f64.powi(self.normalization_exponent as i32)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompileOptions {
    pub max_nodes: usize,
    pub time_budget: Option<Duration>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_nodes: 10_000_000,
            time_budget: Some(Duration::from_secs(300)),
        }
    }
}

impl CompileOptions {
    /// No limits; for ground-truth runs.
    pub fn unbounded() -> Self {
        CompileOptions {
            max_nodes: usize::MAX,
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecisionDnnf {
    nodes: Vec<Node>,
    root: NodeId,
    num_vars: usize,
    stats: CompileStats,
}

pub const FALSE_NODE: NodeId = NodeId(0);
pub const TRUE_NODE: NodeId = NodeId(1);

impl DecisionDnnf {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn stats(&self) -> &CompileStats {
        &self.stats
    }

    pub fn is_false(&self) -> bool {
        self.root == FALSE_NODE
    }

    pub fn is_true(&self) -> bool {
        self.root == TRUE_NODE
    }

    /// Line-based NNF dump for debugging: one node per line, kind then
    /// operands. Not a stable interchange format.
    pub fn dump_nnf(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "nnf {} {} root {}",
            self.nodes.len(),
            self.num_vars,
            self.root.0
        );
        for node in &self.nodes {
            match node {
                Node::False => out.push_str("F\n"),
                Node::True => out.push_str("T\n"),
                Node::Literal(l) => {
                    let _ = writeln!(out, "L {}", l.to_dimacs());
                }
                Node::And(children) => {
                    let _ = write!(out, "A {}", children.len());
                    for c in children.iter() {
                        let _ = write!(out, " {}", c.0);
                    }
                    out.push('\n');
                }
                Node::Decision { var, hi, lo } => {
                    let _ = writeln!(out, "D {} {} {}", var.index(), hi.0, lo.0);
                }
            }
        }
        out
    }
}

/// Compiles with default budgets.
pub fn compile(phi: &CnfFormula) -> Result<DecisionDnnf> {
    compile_with(phi, &CompileOptions::default())
}

pub fn compile_with(phi: &CnfFormula, options: &CompileOptions) -> Result<DecisionDnnf> {
    let start = Instant::now();
    let mut compiler = Compiler {
        nodes: vec![Node::False, Node::True],
        lit_nodes: HashMap::new(),
        cache: HashMap::new(),
        stats: CompileStats::default(),
        options: *options,
        deadline: options.time_budget.map(|b| start + b),
        ticks: 0,
    };
    let clauses: Vec<Vec<i32>> = phi
        .clauses()
        .iter()
        .map(|c| c.literals().iter().map(|l| l.to_dimacs()).collect())
        .collect();
    let root = compiler.build(clauses)?;
    let mut stats = compiler.stats;
    stats.nodes = compiler.nodes.len();
    stats.cache_entries = compiler.cache.len();
    stats.wall = start.elapsed();
    Ok(DecisionDnnf {
        nodes: compiler.nodes,
        root,
        num_vars: phi.num_vars(),
        stats,
    })
}

struct Compiler {
    nodes: Vec<Node>,
    lit_nodes: HashMap<i32, NodeId>,
    cache: HashMap<Box<[i32]>, NodeId>,
    stats: CompileStats,
    options: CompileOptions,
    deadline: Option<Instant>,
    ticks: u64,
}

impl Compiler {
    fn push(&mut self, node: Node) -> Result<NodeId> {
        if self.nodes.len() >= self.options.max_nodes {
            return Err(Error::BudgetExceeded {
                what: "compilation node",
            });
        }
        self.nodes.push(node);
        Ok(NodeId(self.nodes.len() as u32 - 1))
    }

    fn literal_node(&mut self, code: i32) -> Result<NodeId> {
        if let Some(&id) = self.lit_nodes.get(&code) {
            return Ok(id);
        }
        let id = self.push(Node::Literal(Literal::from_dimacs(code).expect("nonzero")))?;
        self.lit_nodes.insert(code, id);
        Ok(id)
    }

    fn check_budget(&mut self) -> Result<()> {
        self.ticks += 1;
        if self.ticks.is_multiple_of(4096) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(Error::BudgetExceeded {
                        what: "compilation time",
                    });
                }
            }
        }
        Ok(())
    }

    /// Conditions `clauses` on `code` in place. Returns false when an empty
    /// clause appears.
    fn condition(clauses: &mut Vec<Vec<i32>>, code: i32) -> bool {
        clauses.retain_mut(|c| {
            if c.contains(&code) {
                return false;
            }
            c.retain(|&l| l != -code);
            true
        });
        clauses.iter().all(|c| !c.is_empty())
    }

    /// Exhaustive unit propagation. Returns the propagated literals, or None
    /// on conflict.
    fn propagate(clauses: &mut Vec<Vec<i32>>) -> Option<Vec<i32>> {
        let mut units = Vec::new();
        loop {
            let unit = clauses.iter().find(|c| c.len() == 1).map(|c| c[0]);
            match unit {
                None => return Some(units),
                Some(code) => {
                    if !Self::condition(clauses, code) {
                        return None;
                    }
                    units.push(code);
                }
            }
        }
    }

    fn build(&mut self, mut clauses: Vec<Vec<i32>>) -> Result<NodeId> {
        self.check_budget()?;
        if clauses.iter().any(|c| c.is_empty()) {
            return Ok(FALSE_NODE);
        }
        let units = match Self::propagate(&mut clauses) {
            None => return Ok(FALSE_NODE),
            Some(units) => units,
        };

        let mut children: Vec<NodeId> = Vec::new();
        for &u in &units {
            children.push(self.literal_node(u)?);
        }

        if !clauses.is_empty() {
            for component in split_components(clauses) {
                children.push(self.component(component)?);
            }
        }

        match children.len() {
            0 => Ok(TRUE_NODE),
            1 => Ok(children[0]),
            _ => self.push(Node::And(children.into_boxed_slice())),
        }
    }

    /// Compiles one connected component through the cache.
    fn component(&mut self, mut clauses: Vec<Vec<i32>>) -> Result<NodeId> {
        let key = canonical_key(&mut clauses);
        if let Some(&id) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(id);
        }

        let var = branch_variable(&clauses);
        self.stats.decisions += 1;

        let mut hi_clauses = clauses.clone();
        let hi = if Self::condition(&mut hi_clauses, var) {
            self.build(hi_clauses)?
        } else {
            FALSE_NODE
        };
        let mut lo_clauses = clauses;
        let lo = if Self::condition(&mut lo_clauses, -var) {
            self.build(lo_clauses)?
        } else {
            FALSE_NODE
        };

        let id = if hi == lo {
            hi
        } else {
            self.push(Node::Decision {
                var: Variable::new(var as u32),
                hi,
                lo,
            })?
        };
        self.cache.insert(key, id);
        Ok(id)
    }
}

/// Canonicalizes the clause set in place and flattens it into a cache key:
/// each clause's literals sorted and 0-terminated, clauses sorted.
fn canonical_key(clauses: &mut [Vec<i32>]) -> Box<[i32]> {
    for c in clauses.iter_mut() {
        c.sort_unstable_by_key(|l| (l.unsigned_abs(), *l < 0));
    }
    clauses.sort_unstable();
    let mut key = Vec::with_capacity(clauses.iter().map(|c| c.len() + 1).sum());
    for c in clauses.iter() {
        key.extend_from_slice(c);
        key.push(0);
    }
    key.into_boxed_slice()
}

/// Splits clauses into variable-connected components via union-find.
fn split_components(clauses: Vec<Vec<i32>>) -> Vec<Vec<Vec<i32>>> {
    let mut dsu: HashMap<u32, u32> = HashMap::new();

    fn find(dsu: &mut HashMap<u32, u32>, v: u32) -> u32 {
        let parent = *dsu.entry(v).or_insert(v);
        if parent == v {
            return v;
        }
        let root = find(dsu, parent);
        dsu.insert(v, root);
        root
    }

    for c in &clauses {
        let first = c[0].unsigned_abs();
        for &l in &c[1..] {
            let (a, b) = (find(&mut dsu, first), find(&mut dsu, l.unsigned_abs()));
            if a != b {
                dsu.insert(a, b);
            }
        }
    }
    let mut groups: HashMap<u32, Vec<Vec<i32>>> = HashMap::new();
    let mut order: Vec<u32> = Vec::new();
    for c in clauses {
        let root = find(&mut dsu, c[0].unsigned_abs());
        let entry = groups.entry(root).or_default();
        if entry.is_empty() {
            order.push(root);
        }
        entry.push(c);
    }
    order
        .into_iter()
        .map(|root| groups.remove(&root).unwrap())
        .collect()
}

/// Most occurrences in clauses of minimum length; ties break toward the
/// lowest variable index. Centralized so the strategy can be swapped.
fn branch_variable(clauses: &[Vec<i32>]) -> i32 {
    let min_len = clauses.iter().map(|c| c.len()).min().expect("nonempty");
    let mut counts: HashMap<i32, u32> = HashMap::new();
    for c in clauses.iter().filter(|c| c.len() == min_len) {
        for &l in c {
            *counts.entry(l.abs()).or_insert(0) += 1;
        }
    }
    let (&var, _) = counts
        .iter()
        .max_by(|(va, ca), (vb, cb)| ca.cmp(cb).then(vb.cmp(va)))
        .expect("nonempty");
    var
}
