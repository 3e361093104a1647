//! Satisfiability with parity constraints, plus the weighted search oracles:
//! most probable explanation and top-k model search.

mod mpe;
mod solver;
mod xor;

pub use mpe::{k_optimal_dnf, mpe, top_k_models, MpeOptions, MpeResult};

use crate::error::{Error, Result};
use crate::logic::{CnfFormula, Interpretation, Literal, Variable};
use solver::{Lit, SolveResult, Solver};

/// An XOR constraint over a variable subset: the parity of the true
/// variables must equal `parity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityConstraint {
    pub vars: Vec<Variable>,
    pub parity: bool,
}

/// A CNF formula together with parity constraints and assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct SatInstance {
    pub base: CnfFormula,
    pub parity_constraints: Vec<ParityConstraint>,
    pub assumptions: Vec<Literal>,
}

impl SatInstance {
    pub fn new(base: CnfFormula) -> Self {
        SatInstance {
            base,
            parity_constraints: Vec::new(),
            assumptions: Vec::new(),
        }
    }

    pub fn with_parity(mut self, constraint: ParityConstraint) -> Self {
        self.parity_constraints.push(constraint);
        self
    }

    pub fn with_assumption(mut self, lit: Literal) -> Self {
        self.assumptions.push(lit);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Interpretation),
    Unsat,
}

impl SolveOutcome {
    pub fn model(self) -> Option<Interpretation> {
        match self {
            SolveOutcome::Sat(m) => Some(m),
            SolveOutcome::Unsat => None,
        }
    }
}

/// One-shot solve of an instance.
pub fn solve(instance: &SatInstance) -> Result<SolveOutcome> {
    let mut engine = SatEngine::new(&instance.base);
    for pc in &instance.parity_constraints {
        engine.add_parity(pc)?;
    }
    match engine.solve_with(&instance.assumptions)? {
        Some(m) => Ok(SolveOutcome::Sat(m)),
        None => Ok(SolveOutcome::Unsat),
    }
}

/// Incremental engine over one formula. Parity constraints are Tseitin
/// encoded over fresh variables that are excluded from returned models, and
/// learnt clauses persist across calls, which makes blocking-clause
/// enumeration cheap.
pub struct SatEngine {
    solver: Solver,
    original_vars: usize,
}

impl SatEngine {
    pub fn new(formula: &CnfFormula) -> Self {
        let mut engine = SatEngine {
            solver: Solver::new(formula.num_vars()),
            original_vars: formula.num_vars(),
        };
        for c in formula.clauses() {
            let lits: Vec<Lit> = c.literals().iter().map(|&l| engine.to_lit(l)).collect();
            engine.solver.add_clause(&lits);
        }
        engine
    }

    fn to_lit(&self, l: Literal) -> Lit {
        Lit::new(l.var().pos(), l.is_positive())
    }

    pub fn set_conflict_budget(&mut self, budget: u64) {
        self.solver.conflict_budget = budget;
    }

    /// Tseitin chain encoding of an XOR constraint.
    pub fn add_parity(&mut self, pc: &ParityConstraint) -> Result<()> {
        for v in &pc.vars {
            if v.index() as usize > self.original_vars {
                return Err(Error::InvalidArgument(format!(
                    "parity constraint over undeclared variable {v}"
                )));
            }
        }
        xor::encode_parity(&mut self.solver, pc);
        Ok(())
    }

    /// Adds a clause over original variables.
    pub fn add_clause(&mut self, lits: &[Literal]) {
        let lits: Vec<Lit> = lits.iter().map(|&l| self.to_lit(l)).collect();
        self.solver.add_clause(&lits);
    }

    /// Forbids this exact assignment of the original variables.
    pub fn block_model(&mut self, model: &Interpretation) {
        let lits: Vec<Literal> = model.literals().map(|l| !l).collect();
        self.add_clause(&lits);
    }

    /// Solves under assumptions; `Ok(None)` means unsatisfiable.
    pub fn solve_with(&mut self, assumptions: &[Literal]) -> Result<Option<Interpretation>> {
        let assumptions: Vec<Lit> = assumptions.iter().map(|&l| self.to_lit(l)).collect();
        match self.solver.solve(&assumptions)? {
            SolveResult::Sat(values) => Ok(Some(Interpretation::new(
                values[..self.original_vars].to_vec(),
            ))),
            SolveResult::Unsat => Ok(None),
        }
    }

    /// Enumerates distinct models (over original variables) up to `limit`.
    pub fn enumerate(&mut self, limit: usize) -> Result<Vec<Interpretation>> {
        let mut models = Vec::new();
        loop {
            match self.solve_with(&[])? {
                None => return Ok(models),
                Some(m) => {
                    if models.len() == limit {
                        return Err(Error::TooManyModels { limit });
                    }
                    self.block_model(&m);
                    models.push(m);
                }
            }
        }
    }

    /// Like `enumerate` but saturates at `limit + 1` instead of erroring,
    /// for cell-size probes.
    pub fn enumerate_up_to(&mut self, limit: usize) -> Result<Vec<Interpretation>> {
        let mut models = Vec::new();
        while models.len() <= limit {
            match self.solve_with(&[])? {
                None => break,
                Some(m) => {
                    self.block_model(&m);
                    models.push(m);
                }
            }
        }
        Ok(models)
    }
}
