//! Propositional representations: variables, literals, clauses, CNF formulas,
//! Bernoulli weight maps, total interpretations and partial implicants,
//! together with conditioning, evaluation and the fuzzy relaxations.

mod categorical;
mod dimacs;

pub use categorical::{encode_categorical, CategoricalEncoding};
pub use dimacs::{instance_with_weights, parse_dimacs, serialize_dimacs, ParsedInstance};

use crate::error::{Error, Result};

/// Margin used when an operation needs weights strictly inside (0, 1).
pub const DEFAULT_CLAMP_MARGIN: f64 = 1e-6;

/// A propositional variable, 1-based as in DIMACS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(u32);

impl Variable {
    pub fn new(index: u32) -> Self {
        assert!(index > 0, "variable indices are 1-based");
        Variable(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// 0-based position for vector addressing.
    pub fn pos(self) -> usize {
        self.0 as usize - 1
    }
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A variable or its negation, stored in signed DIMACS encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(i32);

impl Literal {
    pub fn new(var: Variable, positive: bool) -> Self {
        let v = var.index() as i32;
        Literal(if positive { v } else { -v })
    }

    pub fn positive(var: Variable) -> Self {
        Literal::new(var, true)
    }

    pub fn negative(var: Variable) -> Self {
        Literal::new(var, false)
    }

    pub fn from_dimacs(code: i32) -> Result<Self> {
        if code == 0 {
            return Err(Error::InvalidArgument("literal code 0".into()));
        }
        Ok(Literal(code))
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn var(self) -> Variable {
        Variable(self.0.unsigned_abs())
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negated(self) -> Literal {
        Literal(-self.0)
    }
}

impl std::ops::Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        self.negated()
    }
}

impl std::fmt::Display for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A disjunction of literals. Construction normalizes: literals are sorted by
/// variable index, duplicates removed, and tautologies rejected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
}

/// Outcome of normalizing a literal list into a clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalizedClause {
    Clause(Clause),
    /// Contains some `x` together with `-x`; always true, droppable.
    Tautology,
}

impl Clause {
    pub fn normalize(mut literals: Vec<Literal>) -> NormalizedClause {
        literals.sort_by_key(|l| (l.var().index(), !l.is_positive()));
        literals.dedup();
        for pair in literals.windows(2) {
            if pair[0].var() == pair[1].var() {
                return NormalizedClause::Tautology;
            }
        }
        NormalizedClause::Clause(Clause { literals })
    }

    /// Builds a clause, panicking on tautologies. For tests and generators.
    pub fn new(literals: Vec<Literal>) -> Clause {
        match Clause::normalize(literals) {
            NormalizedClause::Clause(c) => c,
            NormalizedClause::Tautology => panic!("tautological clause"),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.literals.contains(&lit)
    }

    /// Probability that the clause is satisfied under independent Bernoulli
    /// weights: `1 - prod w(-l)`. Also the product t-norm value of the clause.
    pub fn prob(&self, w: &WeightMap) -> f64 {
        let mut miss = 1.0;
        for &l in &self.literals {
            miss *= w.literal_prob(!l);
        }
        1.0 - miss
    }
}

/// A conjunction of clauses over variables `1..=num_vars`.
///
/// An empty clause list is the true formula; a formula containing an empty
/// clause is false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: usize) -> Self {
        CnfFormula {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn variables(&self) -> impl Iterator<Item = Variable> + '_ {
        (1..=self.num_vars as u32).map(Variable)
    }

    fn check_range(&self, lit: Literal) -> Result<()> {
        if lit.var().index() as usize > self.num_vars {
            return Err(Error::InvalidArgument(format!(
                "literal {lit} out of range for {} variables",
                self.num_vars
            )));
        }
        Ok(())
    }

    /// Adds a normalized clause. Returns false when the clause was a
    /// tautology and got dropped.
    pub fn push_clause(&mut self, literals: Vec<Literal>) -> Result<bool> {
        for &l in &literals {
            self.check_range(l)?;
        }
        match Clause::normalize(literals) {
            NormalizedClause::Clause(c) => {
                self.clauses.push(c);
                Ok(true)
            }
            NormalizedClause::Tautology => Ok(false),
        }
    }

    /// Convenience constructor from signed DIMACS literal lists.
    pub fn from_dimacs_clauses(num_vars: usize, clauses: &[&[i32]]) -> Result<Self> {
        let mut phi = CnfFormula::new(num_vars);
        for lits in clauses {
            let lits: Result<Vec<Literal>> =
                lits.iter().map(|&c| Literal::from_dimacs(c)).collect();
            phi.push_clause(lits?)?;
        }
        Ok(phi)
    }

    /// True formula: no clauses at all.
    pub fn is_true(&self) -> bool {
        self.clauses.is_empty()
    }

    /// False formula: contains an empty clause.
    pub fn is_false(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }

    /// The formula with `lit` set to true. Clauses containing `lit` are
    /// dropped and `-lit` is removed from the rest; the variable count is
    /// unchanged, the conditioned variable just becomes vacuous.
    pub fn condition(&self, lit: Literal) -> CnfFormula {
        assert!(
            (lit.var().index() as usize) <= self.num_vars,
            "literal {lit} out of range"
        );
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for c in &self.clauses {
            if c.contains(lit) {
                continue;
            }
            if c.contains(!lit) {
                let lits: Vec<Literal> =
                    c.literals.iter().copied().filter(|&l| l != !lit).collect();
                clauses.push(Clause { literals: lits });
            } else {
                clauses.push(c.clone());
            }
        }
        CnfFormula {
            num_vars: self.num_vars,
            clauses,
        }
    }

    pub fn condition_many(&self, lits: &[Literal]) -> CnfFormula {
        let mut phi = self.clone();
        for &l in lits {
            phi = phi.condition(l);
        }
        phi
    }

    /// True iff every clause has a literal true under `interp`.
    pub fn evaluate(&self, interp: &Interpretation) -> bool {
        assert_eq!(interp.len(), self.num_vars, "interpretation length");
        self.clauses
            .iter()
            .all(|c| c.literals.iter().any(|&l| interp.satisfies(l)))
    }
}

/// T-norm used by the fuzzy relaxation of a CNF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TNorm {
    Product,
    Goedel,
}

/// Fuzzy relaxation of the formula value.
///
/// Product: product over clauses of the clause probability, exact when all
/// clauses are independent. Goedel: min over clauses of the max literal
/// weight.
pub fn fuzzy_eval(phi: &CnfFormula, w: &WeightMap, tnorm: TNorm) -> f64 {
    match tnorm {
        TNorm::Product => phi.clauses().iter().map(|c| c.prob(w)).product(),
        TNorm::Goedel => phi
            .clauses()
            .iter()
            .map(|c| {
                c.literals()
                    .iter()
                    .map(|&l| w.literal_prob(l))
                    .fold(0.0, f64::max)
            })
            .fold(1.0, f64::min),
    }
}

/// Per-variable Bernoulli parameters: `w(x)` with `w(-x) = 1 - w(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    probs: Vec<f64>,
    clamp_margin: f64,
}

impl WeightMap {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "weight {} of variable {} outside [0, 1]",
                    p,
                    i + 1
                )));
            }
        }
        Ok(WeightMap {
            probs,
            clamp_margin: 0.0,
        })
    }

    pub fn uniform(num_vars: usize, p: f64) -> Self {
        WeightMap::new(vec![p; num_vars]).expect("uniform weight in range")
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, var: Variable) -> f64 {
        self.probs[var.pos()]
    }

    pub fn set_prob(&mut self, var: Variable, p: f64) {
        assert!((0.0..=1.0).contains(&p), "weight outside [0, 1]");
        self.probs[var.pos()] = p;
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn literal_prob(&self, lit: Literal) -> f64 {
        let p = self.probs[lit.var().pos()];
        if lit.is_positive() {
            p
        } else {
            1.0 - p
        }
    }

    pub fn clamp_margin(&self) -> f64 {
        self.clamp_margin
    }

    /// Copy with every weight clamped into `[margin, 1 - margin]`, for the
    /// operations that need the open interval.
    pub fn clamped(&self, margin: f64) -> WeightMap {
        assert!((0.0..0.5).contains(&margin), "margin in [0, 0.5)");
        WeightMap {
            probs: self
                .probs
                .iter()
                .map(|&p| p.clamp(margin, 1.0 - margin))
                .collect(),
            clamp_margin: margin,
        }
    }
}

/// A total assignment over all variables of a formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interpretation {
    values: Vec<bool>,
}

impl Interpretation {
    pub fn new(values: Vec<bool>) -> Self {
        Interpretation { values }
    }

    /// Decodes the bits of `code`, variable 1 at bit 0. For enumeration.
    pub fn from_index(num_vars: usize, code: u64) -> Self {
        Interpretation {
            values: (0..num_vars).map(|i| code >> i & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, var: Variable) -> bool {
        self.values[var.pos()]
    }

    pub fn satisfies(&self, lit: Literal) -> bool {
        self.values[lit.var().pos()] == lit.is_positive()
    }

    pub fn literal(&self, var: Variable) -> Literal {
        Literal::new(var, self.value(var))
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| Literal::new(Variable(i as u32 + 1), v))
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// `P(I; w)`: product of the literal weights.
    pub fn prob(&self, w: &WeightMap) -> f64 {
        assert_eq!(self.len(), w.len(), "weight map length");
        self.literals().map(|l| w.literal_prob(l)).product()
    }

    /// Signed DIMACS rendering, e.g. `1 -2 3 0`.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        for l in self.literals() {
            out.push_str(&l.to_dimacs().to_string());
            out.push(' ');
        }
        out.push('0');
        out
    }
}

/// A consistent partial assignment, kept sorted by variable index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Implicant {
    literals: Vec<Literal>,
}

impl Implicant {
    pub fn new(mut literals: Vec<Literal>) -> Result<Self> {
        literals.sort_by_key(|l| l.var().index());
        literals.dedup();
        for pair in literals.windows(2) {
            if pair[0].var() == pair[1].var() {
                return Err(Error::InvalidArgument(format!(
                    "implicant assigns {} in both polarities",
                    pair[0].var()
                )));
            }
        }
        Ok(Implicant { literals })
    }

    pub fn from_model(interp: &Interpretation) -> Self {
        Implicant {
            literals: interp.literals().collect(),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn contains_var(&self, var: Variable) -> bool {
        self.literals.iter().any(|l| l.var() == var)
    }

    /// Closed-form `WMC(pi)`: product of literal weights, free variables
    /// contributing 1.
    pub fn prob(&self, w: &WeightMap) -> f64 {
        self.literals.iter().map(|&l| w.literal_prob(l)).product()
    }
}

/// True iff conditioning `phi` on all literals of `pi` leaves a valid
/// formula, i.e. every model of `pi` is a model of `phi`.
///
/// A conditioned CNF is valid exactly when no clause survives: any surviving
/// clause is non-tautological and therefore falsifiable.
pub fn is_implicant(phi: &CnfFormula, pi: &Implicant) -> bool {
    let residual = phi.condition_many(pi.literals());
    residual.is_true()
}
