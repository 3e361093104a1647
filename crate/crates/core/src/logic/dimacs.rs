//! DIMACS CNF reader and writer.
//!
//! Grammar accepted, one directive per line:
//!
//! ```text
//! c <anything>                 comment
//! c t <type>                   competition type header, ignored
//! p cnf <num_vars> <num_clauses>
//! c p weight <lit> <w> [0]     weight of a literal, w in [0, 1]
//! w <lit> <w> [0]              legacy weight line, same meaning
//! <lit> ... <lit> 0            clause (may span the 0 across one line only)
//! ```
//!
//! Weights are Bernoulli: declaring `w(x)` fixes `w(-x) = 1 - w(x)`. Both
//! polarities may be declared when they are consistent. Variables with no
//! declared weight get 0.5 and bump the normalization exponent `u`, so the
//! unit-weight count equals the parsed WMC times `2^u`.

use super::{CnfFormula, Literal, WeightMap};
use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt::Write as _;

/// Result of parsing a DIMACS file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstance {
    pub formula: CnfFormula,
    pub weights: WeightMap,
    /// Count of variables that had no declared weight.
    pub normalization_exponent: u32,
    /// Per-variable flag: weight was declared in the input.
    pub declared: Vec<bool>,
}

impl ParsedInstance {
    /// Scale factor restoring unit-weight semantics.
    pub fn normalization_factor(&self) -> f64 {
        2f64.powi(self.normalization_exponent as i32)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_dimacs(text: &str) -> Result<ParsedInstance> {
    let mut formula: Option<CnfFormula> = None;
    // (weight, declared positive-polarity) per variable
    let mut declared_weights: Vec<Option<f64>> = Vec::new();
    let mut seen_literals: HashSet<i32> = HashSet::new();
    let mut seen_clauses: HashSet<Vec<i32>> = HashSet::new();
    let mut declared_clause_count: Option<usize> = None;

    let mut handle_weight = |lineno: usize,
                             toks: &[&str],
                             declared_weights: &mut Vec<Option<f64>>,
                             num_vars: usize|
     -> Result<()> {
        if toks.len() < 2 || (toks.len() > 2 && (toks.len() != 3 || toks[2] != "0")) {
            return Err(parse_err(lineno, "weight line needs <lit> <weight> [0]"));
        }
        let code: i32 = toks[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad literal {:?}", toks[0])))?;
        let lit = Literal::from_dimacs(code).map_err(|e| parse_err(lineno, e.to_string()))?;
        if lit.var().index() as usize > num_vars {
            return Err(parse_err(
                lineno,
                format!("weighted literal {code} out of range"),
            ));
        }
        let wv: f64 = toks[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad weight {:?}", toks[1])))?;
        if !wv.is_finite() || !(0.0..=1.0).contains(&wv) {
            return Err(parse_err(lineno, format!("weight {wv} outside [0, 1]")));
        }
        if !seen_literals.insert(code) {
            return Err(parse_err(lineno, format!("duplicate weight for {code}")));
        }
        let pos_weight = if lit.is_positive() { wv } else { 1.0 - wv };
        let slot = &mut declared_weights[lit.var().pos()];
        match *slot {
            None => *slot = Some(pos_weight),
            Some(existing) => {
                // The opposite polarity was declared before; polarities must
                // describe one Bernoulli variable.
                if (existing - pos_weight).abs() > 1e-9 {
                    return Err(parse_err(
                        lineno,
                        format!("weights of {} do not sum to 1 across polarities", lit.var()),
                    ));
                }
            }
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        match toks[0] {
            "c" => {
                // "c p weight" lines carry weights; all other comments
                // (including other "c p" directives) are skipped.
                if toks.len() >= 3 && toks[1] == "p" && toks[2] == "weight" {
                    let formula = formula
                        .as_ref()
                        .ok_or_else(|| parse_err(lineno, "weight before header"))?;
                    handle_weight(
                        lineno,
                        &toks[3..],
                        &mut declared_weights,
                        formula.num_vars(),
                    )?;
                }
            }
            "w" => {
                let formula = formula
                    .as_ref()
                    .ok_or_else(|| parse_err(lineno, "weight before header"))?;
                handle_weight(
                    lineno,
                    &toks[1..],
                    &mut declared_weights,
                    formula.num_vars(),
                )?;
            }
            "p" => {
                if formula.is_some() {
                    return Err(parse_err(lineno, "duplicate header"));
                }
                if toks.len() != 4 || toks[1] != "cnf" {
                    return Err(parse_err(lineno, "header must be `p cnf <vars> <clauses>`"));
                }
                let n: usize = toks[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad variable count"))?;
                let m: usize = toks[3]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad clause count"))?;
                declared_clause_count = Some(m);
                declared_weights = vec![None; n];
                formula = Some(CnfFormula::new(n));
            }
            _ => {
                let formula = formula
                    .as_mut()
                    .ok_or_else(|| parse_err(lineno, "clause before header"))?;
                let mut lits = Vec::with_capacity(toks.len().saturating_sub(1));
                let mut closed = false;
                for t in &toks {
                    let code: i32 = t
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad literal {t:?}")))?;
                    if code == 0 {
                        closed = true;
                        break;
                    }
                    lits.push(Literal::from_dimacs(code).expect("nonzero"));
                }
                if !closed {
                    return Err(parse_err(lineno, "clause not terminated by 0"));
                }
                let codes: Vec<i32> = {
                    let mut c: Vec<i32> = lits.iter().map(|l| l.to_dimacs()).collect();
                    c.sort_unstable();
                    c.dedup();
                    c
                };
                if !seen_clauses.insert(codes) {
                    continue; // exact duplicate clause
                }
                formula
                    .push_clause(lits)
                    .map_err(|e| parse_err(lineno, e.to_string()))?;
            }
        }
    }

    let formula = formula.ok_or_else(|| parse_err(0, "missing `p cnf` header"))?;
    let _ = declared_clause_count; // header count is advisory; dedup may shrink it

    let mut u = 0u32;
    let mut probs = Vec::with_capacity(formula.num_vars());
    let mut declared = Vec::with_capacity(formula.num_vars());
    for slot in &declared_weights {
        match slot {
            Some(p) => {
                probs.push(*p);
                declared.push(true);
            }
            None => {
                probs.push(0.5);
                declared.push(false);
                u += 1;
            }
        }
    }
    Ok(ParsedInstance {
        formula,
        weights: WeightMap::new(probs)?,
        normalization_exponent: u,
        declared,
    })
}

/// Writes the instance back in the same dialect. Weight lines are emitted
/// only for variables that were declared, with 17 significant digits so that
/// parse -> serialize -> parse is an identity.
pub fn serialize_dimacs(instance: &ParsedInstance) -> String {
    let phi = &instance.formula;
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", phi.num_vars(), phi.clauses().len());
    for v in phi.variables() {
        if instance.declared[v.pos()] {
            let _ = writeln!(
                out,
                "c p weight {} {:.16e} 0",
                v.index(),
                instance.weights.prob(v)
            );
        }
    }
    for c in phi.clauses() {
        for l in c.literals() {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        let _ = writeln!(out, "0");
    }
    out
}

/// Rebuilds a serializable instance from parts, marking every variable's
/// weight as declared.
pub fn instance_with_weights(formula: CnfFormula, weights: WeightMap) -> ParsedInstance {
    let n = formula.num_vars();
    assert_eq!(weights.len(), n);
    ParsedInstance {
        formula,
        weights,
        normalization_exponent: 0,
        declared: vec![true; n],
    }
}
