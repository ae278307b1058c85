//! Decision procedures for matrices and forall-exists formulas.
//!
//! [`decide_forall_exists`] is the working oracle. [`decide_forall_exists_exhaustive`]
//! enumerates every total assignment and is kept as a slow reference.

mod cnf;
mod engine;
mod exhaustive;
mod sat;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Assignment, Clause, FormulaError, QuantifiedFormula, Semantics, Var};

pub use exhaustive::decide_forall_exists_exhaustive;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("budget of {limit} steps exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("budget must be positive")]
    ZeroBudget,
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Upper bound on oracle work. One unit is a solver decision, a solver
/// conflict, a tried universal combination, or (for the exhaustive oracle) a
/// total assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    limit: u64,
}

impl Budget {
    pub const DEFAULT_LIMIT: u64 = 1 << 24;

    pub fn new(limit: u64) -> Result<Budget, OracleError> {
        if limit == 0 {
            return Err(OracleError::ZeroBudget);
        }
        Ok(Budget { limit })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Reads `QBFORGE_BUDGET`, falling back to the default when unset.
    pub fn from_env() -> Result<Budget, OracleError> {
        match std::env::var("QBFORGE_BUDGET").ok().and_then(|s| s.trim().parse().ok()) {
            Some(n) => Budget::new(n),
            None => Ok(Budget::default()),
        }
    }

    pub(crate) fn meter(&self) -> Meter {
        Meter {
            spent: 0,
            limit: self.limit,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            limit: Self::DEFAULT_LIMIT,
        }
    }
}

pub(crate) struct Meter {
    spent: u64,
    limit: u64,
}

impl Meter {
    pub(crate) fn tick(&mut self) -> Result<(), OracleError> {
        self.spent += 1;
        if self.spent > self.limit {
            return Err(OracleError::BudgetExceeded { limit: self.limit });
        }
        Ok(())
    }

    pub(crate) fn spent(&self) -> u64 {
        self.spent
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Answer {
    Yes,
    No,
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleVerdict {
    pub answer: Answer,
    /// Failing assignment to the (unfixed) universals; only on NO when there
    /// are unfixed universals.
    pub counterexample: Option<Assignment>,
    /// Extension over the (unfixed) existentials; only on YES when there is
    /// nothing left to quantify over universally.
    pub witness: Option<Assignment>,
    /// Budget units spent.
    pub evaluations: u64,
}

impl OracleVerdict {
    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }
}

/// Treats every variable of `matrix` as existential.
pub fn decide_matrix(
    matrix: &[Clause],
    semantics: Semantics,
    budget: Budget,
) -> Result<OracleVerdict, OracleError> {
    let mut vars: Vec<Var> = matrix.iter().flat_map(Clause::vars).collect();
    vars.sort();
    vars.dedup();
    let f = QuantifiedFormula::new(vec![], vars, matrix.to_vec(), semantics)?;
    decide_forall_exists(&f, budget)
}

pub fn decide_forall_exists(
    formula: &QuantifiedFormula,
    budget: Budget,
) -> Result<OracleVerdict, OracleError> {
    decide_forall_exists_fixed(formula, &Assignment::default(), budget)
}

/// Decides the formula with the variables assigned in `fixed` replaced by
/// their values. Counterexample and witness range over the remaining
/// variables only.
pub fn decide_forall_exists_fixed(
    formula: &QuantifiedFormula,
    fixed: &Assignment,
    budget: Budget,
) -> Result<OracleVerdict, OracleError> {
    for (v, _) in fixed.iter() {
        if formula.quantifier(v).is_none() {
            return Err(FormulaError::UnknownVariable(v).into());
        }
    }
    let mut meter = budget.meter();
    let outcome = engine::solve(formula, fixed, &mut meter)?;
    Ok(OracleVerdict {
        answer: if outcome.counterexample.is_some() {
            Answer::No
        } else {
            Answer::Yes
        },
        counterexample: outcome.counterexample.filter(|a| !a.is_empty()),
        witness: outcome.witness,
        evaluations: meter.spent(),
    })
}

/// Extension of `fixed` to the remaining existentials, if one exists.
/// `fixed` should assign every universal; otherwise the result is `None`.
pub fn find_extension(
    formula: &QuantifiedFormula,
    fixed: &Assignment,
    budget: Budget,
) -> Result<Option<Assignment>, OracleError> {
    Ok(decide_forall_exists_fixed(formula, fixed, budget)?.witness)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub agree: bool,
    pub source: OracleVerdict,
    pub target: OracleVerdict,
}

pub fn check_equivalence(
    source: &QuantifiedFormula,
    target: &QuantifiedFormula,
    budget: Budget,
) -> Result<EquivalenceReport, OracleError> {
    let source = decide_forall_exists(source, budget)?;
    let target = decide_forall_exists(target, budget)?;
    Ok(EquivalenceReport {
        agree: source.answer == target.answer,
        source,
        target,
    })
}
