use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Assignment, Atom, Clause, FormulaError, Lit, QuantifiedFormula, Semantics, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Appearances {
    pub unnegated: usize,
    pub negated: usize,
}

impl Appearances {
    pub fn total(self) -> usize {
        self.unnegated + self.negated
    }
}

/// Unnegated and negated appearances of `var` in the matrix.
pub fn count_appearances(
    formula: &QuantifiedFormula,
    var: Var,
) -> Result<Appearances, FormulaError> {
    if formula.quantifier(var).is_none() {
        return Err(FormulaError::UnknownVariable(var));
    }
    let mut counts = Appearances::default();
    for lit in formula.matrix().iter().flat_map(Clause::lits) {
        if lit.var() == var {
            if lit.is_negated() {
                counts.negated += 1;
            } else {
                counts.unnegated += 1;
            }
        }
    }
    Ok(counts)
}

/// Appearance counts for every declared variable (zero counts included).
pub fn appearance_table(formula: &QuantifiedFormula) -> BTreeMap<Var, Appearances> {
    let mut table: BTreeMap<Var, Appearances> =
        formula.vars().map(|v| (v, Appearances::default())).collect();
    for lit in formula.matrix().iter().flat_map(Clause::lits) {
        let entry = table.entry(lit.var()).or_default();
        if lit.is_negated() {
            entry.negated += 1;
        } else {
            entry.unnegated += 1;
        }
    }
    table
}

pub fn complement_clause(clause: &Clause) -> Result<Clause, FormulaError> {
    if clause.has_constant() {
        return Err(FormulaError::ConstantAtom);
    }
    Ok(clause.map_atoms(|a| match a {
        Atom::Lit(l) => Atom::Lit(!l),
        c => c,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replacement {
    /// Replace `x` by the literal (and `¬x` by its negation).
    Lit(Lit),
    Const(bool),
}

impl From<Var> for Replacement {
    fn from(v: Var) -> Self {
        Replacement::Lit(v.pos())
    }
}

impl From<Lit> for Replacement {
    fn from(l: Lit) -> Self {
        Replacement::Lit(l)
    }
}

impl From<bool> for Replacement {
    fn from(b: bool) -> Self {
        Replacement::Const(b)
    }
}

fn replacement_map(
    replacements: &[(Var, Replacement)],
) -> Result<BTreeMap<Var, Replacement>, FormulaError> {
    let mut map = BTreeMap::new();
    for &(v, r) in replacements {
        if map.insert(v, r).is_some() {
            return Err(FormulaError::DuplicateReplacement(v));
        }
    }
    Ok(map)
}

fn apply(map: &BTreeMap<Var, Replacement>, atom: Atom) -> Atom {
    let Atom::Lit(l) = atom else { return atom };
    match map.get(&l.var()) {
        None => atom,
        Some(Replacement::Lit(to)) => Atom::Lit(if l.is_negated() { !*to } else { *to }),
        Some(Replacement::Const(b)) => Atom::Const(l.eval(*b)),
    }
}

/// Simultaneous substitution on a clause list.
pub fn substitute_clauses(
    clauses: &[Clause],
    replacements: &[(Var, Replacement)],
) -> Result<Vec<Clause>, FormulaError> {
    let map = replacement_map(replacements)?;
    Ok(clauses
        .iter()
        .map(|c| c.map_atoms(|a| apply(&map, a)))
        .collect())
}

/// Simultaneous substitution `φ[x ↦ …]`.
///
/// Replaced variables leave the prefix. A variable-to-variable target that is
/// not yet declared takes the source's place in its block.
pub fn substitute(
    formula: &QuantifiedFormula,
    replacements: &[(Var, Replacement)],
) -> Result<QuantifiedFormula, FormulaError> {
    let map = replacement_map(replacements)?;
    let declared: BTreeSet<Var> = formula.vars().collect();
    let mut placed = BTreeSet::new();
    let mut rename_block = |block: &[Var]| -> Vec<Var> {
        let mut out = Vec::with_capacity(block.len());
        for &v in block {
            match map.get(&v) {
                None => {
                    if placed.insert(v) {
                        out.push(v);
                    }
                }
                Some(Replacement::Lit(to)) => {
                    let t = to.var();
                    let kept_elsewhere = declared.contains(&t) && !map.contains_key(&t);
                    if !kept_elsewhere && placed.insert(t) {
                        out.push(t);
                    }
                }
                Some(Replacement::Const(_)) => {}
            }
        }
        out
    };
    let universals = rename_block(formula.universals());
    let existentials = rename_block(formula.existentials());
    let matrix = formula
        .matrix()
        .iter()
        .map(|c| c.map_atoms(|a| apply(&map, a)))
        .collect();
    QuantifiedFormula::new(universals, existentials, matrix, formula.semantics())
        .and_then(|f| {
            let allowed = formula.constants_allowed() || f.constants_allowed();
            f.with_constants_allowed(allowed)
        })
}

pub fn evaluate_clause(
    clause: &Clause,
    assignment: &Assignment,
    semantics: Semantics,
) -> Result<bool, FormulaError> {
    let mut any_true = false;
    let mut any_false = false;
    for &a in clause.atoms() {
        match a.eval(assignment) {
            Some(true) => any_true = true,
            Some(false) => any_false = true,
            None => return Err(FormulaError::Unassigned(a.var().expect("literal"))),
        }
    }
    Ok(match semantics {
        Semantics::Sat => any_true,
        Semantics::Nae => any_true && any_false,
    })
}

/// True iff every clause is (nae-)satisfied.
pub fn evaluate_matrix(
    clauses: &[Clause],
    assignment: &Assignment,
    semantics: Semantics,
) -> Result<bool, FormulaError> {
    for c in clauses {
        if !evaluate_clause(c, assignment, semantics)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Normalized {
    /// The cleaned formula and the indices (in the input) of dropped clauses.
    Formula {
        formula: QuantifiedFormula,
        dropped: Vec<usize>,
    },
    /// Clause `clause_index` can never be nae-satisfied.
    VerdictNo { clause_index: usize },
}

/// Removes NAE clauses that always hold and detects clauses that never hold.
pub fn normalize_degenerate_clauses(
    formula: &QuantifiedFormula,
) -> Result<Normalized, FormulaError> {
    if formula.semantics() != Semantics::Nae {
        return Err(FormulaError::SemanticsMismatch {
            expected: Semantics::Nae,
            found: formula.semantics(),
        });
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, c) in formula.matrix().iter().enumerate() {
        let atoms = c.atoms();
        if atoms.iter().all(|&a| a == atoms[0]) {
            return Ok(Normalized::VerdictNo { clause_index: i });
        }
        let both_constants = atoms.contains(&Atom::Const(true)) && atoms.contains(&Atom::Const(false));
        let complementary = c.lits().any(|l| c.lits().any(|k| k == !l));
        if both_constants || complementary {
            dropped.push(i);
        } else {
            kept.push(c.clone());
        }
    }
    Ok(Normalized::Formula {
        formula: formula.with_matrix(kept)?,
        dropped,
    })
}
