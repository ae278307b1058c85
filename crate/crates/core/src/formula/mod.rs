//! Clauses, quantified formulas and assignments.
//!
//! Variables are dense positive integers. Quantifier blocks are ordered lists
//! and the matrix keeps clause and atom order exactly as constructed, so the
//! "k-th appearance" of a variable (clause index first, then atom index) is
//! stable through every transformation in this crate.

mod class;
mod ops;

pub use class::{validate_class, ClassReport, ClassSpec, PredicateResult, Profile};
pub use ops::{
    appearance_table, complement_clause, count_appearances, evaluate_clause, evaluate_matrix,
    normalize_degenerate_clauses, substitute, substitute_clauses, Appearances, Normalized,
    Replacement,
};

use std::collections::BTreeSet;
use std::fmt;
use std::num::NonZeroU32;
use std::ops::Not;

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("clause has {0} atoms; clauses hold between 1 and 3 atoms")]
    ClauseLength(usize),
    #[error("variable {0} is not declared in the quantifier prefix")]
    UnknownVariable(Var),
    #[error("variable {0} is declared more than once in the quantifier prefix")]
    DuplicateDeclaration(Var),
    #[error("constants appear in the matrix but the formula does not allow them")]
    ConstantsNotAllowed,
    #[error("formulas with constants cannot have universal variables")]
    ConstantsWithUniversals,
    #[error("clause contains a constant atom")]
    ConstantAtom,
    #[error("variable {0} is replaced more than once")]
    DuplicateReplacement(Var),
    #[error("variable {0} is unassigned")]
    Unassigned(Var),
    #[error("expected {expected} semantics, found {found}")]
    SemanticsMismatch { expected: Semantics, found: Semantics },
    #[error("variable allocator exhausted")]
    AllocatorExhausted,
}

/// A propositional variable, identified by a positive integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(NonZeroU32);

impl Var {
    /// Panics if `id` is zero.
    pub fn new(id: u32) -> Var {
        Var(NonZeroU32::new(id).expect("variable ids are positive"))
    }

    pub fn try_new(id: u32) -> Option<Var> {
        NonZeroU32::new(id).map(Var)
    }

    pub fn id(self) -> u32 {
        self.0.get()
    }

    pub(crate) fn index(self) -> usize {
        self.0.get() as usize
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, true)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl Serialize for Var {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u32(self.id())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    var: Var,
    negated: bool,
}

impl Lit {
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit { var, negated }
    }

    pub fn var(self) -> Var {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    /// Value of the literal when its variable takes `value`.
    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }

    /// DIMACS encoding: `id` or `-id`.
    pub fn to_dimacs(self) -> i64 {
        let id = i64::from(self.var.id());
        if self.negated {
            -id
        } else {
            id
        }
    }

    pub fn from_dimacs(value: i64) -> Option<Lit> {
        let id = u32::try_from(value.unsigned_abs()).ok()?;
        Var::try_new(id).map(|v| Lit::new(v, value < 0))
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit::new(self.var, !self.negated)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬{}", self.var)
        } else {
            write!(f, "{}", self.var)
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<Var> for Lit {
    fn from(var: Var) -> Lit {
        var.pos()
    }
}

/// One position of a clause: a literal or one of the constants T/F.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Lit(Lit),
    Const(bool),
}

impl Atom {
    pub fn lit(self) -> Option<Lit> {
        match self {
            Atom::Lit(l) => Some(l),
            Atom::Const(_) => None,
        }
    }

    pub fn var(self) -> Option<Var> {
        self.lit().map(Lit::var)
    }

    pub fn is_const(self) -> bool {
        matches!(self, Atom::Const(_))
    }

    /// Value under a partial assignment, `None` if the variable is unassigned.
    pub fn eval(self, assignment: &Assignment) -> Option<bool> {
        match self {
            Atom::Const(b) => Some(b),
            Atom::Lit(l) => assignment.get(l.var()).map(|v| l.eval(v)),
        }
    }
}

impl From<Lit> for Atom {
    fn from(l: Lit) -> Atom {
        Atom::Lit(l)
    }
}

impl From<Var> for Atom {
    fn from(v: Var) -> Atom {
        Atom::Lit(v.pos())
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Lit(l) => write!(f, "{l:?}"),
            Atom::Const(true) => f.write_str("T"),
            Atom::Const(false) => f.write_str("F"),
        }
    }
}

/// A disjunction of one to three atoms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    atoms: Vec<Atom>,
}

impl Clause {
    pub const MAX_LEN: usize = 3;

    pub fn new(atoms: Vec<Atom>) -> Result<Clause, FormulaError> {
        if atoms.is_empty() || atoms.len() > Self::MAX_LEN {
            return Err(FormulaError::ClauseLength(atoms.len()));
        }
        Ok(Clause { atoms })
    }

    /// Panics on an empty or over-long literal list; for hard-coded clauses.
    pub fn of<const N: usize>(lits: [Lit; N]) -> Clause {
        Clause::new(lits.into_iter().map(Atom::Lit).collect()).expect("clause length 1..=3")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn lits(&self) -> impl Iterator<Item = Lit> + '_ {
        self.atoms.iter().filter_map(|a| a.lit())
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.lits().map(Lit::var)
    }

    pub fn has_constant(&self) -> bool {
        self.atoms.iter().any(|a| a.is_const())
    }

    /// No variable occurs twice (constants are ignored).
    pub fn has_distinct_vars(&self) -> bool {
        let vars: Vec<Var> = self.vars().collect();
        vars.iter()
            .enumerate()
            .all(|(i, v)| !vars[i + 1..].contains(v))
    }

    pub fn is_monotone(&self) -> bool {
        self.lits().all(|l| !l.is_negated())
    }

    pub(crate) fn map_atoms(&self, mut f: impl FnMut(Atom) -> Atom) -> Clause {
        Clause {
            atoms: self.atoms.iter().map(|&a| f(a)).collect(),
        }
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∨ ")?;
            }
            write!(f, "{a:?}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Sat,
    Nae,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Semantics::Sat => f.write_str("sat"),
            Semantics::Nae => f.write_str("nae"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Universal,
    Existential,
}

/// `∀ universals ∃ existentials . matrix`, evaluated under SAT or NAE semantics.
#[derive(Clone, PartialEq, Eq)]
pub struct QuantifiedFormula {
    universals: Vec<Var>,
    existentials: Vec<Var>,
    matrix: Vec<Clause>,
    semantics: Semantics,
    constants_allowed: bool,
}

impl QuantifiedFormula {
    /// Builds and validates a formula. Constants are allowed iff the matrix
    /// contains one; use [`QuantifiedFormula::with_constants_allowed`] to set
    /// the flag explicitly.
    pub fn new(
        universals: Vec<Var>,
        existentials: Vec<Var>,
        matrix: Vec<Clause>,
        semantics: Semantics,
    ) -> Result<QuantifiedFormula, FormulaError> {
        let constants_allowed = matrix.iter().any(Clause::has_constant);
        let f = QuantifiedFormula {
            universals,
            existentials,
            matrix,
            semantics,
            constants_allowed,
        };
        f.check()?;
        Ok(f)
    }

    /// An unquantified (existential-only) formula over the matrix variables in
    /// order of first appearance.
    pub fn existential(matrix: Vec<Clause>, semantics: Semantics) -> QuantifiedFormula {
        let mut seen = BTreeSet::new();
        let mut vars = Vec::new();
        for v in matrix.iter().flat_map(|c| c.vars().collect::<Vec<_>>()) {
            if seen.insert(v) {
                vars.push(v);
            }
        }
        QuantifiedFormula::new(Vec::new(), vars, matrix, semantics)
            .expect("existential closure is always well formed")
    }

    pub fn with_constants_allowed(mut self, allowed: bool) -> Result<Self, FormulaError> {
        self.constants_allowed = allowed;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<(), FormulaError> {
        let mut declared = BTreeSet::new();
        for &v in self.universals.iter().chain(&self.existentials) {
            if !declared.insert(v) {
                return Err(FormulaError::DuplicateDeclaration(v));
            }
        }
        for c in &self.matrix {
            for v in c.vars() {
                if !declared.contains(&v) {
                    return Err(FormulaError::UnknownVariable(v));
                }
            }
            if c.has_constant() && !self.constants_allowed {
                return Err(FormulaError::ConstantsNotAllowed);
            }
        }
        if self.constants_allowed && !self.universals.is_empty() {
            return Err(FormulaError::ConstantsWithUniversals);
        }
        Ok(())
    }

    pub fn universals(&self) -> &[Var] {
        &self.universals
    }

    pub fn existentials(&self) -> &[Var] {
        &self.existentials
    }

    pub fn matrix(&self) -> &[Clause] {
        &self.matrix
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn constants_allowed(&self) -> bool {
        self.constants_allowed
    }

    /// All declared variables, universals first.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.universals.iter().chain(&self.existentials).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.universals.len() + self.existentials.len()
    }

    pub fn max_var(&self) -> u32 {
        self.vars().map(Var::id).max().unwrap_or(0)
    }

    pub fn quantifier(&self, v: Var) -> Option<Quantifier> {
        if self.universals.contains(&v) {
            Some(Quantifier::Universal)
        } else if self.existentials.contains(&v) {
            Some(Quantifier::Existential)
        } else {
            None
        }
    }

    pub fn with_semantics(mut self, semantics: Semantics) -> QuantifiedFormula {
        self.semantics = semantics;
        self
    }

    /// Replaces the matrix, keeping the prefix. Validates the result.
    pub fn with_matrix(&self, matrix: Vec<Clause>) -> Result<QuantifiedFormula, FormulaError> {
        let mut f = QuantifiedFormula {
            universals: self.universals.clone(),
            existentials: self.existentials.clone(),
            matrix,
            semantics: self.semantics,
            constants_allowed: self.constants_allowed,
        };
        f.constants_allowed |= f.matrix.iter().any(Clause::has_constant);
        f.check()?;
        Ok(f)
    }

    /// Splits into owned parts: (universals, existentials, matrix, semantics).
    pub fn into_parts(self) -> (Vec<Var>, Vec<Var>, Vec<Clause>, Semantics) {
        (self.universals, self.existentials, self.matrix, self.semantics)
    }
}

impl fmt::Debug for QuantifiedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "∀{:?} ∃{:?} [{}] ", self.universals, self.existentials, self.semantics)?;
        f.debug_list().entries(&self.matrix).finish()
    }
}

/// A partial map from variables to truth values.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, bool)>) -> Assignment {
        let mut a = Assignment::new();
        for (v, b) in pairs {
            a.set(v, b);
        }
        a
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.values.get(v.index()).copied().flatten()
    }

    /// Panics if `v` is unassigned.
    pub fn value(&self, v: Var) -> bool {
        self.get(v)
            .unwrap_or_else(|| panic!("variable {v} is unassigned"))
    }

    pub fn set(&mut self, v: Var, value: bool) {
        let i = v.index();
        if self.values.len() <= i {
            self.values.resize(i + 1, None);
        }
        self.values[i] = Some(value);
    }

    pub fn unset(&mut self, v: Var) {
        if let Some(slot) = self.values.get_mut(v.index()) {
            *slot = None;
        }
    }

    pub fn is_assigned(&self, v: Var) -> bool {
        self.get(v).is_some()
    }

    pub fn len(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Assigned pairs in ascending variable order.
    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|b| (Var::new(i as u32), b)))
    }

    /// The sub-assignment on `vars` (unassigned ones are skipped).
    pub fn restrict(&self, vars: &[Var]) -> Assignment {
        Assignment::from_pairs(vars.iter().filter_map(|&v| self.get(v).map(|b| (v, b))))
    }

    /// Copies every pair of `other` into `self`, overwriting.
    pub fn extend_from(&mut self, other: &Assignment) {
        for (v, b) in other.iter() {
            self.set(v, b);
        }
    }

    pub fn covers(&self, vars: &[Var]) -> bool {
        vars.iter().all(|&v| self.is_assigned(v))
    }

    /// DIMACS-style signed literals, ascending by variable.
    pub fn to_dimacs(&self) -> Vec<i64> {
        self.iter().map(|(v, b)| Lit::new(v, !b).to_dimacs()).collect()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.iter().map(|(v, b)| (v, if b { 'T' } else { 'F' })))
            .finish()
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_dimacs().serialize(serializer)
    }
}

/// Hands out fresh variable ids in strictly increasing order.
#[derive(Debug, Clone)]
pub struct VariableAllocator {
    next: u32,
    limit: u32,
}

impl VariableAllocator {
    pub fn starting_at(next: u32) -> VariableAllocator {
        VariableAllocator {
            next: next.max(1),
            limit: u32::MAX,
        }
    }

    /// Starts after the largest id declared in `formula`.
    pub fn after(formula: &QuantifiedFormula) -> VariableAllocator {
        Self::starting_at(formula.max_var() + 1)
    }

    /// Caps the largest id the allocator may return.
    pub fn with_limit(mut self, limit: u32) -> VariableAllocator {
        self.limit = limit;
        self
    }

    pub fn peek(&self) -> u32 {
        self.next
    }

    pub fn fresh(&mut self) -> Result<Var, FormulaError> {
        if self.next > self.limit || self.next == u32::MAX {
            return Err(FormulaError::AllocatorExhausted);
        }
        let v = Var::new(self.next);
        self.next += 1;
        Ok(v)
    }

    pub fn fresh_n(&mut self, n: usize) -> Result<Vec<Var>, FormulaError> {
        (0..n).map(|_| self.fresh()).collect()
    }

    pub fn fresh_array<const N: usize>(&mut self) -> Result<[Var; N], FormulaError> {
        let vars = self.fresh_n(N)?;
        Ok(vars.try_into().expect("length N"))
    }
}
