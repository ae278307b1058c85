//! Gadgets, polynomial-time reductions and deciders for restricted
//! forall-exists 3-SAT and NAE-3-SAT, with an exhaustive oracle as ground truth.

pub mod deciders;
pub mod formula;
pub mod gadgets;
pub mod io;
pub mod oracle;
pub mod reductions;

pub use formula::{
    Assignment, Atom, Clause, FormulaError, Lit, QuantifiedFormula, Quantifier, Semantics, Var,
    VariableAllocator,
};
