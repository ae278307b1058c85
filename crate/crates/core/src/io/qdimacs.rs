use super::qext::{parse_prenex, write_body, Dialect};
use super::IoError;
use crate::formula::{Atom, Clause, QuantifiedFormula, Semantics};

/// Reads a 2-QBF in QDIMACS form (`a` block, then `e` block). Free variables
/// are rejected rather than bound outermost, since that would add a third
/// quantifier block.
pub fn parse_qdimacs(text: &str) -> Result<QuantifiedFormula, IoError> {
    Ok(parse_prenex(text, Dialect::Qdimacs)?.formula)
}

pub fn export_qdimacs(formula: &QuantifiedFormula) -> Result<String, IoError> {
    if formula.semantics() != Semantics::Sat || formula.matrix().iter().any(Clause::has_constant) {
        return Err(IoError::NotExportable);
    }
    let mut out = format!("p cnf {} {}\n", formula.max_var(), formula.matrix().len());
    write_body(&mut out, formula, |a| match a {
        Atom::Lit(l) => l.to_dimacs().to_string(),
        Atom::Const(_) => unreachable!("checked above"),
    });
    Ok(out)
}
