use crate::formula::{Atom, Clause, Lit, Semantics, Var};

/// What remains of a clause once some variables are fixed: either it already
/// holds, or it is equivalent to the conjunction of the listed disjunctions
/// over the unfixed literals (an empty disjunction is false).
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Residual {
    True,
    Ors(Vec<Vec<Lit>>),
}

pub(crate) fn residual(
    clause: &Clause,
    semantics: Semantics,
    value: impl Fn(Var) -> Option<bool>,
) -> Residual {
    let mut has_true = false;
    let mut has_false = false;
    let mut free: Vec<Lit> = Vec::with_capacity(3);
    for &a in clause.atoms() {
        let known = match a {
            Atom::Const(b) => Some(b),
            Atom::Lit(l) => value(l.var()).map(|v| l.eval(v)),
        };
        match known {
            Some(true) => has_true = true,
            Some(false) => has_false = true,
            None => {
                let l = a.lit().expect("unfixed atoms are literals");
                if !free.contains(&l) {
                    free.push(l);
                }
            }
        }
    }
    let complementary = free.iter().any(|&l| free.contains(&!l));
    match semantics {
        Semantics::Sat => {
            if has_true || complementary {
                Residual::True
            } else {
                Residual::Ors(vec![free])
            }
        }
        Semantics::Nae => {
            if (has_true && has_false) || complementary {
                return Residual::True;
            }
            let negated: Vec<Lit> = free.iter().map(|&l| !l).collect();
            Residual::Ors(match (has_true, has_false) {
                (true, _) => vec![negated],
                (_, true) => vec![free],
                _ => vec![free, negated],
            })
        }
    }
}

/// Sorted, deduplicated form used for comparing residual constraint sets.
pub(crate) fn canonical(mut ors: Vec<Vec<Lit>>) -> Vec<Vec<Lit>> {
    for c in &mut ors {
        c.sort_unstable();
    }
    ors.sort_unstable();
    ors.dedup();
    ors
}

/// True iff every disjunction of `weaker` is a superset of some disjunction of
/// `stronger`, so any model of `stronger` satisfies `weaker`.
pub(crate) fn implies(stronger: &[Vec<Lit>], weaker: &[Vec<Lit>]) -> bool {
    weaker
        .iter()
        .all(|w| stronger.iter().any(|s| s.iter().all(|l| w.contains(l))))
}
