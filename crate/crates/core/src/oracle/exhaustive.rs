use super::{Answer, Budget, OracleError, OracleVerdict};
use crate::formula::{evaluate_matrix, Assignment, QuantifiedFormula, Var};

/// Plain enumeration of all total assignments. Universals are visited in
/// lexicographic order over ascending variable id (F before T); the first
/// one with no extension is the counterexample.
pub fn decide_forall_exists_exhaustive(
    formula: &QuantifiedFormula,
    budget: Budget,
) -> Result<OracleVerdict, OracleError> {
    let mut meter = budget.meter();
    let mut universals: Vec<Var> = formula.universals().to_vec();
    universals.sort();
    let mut existentials: Vec<Var> = formula.existentials().to_vec();
    existentials.sort();
    let (nu, ne) = (universals.len(), existentials.len());
    if nu >= 64 || ne >= 64 {
        return Err(OracleError::BudgetExceeded {
            limit: budget.limit(),
        });
    }
    let mut a = Assignment::new();
    let mut witness = None;
    for ubits in 0u64..1 << nu {
        for (i, &u) in universals.iter().enumerate() {
            a.set(u, ubits >> (nu - 1 - i) & 1 == 1);
        }
        let mut extended = false;
        for ebits in 0u64..1 << ne {
            meter.tick()?;
            for (i, &e) in existentials.iter().enumerate() {
                a.set(e, ebits >> (ne - 1 - i) & 1 == 1);
            }
            if evaluate_matrix(formula.matrix(), &a, formula.semantics())? {
                extended = true;
                if nu == 0 {
                    witness = Some(a.restrict(&existentials));
                }
                break;
            }
        }
        if !extended {
            return Ok(OracleVerdict {
                answer: Answer::No,
                counterexample: (nu > 0).then(|| a.restrict(&universals)),
                witness: None,
                evaluations: meter.spent(),
            });
        }
    }
    Ok(OracleVerdict {
        answer: Answer::Yes,
        counterexample: None,
        witness,
        evaluations: meter.spent(),
    })
}
