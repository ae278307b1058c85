//! Polynomial-time deciders for monotone NAE classes with few appearances,
//! plus a refutation checker for the co-NP case.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{validate_class, Assignment, ClassReport, ClassSpec, FormulaError, QuantifiedFormula};

mod graph;
mod mc_nae;
mod monotone;

pub use graph::{ClauseGraph, Component, ComponentKind};
pub use mc_nae::{decide_mc_nae2, trace_mc_nae2, McNae2Trace, Snapshot};
pub use monotone::{
    decide_monotone_12, decide_monotone_s1, decide_monotone_s2_one_universal, promotion_step,
    refute_monotone_s2, Promotion,
};

#[derive(Debug, Error)]
pub enum DeciderError {
    #[error("{decider} needs an instance of class {class}:\n{report}")]
    ClassViolation {
        decider: &'static str,
        class: &'static str,
        report: ClassReport,
    },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum VerdictAnswer {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "TRIVIAL-YES")]
    TrivialYes,
}

impl VerdictAnswer {
    pub fn is_yes(self) -> bool {
        self != VerdictAnswer::No
    }
}

impl fmt::Display for VerdictAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictAnswer::Yes => "YES",
            VerdictAnswer::No => "NO",
            VerdictAnswer::TrivialYes => "TRIVIAL-YES",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub answer: VerdictAnswer,
    /// Name of the rule that decided the instance.
    pub rule: &'static str,
    pub detail: String,
    /// On NO, a universal assignment under which no extension exists.
    /// Check it with [`verify_certificate`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Assignment>,
    /// Elementary operations performed.
    pub steps: u64,
}

impl Verdict {
    fn new(answer: VerdictAnswer, rule: &'static str, detail: impl Into<String>, steps: u64) -> Verdict {
        Verdict {
            answer,
            rule,
            detail: detail.into(),
            certificate: None,
            steps,
        }
    }
}

fn require(decider: &'static str, class: &'static str, f: &QuantifiedFormula) -> Result<(), DeciderError> {
    let spec = ClassSpec::named(class).expect("known class");
    let report = validate_class(f, &spec);
    if report.passed() {
        Ok(())
    } else {
        Err(DeciderError::ClassViolation { decider, class, report })
    }
}

/// Panics if `steps` exceeds a linear budget in `n + m`.
fn assert_linear(decider: &str, steps: u64, f: &QuantifiedFormula) {
    let size = (f.num_vars() + f.matrix().len()) as u64;
    let limit = 32 * size + 32;
    assert!(steps <= limit, "{decider} took {steps} steps on an instance of size {size}");
}

/// Re-checks a NO certificate in polynomial time: substitutes the universal
/// assignment and runs the MC-NAE-2 procedure on what is left. Needs a
/// monotone NAE instance whose existentials appear at most twice.
pub fn verify_certificate(f: &QuantifiedFormula, universals: &Assignment) -> Result<bool, DeciderError> {
    let rest = monotone::substitute_universals(f, universals)?;
    Ok(mc_nae::run(&rest, true)?.verdict.answer == VerdictAnswer::No)
}

/// The polynomial decider for the first named class the formula belongs to,
/// or `None` if no decider applies.
pub fn decide_poly(f: &QuantifiedFormula) -> Result<Option<Verdict>, DeciderError> {
    type Decider = fn(&QuantifiedFormula) -> Result<Verdict, DeciderError>;
    let deciders: [(&str, Decider); 4] = [
        ("mc-nae2", decide_mc_nae2),
        ("mono-s1", decide_monotone_s1),
        ("mono-s2-1u", decide_monotone_s2_one_universal),
        ("mono-12", decide_monotone_12),
    ];
    for (class, decide) in deciders {
        if validate_class(f, &ClassSpec::named(class).expect("known class")).passed() {
            return decide(f).map(Some);
        }
    }
    Ok(None)
}

/// Class names [`decide_poly`] can dispatch to.
pub const POLY_CLASSES: &[&str] = &["mc-nae2", "mono-s1", "mono-s2-1u", "mono-12"];

#[cfg(test)]
mod tests;
