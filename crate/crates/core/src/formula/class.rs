use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{appearance_table, Clause, QuantifiedFormula, Semantics, Var};

/// Exact appearance profile `(s1, s2, t1, t2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub s1: usize,
    pub s2: usize,
    pub t1: usize,
    pub t2: usize,
}

impl Profile {
    pub const fn new(s1: usize, s2: usize, t1: usize, t2: usize) -> Profile {
        Profile { s1, s2, t1, t2 }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.s1, self.s2, self.t1, self.t2)
    }
}

/// A conjunction of structural predicates. Unset fields are not checked.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassSpec {
    pub name: String,
    pub semantics: Option<Semantics>,
    pub monotone: bool,
    pub linear: bool,
    pub balanced: bool,
    pub no_constants: bool,
    pub clause_len: Option<(usize, usize)>,
    pub distinct_vars: bool,
    pub profile: Option<Profile>,
    /// Every existential's (unnegated, negated) count is one of these.
    pub existential_profiles: Option<Vec<(usize, usize)>>,
    pub universal_total: Option<usize>,
    pub existential_total: Option<usize>,
    pub uniform_universal_total: bool,
    pub max_one_universal: bool,
    pub no_universals: bool,
}

impl ClassSpec {
    fn base(name: &str, semantics: Semantics) -> ClassSpec {
        ClassSpec {
            name: name.to_string(),
            semantics: Some(semantics),
            no_constants: true,
            clause_len: Some((3, 3)),
            distinct_vars: true,
            ..ClassSpec::default()
        }
    }

    pub fn balanced_profile(name: &str, profile: Profile) -> ClassSpec {
        ClassSpec {
            balanced: true,
            profile: Some(profile),
            ..Self::base(name, Semantics::Sat)
        }
    }

    pub fn forall_exists_profile(name: &str, profile: Profile) -> ClassSpec {
        ClassSpec {
            profile: Some(profile),
            ..Self::base(name, Semantics::Sat)
        }
    }

    pub fn monotone_nae(name: &str, s: Option<usize>, t: Option<usize>) -> ClassSpec {
        ClassSpec {
            monotone: true,
            universal_total: s,
            existential_total: t,
            ..Self::base(name, Semantics::Nae)
        }
    }

    /// Looks up one of the named classes used by the reductions and deciders.
    pub fn named(name: &str) -> Option<ClassSpec> {
        let p = Profile::new;
        Some(match name {
            "b2222" => Self::balanced_profile(name, p(2, 2, 2, 2)),
            "b1122" => Self::balanced_profile(name, p(1, 1, 2, 2)),
            "ae-1121" => Self::forall_exists_profile(name, p(1, 1, 2, 1)),
            "ae-1112" => Self::forall_exists_profile(name, p(1, 1, 1, 2)),
            "ae-1021" => Self::forall_exists_profile(name, p(1, 0, 2, 1)),
            "ae-0121" => Self::forall_exists_profile(name, p(0, 1, 2, 1)),
            "ae-1012" => Self::forall_exists_profile(name, p(1, 0, 1, 2)),
            "ae-0112" => Self::forall_exists_profile(name, p(0, 1, 1, 2)),
            "mono14" => ClassSpec {
                max_one_universal: true,
                ..Self::monotone_nae(name, Some(1), Some(4))
            },
            "mono13" => ClassSpec {
                max_one_universal: true,
                linear: true,
                ..Self::monotone_nae(name, Some(1), Some(3))
            },
            "mono-s1" => ClassSpec {
                uniform_universal_total: true,
                ..Self::monotone_nae(name, None, Some(1))
            },
            "mono-s2" => ClassSpec {
                uniform_universal_total: true,
                ..Self::monotone_nae(name, None, Some(2))
            },
            "mono-s2-1u" => ClassSpec {
                uniform_universal_total: true,
                max_one_universal: true,
                ..Self::monotone_nae(name, None, Some(2))
            },
            "mono-12" => Self::monotone_nae(name, Some(1), Some(2)),
            "3sat3" => ClassSpec {
                clause_len: Some((2, 3)),
                existential_profiles: Some(vec![(2, 1)]),
                no_universals: true,
                ..Self::base(name, Semantics::Sat)
            },
            "3sat3-raw" => ClassSpec {
                clause_len: Some((2, 3)),
                existential_profiles: Some(vec![(2, 1), (1, 2)]),
                no_universals: true,
                ..Self::base(name, Semantics::Sat)
            },
            "mc-nae2" => ClassSpec {
                no_constants: false,
                no_universals: true,
                existential_total: Some(2),
                ..Self::monotone_nae(name, None, None)
            },
            _ => return None,
        })
    }

    pub const NAMES: &'static [&'static str] = &[
        "b2222", "b1122", "ae-1121", "ae-1112", "ae-1021", "ae-0121", "ae-1012", "ae-0112",
        "mono14", "mono13", "mono-s1", "mono-s2", "mono-s2-1u", "mono-12", "3sat3", "3sat3-raw",
        "mc-nae2",
    ];
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PredicateResult {
    pub predicate: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassReport {
    pub class: String,
    pub results: Vec<PredicateResult>,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PredicateResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            let mark = if r.passed { "pass" } else { "FAIL" };
            write!(f, "{mark} {}", r.predicate)?;
            if let Some(v) = &r.violation {
                write!(f, ": {v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn first_clause(
    matrix: &[Clause],
    bad: impl Fn(&Clause) -> bool,
    what: &str,
) -> Option<String> {
    matrix
        .iter()
        .position(bad)
        .map(|j| format!("clause {j} {:?} {what}", matrix[j]))
}

/// Checks every predicate requested by `spec`; never fails.
pub fn validate_class(formula: &QuantifiedFormula, spec: &ClassSpec) -> ClassReport {
    let matrix = formula.matrix();
    let universal: BTreeSet<Var> = formula.universals().iter().copied().collect();
    let table = appearance_table(formula);
    let mut results = Vec::new();
    let mut check = |predicate: &'static str, violation: Option<String>| {
        results.push(PredicateResult {
            predicate,
            passed: violation.is_none(),
            violation,
        });
    };

    if let Some(sem) = spec.semantics {
        let found = formula.semantics();
        check(
            "semantics",
            (found != sem).then(|| format!("expected {sem}, found {found}")),
        );
    }
    if spec.no_constants {
        check(
            "no-constants",
            first_clause(matrix, Clause::has_constant, "contains a constant"),
        );
    }
    if let Some((lo, hi)) = spec.clause_len {
        check(
            "clause-length",
            first_clause(
                matrix,
                |c| c.len() < lo || c.len() > hi,
                &format!("has length outside {lo}..={hi}"),
            ),
        );
    }
    if spec.distinct_vars {
        check(
            "distinct-variables",
            first_clause(matrix, |c| !c.has_distinct_vars(), "repeats a variable"),
        );
    }
    if spec.monotone {
        check(
            "monotone",
            first_clause(matrix, |c| !c.is_monotone(), "contains a negated literal"),
        );
    }
    if spec.linear {
        check("linear", linearity_violation(matrix));
    }
    if spec.balanced {
        let (p, q) = (formula.universals().len(), formula.existentials().len());
        check(
            "balanced",
            (p != q).then(|| format!("{p} universals vs {q} existentials")),
        );
    }
    if spec.no_universals {
        check(
            "no-universals",
            formula
                .universals()
                .first()
                .map(|v| format!("{v} is universal")),
        );
    }
    if spec.max_one_universal {
        check(
            "max-one-universal",
            first_clause(
                matrix,
                |c| c.vars().filter(|v| universal.contains(v)).count() > 1,
                "holds two or more universal literals",
            ),
        );
    }

    let mismatch = |pred: &dyn Fn(Var, usize, usize) -> bool, what: &str| -> Option<String> {
        table.iter().find_map(|(&v, a)| {
            (!pred(v, a.unnegated, a.negated)).then(|| {
                format!("{v} appears ({},{}); {what}", a.unnegated, a.negated)
            })
        })
    };
    let is_u = |v: Var| universal.contains(&v);

    if let Some(p) = spec.profile {
        check(
            "profile",
            mismatch(
                &|v, u, n| {
                    if is_u(v) {
                        (u, n) == (p.s1, p.s2)
                    } else {
                        (u, n) == (p.t1, p.t2)
                    }
                },
                &format!("expected profile {p}"),
            ),
        );
    }
    if let Some(allowed) = &spec.existential_profiles {
        check(
            "existential-profile",
            mismatch(
                &|v, u, n| is_u(v) || allowed.contains(&(u, n)),
                &format!("expected one of {allowed:?}"),
            ),
        );
    }
    if let Some(s) = spec.universal_total {
        check(
            "universal-appearances",
            mismatch(&|v, u, n| !is_u(v) || u + n == s, &format!("expected {s} in total")),
        );
    }
    if let Some(t) = spec.existential_total {
        check(
            "existential-appearances",
            mismatch(&|v, u, n| is_u(v) || u + n == t, &format!("expected {t} in total")),
        );
    }
    if spec.uniform_universal_total {
        // s is a positive integer in every class that asks for this.
        let violation = match formula.universals().first().map(|v| table[v].total()) {
            None => None,
            Some(0) => Some("universals do not appear".to_string()),
            Some(s) => mismatch(
                &|v, u, n| !is_u(v) || u + n == s,
                &format!("other universals appear {s} times"),
            ),
        };
        check("uniform-universal-appearances", violation);
    }

    ClassReport {
        class: spec.name.clone(),
        results,
    }
}

fn linearity_violation(matrix: &[Clause]) -> Option<String> {
    // Two clauses sharing two variables share some pair of variables.
    let mut pairs: BTreeMap<(Var, Var), usize> = BTreeMap::new();
    for (j, c) in matrix.iter().enumerate() {
        let vars: BTreeSet<Var> = c.vars().collect();
        let vars: Vec<Var> = vars.into_iter().collect();
        for a in 0..vars.len() {
            for b in a + 1..vars.len() {
                if let Some(&k) = pairs.get(&(vars[a], vars[b])) {
                    return Some(format!(
                        "clauses {k} and {j} share {} and {}",
                        vars[a], vars[b]
                    ));
                }
                pairs.insert((vars[a], vars[b]), j);
            }
        }
    }
    None
}
