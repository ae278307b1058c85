use std::collections::{BTreeMap, BTreeSet};

use super::{assert_linear, mc_nae, require, DeciderError, Verdict, VerdictAnswer};
use crate::formula::{substitute, Assignment, Clause, FormulaError, QuantifiedFormula, Replacement, Var};

/// Replaces every universal by its value in `universals`.
pub(crate) fn substitute_universals(
    f: &QuantifiedFormula,
    universals: &Assignment,
) -> Result<QuantifiedFormula, FormulaError> {
    let replacements = f
        .universals()
        .iter()
        .map(|&u| {
            universals
                .get(u)
                .map(|b| (u, Replacement::Const(b)))
                .ok_or(FormulaError::Unassigned(u))
        })
        .collect::<Result<Vec<_>, _>>()?;
    substitute(f, &replacements)
}

fn universal_set(f: &QuantifiedFormula) -> BTreeSet<Var> {
    f.universals().iter().copied().collect()
}

/// Existentials appear once: YES iff every clause holds an existential.
pub fn decide_monotone_s1(f: &QuantifiedFormula) -> Result<Verdict, DeciderError> {
    require("decide_monotone_s1", "mono-s1", f)?;
    let universal = universal_set(f);
    let mut steps = 0;
    for (j, c) in f.matrix().iter().enumerate() {
        steps += c.len() as u64;
        if c.vars().all(|v| universal.contains(&v)) {
            assert_linear("decide_monotone_s1", steps, f);
            // All universals equal leaves this clause all-equal.
            let certificate = Assignment::from_pairs(f.universals().iter().map(|&u| (u, false)));
            let mut v = Verdict::new(
                VerdictAnswer::No,
                "s1/all-universal-clause",
                format!("clause {j} {c:?} has no existential"),
                steps,
            );
            v.certificate = Some(certificate);
            return Ok(v);
        }
    }
    assert_linear("decide_monotone_s1", steps, f);
    Ok(Verdict::new(
        VerdictAnswer::Yes,
        "s1/existential-in-every-clause",
        "every clause holds an existential",
        steps,
    ))
}

/// At most one universal per clause and existentials twice: always YES.
/// The simplification behind that claim is still run and checked.
pub fn decide_monotone_s2_one_universal(f: &QuantifiedFormula) -> Result<Verdict, DeciderError> {
    require("decide_monotone_s2_one_universal", "mono-s2-1u", f)?;
    let universal = universal_set(f);
    let mut steps = 0u64;
    let mut live: Vec<Option<Vec<Var>>> = f
        .matrix()
        .iter()
        .map(|c| Some(c.vars().filter(|v| !universal.contains(v)).collect()))
        .collect();
    let mut occ: BTreeMap<Var, Vec<usize>> = BTreeMap::new();
    for (j, vars) in live.iter().enumerate() {
        for &v in vars.as_ref().expect("fresh") {
            occ.entry(v).or_default().push(j);
        }
    }
    let remove = |live: &mut Vec<Option<Vec<Var>>>, occ: &mut BTreeMap<Var, Vec<usize>>, j: usize| {
        for v in live[j].take().expect("live clause") {
            occ.get_mut(&v).expect("indexed").retain(|&k| k != j);
        }
    };

    // Clause pairs sharing two existentials.
    for j in 0..live.len() {
        let Some(vars) = live[j].clone() else { continue };
        let mut partner = None;
        for (i, a) in vars.iter().enumerate() {
            for b in &vars[i + 1..] {
                steps += 1;
                partner = partner.or_else(|| occ[a].iter().copied().find(|&k| k != j && occ[b].contains(&k)));
            }
        }
        if let Some(k) = partner {
            remove(&mut live, &mut occ, j);
            remove(&mut live, &mut occ, k);
        }
    }
    // Clauses with an existential that appears once.
    let mut work: Vec<Var> = occ.iter().filter(|(_, js)| js.len() == 1).map(|(&v, _)| v).collect();
    while let Some(v) = work.pop() {
        steps += 1;
        let &[j] = occ[&v].as_slice() else { continue };
        let vars = live[j].clone().expect("live");
        remove(&mut live, &mut occ, j);
        work.extend(vars.into_iter().filter(|w| occ[w].len() == 1));
    }

    let left: Vec<&Vec<Var>> = live.iter().flatten().collect();
    debug_assert!(occ.values().all(|js| js.is_empty() || js.len() == 2));
    let mut pairs = BTreeSet::new();
    for vars in &left {
        for (i, a) in vars.iter().enumerate() {
            for b in &vars[i + 1..] {
                assert!(pairs.insert((*a.min(b), *a.max(b))), "two clauses still share {a} and {b}");
            }
        }
    }
    assert_linear("decide_monotone_s2_one_universal", steps, f);
    Ok(Verdict::new(
        VerdictAnswer::TrivialYes,
        "s2-1u/at-most-one-universal",
        format!("{} clauses left after simplification", left.len()),
        steps,
    ))
}

/// Result of one promotion on a (1,2) instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Promotion {
    /// No clause holds two universals.
    Done,
    /// Clause `clause` holds three universals.
    ThreeUniversals { clause: usize },
    /// Clause `removed` held `promoted` and two universals; it is gone and
    /// `promoted` is now universal.
    Promoted {
        formula: QuantifiedFormula,
        removed: usize,
        promoted: Var,
    },
}

enum Step {
    Done,
    No(usize),
    Promoted { removed: usize, x: Var },
}

struct Promoter {
    clauses: Vec<Option<Vec<Var>>>,
    universal: BTreeSet<Var>,
    occ: BTreeMap<Var, Vec<usize>>,
    /// Promoted variable -> the two universals of the clause it came from.
    parents: BTreeMap<Var, (Var, Var)>,
    /// Clauses holding two or more universals.
    pending: BTreeSet<usize>,
    steps: u64,
}

impl Promoter {
    fn new(f: &QuantifiedFormula) -> Promoter {
        let mut p = Promoter {
            clauses: f.matrix().iter().map(|c| Some(c.vars().collect())).collect(),
            universal: universal_set(f),
            occ: BTreeMap::new(),
            parents: BTreeMap::new(),
            pending: BTreeSet::new(),
            steps: 0,
        };
        for (j, c) in f.matrix().iter().enumerate() {
            for v in c.vars() {
                p.occ.entry(v).or_default().push(j);
            }
            if p.universal_count(j) >= 2 {
                p.pending.insert(j);
            }
        }
        p
    }

    fn universal_count(&self, j: usize) -> usize {
        self.clauses[j]
            .as_ref()
            .map_or(0, |c| c.iter().filter(|v| self.universal.contains(v)).count())
    }

    fn three_universals(&self) -> Option<usize> {
        self.pending.iter().copied().find(|&j| self.universal_count(j) == 3)
    }

    fn step(&mut self) -> Step {
        self.steps += 1;
        let Some(j) = self.pending.pop_first() else { return Step::Done };
        let vars = self.clauses[j].take().expect("pending clauses are live");
        let (us, xs): (Vec<Var>, Vec<Var>) = vars.iter().partition(|v| self.universal.contains(v));
        let (&[u, w], &[x]) = (us.as_slice(), xs.as_slice()) else {
            unreachable!("three-universal clauses are caught before promotion")
        };
        for v in &vars {
            self.occ.get_mut(v).expect("indexed").retain(|&k| k != j);
        }
        self.universal.insert(x);
        self.parents.insert(x, (u, w));
        for k in self.occ[&x].clone() {
            self.steps += 1;
            match self.universal_count(k) {
                3 => return Step::No(k),
                2 => {
                    self.pending.insert(k);
                }
                _ => {}
            }
        }
        Step::Promoted { removed: j, x }
    }

    /// Universal assignment under which clause `j` is forced all-true.
    fn certificate(&self, f: &QuantifiedFormula, j: usize) -> Assignment {
        let mut a = Assignment::new();
        let mut stack: Vec<(Var, bool)> = self.clauses[j]
            .as_ref()
            .expect("live")
            .iter()
            .map(|&v| (v, true))
            .collect();
        while let Some((v, value)) = stack.pop() {
            match self.parents.get(&v) {
                // Two equal universals force the promoted variable to the
                // opposite value.
                Some(&(u, w)) => stack.extend([(u, !value), (w, !value)]),
                None => a.set(v, value),
            }
        }
        for &u in f.universals() {
            if !a.is_assigned(u) {
                a.set(u, false);
            }
        }
        a
    }
}

/// One promotion, as a formula-to-formula step. Clauses are scanned in
/// ascending index order.
pub fn promotion_step(f: &QuantifiedFormula) -> Result<Promotion, DeciderError> {
    require("promotion_step", "mono-12", f)?;
    let mut p = Promoter::new(f);
    if let Some(clause) = p.three_universals() {
        return Ok(Promotion::ThreeUniversals { clause });
    }
    let (removed, promoted) = match p.step() {
        Step::Done => return Ok(Promotion::Done),
        Step::Promoted { removed, x } => (removed, x),
        // The promotion happened; the three-universal clause shows up on
        // the next step.
        Step::No(_) => (
            p.clauses.iter().position(Option::is_none).expect("one clause removed"),
            *p.parents.keys().next().expect("one promotion"),
        ),
    };
    let mut universals = f.universals().to_vec();
    universals.push(promoted);
    let existentials = f.existentials().iter().copied().filter(|&v| v != promoted).collect();
    let matrix: Vec<Clause> = f
        .matrix()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != removed)
        .map(|(_, c)| c.clone())
        .collect();
    Ok(Promotion::Promoted {
        formula: QuantifiedFormula::new(universals, existentials, matrix, f.semantics())?,
        removed,
        promoted,
    })
}

/// Universals once, existentials twice: promote existentials out of
/// two-universal clauses until a clause has three universals (NO) or none
/// has two (YES).
pub fn decide_monotone_12(f: &QuantifiedFormula) -> Result<Verdict, DeciderError> {
    require("decide_monotone_12", "mono-12", f)?;
    let mut p = Promoter::new(f);
    let no = |p: &Promoter, j: usize, rule: &'static str| {
        assert_linear("decide_monotone_12", p.steps, f);
        let mut v = Verdict::new(
            VerdictAnswer::No,
            rule,
            format!("clause {j} {:?} ends with three universals", f.matrix()[j]),
            p.steps,
        );
        v.certificate = Some(p.certificate(f, j));
        v
    };
    if let Some(j) = p.three_universals() {
        return Ok(no(&p, j, "mono-12/three-universals"));
    }
    let mut promoted = 0;
    loop {
        match p.step() {
            Step::Done => break,
            Step::No(j) => return Ok(no(&p, j, "mono-12/promotion-makes-three-universals")),
            Step::Promoted { .. } => promoted += 1,
        }
    }
    assert_linear("decide_monotone_12", p.steps, f);
    Ok(Verdict::new(
        VerdictAnswer::Yes,
        "mono-12/no-two-universal-clause",
        format!("{promoted} promotions; no clause holds two universals"),
        p.steps,
    ))
}

/// True iff fixing the universals to `universals` leaves an MC-NAE-2
/// instance with no nae-satisfying assignment, which certifies NO.
pub fn refute_monotone_s2(f: &QuantifiedFormula, universals: &Assignment) -> Result<bool, DeciderError> {
    require("refute_monotone_s2", "mono-s2", f)?;
    let rest = substitute_universals(f, universals)?;
    Ok(mc_nae::run(&rest, false)?.verdict.answer == VerdictAnswer::No)
}
