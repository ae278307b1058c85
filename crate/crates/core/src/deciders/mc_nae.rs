use std::collections::BTreeMap;

use super::{assert_linear, require, ClauseGraph, DeciderError, Verdict, VerdictAnswer};
use crate::formula::{
    appearance_table, validate_class, Atom, Clause, ClassSpec, QuantifiedFormula, Semantics, Var,
};

/// The live clauses after one step of the procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub step: &'static str,
    pub clauses: Vec<Clause>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McNae2Trace {
    pub verdict: Verdict,
    /// One entry per completed step; a NO in the constant check ends the
    /// list early.
    pub snapshots: Vec<Snapshot>,
    /// Variables fixed by a clause holding two equal constants.
    pub substitutions: Vec<(Var, bool)>,
    /// Single-appearance removals where the free variable could not have
    /// satisfied its clause. Always zero once the constant-pair step has
    /// reached its fixpoint.
    pub proviso_hits: usize,
    /// The clause graph behind a YES.
    pub graph: Option<ClauseGraph>,
}

struct State {
    clauses: Vec<Option<Vec<Atom>>>,
    occ: BTreeMap<Var, Vec<usize>>,
    steps: u64,
}

impl State {
    fn new(matrix: &[Clause]) -> State {
        let mut occ: BTreeMap<Var, Vec<usize>> = BTreeMap::new();
        for (j, c) in matrix.iter().enumerate() {
            for v in c.vars() {
                occ.entry(v).or_default().push(j);
            }
        }
        State {
            clauses: matrix.iter().map(|c| Some(c.atoms().to_vec())).collect(),
            occ,
            steps: 0,
        }
    }

    fn remove(&mut self, j: usize) -> Vec<Atom> {
        let atoms = self.clauses[j].take().expect("live clause");
        for v in atoms.iter().filter_map(|a| a.var()) {
            self.steps += 1;
            if let Some(js) = self.occ.get_mut(&v) {
                js.retain(|&k| k != j);
            }
        }
        atoms
    }

    fn live(&self) -> Vec<Clause> {
        self.clauses
            .iter()
            .flatten()
            .map(|atoms| Clause::new(atoms.clone()).expect("clause length is preserved"))
            .collect()
    }

    fn snapshot(&self, step: &'static str) -> Snapshot {
        Snapshot {
            step,
            clauses: self.live(),
        }
    }

    /// Constant-pair simplification, iterated until no clause holds one
    /// variable next to two constants.
    fn constant_pairs(&mut self, substitutions: &mut Vec<(Var, bool)>) {
        let mut work: Vec<usize> = (0..self.clauses.len()).rev().collect();
        while let Some(j) = work.pop() {
            self.steps += 1;
            let Some(atoms) = &self.clauses[j] else { continue };
            let consts: Vec<bool> = atoms
                .iter()
                .filter_map(|a| match a {
                    Atom::Const(b) => Some(*b),
                    Atom::Lit(_) => None,
                })
                .collect();
            if consts.len() != 2 {
                continue;
            }
            let x = atoms.iter().find_map(|a| a.var()).expect("one variable");
            self.remove(j);
            if consts[0] != consts[1] {
                continue;
            }
            let value = !consts[0];
            substitutions.push((x, value));
            for k in self.occ.remove(&x).unwrap_or_default() {
                self.steps += 1;
                for a in self.clauses[k].as_mut().expect("live clause") {
                    if a.var() == Some(x) {
                        *a = Atom::Const(value);
                    }
                }
                work.push(k);
            }
        }
    }

    /// Removes each pair of clauses that share two variables.
    fn shared_pairs(&mut self) {
        for j in 0..self.clauses.len() {
            let Some(atoms) = &self.clauses[j] else { continue };
            let vars: Vec<Var> = atoms.iter().filter_map(|a| a.var()).collect();
            let mut partner = None;
            'search: for (i, a) in vars.iter().enumerate() {
                for b in &vars[i + 1..] {
                    self.steps += 1;
                    let other = self.occ[a].iter().copied().find(|&k| k != j && self.occ[b].contains(&k));
                    if other.is_some() {
                        partner = other;
                        break 'search;
                    }
                }
            }
            if let Some(k) = partner {
                self.remove(j);
                self.remove(k);
            }
        }
    }

    /// Removes clauses holding a variable that appears once, until none is
    /// left. Returns how many removals lacked a free choice for that variable.
    fn single_appearances(&mut self) -> usize {
        let mut hits = 0;
        let mut work: Vec<Var> = self.occ.iter().filter(|(_, js)| js.len() == 1).map(|(&v, _)| v).collect();
        while let Some(v) = work.pop() {
            self.steps += 1;
            let &[j] = self.occ[&v].as_slice() else { continue };
            let atoms = self.remove(j);
            let others: Vec<Atom> = atoms.iter().copied().filter(|a| a.var() != Some(v)).collect();
            if others.len() == 2 && others[0].is_const() && others[0] == others[1] {
                hits += 1;
            }
            for w in others.iter().filter_map(|a| a.var()) {
                if self.occ[&w].len() == 1 {
                    work.push(w);
                }
            }
        }
        hits
    }

    /// Drops all-constant clauses holding both constants; returns the index
    /// of one holding a single constant value.
    fn constant_clauses(&mut self) -> Option<usize> {
        for j in 0..self.clauses.len() {
            self.steps += 1;
            let Some(atoms) = &self.clauses[j] else { continue };
            if atoms.iter().all(|a| a.is_const()) {
                if atoms.iter().any(|&a| a != atoms[0]) {
                    self.remove(j);
                } else {
                    return Some(j);
                }
            }
        }
        None
    }
}

/// Runs the procedure. With `relaxed`, the class check is replaced by the
/// weaker precondition the procedure itself needs: monotone NAE 3-clauses
/// over distinct variables, each variable appearing at most twice.
pub(crate) fn run(f: &QuantifiedFormula, relaxed: bool) -> Result<McNae2Trace, DeciderError> {
    if relaxed {
        let spec = ClassSpec {
            name: "mc-nae2 (at most two appearances)".into(),
            semantics: Some(Semantics::Nae),
            monotone: true,
            clause_len: Some((3, 3)),
            distinct_vars: true,
            no_universals: true,
            ..ClassSpec::default()
        };
        let mut report = validate_class(f, &spec);
        if let Some((v, a)) = appearance_table(f).into_iter().find(|(_, a)| a.total() > 2) {
            report.results.push(crate::formula::PredicateResult {
                predicate: "at-most-two-appearances",
                passed: false,
                violation: Some(format!("{v} appears {} times", a.total())),
            });
        }
        if !report.passed() {
            return Err(DeciderError::ClassViolation {
                decider: "decide_mc_nae2",
                class: "mc-nae2",
                report,
            });
        }
    } else {
        require("decide_mc_nae2", "mc-nae2", f)?;
    }

    let mut s = State::new(f.matrix());
    let mut snapshots = Vec::new();
    let mut substitutions = Vec::new();

    s.constant_pairs(&mut substitutions);
    snapshots.push(s.snapshot("constant-pairs"));
    s.shared_pairs();
    snapshots.push(s.snapshot("shared-pairs"));
    let proviso_hits = s.single_appearances();
    snapshots.push(s.snapshot("single-appearances"));

    if let Some(j) = s.constant_clauses() {
        let steps = s.steps;
        assert_linear("decide_mc_nae2", steps, f);
        let detail = format!(
            "clause {j} {:?} is left with three equal constants",
            Clause::new(s.clauses[j].clone().expect("live")).expect("length")
        );
        return Ok(McNae2Trace {
            verdict: Verdict::new(VerdictAnswer::No, "mc-nae2/equal-constants", detail, steps),
            snapshots,
            substitutions,
            proviso_hits,
            graph: None,
        });
    }
    snapshots.push(s.snapshot("constant-clauses"));

    // What is left is linear with at most one constant per clause; drop the
    // constants and look at the clause graph.
    let stripped: Vec<Clause> = s
        .live()
        .iter()
        .map(|c| Clause::new(c.lits().map(Atom::Lit).collect()).expect("two or three variables"))
        .collect();
    s.steps += stripped.len() as u64;
    let graph = ClauseGraph::build(&stripped).expect("simplified matrix meets the clause-graph preconditions");
    let live = s.live();
    for cycle in graph.odd_cycles() {
        // The alternating assignment works because each clause on an odd
        // cycle keeps exactly one constant.
        debug_assert!(cycle.vertices.iter().all(|&j| live[j].has_constant()));
    }
    let odd = graph.odd_cycles().count();
    let detail = format!(
        "{} clauses left in {} components, {odd} of them odd cycles",
        graph.vertices,
        graph.components.len()
    );
    let steps = s.steps;
    assert_linear("decide_mc_nae2", steps, f);
    Ok(McNae2Trace {
        verdict: Verdict::new(VerdictAnswer::Yes, "mc-nae2/clause-graph", detail, steps),
        snapshots,
        substitutions,
        proviso_hits,
        graph: Some(graph),
    })
}

/// Decides an MC-NAE-2 instance (monotone NAE, constants allowed, every
/// variable exactly twice). Gives no assignment on YES.
pub fn decide_mc_nae2(f: &QuantifiedFormula) -> Result<Verdict, DeciderError> {
    Ok(run(f, false)?.verdict)
}

/// Like [`decide_mc_nae2`] but keeps the intermediate matrices.
pub fn trace_mc_nae2(f: &QuantifiedFormula) -> Result<McNae2Trace, DeciderError> {
    run(f, false)
}
