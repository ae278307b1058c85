//! The forall-exists decision engine.
//!
//! The matrix is split into variable-disjoint components, which are decided
//! independently. Inside a component, universals that share a clause form a
//! cluster; every cluster assignment leaves a residual constraint set on the
//! existentials, and only assignments whose residual is not implied by another
//! one need to be tried. When the product of those choices is small they are
//! enumerated; otherwise a counterexample-guided loop alternates between a
//! solver over the universals and one over the whole component.
//!
//! Counterexamples are always the lexicographically smallest failing universal
//! assignment (ascending variable id, F before T), found by fixing universals one at a
//! time and re-asking whether a failing assignment remains.

use std::collections::HashMap;

use super::cnf::{canonical, implies, residual, Residual};
use super::sat::{mk_lit, SatLit, Solver};
use super::{Meter, OracleError};
use crate::formula::{Assignment, Atom, Clause, Lit, QuantifiedFormula, Semantics, Var};

const ENUMERATION_LIMIT: u128 = 4096;
const MAX_CLUSTER: usize = 10;

pub(crate) struct Outcome {
    /// Failing assignment to the unfixed universals, if any.
    pub counterexample: Option<Assignment>,
    /// Model of the unfixed existentials; only when there are no unfixed
    /// universals and the answer is yes.
    pub witness: Option<Assignment>,
}

pub(crate) fn solve(
    formula: &QuantifiedFormula,
    fixed: &Assignment,
    meter: &mut Meter,
) -> Result<Outcome, OracleError> {
    solve_with_limit(formula, fixed, meter, ENUMERATION_LIMIT)
}

/// `enumeration_limit` caps the number of cluster combinations tried directly
/// before switching to the counterexample-guided loop.
pub(crate) fn solve_with_limit(
    formula: &QuantifiedFormula,
    fixed: &Assignment,
    meter: &mut Meter,
    enumeration_limit: u128,
) -> Result<Outcome, OracleError> {
    let sem = formula.semantics();
    let clauses = formula.matrix();
    let free_universals: Vec<Var> = formula
        .universals()
        .iter()
        .copied()
        .filter(|&v| !fixed.is_assigned(v))
        .collect::<std::collections::BTreeSet<Var>>()
        .into_iter()
        .collect();
    let free_existentials: Vec<Var> = formula
        .existentials()
        .iter()
        .copied()
        .filter(|&v| !fixed.is_assigned(v))
        .collect();
    let all_false = || Assignment::from_pairs(free_universals.iter().map(|&v| (v, false)));

    let mut active = Vec::new();
    for (j, c) in clauses.iter().enumerate() {
        if residual(c, sem, |x| fixed.get(x)) != Residual::True {
            if c.vars().all(|x| fixed.is_assigned(x)) {
                // Falsified by the fixed part alone.
                return Ok(Outcome {
                    counterexample: Some(all_false()),
                    witness: None,
                });
            }
            active.push(j);
        }
    }

    let components = split_components(clauses, &active, fixed);
    let universal_pos: HashMap<Var, usize> = free_universals
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let existential_pos: HashMap<Var, usize> = free_existentials
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();

    let mut best: Option<Vec<bool>> = None;
    let mut witness = Assignment::from_pairs(free_existentials.iter().map(|&v| (v, false)));
    for comp in components {
        let mut universals = Vec::new();
        let mut existentials = Vec::new();
        for &j in &comp {
            for v in clauses[j].vars() {
                if fixed.is_assigned(v) {
                    continue;
                }
                if universal_pos.contains_key(&v) {
                    if !universals.contains(&v) {
                        universals.push(v);
                    }
                } else if !existentials.contains(&v) {
                    existentials.push(v);
                }
            }
        }
        universals.sort_by_key(|v| universal_pos[v]);
        existentials.sort_by_key(|v| existential_pos.get(v).copied().unwrap_or(usize::MAX));

        let mut engine =
            Engine::new(sem, clauses, fixed, comp, universals, existentials, enumeration_limit);
        match engine.find_failing(&[], meter)? {
            None => {
                for &(v, b) in &engine.last_model {
                    witness.set(v, b);
                }
            }
            Some(first) => {
                let local = engine.lexicographic_min(first, meter)?;
                let mut global = vec![false; free_universals.len()];
                for (i, &v) in engine.universals.iter().enumerate() {
                    global[universal_pos[&v]] = local[i];
                }
                if best.as_ref().is_none_or(|b| global < *b) {
                    best = Some(global);
                }
            }
        }
    }

    Ok(match best {
        Some(bits) => Outcome {
            counterexample: Some(Assignment::from_pairs(
                free_universals.iter().copied().zip(bits),
            )),
            witness: None,
        },
        None => Outcome {
            counterexample: None,
            witness: free_universals.is_empty().then_some(witness),
        },
    })
}

/// Groups active clauses by shared unfixed variables, ordered by first clause.
fn split_components(clauses: &[Clause], active: &[usize], fixed: &Assignment) -> Vec<Vec<usize>> {
    let mut index: HashMap<Var, usize> = HashMap::new();
    let mut parent: Vec<usize> = Vec::new();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &j in active {
        let mut first = None;
        for v in clauses[j].vars().filter(|&v| !fixed.is_assigned(v)) {
            let id = *index.entry(v).or_insert_with(|| {
                parent.push(parent.len());
                parent.len() - 1
            });
            match first {
                None => first = Some(id),
                Some(f) => {
                    let (a, b) = (find(&mut parent, f), find(&mut parent, id));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root: HashMap<usize, usize> = HashMap::new();
    for &j in active {
        let v = clauses[j]
            .vars()
            .find(|&v| !fixed.is_assigned(v))
            .expect("active clauses have an unfixed variable");
        let root = find(&mut parent, index[&v]);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(j);
    }
    groups
}

struct Cluster {
    /// Indices into `Engine::universals`.
    members: Vec<usize>,
    clauses: Vec<usize>,
}

struct Choice {
    values: Vec<bool>,
}

struct Cegar {
    x: Solver,
    /// Selector in `y` per robustifiable clause.
    selectors: Vec<u32>,
}

enum Mode {
    Enumerate(Vec<Cluster>),
    Cegar(Box<Cegar>),
}

struct Engine<'a> {
    sem: Semantics,
    clauses: &'a [Clause],
    fixed: &'a Assignment,
    comp: Vec<usize>,
    universals: Vec<Var>,
    existentials: Vec<Var>,
    local: HashMap<Var, u32>,
    y: Solver,
    mode: Mode,
    last_model: Vec<(Var, bool)>,
}

impl<'a> Engine<'a> {
    fn new(
        sem: Semantics,
        clauses: &'a [Clause],
        fixed: &'a Assignment,
        comp: Vec<usize>,
        universals: Vec<Var>,
        existentials: Vec<Var>,
        enumeration_limit: u128,
    ) -> Engine<'a> {
        let local: HashMap<Var, u32> = universals
            .iter()
            .chain(&existentials)
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        let mut y = Solver::new(local.len());
        for &j in &comp {
            if let Residual::Ors(ors) = residual(&clauses[j], sem, |x| fixed.get(x)) {
                for or in ors {
                    let lits: Vec<SatLit> = or.iter().map(|&l| sat_lit(&local, l)).collect();
                    y.add_clause(&lits);
                }
            }
        }
        let mut engine = Engine {
            sem,
            clauses,
            fixed,
            comp,
            universals,
            existentials,
            local,
            y,
            mode: Mode::Enumerate(Vec::new()),
            last_model: Vec::new(),
        };
        engine.mode = engine.choose_mode(enumeration_limit);
        engine
    }

    fn universal_index(&self, v: Var) -> Option<usize> {
        self.local
            .get(&v)
            .map(|&i| i as usize)
            .filter(|&i| i < self.universals.len())
    }

    fn choose_mode(&mut self, enumeration_limit: u128) -> Mode {
        let n = self.universals.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &j in &self.comp {
            let us: Vec<usize> = self.clauses[j]
                .vars()
                .filter_map(|v| self.universal_index(v))
                .collect();
            for w in us.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut cluster_of: HashMap<usize, usize> = HashMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            let c = *cluster_of.entry(r).or_insert_with(|| {
                clusters.push(Cluster {
                    members: Vec::new(),
                    clauses: Vec::new(),
                });
                clusters.len() - 1
            });
            clusters[c].members.push(i);
        }
        for &j in &self.comp {
            if let Some(i) = self.clauses[j].vars().find_map(|v| self.universal_index(v)) {
                let c = cluster_of[&find(&mut parent, i)];
                clusters[c].clauses.push(j);
            }
        }

        let mut product: u128 = 1;
        let mut small = clusters.iter().all(|c| c.members.len() <= MAX_CLUSTER);
        if small {
            for c in &clusters {
                product = product.saturating_mul(self.choices(c, &[]).len() as u128);
                if product > enumeration_limit {
                    small = false;
                    break;
                }
            }
        }
        if small {
            Mode::Enumerate(clusters)
        } else {
            Mode::Cegar(Box::new(self.init_cegar()))
        }
    }

    /// Cluster assignments consistent with `prefix` whose residual is not
    /// implied by another one's, in lexicographic order.
    fn choices(&self, cluster: &Cluster, prefix: &[(usize, bool)]) -> Vec<Choice> {
        let k = cluster.members.len();
        let mut all: Vec<(Vec<bool>, Vec<Vec<Lit>>)> = Vec::new();
        'outer: for bits in 0u32..1 << k {
            let values: Vec<bool> = (0..k).map(|i| bits >> (k - 1 - i) & 1 == 1).collect();
            for &(u, b) in prefix {
                if let Some(pos) = cluster.members.iter().position(|&m| m == u) {
                    if values[pos] != b {
                        continue 'outer;
                    }
                }
            }
            let lookup = |x: Var| {
                self.fixed.get(x).or_else(|| {
                    let i = self.universal_index(x)?;
                    let pos = cluster.members.iter().position(|&m| m == i)?;
                    Some(values[pos])
                })
            };
            let mut ors = Vec::new();
            for &j in &cluster.clauses {
                if let Residual::Ors(o) = residual(&self.clauses[j], self.sem, lookup) {
                    ors.extend(o);
                }
            }
            all.push((values, canonical(ors)));
        }
        let mut kept = Vec::new();
        for i in 0..all.len() {
            let dominated = (0..all.len()).any(|j| {
                j != i
                    && implies(&all[j].1, &all[i].1)
                    && (j < i || !implies(&all[i].1, &all[j].1))
            });
            if !dominated {
                kept.push(Choice {
                    values: all[i].0.clone(),
                });
            }
        }
        kept
    }

    fn assumptions(&self, values: &[(usize, bool)]) -> Vec<SatLit> {
        values
            .iter()
            .map(|&(i, b)| mk_lit(i as u32, !b))
            .collect()
    }

    fn record_model(&mut self) {
        let nu = self.universals.len();
        self.last_model = self
            .existentials
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, self.y.model_value((nu + i) as u32)))
            .collect();
    }

    /// Some failing universal assignment extending `prefix` (pairs of
    /// universal index and value), or `None` if every such assignment extends.
    fn find_failing(
        &mut self,
        prefix: &[(usize, bool)],
        meter: &mut Meter,
    ) -> Result<Option<Vec<bool>>, OracleError> {
        match std::mem::replace(&mut self.mode, Mode::Enumerate(Vec::new())) {
            Mode::Enumerate(clusters) => {
                let result = self.enumerate(&clusters, prefix, meter);
                self.mode = Mode::Enumerate(clusters);
                result
            }
            Mode::Cegar(mut state) => {
                let result = self.cegar(&mut state, prefix, meter);
                self.mode = Mode::Cegar(state);
                result
            }
        }
    }

    fn enumerate(
        &mut self,
        clusters: &[Cluster],
        prefix: &[(usize, bool)],
        meter: &mut Meter,
    ) -> Result<Option<Vec<bool>>, OracleError> {
        let per: Vec<Vec<Choice>> = clusters.iter().map(|c| self.choices(c, prefix)).collect();
        let mut odometer = vec![0usize; clusters.len()];
        loop {
            meter.tick()?;
            let mut values = vec![false; self.universals.len()];
            for (c, cluster) in clusters.iter().enumerate() {
                for (pos, &m) in cluster.members.iter().enumerate() {
                    values[m] = per[c][odometer[c]].values[pos];
                }
            }
            let pairs: Vec<(usize, bool)> = values.iter().copied().enumerate().collect();
            let assumptions = self.assumptions(&pairs);
            if !self.y.solve(&assumptions, meter)? {
                return Ok(Some(values));
            }
            self.record_model();
            // Advance; the last cluster varies fastest.
            let mut c = clusters.len();
            loop {
                if c == 0 {
                    return Ok(None);
                }
                c -= 1;
                odometer[c] += 1;
                if odometer[c] < per[c].len() {
                    break;
                }
                odometer[c] = 0;
            }
        }
    }

    fn init_cegar(&mut self) -> Cegar {
        let nu = self.universals.len();
        let mut selectors = Vec::new();
        for &j in &self.comp.clone() {
            let c = &self.clauses[j];
            if !c.vars().any(|v| self.universal_index(v).is_some()) {
                continue;
            }
            let (has_true, has_false, ex) = self.non_universal_part(c, |_| None);
            let mut needed: Vec<Vec<SatLit>> = Vec::new();
            match self.sem {
                Semantics::Sat => {
                    if !has_true {
                        needed.push(ex.iter().map(|&l| sat_lit(&self.local, l)).collect());
                    }
                }
                Semantics::Nae => {
                    if !has_true {
                        needed.push(ex.iter().map(|&l| sat_lit(&self.local, l)).collect());
                    }
                    if !has_false {
                        needed.push(ex.iter().map(|&l| sat_lit(&self.local, !l)).collect());
                    }
                }
            }
            if needed.iter().any(Vec::is_empty) {
                continue;
            }
            let s = self.y.new_var();
            for mut lits in needed {
                lits.push(mk_lit(s, true));
                self.y.add_clause(&lits);
            }
            selectors.push(s);
        }
        Cegar {
            x: Solver::new(nu),
            selectors,
        }
    }

    /// Constants and fixed atoms contribute to the truth flags; unfixed
    /// existential literals are returned unless `value` decides them.
    fn non_universal_part(
        &self,
        c: &Clause,
        value: impl Fn(Var) -> Option<bool>,
    ) -> (bool, bool, Vec<Lit>) {
        let mut has_true = false;
        let mut has_false = false;
        let mut ex = Vec::new();
        for &a in c.atoms() {
            let known = match a {
                Atom::Const(b) => Some(b),
                Atom::Lit(l) => {
                    if self.universal_index(l.var()).is_some() {
                        continue;
                    }
                    self.fixed.get(l.var()).or_else(|| value(l.var())).map(|b| l.eval(b))
                }
            };
            match known {
                Some(true) => has_true = true,
                Some(false) => has_false = true,
                None => ex.push(a.lit().expect("literal")),
            }
        }
        (has_true, has_false, ex)
    }

    fn cegar(
        &mut self,
        state: &mut Cegar,
        prefix: &[(usize, bool)],
        meter: &mut Meter,
    ) -> Result<Option<Vec<bool>>, OracleError> {
        let nu = self.universals.len();
        let prefix_lits = self.assumptions(prefix);
        loop {
            meter.tick()?;
            if !state.x.solve(&prefix_lits, meter)? {
                return Ok(None);
            }
            let alpha: Vec<bool> = (0..nu as u32).map(|i| state.x.model_value(i)).collect();
            let pairs: Vec<(usize, bool)> = alpha.iter().copied().enumerate().collect();
            let base = self.assumptions(&pairs);
            if !self.y.solve(&base, meter)? {
                return Ok(Some(alpha));
            }
            self.robustify(&base, &state.selectors, meter)?;
            self.block(state);
        }
    }

    /// Re-solves under `base`, greedily keeping as many selector constraints
    /// as possible so the model covers more universal assignments.
    fn robustify(
        &mut self,
        base: &[SatLit],
        selectors: &[u32],
        meter: &mut Meter,
    ) -> Result<(), OracleError> {
        let mut all = base.to_vec();
        all.extend(selectors.iter().map(|&s| mk_lit(s, false)));
        if self.y.solve(&all, meter)? {
            self.record_model();
            return Ok(());
        }
        let mut accepted = base.to_vec();
        let mut found = false;
        for &s in selectors {
            accepted.push(mk_lit(s, false));
            if self.y.solve(&accepted, meter)? {
                self.record_model();
                found = true;
            } else {
                accepted.pop();
            }
        }
        if !found {
            let sat = self.y.solve(base, meter)?;
            debug_assert!(sat);
            self.record_model();
        }
        Ok(())
    }

    /// Adds the constraint "α falsifies some clause under the last model" to
    /// the universal solver.
    fn block(&mut self, state: &mut Cegar) {
        let model: HashMap<Var, bool> = self.last_model.iter().copied().collect();
        let mut triggers = Vec::new();
        for &j in &self.comp {
            let c = &self.clauses[j];
            let ulits: Vec<Lit> = c
                .lits()
                .filter(|l| self.universal_index(l.var()).is_some())
                .collect();
            if ulits.is_empty() {
                continue;
            }
            let (has_true, has_false, _) =
                self.non_universal_part(c, |v| Some(model.get(&v).copied().unwrap_or(false)));
            let cubes: Vec<Vec<Lit>> = match self.sem {
                Semantics::Sat if has_true => vec![],
                Semantics::Sat => vec![ulits.iter().map(|&l| !l).collect()],
                Semantics::Nae => match (has_true, has_false) {
                    (true, true) => vec![],
                    (true, false) => vec![ulits.clone()],
                    (false, true) => vec![ulits.iter().map(|&l| !l).collect()],
                    (false, false) => vec![ulits.clone(), ulits.iter().map(|&l| !l).collect()],
                },
            };
            for cube in cubes {
                if cube.iter().any(|&l| cube.contains(&!l)) {
                    continue;
                }
                let t = state.x.new_var();
                for &l in &cube {
                    let i = self.universal_index(l.var()).expect("universal") as u32;
                    state.x.add_clause(&[mk_lit(t, true), mk_lit(i, l.is_negated())]);
                }
                triggers.push(mk_lit(t, false));
            }
        }
        state.x.add_clause(&triggers);
    }

    fn lexicographic_min(
        &mut self,
        mut best: Vec<bool>,
        meter: &mut Meter,
    ) -> Result<Vec<bool>, OracleError> {
        let mut prefix: Vec<(usize, bool)> = Vec::new();
        for i in 0..self.universals.len() {
            prefix.push((i, false));
            if best[i] {
                match self.find_failing(&prefix, meter)? {
                    Some(b) => best = b,
                    None => prefix.last_mut().unwrap().1 = true,
                }
            }
        }
        Ok(best)
    }
}

fn sat_lit(local: &HashMap<Var, u32>, l: Lit) -> SatLit {
    mk_lit(local[&l.var()], l.is_negated())
}
