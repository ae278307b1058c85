//! Enforcer gadgets with machine-checkable extension contracts.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{
    Appearances, Assignment, Clause, FormulaError, Lit, QuantifiedFormula, Semantics, Var,
    VariableAllocator,
};
use crate::oracle::{decide_forall_exists_fixed, Budget, OracleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("unknown gadget `{0}`")]
    UnknownGadget(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GadgetKind {
    S,
    SUniversal,
    X2,
    E,
    Q1,
    Q3,
    EForall,
    NeAux,
    Eq,
    Ne,
    P1,
}

impl GadgetKind {
    pub const ALL: [GadgetKind; 11] = [
        GadgetKind::S,
        GadgetKind::SUniversal,
        GadgetKind::X2,
        GadgetKind::E,
        GadgetKind::Q1,
        GadgetKind::Q3,
        GadgetKind::EForall,
        GadgetKind::NeAux,
        GadgetKind::Eq,
        GadgetKind::Ne,
        GadgetKind::P1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GadgetKind::S => "S",
            GadgetKind::SUniversal => "S_u",
            GadgetKind::X2 => "x2",
            GadgetKind::E => "E",
            GadgetKind::Q1 => "Q1",
            GadgetKind::Q3 => "Q3",
            GadgetKind::EForall => "E_forall",
            GadgetKind::NeAux => "NE_aux",
            GadgetKind::Eq => "EQ",
            GadgetKind::Ne => "NE",
            GadgetKind::P1 => "P1",
        }
    }

    pub fn from_name(name: &str) -> Option<GadgetKind> {
        GadgetKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for GadgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Condition on the interface under which an extension exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    /// Some listed literal is true.
    SomeTrue(Vec<Lit>),
    IsTrue(Var),
    Equal(Var, Var),
    NotEqual(Var, Var),
    Always,
}

impl Predicate {
    /// Panics if an interface variable is unassigned.
    pub fn holds(&self, a: &Assignment) -> bool {
        match self {
            Predicate::SomeTrue(lits) => lits.iter().any(|l| l.eval(a.value(l.var()))),
            Predicate::IsTrue(x) => a.value(*x),
            Predicate::Equal(x, y) => a.value(*x) == a.value(*y),
            Predicate::NotEqual(x, y) => a.value(*x) != a.value(*y),
            Predicate::Always => true,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::SomeTrue(lits) => {
                let parts: Vec<String> = lits.iter().map(|l| format!("{l}=T")).collect();
                write!(f, "{}", parts.join(" or "))
            }
            Predicate::IsTrue(x) => write!(f, "{x}=T"),
            Predicate::Equal(x, y) => write!(f, "{x}={y}"),
            Predicate::NotEqual(x, y) => write!(f, "{x}!={y}"),
            Predicate::Always => f.write_str("always"),
        }
    }
}

/// "For every interface assignment: every assignment of the fresh universals
/// extends to the fresh existentials iff `predicate` holds."
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionContract {
    pub semantics: Semantics,
    pub predicate: Predicate,
}

/// Constructive witness rules for the universal gadgets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessRule {
    /// a = b = not u, c = d = not w.
    Q1 {
        u: Var,
        w: Var,
        a: Var,
        b: Var,
        c: Var,
        d: Var,
    },
    /// a = not u and not r, b = not w or not q.
    Q3 {
        u: Var,
        r: Var,
        w: Var,
        q: Var,
        a: Var,
        b: Var,
    },
    Constant(Vec<(Var, bool)>),
}

impl WitnessRule {
    /// Values of the gadget's existentials; universals read from `a`.
    pub fn apply(&self, a: &Assignment) -> Vec<(Var, bool)> {
        match *self {
            WitnessRule::Q1 { u, w, a: ea, b, c, d } => {
                let (nu, nw) = (!a.value(u), !a.value(w));
                vec![(ea, nu), (b, nu), (c, nw), (d, nw)]
            }
            WitnessRule::Q3 { u, r, w, q, a: ea, b } => vec![
                (ea, !a.value(u) && !a.value(r)),
                (b, !a.value(w) || !a.value(q)),
            ],
            WitnessRule::Constant(ref v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetInstance {
    pub kind: GadgetKind,
    pub clauses: Vec<Clause>,
    pub fresh_existentials: Vec<Var>,
    pub fresh_universals: Vec<Var>,
    pub interface: Vec<Var>,
    /// Interface variables that may be universal in the host formula.
    pub universal_interface: Vec<Var>,
    pub contract: ExtensionContract,
    /// Declared appearance counts of every variable inside the gadget.
    pub profile: Vec<(Var, Appearances)>,
    pub witness_rule: Option<WitnessRule>,
    /// Named variables (`a`, `u`, ...) in the notation of the definitions.
    pub roles: Vec<(&'static str, Var)>,
}

impl GadgetInstance {
    pub fn role(&self, name: &str) -> Option<Var> {
        self.roles.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }

    pub fn fresh_vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.fresh_universals.iter().chain(&self.fresh_existentials).copied()
    }

    /// The gadget as a stand-alone formula: fresh universals, then interface
    /// and fresh existentials.
    pub fn to_formula(&self) -> Result<QuantifiedFormula, FormulaError> {
        let mut exist = self.interface.clone();
        exist.extend(&self.fresh_existentials);
        QuantifiedFormula::new(
            self.fresh_universals.clone(),
            exist,
            self.clauses.clone(),
            self.contract.semantics,
        )
    }

    pub fn declared(&self, v: Var) -> Option<Appearances> {
        self.profile.iter().find(|(x, _)| *x == v).map(|&(_, a)| a)
    }
}

fn app(unnegated: usize, negated: usize) -> Appearances {
    Appearances { unnegated, negated }
}

/// Adds the literal occurrences of `lits` to `profile`.
fn count_into(profile: &mut Vec<(Var, Appearances)>, lits: &[Lit]) {
    for l in lits {
        let entry = match profile.iter_mut().find(|(v, _)| *v == l.var()) {
            Some(e) => e,
            None => {
                profile.push((l.var(), app(0, 0)));
                profile.last_mut().unwrap()
            }
        };
        if l.is_negated() {
            entry.1.negated += 1;
        } else {
            entry.1.unnegated += 1;
        }
    }
}

fn distinct_vars(lits: &[Lit]) -> Vec<Var> {
    let mut out: Vec<Var> = Vec::new();
    for l in lits {
        if !out.contains(&l.var()) {
            out.push(l.var());
        }
    }
    out
}

/// Merges a sub-gadget into `into`: clauses, fresh variables and the declared
/// profile of its fresh variables. Interface profiles are left to the caller.
fn absorb(into: &mut GadgetInstance, sub: GadgetInstance) {
    into.clauses.extend(sub.clauses);
    for (v, a) in sub.profile {
        if sub.fresh_existentials.contains(&v) || sub.fresh_universals.contains(&v) {
            into.profile.push((v, a));
        }
    }
    into.fresh_existentials.extend(sub.fresh_existentials);
    into.fresh_universals.extend(sub.fresh_universals);
}

fn empty(kind: GadgetKind, semantics: Semantics, predicate: Predicate) -> GadgetInstance {
    GadgetInstance {
        kind,
        clauses: Vec::new(),
        fresh_existentials: Vec::new(),
        fresh_universals: Vec::new(),
        interface: Vec::new(),
        universal_interface: Vec::new(),
        contract: ExtensionContract {
            semantics,
            predicate,
        },
        profile: Vec::new(),
        witness_rule: None,
        roles: Vec::new(),
    }
}

fn s_clauses(l: [Lit; 3], a: Var, b: Var, c: Var) -> Vec<Clause> {
    vec![
        Clause::of([l[0], a.neg(), b.pos()]),
        Clause::of([l[1], b.neg(), c.pos()]),
        Clause::of([l[2], a.pos(), c.neg()]),
        Clause::of([a.pos(), b.pos(), c.pos()]),
        Clause::of([a.neg(), b.neg(), c.neg()]),
    ]
}

/// S(l1, l2, l3): satisfiable iff some li is true.
pub fn build_s(l1: Lit, l2: Lit, l3: Lit, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let lits = [l1, l2, l3];
    let [a, b, c] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::S, Semantics::Sat, Predicate::SomeTrue(lits.to_vec()));
    g.clauses = s_clauses(lits, a, b, c);
    g.fresh_existentials = vec![a, b, c];
    g.interface = distinct_vars(&lits);
    count_into(&mut g.profile, &lits);
    g.profile.extend([(a, app(2, 2)), (b, app(2, 2)), (c, app(2, 2))]);
    g.roles = vec![("a", a), ("b", b), ("c", c)];
    Ok(g)
}

/// S with the variable of `l1` allowed to be universal.
pub fn build_s_universal(
    l1: Lit,
    l2: Lit,
    l3: Lit,
    alloc: &mut VariableAllocator,
) -> Result<GadgetInstance, FormulaError> {
    let mut g = build_s(l1, l2, l3, alloc)?;
    g.kind = GadgetKind::SUniversal;
    g.universal_interface = vec![l1.var()];
    Ok(g)
}

/// x^(2) = S(x, y, y) S(x, not y, not y): satisfiable iff x is true.
pub fn build_x2(x: Var, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let y = alloc.fresh()?;
    let mut g = empty(GadgetKind::X2, Semantics::Sat, Predicate::IsTrue(x));
    g.interface = vec![x];
    g.fresh_existentials.push(y);
    g.profile.push((x, app(2, 0)));
    g.profile.push((y, app(2, 2)));
    g.roles = vec![("y", y)];
    absorb(&mut g, build_s(x.pos(), y.pos(), y.pos(), alloc)?);
    absorb(&mut g, build_s(x.pos(), y.neg(), y.neg(), alloc)?);
    Ok(g)
}

/// E(x): 25 clauses, 18 fresh variables; satisfiable iff x is true. The first
/// fresh variable is the enforcer variable `u`.
pub fn build_e(x: Var, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [u, y, z] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::E, Semantics::Sat, Predicate::IsTrue(x));
    g.interface = vec![x];
    g.fresh_existentials = vec![u, y, z];
    g.profile = vec![(x, app(2, 1)), (u, app(2, 2)), (y, app(2, 2)), (z, app(2, 2))];
    g.roles = vec![("u", u), ("y", y), ("z", z)];
    for lits in [
        [x.pos(), y.pos(), y.pos()],
        [x.pos(), y.neg(), y.neg()],
        [x.neg(), z.pos(), z.neg()],
        [z.pos(), z.neg(), u.pos()],
        [u.pos(), u.neg(), u.neg()],
    ] {
        absorb(&mut g, build_s(lits[0], lits[1], lits[2], alloc)?);
    }
    Ok(g)
}

/// Q^1 over universals u, v, w, q, r and existentials a, b, c, d.
pub fn build_q1(alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [u, v, w, q, r, a, b, c, d] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::Q1, Semantics::Sat, Predicate::Always);
    g.clauses = vec![
        Clause::of([u.pos(), v.pos(), a.pos()]),
        Clause::of([u.pos(), v.pos(), b.pos()]),
        Clause::of([u.neg(), v.neg(), a.neg()]),
        Clause::of([u.neg(), v.neg(), b.neg()]),
        Clause::of([a.pos(), b.neg(), r.pos()]),
        Clause::of([a.neg(), b.pos(), r.pos()]),
        Clause::of([c.pos(), d.neg(), r.neg()]),
        Clause::of([c.neg(), d.pos(), r.neg()]),
        Clause::of([w.pos(), q.pos(), c.pos()]),
        Clause::of([w.pos(), q.pos(), d.pos()]),
        Clause::of([w.neg(), q.neg(), c.neg()]),
        Clause::of([w.neg(), q.neg(), d.neg()]),
    ];
    g.fresh_universals = vec![u, v, w, q, r];
    g.fresh_existentials = vec![a, b, c, d];
    g.profile = [u, v, w, q, r, a, b, c, d].map(|x| (x, app(2, 2))).to_vec();
    g.witness_rule = Some(WitnessRule::Q1 { u, w, a, b, c, d });
    g.roles = vec![
        ("u", u),
        ("v", v),
        ("w", w),
        ("q", q),
        ("r", r),
        ("a", a),
        ("b", b),
        ("c", c),
        ("d", d),
    ];
    Ok(g)
}

/// Q^3 over universals u, v, w, q, r and existentials a, b.
pub fn build_q3(alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [u, v, w, q, r, a, b] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::Q3, Semantics::Sat, Predicate::Always);
    g.clauses = vec![
        Clause::of([u.pos(), r.pos(), a.pos()]),
        Clause::of([u.neg(), b.neg(), a.neg()]),
        Clause::of([v.pos(), q.pos(), b.pos()]),
        Clause::of([v.neg(), r.neg(), a.neg()]),
        Clause::of([w.pos(), a.pos(), b.pos()]),
        Clause::of([w.neg(), q.neg(), b.neg()]),
    ];
    g.fresh_universals = vec![u, v, w, q, r];
    g.fresh_existentials = vec![a, b];
    g.profile = [u, v, w, q, r].map(|x| (x, app(1, 1))).to_vec();
    g.profile.extend([(a, app(2, 2)), (b, app(2, 2))]);
    g.witness_rule = Some(WitnessRule::Q3 { u, r, w, q, a, b });
    g.roles = vec![
        ("u", u),
        ("v", v),
        ("w", w),
        ("q", q),
        ("r", r),
        ("a", a),
        ("b", b),
    ];
    Ok(g)
}

/// E_forall(d) = (d or u or v)(d or not u or not v) with fresh universals u, v.
pub fn build_e_forall(d: Var, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [u, v] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::EForall, Semantics::Sat, Predicate::IsTrue(d));
    g.clauses = vec![
        Clause::of([d.pos(), u.pos(), v.pos()]),
        Clause::of([d.pos(), u.neg(), v.neg()]),
    ];
    g.interface = vec![d];
    g.fresh_universals = vec![u, v];
    g.profile = vec![(d, app(2, 0)), (u, app(1, 1)), (v, app(1, 1))];
    g.roles = vec![("u", u), ("v", v)];
    Ok(g)
}

/// NE_aux(x, y): nae-satisfiable iff x != y.
pub fn build_ne_aux(x: Var, y: Var, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [a, b, u, v, w] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::NeAux, Semantics::Nae, Predicate::NotEqual(x, y));
    g.clauses = vec![
        Clause::of([x.pos(), y.pos(), a.pos()]),
        Clause::of([x.pos(), y.pos(), b.pos()]),
        Clause::of([a.pos(), b.pos(), u.pos()]),
        Clause::of([a.pos(), b.pos(), v.pos()]),
        Clause::of([a.pos(), b.pos(), w.pos()]),
        Clause::of([u.pos(), v.pos(), w.pos()]),
    ];
    g.interface = vec![x, y];
    g.universal_interface = vec![x];
    g.fresh_existentials = vec![a, b, u, v, w];
    g.profile = vec![
        (x, app(2, 0)),
        (y, app(2, 0)),
        (a, app(4, 0)),
        (b, app(4, 0)),
        (u, app(2, 0)),
        (v, app(2, 0)),
        (w, app(2, 0)),
    ];
    g.roles = vec![("a", a), ("b", b), ("u", u), ("v", v), ("w", w)];
    Ok(g)
}

/// EQ(x, y): nae-satisfiable iff x = y.
pub fn build_eq(x: Var, y: Var, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [p, q, r] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::Eq, Semantics::Nae, Predicate::Equal(x, y));
    g.interface = vec![x, y];
    g.universal_interface = vec![x];
    g.fresh_existentials = vec![p, q, r];
    g.profile = vec![
        (x, app(1, 0)),
        (y, app(1, 0)),
        (p, app(4, 0)),
        (q, app(4, 0)),
        (r, app(4, 0)),
    ];
    g.roles = vec![("p", p), ("q", q), ("r", r)];
    absorb(&mut g, build_ne_aux(p, q, alloc)?);
    absorb(&mut g, build_ne_aux(p, r, alloc)?);
    g.clauses.push(Clause::of([x.pos(), q.pos(), r.pos()]));
    g.clauses.push(Clause::of([y.pos(), q.pos(), r.pos()]));
    Ok(g)
}

/// NE(x, y): nae-satisfiable iff x != y.
pub fn build_ne(x: Var, y: Var, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [p, q] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::Ne, Semantics::Nae, Predicate::NotEqual(x, y));
    g.interface = vec![x, y];
    g.universal_interface = vec![x];
    g.fresh_existentials = vec![p, q];
    g.profile = vec![(x, app(1, 0)), (y, app(1, 0)), (p, app(3, 0)), (q, app(3, 0))];
    g.roles = vec![("p", p), ("q", q)];
    absorb(&mut g, build_eq(x, p, alloc)?);
    absorb(&mut g, build_eq(y, q, alloc)?);
    absorb(&mut g, build_ne_aux(p, q, alloc)?);
    Ok(g)
}

/// P1(x): every value of x extends; each fresh variable appears four times.
pub fn build_p1(x: Var, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    let [a, b, c, d, e] = alloc.fresh_array()?;
    let mut g = empty(GadgetKind::P1, Semantics::Nae, Predicate::Always);
    g.clauses = [
        [x, a, b],
        [a, c, d],
        [a, b, e],
        [a, d, e],
        [b, c, d],
        [b, c, e],
        [c, d, e],
    ]
    .into_iter()
    .map(|vs| Clause::of(vs.map(Var::pos)))
    .collect();
    g.interface = vec![x];
    g.universal_interface = vec![x];
    g.fresh_existentials = vec![a, b, c, d, e];
    g.profile = vec![(x, app(1, 0))];
    g.profile.extend([a, b, c, d, e].map(|v| (v, app(4, 0))));
    g.witness_rule = Some(WitnessRule::Constant(vec![
        (a, true),
        (b, false),
        (c, true),
        (d, false),
        (e, true),
    ]));
    g.roles = vec![("a", a), ("b", b), ("c", c), ("d", d), ("e", e)];
    Ok(g)
}

/// Builds a catalog gadget on freshly allocated interface variables.
pub fn build_named(kind: GadgetKind, alloc: &mut VariableAllocator) -> Result<GadgetInstance, FormulaError> {
    match kind {
        GadgetKind::S | GadgetKind::SUniversal => {
            let [x1, x2, x3] = alloc.fresh_array()?;
            let f = if kind == GadgetKind::S { build_s } else { build_s_universal };
            f(x1.pos(), x2.pos(), x3.pos(), alloc)
        }
        GadgetKind::X2 => {
            let x = alloc.fresh()?;
            build_x2(x, alloc)
        }
        GadgetKind::E => {
            let x = alloc.fresh()?;
            build_e(x, alloc)
        }
        GadgetKind::Q1 => build_q1(alloc),
        GadgetKind::Q3 => build_q3(alloc),
        GadgetKind::EForall => {
            let d = alloc.fresh()?;
            build_e_forall(d, alloc)
        }
        GadgetKind::NeAux | GadgetKind::Eq | GadgetKind::Ne => {
            let [x, y] = alloc.fresh_array()?;
            match kind {
                GadgetKind::NeAux => build_ne_aux(x, y, alloc),
                GadgetKind::Eq => build_eq(x, y, alloc),
                _ => build_ne(x, y, alloc),
            }
        }
        GadgetKind::P1 => {
            let x = alloc.fresh()?;
            build_p1(x, alloc)
        }
    }
}

pub fn catalog() -> Result<Vec<GadgetInstance>, FormulaError> {
    GadgetKind::ALL
        .into_iter()
        .map(|k| build_named(k, &mut VariableAllocator::starting_at(1)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContractMismatch {
    /// Interface and universal values of the failing case.
    pub case: Assignment,
    pub expected: bool,
    pub found: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContractReport {
    pub gadget: GadgetKind,
    pub predicate: String,
    /// Interface times universal assignments checked.
    pub cases: usize,
    pub mismatch: Option<ContractMismatch>,
}

impl ContractReport {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Checks the contract on every interface and fresh-universal assignment.
/// For a fixed interface assignment the predicate must hold iff every
/// universal case has an existential extension. The first disagreeing case
/// (lexicographic, interface first) is reported.
pub fn verify_contract(gadget: &GadgetInstance, budget: Budget) -> Result<ContractReport, GadgetError> {
    let formula = gadget.to_formula()?;
    let ni = gadget.interface.len();
    let nu = gadget.fresh_universals.len();
    let mut cases = 0;
    for ibits in 0u32..1 << ni {
        let mut interface = Assignment::new();
        for (k, &x) in gadget.interface.iter().enumerate() {
            interface.set(x, ibits >> (ni - 1 - k) & 1 == 1);
        }
        let expected = gadget.contract.predicate.holds(&interface);
        for ubits in 0u32..1 << nu {
            let mut case = interface.clone();
            for (k, &x) in gadget.fresh_universals.iter().enumerate() {
                case.set(x, ubits >> (nu - 1 - k) & 1 == 1);
            }
            cases += 1;
            let extends = decide_forall_exists_fixed(&formula, &case, budget)?.is_yes();
            // A false predicate only needs one failing universal case.
            if extends != expected && (expected || ubits + 1 == 1 << nu) {
                return Ok(ContractReport {
                    gadget: gadget.kind,
                    predicate: gadget.contract.predicate.to_string(),
                    cases,
                    mismatch: Some(ContractMismatch {
                        case,
                        expected,
                        found: extends,
                    }),
                });
            }
            if !expected && !extends {
                // Contract satisfied for this interface; skip remaining cases.
                cases += (1usize << nu) - 1 - ubits as usize;
                break;
            }
        }
    }
    Ok(ContractReport {
        gadget: gadget.kind,
        predicate: gadget.contract.predicate.to_string(),
        cases,
        mismatch: None,
    })
}
