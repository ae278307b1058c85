//! Polynomial-time reductions between the restricted problem classes.
//!
//! Every reduction is a chain of [`Stage`]s. A stage records its source and
//! target formulas, a trace of the construction, a size bound, and three
//! witness maps: `lift` picks target universal values for a source universal
//! assignment, `forward` turns a satisfying source assignment into a
//! satisfying target assignment (gadget internals are completed by a solver
//! call with everything else fixed), and `backward` reads a source assignment
//! off a satisfying target assignment.

mod balanced;
mod monotone;
mod nae;
mod sat3;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{
    evaluate_matrix, validate_class, Assignment, Atom, Clause, ClassSpec, FormulaError, Lit,
    Normalized, QuantifiedFormula, Semantics, Var, VariableAllocator,
};
use crate::gadgets::{GadgetInstance, WitnessRule};
use crate::oracle::{decide_forall_exists_fixed, find_extension, Budget, OracleError};

pub use balanced::{balanced_1122_to_112x, balanced_2222_to_1122, TVariant};
pub use monotone::{monotone14_to_monotone13_linear, nae_to_monotone_14};
pub use nae::{balance_q1, balance_q3, berman_expand, normalize_nae, reduce_to_balanced_2222, universalize_nae};
pub use sat3::{
    normalize_polarity, polarity_normalization, sat3_bounded_to_forallexists,
    strip_universal_literals, strip_universals_route, AeVariant, Stripped,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("source is a no-instance: clause {clause_index} can never hold")]
    SourceIsNo { clause_index: usize },
    #[error("{route}: precondition violated: {detail}")]
    Precondition { route: &'static str, detail: String },
    #[error("{route}: input is not in class {class}:\n{report}")]
    ClassViolation {
        route: &'static str,
        class: String,
        report: String,
    },
    #[error("{route}: target has {clauses} clauses, above the bound {limit}")]
    BoundExceeded {
        route: &'static str,
        clauses: usize,
        limit: usize,
    },
    #[error("{route}: forward witness could not be completed")]
    WitnessCompletion { route: &'static str },
    #[error("unknown route `{0}`")]
    UnknownRoute(String),
}

/// Where a target variable's value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Src {
    /// The value of a variable, negated if the flag is set.
    Var(Var, bool),
    Const(bool),
}

/// A copy map plus gadget witness rules evaluated on the partial result.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarMap {
    pub entries: Vec<(Var, Src)>,
    pub rules: Vec<WitnessRule>,
}

impl VarMap {
    fn identity(vars: impl IntoIterator<Item = Var>) -> VarMap {
        VarMap {
            entries: vars.into_iter().map(|v| (v, Src::Var(v, false))).collect(),
            rules: Vec::new(),
        }
    }

    fn copy(&mut self, to: Var, from: Var, negate: bool) {
        self.entries.push((to, Src::Var(from, negate)));
    }

    fn constant(&mut self, to: Var, value: bool) {
        self.entries.push((to, Src::Const(value)));
    }

    /// Values for the mapped variables; entries whose source is unassigned
    /// are skipped. Rules read from `context` extended by the copied values.
    fn apply(&self, from: &Assignment, context: &Assignment) -> Assignment {
        let mut out = Assignment::new();
        for &(to, src) in &self.entries {
            match src {
                Src::Var(s, neg) => {
                    if let Some(b) = from.get(s) {
                        out.set(to, b ^ neg);
                    }
                }
                Src::Const(b) => out.set(to, b),
            }
        }
        if !self.rules.is_empty() {
            let mut ctx = context.clone();
            ctx.extend_from(&out);
            for r in &self.rules {
                for (v, b) in r.apply(&ctx) {
                    out.set(v, b);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub name: String,
    pub clauses: usize,
    pub universals: usize,
    pub existentials: usize,
    /// Origin of every variable introduced by the step.
    pub provenance: Vec<(Var, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SizeBound {
    pub expression: String,
    pub limit: usize,
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub route: &'static str,
    pub source: QuantifiedFormula,
    pub target: QuantifiedFormula,
    pub trace: Vec<TraceStep>,
    pub bound: SizeBound,
    pub lift: VarMap,
    pub forward: VarMap,
    pub backward: VarMap,
    /// Set when the stage only preserves the verdict at one source universal
    /// assignment (the one making every universal literal false), not at
    /// every assignment.
    pub adversary: Option<Assignment>,
}

impl Stage {
    fn lift(&self, source_universals: &Assignment) -> Assignment {
        self.lift.apply(source_universals, &Assignment::new())
    }

    fn forward(&self, source: &Assignment) -> Result<Assignment, ReductionError> {
        let mut partial = self.lift(&source.restrict(self.source.universals()));
        let values = self.forward.apply(source, &partial);
        partial.extend_from(&values);
        complete(&self.target, partial).ok_or(ReductionError::WitnessCompletion { route: self.route })
    }

    fn backward(&self, target: &Assignment) -> Assignment {
        self.backward.apply(target, &Assignment::new())
    }
}

/// Fills the unassigned target variables, keeping everything assigned fixed.
fn complete(target: &QuantifiedFormula, partial: Assignment) -> Option<Assignment> {
    let fixed = Assignment::from_pairs(
        partial.iter().filter(|&(v, _)| target.quantifier(v).is_some()),
    );
    let rest = find_extension(target, &fixed, Budget::default()).ok()??;
    let mut out = fixed;
    out.extend_from(&rest);
    Some(out)
}

/// Output of a reduction route: a chain of stages.
#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub route: String,
    pub stages: Vec<Stage>,
    /// Class the final target is declared to be in.
    pub target_class: Option<String>,
}

impl ReductionResult {
    fn single(stage: Stage, class: Option<&str>) -> ReductionResult {
        ReductionResult {
            route: stage.route.to_string(),
            stages: vec![stage],
            target_class: class.map(str::to_string),
        }
    }

    pub fn source(&self) -> &QuantifiedFormula {
        &self.stages[0].source
    }

    pub fn target(&self) -> &QuantifiedFormula {
        &self.stages.last().expect("at least one stage").target
    }

    /// Appends `next`, whose source must be this result's target.
    pub fn then(mut self, next: ReductionResult) -> ReductionResult {
        assert_eq!(self.target(), next.source(), "stages do not chain");
        self.route = format!("{} > {}", self.route, next.route);
        self.stages.extend(next.stages);
        self.target_class = next.target_class;
        self
    }

    pub fn trace(&self) -> impl Iterator<Item = &TraceStep> {
        self.stages.iter().flat_map(|s| &s.trace)
    }

    pub fn lift_universals(&self, source_universals: &Assignment) -> Assignment {
        self.stages
            .iter()
            .fold(source_universals.clone(), |a, s| s.lift(&a))
    }

    /// A satisfying source assignment (universals included) to a satisfying
    /// target assignment whose universals are the lifted ones.
    pub fn forward_witness(&self, source: &Assignment) -> Result<Assignment, ReductionError> {
        self.stages.iter().try_fold(source.clone(), |a, s| s.forward(&a))
    }

    /// A satisfying target assignment to a source assignment. Source
    /// universals that the target does not determine get arbitrary values.
    pub fn backward_witness(&self, target: &Assignment) -> Assignment {
        self.stages
            .iter()
            .rev()
            .fold(target.clone(), |a, s| s.backward(&a))
    }

    pub fn class_spec(&self) -> Option<ClassSpec> {
        self.target_class.as_deref().and_then(ClassSpec::named)
    }

    pub fn size_bounds(&self) -> impl Iterator<Item = (&'static str, &SizeBound)> {
        self.stages.iter().map(|s| (s.route, &s.bound))
    }
}

impl fmt::Display for ReductionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "route {}", self.route)?;
        for s in self.trace() {
            writeln!(
                f,
                "  {:<32} clauses={} universals={} existentials={}",
                s.name, s.clauses, s.universals, s.existentials
            )?;
        }
        Ok(())
    }
}

/// Accumulates a target formula.
struct Builder {
    route: &'static str,
    universals: Vec<Var>,
    existentials: Vec<Var>,
    clauses: Vec<Clause>,
    alloc: VariableAllocator,
    provenance: Vec<(Var, String)>,
    trace: Vec<TraceStep>,
}

impl Builder {
    fn new(route: &'static str, alloc: &VariableAllocator) -> Builder {
        Builder {
            route,
            universals: Vec::new(),
            existentials: Vec::new(),
            clauses: Vec::new(),
            alloc: alloc.clone(),
            provenance: Vec::new(),
            trace: Vec::new(),
        }
    }

    fn fresh(&mut self, origin: impl Into<String>) -> Result<Var, FormulaError> {
        let v = self.alloc.fresh()?;
        self.provenance.push((v, origin.into()));
        Ok(v)
    }

    fn fresh_universal(&mut self, origin: impl Into<String>) -> Result<Var, FormulaError> {
        let v = self.fresh(origin)?;
        self.universals.push(v);
        Ok(v)
    }

    fn fresh_existential(&mut self, origin: impl Into<String>) -> Result<Var, FormulaError> {
        let v = self.fresh(origin)?;
        self.existentials.push(v);
        Ok(v)
    }

    /// Runs a gadget builder on the internal allocator and adds the result.
    fn gadget(
        &mut self,
        tag: &str,
        build: impl FnOnce(&mut VariableAllocator) -> Result<GadgetInstance, FormulaError>,
    ) -> Result<GadgetInstance, FormulaError> {
        let g = build(&mut self.alloc)?;
        self.clauses.extend(g.clauses.iter().cloned());
        self.universals.extend(&g.fresh_universals);
        self.existentials.extend(&g.fresh_existentials);
        for v in g.fresh_vars() {
            let role = g
                .roles
                .iter()
                .find(|&&(_, r)| r == v)
                .map(|&(n, _)| n)
                .unwrap_or("internal");
            self.provenance.push((v, format!("{tag} {role}")));
        }
        Ok(g)
    }

    fn step(&mut self, name: impl Into<String>) {
        self.trace.push(TraceStep {
            name: name.into(),
            clauses: self.clauses.len(),
            universals: self.universals.len(),
            existentials: self.existentials.len(),
            provenance: std::mem::take(&mut self.provenance),
        });
    }

    fn finish(
        self,
        source: &QuantifiedFormula,
        semantics: Semantics,
        bound: SizeBound,
        maps: Maps,
        alloc: &mut VariableAllocator,
    ) -> Result<Stage, ReductionError> {
        let target = QuantifiedFormula::new(self.universals, self.existentials, self.clauses, semantics)?;
        *alloc = self.alloc;
        make_stage(self.route, source, target, self.trace, bound, maps)
    }
}

fn make_stage(
    route: &'static str,
    source: &QuantifiedFormula,
    target: QuantifiedFormula,
    trace: Vec<TraceStep>,
    bound: SizeBound,
    maps: Maps,
) -> Result<Stage, ReductionError> {
    if target.matrix().len() > bound.limit {
        return Err(ReductionError::BoundExceeded {
            route,
            clauses: target.matrix().len(),
            limit: bound.limit,
        });
    }
    Ok(Stage {
        route,
        source: source.clone(),
        target,
        trace,
        bound,
        lift: maps.lift,
        forward: maps.forward,
        backward: maps.backward,
        adversary: None,
    })
}

fn step_of(name: &str, f: &QuantifiedFormula) -> TraceStep {
    TraceStep {
        name: name.to_string(),
        clauses: f.matrix().len(),
        universals: f.universals().len(),
        existentials: f.existentials().len(),
        provenance: Vec::new(),
    }
}

fn clause(lits: &[Lit]) -> Result<Clause, FormulaError> {
    Clause::new(lits.iter().map(|&l| Atom::from(l)).collect())
}

/// Literals of a clause that must be constant-free.
fn lits_of(route: &'static str, c: &Clause) -> Result<Vec<Lit>, ReductionError> {
    if c.has_constant() {
        return Err(ReductionError::Precondition {
            route,
            detail: format!("clause {c:?} contains a constant"),
        });
    }
    Ok(c.lits().collect())
}

fn total_literals(f: &QuantifiedFormula) -> usize {
    f.matrix().iter().map(Clause::len).sum()
}

#[derive(Default)]
struct Maps {
    lift: VarMap,
    forward: VarMap,
    backward: VarMap,
}

fn require_class(route: &'static str, f: &QuantifiedFormula, class: &str) -> Result<(), ReductionError> {
    let spec = ClassSpec::named(class).expect("known class");
    let report = validate_class(f, &spec);
    if report.passed() {
        Ok(())
    } else {
        Err(ReductionError::ClassViolation {
            route,
            class: class.to_string(),
            report: report.to_string(),
        })
    }
}

fn bound(expression: &str, limit: usize) -> SizeBound {
    SizeBound {
        expression: expression.to_string(),
        limit,
    }
}

/// Position of every literal of `vars` in clause-then-atom order, with its
/// running index among same-polarity appearances of the same variable.
struct Occurrence {
    clause: usize,
    atom: usize,
    var: Var,
    negated: bool,
    /// 0-based index among appearances with the same polarity.
    polarity_index: usize,
    /// 0-based index among all appearances.
    index: usize,
}

fn occurrences(clauses: &[Clause], wanted: impl Fn(Var) -> bool) -> Vec<Occurrence> {
    let mut counts: BTreeMap<Var, (usize, usize)> = BTreeMap::new();
    let mut out = Vec::new();
    for (j, c) in clauses.iter().enumerate() {
        for (k, a) in c.atoms().iter().enumerate() {
            let Some(l) = a.lit() else { continue };
            if !wanted(l.var()) {
                continue;
            }
            let e = counts.entry(l.var()).or_default();
            let polarity_index = if l.is_negated() { e.1 } else { e.0 };
            out.push(Occurrence {
                clause: j,
                atom: k,
                var: l.var(),
                negated: l.is_negated(),
                polarity_index,
                index: e.0 + e.1,
            });
            if l.is_negated() {
                e.1 += 1;
            } else {
                e.0 += 1;
            }
        }
    }
    out
}

/// Per-variable appearance counts and copy names for a "k-th appearance"
/// split.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SplitPlan {
    /// (unnegated, negated) per split variable.
    pub counts: BTreeMap<Var, (usize, usize)>,
    /// Copies per split variable, in the order the construction names them.
    pub copies: BTreeMap<Var, Vec<Var>>,
}

impl SplitPlan {
    pub fn appearances(&self, v: Var) -> usize {
        self.counts.get(&v).map_or(0, |&(u, n)| u + n)
    }
}

/// Route names accepted by [`run_route`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    NaeToB2222,
    B2222ToB1122,
    B1122To1121,
    B1122To1112,
    Sat3ToAe(AeVariant),
    NaeToMono14,
    Mono14ToMono13,
    StripUniversals,
}

impl Route {
    pub const NAMES: &'static [&'static str] = &[
        "nae-to-b2222",
        "b2222-to-b1122",
        "b1122-to-1121",
        "b1122-to-1112",
        "3sat3-to-ae:1021",
        "3sat3-to-ae:0121",
        "3sat3-to-ae:1012",
        "3sat3-to-ae:0112",
        "nae-to-mono14",
        "mono14-to-mono13",
        "strip-universals",
    ];

    pub fn parse(name: &str) -> Result<Route, ReductionError> {
        Ok(match name {
            "nae-to-b2222" => Route::NaeToB2222,
            "b2222-to-b1122" => Route::B2222ToB1122,
            "b1122-to-1121" => Route::B1122To1121,
            "b1122-to-1112" => Route::B1122To1112,
            "nae-to-mono14" => Route::NaeToMono14,
            "mono14-to-mono13" => Route::Mono14ToMono13,
            "strip-universals" => Route::StripUniversals,
            _ => match name.strip_prefix("3sat3-to-ae:").and_then(AeVariant::parse) {
                Some(v) => Route::Sat3ToAe(v),
                None => return Err(ReductionError::UnknownRoute(name.to_string())),
            },
        })
    }

    pub fn name(self) -> String {
        match self {
            Route::NaeToB2222 => "nae-to-b2222".into(),
            Route::B2222ToB1122 => "b2222-to-b1122".into(),
            Route::B1122To1121 => "b1122-to-1121".into(),
            Route::B1122To1112 => "b1122-to-1112".into(),
            Route::Sat3ToAe(v) => format!("3sat3-to-ae:{}", v.code()),
            Route::NaeToMono14 => "nae-to-mono14".into(),
            Route::Mono14ToMono13 => "mono14-to-mono13".into(),
            Route::StripUniversals => "strip-universals".into(),
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Runs a route with a fresh allocator placed after the source's variables.
/// The 3-SAT-(3) route normalizes polarity first.
pub fn run_route(route: Route, source: &QuantifiedFormula) -> Result<ReductionResult, ReductionError> {
    let mut alloc = VariableAllocator::after(source);
    match route {
        Route::NaeToB2222 => reduce_to_balanced_2222(source, &mut alloc),
        Route::B2222ToB1122 => balanced_2222_to_1122(source, &mut alloc),
        Route::B1122To1121 => balanced_1122_to_112x(source, TVariant::T21, &mut alloc),
        Route::B1122To1112 => balanced_1122_to_112x(source, TVariant::T12, &mut alloc),
        Route::Sat3ToAe(v) => {
            let pre = polarity_normalization(source)?;
            let next = sat3_bounded_to_forallexists(pre.target(), v, &mut alloc)?;
            Ok(pre.then(next))
        }
        Route::NaeToMono14 => nae_to_monotone_14(source, &mut alloc),
        Route::Mono14ToMono13 => monotone14_to_monotone13_linear(source, &mut alloc),
        Route::StripUniversals => strip_universals_route(source),
    }
}

/// Outcome of the per-assignment witness check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessCheck {
    pub source_extends: bool,
    pub target_extends: bool,
    /// Forward map produced a satisfying target assignment (when the source
    /// extends).
    pub forward_ok: Option<bool>,
    /// Backward map produced a satisfying source assignment (when the target
    /// extends).
    pub backward_ok: Option<bool>,
}

impl WitnessCheck {
    pub fn passed(&self) -> bool {
        self.source_extends == self.target_extends
            && self.forward_ok != Some(false)
            && self.backward_ok != Some(false)
    }
}

/// For one source universal assignment: extends in the source iff the lifted
/// assignment extends in the target, and both witness maps round-trip.
pub fn check_witness_maps(
    result: &ReductionResult,
    source_universals: &Assignment,
    budget: Budget,
) -> Result<WitnessCheck, ReductionError> {
    let source = result.source();
    let target = result.target();
    let alpha = match &result.stages[0].adversary {
        Some(a) => a.clone(),
        None => source_universals.restrict(source.universals()),
    };
    let lifted = result.lift_universals(&alpha);

    let source_ext = find_extension(source, &alpha, budget)?;
    let forward_ok = match &source_ext {
        None => None,
        Some(w) => {
            let mut total = alpha.clone();
            total.extend_from(w);
            Some(match result.forward_witness(&total) {
                Ok(t) => {
                    t.covers(&target.vars().collect::<Vec<_>>())
                        && t.restrict(target.universals()) == lifted
                        && evaluate_matrix(target.matrix(), &t, target.semantics())?
                }
                Err(ReductionError::WitnessCompletion { .. }) => false,
                Err(e) => return Err(e),
            })
        }
    };

    let target_ext = find_extension(target, &lifted, budget)?;
    let backward_ok = match &target_ext {
        None => None,
        Some(w) => {
            let mut total = lifted.clone();
            total.extend_from(w);
            let mut s = result.backward_witness(&total);
            s.extend_from(&alpha);
            Some(s.covers(&source.vars().collect::<Vec<_>>()) && evaluate_matrix(source.matrix(), &s, source.semantics())?)
        }
    };
    Ok(WitnessCheck {
        source_extends: source_ext.is_some(),
        target_extends: target_ext.is_some(),
        forward_ok,
        backward_ok,
    })
}

/// Shorthand used by the routes that start from NAE input.
fn normalized_or_no(f: &QuantifiedFormula) -> Result<(QuantifiedFormula, Vec<usize>), ReductionError> {
    match crate::formula::normalize_degenerate_clauses(f)? {
        Normalized::VerdictNo { clause_index } => Err(ReductionError::SourceIsNo { clause_index }),
        Normalized::Formula { formula, dropped } => Ok((formula, dropped)),
    }
}

/// Decides whether `f` is a yes-instance; used by tests of the routes.
#[doc(hidden)]
pub fn decide(f: &QuantifiedFormula) -> Result<bool, OracleError> {
    Ok(decide_forall_exists_fixed(f, &Assignment::new(), Budget::default())?.is_yes())
}
