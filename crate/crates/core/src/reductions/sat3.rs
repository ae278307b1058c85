use std::collections::BTreeSet;

use super::{
    bound, clause, lits_of, make_stage, require_class, step_of, Builder, Maps, ReductionError,
    ReductionResult, VarMap,
};
use crate::formula::{
    appearance_table, Assignment, Clause, Lit, QuantifiedFormula, Semantics, Var,
    VariableAllocator,
};

const POLARITY: &str = "normalize-polarity";
const STRIP: &str = "strip-universals";

/// Target profile of [`sat3_bounded_to_forallexists`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AeVariant {
    /// (1,0,2,1)
    V1021,
    /// (0,1,2,1): universal literals negated.
    V0121,
    /// (1,0,1,2): existential literals negated.
    V1012,
    /// (0,1,1,2): every literal negated.
    V0112,
}

impl AeVariant {
    pub const ALL: [AeVariant; 4] = [AeVariant::V1021, AeVariant::V0121, AeVariant::V1012, AeVariant::V0112];

    pub fn parse(code: &str) -> Option<AeVariant> {
        AeVariant::ALL.into_iter().find(|v| v.code() == code)
    }

    pub fn code(self) -> &'static str {
        match self {
            AeVariant::V1021 => "1021",
            AeVariant::V0121 => "0121",
            AeVariant::V1012 => "1012",
            AeVariant::V0112 => "0112",
        }
    }

    fn negates_universals(self) -> bool {
        matches!(self, AeVariant::V0121 | AeVariant::V0112)
    }

    fn negates_existentials(self) -> bool {
        matches!(self, AeVariant::V1012 | AeVariant::V0112)
    }

    fn route(self) -> &'static str {
        match self {
            AeVariant::V1021 => "3sat3-to-ae:1021",
            AeVariant::V0121 => "3sat3-to-ae:0121",
            AeVariant::V1012 => "3sat3-to-ae:1012",
            AeVariant::V0112 => "3sat3-to-ae:0112",
        }
    }

    fn class(self) -> &'static str {
        match self {
            AeVariant::V1021 => "ae-1021",
            AeVariant::V0121 => "ae-0121",
            AeVariant::V1012 => "ae-1012",
            AeVariant::V0112 => "ae-0112",
        }
    }
}

fn negate_vars(matrix: &[Clause], vars: &BTreeSet<Var>) -> Result<Vec<Clause>, ReductionError> {
    matrix
        .iter()
        .map(|c| {
            let lits: Vec<Lit> = c
                .lits()
                .map(|l| if vars.contains(&l.var()) { !l } else { l })
                .collect();
            clause(&lits).map_err(Into::into)
        })
        .collect()
}

/// Variables appearing (1,2), which [`normalize_polarity`] flips.
fn to_flip(route: &'static str, f: &QuantifiedFormula) -> Result<BTreeSet<Var>, ReductionError> {
    let mut flip = BTreeSet::new();
    for (v, a) in appearance_table(f) {
        match (a.unnegated, a.negated) {
            (2, 1) => {}
            (1, 2) => {
                flip.insert(v);
            }
            (u, n) => {
                return Err(ReductionError::Precondition {
                    route,
                    detail: format!("{v} appears ({u},{n}); expected (2,1) or (1,2)"),
                })
            }
        }
    }
    Ok(flip)
}

/// Negates every variable that appears once unnegated and twice negated.
pub fn normalize_polarity(f: &QuantifiedFormula) -> Result<QuantifiedFormula, ReductionError> {
    let flip = to_flip(POLARITY, f)?;
    Ok(f.with_matrix(negate_vars(f.matrix(), &flip)?)?)
}

/// [`normalize_polarity`] as a reduction stage from class `3sat3-raw` to `3sat3`.
pub fn polarity_normalization(source: &QuantifiedFormula) -> Result<ReductionResult, ReductionError> {
    require_class(POLARITY, source, "3sat3-raw")?;
    let flip = to_flip(POLARITY, source)?;
    let target = source.with_matrix(negate_vars(source.matrix(), &flip)?)?;
    let mut maps = Maps::default();
    for v in source.vars() {
        maps.forward.copy(v, v, flip.contains(&v));
        maps.backward.copy(v, v, flip.contains(&v));
    }
    let trace = vec![step_of("flip (1,2) variables", &target)];
    let limit = bound("m", source.matrix().len());
    let stage = make_stage(POLARITY, source, target, trace, limit, maps)?;
    Ok(ReductionResult::single(stage, Some("3sat3")))
}

/// Pads every 2-clause with a fresh universal, then applies the variant's
/// negations.
pub fn sat3_bounded_to_forallexists(
    source: &QuantifiedFormula,
    variant: AeVariant,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    let route = variant.route();
    require_class(route, source, "3sat3")?;
    let (neg_u, neg_e) = (variant.negates_universals(), variant.negates_existentials());
    let mut b = Builder::new(route, alloc);
    b.existentials = source.existentials().to_vec();
    let mut maps = Maps::default();
    for &x in source.existentials() {
        maps.forward.copy(x, x, neg_e);
        maps.backward.copy(x, x, neg_e);
    }
    for c in source.matrix() {
        let mut lits: Vec<Lit> = lits_of(route, c)?
            .into_iter()
            .map(|l| if neg_e { !l } else { l })
            .collect();
        if lits.len() == 2 {
            let y = b.fresh_universal("pad of a 2-clause")?;
            maps.lift.constant(y, neg_u);
            lits.push(Lit::new(y, neg_u));
        }
        b.clauses.push(clause(&lits)?);
    }
    b.step("pad 2-clauses with universals");
    let limit = bound("m", source.matrix().len());
    let stage = b.finish(source, Semantics::Sat, limit, maps, alloc)?;
    require_class(route, &stage.target, variant.class())?;
    Ok(ReductionResult::single(stage, Some(variant.class())))
}

/// A forall-exists SAT formula with its universal literals deleted.
#[derive(Clone, Debug)]
pub struct Stripped {
    /// Existential-only formula over the source's existentials.
    pub formula: QuantifiedFormula,
    /// The universal assignment that falsifies every universal literal.
    pub adversary: Assignment,
    /// Number of literals removed.
    pub removed: usize,
}

/// Deletes universal literals. Each universal may appear at most once, and
/// SAT semantics is required.
pub fn strip_universal_literals(f: &QuantifiedFormula) -> Result<Stripped, ReductionError> {
    if f.semantics() != Semantics::Sat {
        return Err(ReductionError::Precondition {
            route: STRIP,
            detail: "only SAT semantics is supported".into(),
        });
    }
    let table = appearance_table(f);
    let mut adversary = Assignment::new();
    for &u in f.universals() {
        let a = table[&u];
        if a.total() > 1 {
            return Err(ReductionError::Precondition {
                route: STRIP,
                detail: format!("universal {u} appears {} times", a.total()),
            });
        }
        // The literal is false when u takes the polarity opposite to it.
        adversary.set(u, a.negated == 1);
    }
    let universal: BTreeSet<Var> = f.universals().iter().copied().collect();
    let mut matrix = Vec::with_capacity(f.matrix().len());
    let mut removed = 0;
    for (j, c) in f.matrix().iter().enumerate() {
        let lits = lits_of(STRIP, c)?;
        let kept: Vec<Lit> = lits.iter().copied().filter(|l| !universal.contains(&l.var())).collect();
        removed += lits.len() - kept.len();
        if kept.is_empty() {
            return Err(ReductionError::SourceIsNo { clause_index: j });
        }
        matrix.push(clause(&kept)?);
    }
    let formula = QuantifiedFormula::new(vec![], f.existentials().to_vec(), matrix, Semantics::Sat)?;
    Ok(Stripped {
        formula,
        adversary,
        removed,
    })
}

/// [`strip_universal_literals`] as a reduction stage. The verdict is kept at
/// the adversarial universal assignment only.
pub fn strip_universals_route(source: &QuantifiedFormula) -> Result<ReductionResult, ReductionError> {
    let s = strip_universal_literals(source)?;
    let maps = Maps {
        lift: VarMap::default(),
        forward: VarMap::identity(source.existentials().iter().copied()),
        backward: VarMap::identity(source.existentials().iter().copied()),
    };
    let trace = vec![step_of("delete universal literals", &s.formula)];
    let limit = bound("m", source.matrix().len());
    let mut stage = make_stage(STRIP, source, s.formula, trace, limit, maps)?;
    stage.adversary = Some(s.adversary);
    Ok(ReductionResult::single(stage, None))
}
