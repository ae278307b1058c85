use std::collections::{BTreeMap, BTreeSet};

use super::nae::balance_q3;
use super::{
    bound, clause, lits_of, occurrences, require_class, Builder, Maps, ReductionError,
    ReductionResult, VarMap,
};
use crate::formula::{Clause, Lit, QuantifiedFormula, Semantics, Var, VariableAllocator};
use crate::gadgets::{build_e_forall, build_s_universal, build_x2};

const SPLIT_2222: &str = "b2222-to-b1122";

/// Target profile of [`balanced_1122_to_112x`]: (1,1,2,1) or (1,1,1,2).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TVariant {
    T21,
    T12,
}

impl TVariant {
    fn route(self) -> &'static str {
        match self {
            TVariant::T21 => "b1122-to-1121",
            TVariant::T12 => "b1122-to-1112",
        }
    }

    fn class(self) -> &'static str {
        match self {
            TVariant::T21 => "ae-1121",
            TVariant::T12 => "ae-1112",
        }
    }

    /// Whether copy `k` (1-based) has its literals negated.
    fn flips(self, k: usize) -> bool {
        match self {
            TVariant::T21 => k >= 3,
            TVariant::T12 => k <= 2,
        }
    }
}

fn rewrite(matrix: &[Clause], wanted: impl Fn(Var) -> bool, mut to: impl FnMut(Var, bool, usize) -> Lit) -> Vec<Vec<Lit>> {
    let mut out: Vec<Vec<Lit>> = matrix.iter().map(|c| c.lits().collect()).collect();
    for o in occurrences(matrix, wanted) {
        out[o.clause][o.atom] = to(o.var, o.negated, o.polarity_index);
    }
    out
}

fn clauses(lits: Vec<Vec<Lit>>) -> Result<Vec<Clause>, ReductionError> {
    lits.iter().map(|l| clause(l).map_err(Into::into)).collect()
}

/// Balanced (2,2,2,2) to balanced (1,1,2,2).
pub fn balanced_2222_to_1122(
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    require_class(SPLIT_2222, source, "b2222")?;
    let p = source.universals().len();
    if p % 3 != 0 {
        return Err(ReductionError::Precondition {
            route: SPLIT_2222,
            detail: format!("{p} universals is not divisible by 3"),
        });
    }
    let mut b = Builder::new(SPLIT_2222, alloc);
    b.existentials = source.existentials().to_vec();
    let mut maps = Maps::default();
    for &v in source.existentials() {
        maps.forward.copy(v, v, false);
        maps.backward.copy(v, v, false);
    }

    // Step 1: x_i becomes existential y_i, forced equal to a fresh universal c_i.
    let mut ys = Vec::with_capacity(p);
    let mut matrix = source.matrix().to_vec();
    for &x in source.universals() {
        let c = b.fresh_universal(format!("c for {x}"))?;
        let y = b.fresh(format!("y for {x}"))?;
        maps.lift.copy(c, x, false);
        ys.push((x, y, c));
    }
    let index: BTreeMap<Var, Var> = ys.iter().map(|&(x, y, _)| (x, y)).collect();
    matrix = clauses(rewrite(&matrix, |v| index.contains_key(&v), |v, neg, _| Lit::new(index[&v], neg)))?;
    b.clauses = matrix;
    for &(_, y, c) in &ys {
        b.gadget("S_u", |a| build_s_universal(c.neg(), y.pos(), y.pos(), a))?;
        b.gadget("S_u", |a| build_s_universal(c.pos(), y.neg(), y.neg(), a))?;
    }
    b.step("replace universals by S_u pairs");

    // Step 2: k-th unnegated appearance of y_i becomes y_{i,k}, k-th negated
    // appearance becomes not y_{i,k}.
    let mut copies: BTreeMap<Var, [Var; 4]> = BTreeMap::new();
    for &(x, y, _) in &ys {
        let mut cs = [y; 4];
        for (k, slot) in cs.iter_mut().enumerate() {
            *slot = b.fresh_existential(format!("{x} copy {}", k + 1))?;
            maps.forward.copy(*slot, x, false);
        }
        maps.backward.copy(x, cs[0], false);
        copies.insert(y, cs);
    }
    let split = rewrite(&b.clauses, |v| copies.contains_key(&v), |v, neg, k| Lit::new(copies[&v][k], neg));
    b.clauses = clauses(split)?;
    b.step("split y into four copies");

    // Step 3: implication chain guarded by d^(2).
    for &(x, y, _) in &ys {
        let [y1, y2, y3, y4] = copies[&y];
        for (pair, tag) in [([(y1, y2), (y2, y3)], 1), ([(y3, y4), (y4, y1)], 2)] {
            let d = b.fresh_existential(format!("d{tag} for {x}"))?;
            maps.forward.constant(d, true);
            for (from, to) in pair {
                b.clauses.push(clause(&[from.neg(), to.pos(), d.neg()])?);
            }
            b.gadget("x2", |a| build_x2(d, a))?;
        }
    }
    b.step("chain copies with d^(2)");

    let m = source.matrix().len();
    let limit = bound("m + 34p", m + 34 * p);
    let stage = b.finish(source, Semantics::Sat, limit, maps, alloc)?;
    let r = ReductionResult::single(stage, None);
    let pe = r.target().existentials().len();
    if pe != 27 * p {
        return Err(ReductionError::Precondition {
            route: SPLIT_2222,
            detail: format!("expected 27p = {} existentials before balancing, found {pe}", 27 * p),
        });
    }
    let next = balance_q3(r.target(), alloc)?;
    let mut r = r.then(next);
    require_class(SPLIT_2222, r.target(), "b1122")?;
    r.route = SPLIT_2222.into();
    r.target_class = Some("b1122".into());
    Ok(r)
}

/// Balanced (1,1,2,2) to forall-exists (1,1,2,1) or (1,1,1,2).
pub fn balanced_1122_to_112x(
    source: &QuantifiedFormula,
    variant: TVariant,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    let route = variant.route();
    require_class(route, source, "b1122")?;
    for c in source.matrix() {
        lits_of(route, c)?;
    }
    let mut b = Builder::new(route, alloc);
    b.universals = source.universals().to_vec();
    let mut maps = Maps {
        lift: VarMap::identity(source.universals().iter().copied()),
        ..Maps::default()
    };
    for &x in source.universals() {
        maps.forward.copy(x, x, false);
        maps.backward.copy(x, x, false);
    }

    // Step 1: 1st/2nd unnegated appearances become y1/y2, 1st/2nd negated
    // appearances become not y3/not y4.
    let mut copies: BTreeMap<Var, [Var; 4]> = BTreeMap::new();
    for &y in source.existentials() {
        let mut cs = [y; 4];
        for (k, slot) in cs.iter_mut().enumerate() {
            *slot = b.fresh_existential(format!("{y} copy {}", k + 1))?;
            maps.forward.copy(*slot, y, variant.flips(k + 1));
        }
        maps.backward.copy(y, cs[0], variant.flips(1));
        copies.insert(y, cs);
    }
    let is_exist = |v: Var| copies.contains_key(&v);
    let split = rewrite(source.matrix(), is_exist, |v, neg, k| {
        let slot = if neg { 2 + k } else { k };
        Lit::new(copies[&v][slot], neg)
    });
    b.clauses = clauses(split)?;
    b.step("split existentials into four copies");

    let mut ds = Vec::new();
    for &y in source.existentials() {
        let cs = copies[&y];
        for k in 0..4 {
            let d = b.fresh_existential(format!("d{} for {y}", k + 1))?;
            maps.forward.constant(d, variant == TVariant::T21);
            ds.push(d);
            b.clauses.push(clause(&[cs[k].neg(), cs[(k + 1) % 4].pos(), d.neg()])?);
            let g = b.gadget("E_forall", |a| build_e_forall(d, a))?;
            for &u in &g.fresh_universals {
                maps.lift.constant(u, false);
            }
        }
    }
    b.step("chain copies with E_forall");

    // Step 2: negate the literals of the flipped copies, and of d when the
    // target asks for (1,2) existentials.
    let mut flipped: BTreeSet<Var> = copies
        .values()
        .flat_map(|cs| (1..=4).filter(|&k| variant.flips(k)).map(move |k| cs[k - 1]))
        .collect();
    if variant == TVariant::T12 {
        flipped.extend(&ds);
    }
    let negated = rewrite(&b.clauses, |v| flipped.contains(&v), |v, neg, _| Lit::new(v, !neg));
    b.clauses = clauses(negated)?;
    b.step("negate flipped copies");

    let (m, n) = (source.matrix().len(), source.existentials().len());
    let limit = bound("m + 12n", m + 12 * n);
    let stage = b.finish(source, Semantics::Sat, limit, maps, alloc)?;
    require_class(route, &stage.target, variant.class())?;
    Ok(ReductionResult::single(stage, Some(variant.class())))
}
