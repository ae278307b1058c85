use std::collections::BTreeMap;

use super::{
    bound, clause, lits_of, make_stage, normalized_or_no, occurrences, require_class, step_of,
    total_literals, Builder, Maps, ReductionError, ReductionResult, VarMap,
};
use crate::formula::{
    appearance_table, complement_clause, Clause, Lit, QuantifiedFormula, Semantics, Var,
    VariableAllocator,
};
use crate::gadgets::{build_e, build_q1, build_q3};

const NORMALIZE: &str = "normalize-nae";
const UNIVERSALIZE: &str = "universalize";
const BERMAN: &str = "berman-expand";
const BALANCE_Q1: &str = "balance-q1";
const BALANCE_Q3: &str = "balance-q3";

fn require_semantics(route: &'static str, f: &QuantifiedFormula, sem: Semantics) -> Result<(), ReductionError> {
    if f.semantics() != sem {
        return Err(ReductionError::Precondition {
            route,
            detail: format!("expected {sem} semantics, found {}", f.semantics()),
        });
    }
    Ok(())
}

/// Clauses of 2 or 3 literals over distinct variables, no constants.
fn require_short_clauses(route: &'static str, f: &QuantifiedFormula) -> Result<(), ReductionError> {
    for (j, c) in f.matrix().iter().enumerate() {
        lits_of(route, c)?;
        if !(2..=3).contains(&c.len()) || !c.has_distinct_vars() {
            return Err(ReductionError::Precondition {
                route,
                detail: format!("clause {j} {c:?} is not a 2- or 3-clause over distinct variables"),
            });
        }
    }
    Ok(())
}

/// Drops clauses that always hold, rejects clauses that never hold, and
/// merges repeated literals (NAE(x, x, y) is NAE(x, y)).
pub fn normalize_nae(source: &QuantifiedFormula) -> Result<ReductionResult, ReductionError> {
    require_semantics(NORMALIZE, source, Semantics::Nae)?;
    let (normal, _) = normalized_or_no(source)?;
    let mut matrix = Vec::with_capacity(normal.matrix().len());
    for c in normal.matrix() {
        let mut lits: Vec<Lit> = Vec::new();
        for l in lits_of(NORMALIZE, c)? {
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        if lits.len() > 3 {
            return Err(ReductionError::Precondition {
                route: NORMALIZE,
                detail: format!("clause {c:?} has more than three literals"),
            });
        }
        matrix.push(clause(&lits)?);
    }
    let target = normal.with_matrix(matrix)?;
    let maps = Maps {
        lift: VarMap::identity(source.universals().iter().copied()),
        forward: VarMap::identity(source.vars()),
        backward: VarMap::identity(source.vars()),
    };
    let trace = vec![step_of("drop degenerate clauses", &target)];
    let limit = bound("m", source.matrix().len());
    let stage = make_stage(NORMALIZE, source, target, trace, limit, maps)?;
    Ok(ReductionResult::single(stage, None))
}

/// Every universal x becomes existential; a fresh universal z is tied to it
/// by (not z or x)(z or not x).
pub fn universalize_nae(
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    require_semantics(UNIVERSALIZE, source, Semantics::Nae)?;
    require_short_clauses(UNIVERSALIZE, source)?;
    let mut b = Builder::new(UNIVERSALIZE, alloc);
    b.existentials = source.universals().to_vec();
    b.existentials.extend(source.existentials());
    b.clauses = source.matrix().to_vec();
    let mut maps = Maps {
        forward: VarMap::identity(source.vars()),
        backward: VarMap::identity(source.vars()),
        ..Maps::default()
    };
    for &x in source.universals() {
        let z = b.fresh_universal(format!("z for {x}"))?;
        b.clauses.push(clause(&[z.neg(), x.pos()])?);
        b.clauses.push(clause(&[z.pos(), x.neg()])?);
        maps.lift.copy(z, x, false);
    }
    b.step("link fresh universals");
    let p = source.universals().len();
    let limit = bound("m + 2p", source.matrix().len() + 2 * p);
    let stage = b.finish(source, Semantics::Nae, limit, maps, alloc)?;
    Ok(ReductionResult::single(stage, None))
}

/// NAE to SAT with every existential at (2,2): split appearances into
/// copies, pair each clause with its complement, chain the copies, and turn
/// every 2-clause into a 3-clause guarded by E(u).
pub fn berman_expand(
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    require_semantics(BERMAN, source, Semantics::Nae)?;
    require_short_clauses(BERMAN, source)?;
    let table = appearance_table(source);
    let mut b = Builder::new(BERMAN, alloc);
    b.universals = source.universals().to_vec();
    let mut maps = Maps {
        lift: VarMap::identity(source.universals().iter().copied()),
        ..Maps::default()
    };
    maps.forward = VarMap::identity(source.universals().iter().copied());
    maps.backward = VarMap::identity(source.universals().iter().copied());

    // Variables seen once get a tautological clause up front; unused ones
    // leave the prefix.
    let mut matrix: Vec<Clause> = Vec::new();
    for &w in source.existentials() {
        match table[&w].total() {
            0 => maps.backward.constant(w, false),
            1 => matrix.push(clause(&[w.pos(), w.neg()])?),
            _ => {}
        }
    }
    matrix.extend(source.matrix().iter().cloned());

    let is_exist = |v: Var| source.existentials().contains(&v);
    let occ = occurrences(&matrix, is_exist);
    let mut count: BTreeMap<Var, usize> = BTreeMap::new();
    for o in &occ {
        *count.entry(o.var).or_default() += 1;
    }
    let mut copies: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
    for &w in source.existentials() {
        let n = count.get(&w).copied().unwrap_or(0);
        let mut cs = Vec::with_capacity(n);
        for k in 1..=n {
            let c = b.fresh_existential(format!("{w} copy {k}"))?;
            maps.forward.copy(c, w, false);
            cs.push(c);
        }
        if let Some(&first) = cs.first() {
            maps.backward.copy(w, first, false);
        }
        copies.insert(w, cs);
    }
    let mut split: Vec<Vec<Lit>> = matrix.iter().map(|c| c.lits().collect()).collect();
    for o in &occ {
        split[o.clause][o.atom] = Lit::new(copies[&o.var][o.index], o.negated);
    }
    b.step("split existential appearances");

    let mut doubled = Vec::with_capacity(2 * split.len());
    for lits in &split {
        let c = clause(lits)?;
        let complement = complement_clause(&c)?;
        doubled.push(c);
        doubled.push(complement);
    }
    b.clauses = doubled;
    b.step("pair clauses with complements");

    for &w in source.existentials() {
        let cs = &copies[&w];
        for k in 0..cs.len() {
            let next = cs[(k + 1) % cs.len()];
            b.clauses.push(clause(&[cs[k].neg(), next.pos()])?);
        }
    }
    b.step("chain copies");

    let sat = std::mem::take(&mut b.clauses);
    for c in sat {
        if c.len() == 3 {
            b.clauses.push(c);
            continue;
        }
        let lits: Vec<Lit> = c.lits().collect();
        let u = b.fresh_existential("enforcer of a 2-clause")?;
        maps.forward.constant(u, true);
        b.clauses.push(clause(&[lits[0], lits[1], u.neg()])?);
        b.gadget("E", |a| build_e(u, a))?;
    }
    b.step("guard 2-clauses with E");

    let (m, n, l) = (source.matrix().len(), source.num_vars(), total_literals(source));
    let limit = bound("26 (2m + L + 4n)", 26 * (2 * m + l + 4 * n));
    let stage = b.finish(source, Semantics::Sat, limit, maps, alloc)?;
    Ok(ReductionResult::single(stage, None))
}

fn balance(
    route: &'static str,
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
    q3: bool,
) -> Result<ReductionResult, ReductionError> {
    require_semantics(route, source, Semantics::Sat)?;
    let (pu, pe) = (source.universals().len(), source.existentials().len());
    if pe < pu {
        return Err(ReductionError::Precondition {
            route,
            detail: format!("{pe} existentials is fewer than {pu} universals"),
        });
    }
    let copies = if q3 {
        if (pe - pu) % 3 != 0 {
            return Err(ReductionError::Precondition {
                route,
                detail: format!("p_e - p_u = {} is not divisible by 3", pe - pu),
            });
        }
        (pe - pu) / 3
    } else {
        pe - pu
    };
    let mut b = Builder::new(route, alloc);
    b.universals = source.universals().to_vec();
    b.existentials = source.existentials().to_vec();
    b.clauses = source.matrix().to_vec();
    let mut maps = Maps {
        lift: VarMap::identity(source.universals().iter().copied()),
        forward: VarMap::identity(source.vars()),
        backward: VarMap::identity(source.vars()),
    };
    for _ in 0..copies {
        let g = if q3 {
            b.gadget("Q3", build_q3)?
        } else {
            b.gadget("Q1", build_q1)?
        };
        for &u in &g.fresh_universals {
            maps.lift.constant(u, false);
        }
        maps.forward.rules.extend(g.witness_rule);
    }
    b.step(if q3 { "append Q3 copies" } else { "append Q1 copies" });
    let m = source.matrix().len();
    let limit = if q3 {
        bound("m + 2 p_e", m + 2 * pe)
    } else {
        bound("m + 12 p_e", m + 12 * pe)
    };
    let stage = b.finish(source, Semantics::Sat, limit, maps, alloc)?;
    Ok(ReductionResult::single(stage, None))
}

/// Appends p_e - p_u copies of Q1.
pub fn balance_q1(source: &QuantifiedFormula, alloc: &mut VariableAllocator) -> Result<ReductionResult, ReductionError> {
    balance(BALANCE_Q1, source, alloc, false)
}

/// Appends (p_e - p_u) / 3 copies of Q3.
pub fn balance_q3(source: &QuantifiedFormula, alloc: &mut VariableAllocator) -> Result<ReductionResult, ReductionError> {
    balance(BALANCE_Q3, source, alloc, true)
}

/// NAE instance to balanced forall-exists 3-SAT-(2,2,2,2).
pub fn reduce_to_balanced_2222(
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    let r = normalize_nae(source)?;
    let next = universalize_nae(r.target(), alloc)?;
    let r = r.then(next);
    let next = berman_expand(r.target(), alloc)?;
    let r = r.then(next);
    let next = balance_q1(r.target(), alloc)?;
    let mut r = r.then(next);
    require_class("nae-to-b2222", r.target(), "b2222")?;
    r.route = "nae-to-b2222".into();
    r.target_class = Some("b2222".into());
    Ok(r)
}
