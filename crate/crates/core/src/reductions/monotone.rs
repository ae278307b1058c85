use std::collections::BTreeMap;

use super::nae::normalize_nae;
use super::{
    bound, clause, occurrences, require_class, total_literals, Builder, Maps, ReductionError,
    ReductionResult, SplitPlan, VarMap,
};
use crate::formula::{appearance_table, Clause, Lit, QuantifiedFormula, Semantics, Var, VariableAllocator};
use crate::gadgets::{build_eq, build_ne, build_p1};

const MONO14: &str = "nae-to-mono14";
const MONO13: &str = "mono14-to-mono13";

/// Splits the appearances of `wanted` variables into unnegated copies:
/// the j-th unnegated appearance goes to copy j, the j-th negated one to
/// copy u + j.
fn monotone_split(
    b: &mut Builder,
    order: &[Var],
    wanted: &BTreeMap<Var, Var>,
) -> Result<SplitPlan, ReductionError> {
    let occ = occurrences(&b.clauses, |v| wanted.contains_key(&v));
    let mut plan = SplitPlan::default();
    for o in &occ {
        let e = plan.counts.entry(o.var).or_default();
        if o.negated {
            e.1 += 1;
        } else {
            e.0 += 1;
        }
    }
    for &v in order {
        let a = plan.appearances(v);
        let mut cs = Vec::with_capacity(a);
        for k in 1..=a {
            cs.push(b.fresh_existential(format!("{} copy {k}", wanted[&v]))?);
        }
        plan.copies.insert(v, cs);
    }
    let mut lits: Vec<Vec<Lit>> = b.clauses.iter().map(|c| c.lits().collect()).collect();
    for o in &occ {
        let u = plan.counts[&o.var].0;
        let k = if o.negated { u + o.polarity_index } else { o.polarity_index };
        lits[o.clause][o.atom] = plan.copies[&o.var][k].pos();
    }
    b.clauses = lits.iter().map(|l| clause(l)).collect::<Result<_, _>>()?;
    Ok(plan)
}

fn mono14_stage(
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    let mut b = Builder::new(MONO14, alloc);
    let mut maps = Maps::default();

    // Universal x becomes existential y, tied to a fresh universal z by EQ.
    // `rep` maps each variable to be split to the source variable it stands for.
    let mut rep: BTreeMap<Var, Var> = BTreeMap::new();
    let mut order = Vec::new();
    let mut ys = Vec::new();
    for &x in source.universals() {
        let z = b.fresh_universal(format!("z for {x}"))?;
        let y = b.fresh(format!("y for {x}"))?;
        maps.lift.copy(z, x, false);
        maps.backward.copy(x, z, false);
        rep.insert(y, x);
        order.push(y);
        ys.push((z, y));
    }
    for &v in source.existentials() {
        rep.insert(v, v);
        order.push(v);
    }
    let to_y: BTreeMap<Var, Var> = rep.iter().filter(|(y, x)| y != x).map(|(&y, &x)| (x, y)).collect();
    for c in source.matrix() {
        let mut lits: Vec<Lit> = c
            .lits()
            .map(|l| match to_y.get(&l.var()) {
                Some(&y) => Lit::new(y, l.is_negated()),
                None => l,
            })
            .collect();
        if lits.len() == 2 {
            lits.insert(0, lits[0]);
        }
        b.clauses.push(clause(&lits)?);
    }
    for &(z, y) in &ys {
        b.gadget("EQ", |a| build_eq(z, y, a))?;
    }
    b.step("tie universals with EQ");

    let plan = monotone_split(&mut b, &order, &rep)?;
    for &v in &order {
        let (u, _) = plan.counts.get(&v).copied().unwrap_or((0, 0));
        let cs = &plan.copies[&v];
        let x = rep[&v];
        for (k, &c) in cs.iter().enumerate() {
            maps.forward.copy(c, x, k >= u);
        }
        if x == v {
            match cs.first() {
                Some(&first) => maps.backward.copy(v, first, u == 0),
                None => maps.backward.constant(v, false),
            }
        }
    }
    b.step("split appearances into unnegated copies");

    for &v in &order {
        let cs = plan.copies[&v].clone();
        let u = plan.counts.get(&v).map_or(0, |c| c.0);
        for k in 0..cs.len().saturating_sub(1) {
            if k + 1 != u {
                b.gadget("EQ", |a| build_eq(cs[k], cs[k + 1], a))?;
            }
        }
        if 0 < u && u < cs.len() {
            b.gadget("NE", |a| build_ne(cs[u - 1], cs[u], a))?;
        }
    }
    b.step("chain copies with EQ and NE");

    let mut counts: BTreeMap<Var, usize> = BTreeMap::new();
    for l in b.clauses.iter().flat_map(Clause::lits) {
        *counts.entry(l.var()).or_default() += 1;
    }
    for v in b.existentials.clone() {
        let a = counts.get(&v).copied().unwrap_or(0);
        if a > 4 {
            return Err(ReductionError::Precondition {
                route: MONO14,
                detail: format!("{v} appears {a} times before padding"),
            });
        }
        for _ in a..4 {
            let g = b.gadget("P1", |al| build_p1(v, al))?;
            maps.forward.rules.extend(g.witness_rule);
        }
    }
    b.step("pad existentials with P1");

    let (m, n, p, l) = (
        source.matrix().len(),
        source.num_vars(),
        source.universals().len(),
        total_literals(source),
    );
    let limit = bound("m + 727 (2p + L + n) + 21 (L + p)", m + 727 * (2 * p + l + n) + 21 * (l + p));
    let stage = b.finish(source, Semantics::Nae, limit, maps, alloc)?;
    Ok(ReductionResult::single(stage, Some("mono14")))
}

/// NAE instance to monotone NAE-3-SAT with universals appearing once and
/// existentials four times.
pub fn nae_to_monotone_14(
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    let r = normalize_nae(source)?;
    let next = mono14_stage(r.target(), alloc)?;
    let mut r = r.then(next);
    require_class(MONO14, r.target(), "mono14")?;
    r.route = MONO14.into();
    Ok(r)
}

/// Monotone (1,4) to linear monotone (1,3).
pub fn monotone14_to_monotone13_linear(
    source: &QuantifiedFormula,
    alloc: &mut VariableAllocator,
) -> Result<ReductionResult, ReductionError> {
    require_class(MONO13, source, "mono14")?;
    let table = appearance_table(source);
    let mut b = Builder::new(MONO13, alloc);
    b.universals = source.universals().to_vec();
    let mut maps = Maps {
        lift: VarMap::identity(source.universals().iter().copied()),
        forward: VarMap::identity(source.universals().iter().copied()),
        backward: VarMap::identity(source.universals().iter().copied()),
    };
    let mut zs: BTreeMap<Var, [Var; 8]> = BTreeMap::new();
    let mut cycles = Vec::new();
    for &zi in source.existentials() {
        debug_assert_eq!(table[&zi].total(), 4);
        let mut vars = [[zi; 8]; 4];
        for (g, name) in ["z", "e", "u", "v"].iter().enumerate() {
            for k in 0..8 {
                let v = b.fresh(format!("{name}{} for {zi}", k + 1))?;
                vars[g][k] = v;
            }
        }
        let [z, e, u, v] = vars;
        b.existentials.extend(z);
        b.existentials.extend(e);
        b.universals.extend(u);
        b.universals.extend(v);
        for k in 0..8 {
            maps.forward.copy(z[k], zi, false);
            maps.forward.copy(e[k], zi, true);
            maps.lift.constant(u[k], false);
            maps.lift.constant(v[k], true);
        }
        maps.backward.copy(zi, z[0], false);
        zs.insert(zi, z);
        for k in 0..8 {
            cycles.push([z[k], e[k], u[k]]);
            cycles.push([e[k], z[(k + 1) % 8], v[k]]);
        }
        cycles.push([z[4], e[0], e[1]]);
        cycles.push([z[5], e[6], e[7]]);
        cycles.push([z[6], e[2], e[3]]);
        cycles.push([z[7], e[4], e[5]]);
    }
    let mut lits: Vec<Vec<Lit>> = source.matrix().iter().map(|c| c.lits().collect()).collect();
    for o in occurrences(source.matrix(), |v| zs.contains_key(&v)) {
        lits[o.clause][o.atom] = zs[&o.var][o.index].pos();
    }
    for l in &lits {
        b.clauses.push(clause(l)?);
    }
    b.step("route appearances to copies");
    for vs in cycles {
        b.clauses.push(clause(&vs.map(Var::pos))?);
    }
    b.step("cycle and tie clauses");

    let (m, n) = (source.matrix().len(), source.existentials().len());
    let stage = b.finish(source, Semantics::Nae, bound("m + 20n", m + 20 * n), maps, alloc)?;
    require_class(MONO13, &stage.target, "mono13")?;
    Ok(ReductionResult::single(stage, Some("mono13")))
}
