//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion; run with `cargo test -p qbforge --test acceptance -- --nocapture`
//! to see them interleaved with the harness output.
//!
//! Expected values come from the brute-force evaluator in [`brute`], which
//! shares no code with the library beyond the formula data types.

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use qbforge::deciders::{
    decide_mc_nae2, decide_monotone_12, decide_monotone_s1, decide_monotone_s2_one_universal,
    refute_monotone_s2, VerdictAnswer,
};
use qbforge::formula::{count_appearances, validate_class, ClassSpec};
use qbforge::gadgets::{build_named, verify_contract, GadgetKind};
use qbforge::io::{export_qdimacs, generate_instance, parse_qdimacs, parse_qext, serialize_qext, GeneratorConfig, IoError, QextDocument};
use qbforge::oracle::{decide_forall_exists, find_extension, Budget};
use qbforge::reductions::{run_route, ReductionError, ReductionResult, Route};
use qbforge::{Assignment, Atom, Clause, Lit, QuantifiedFormula, Semantics, Var, VariableAllocator};

/// Runs one criterion, prints its line and fails the test on error or panic.
fn criterion(name: &str, body: impl FnOnce() -> Result<String, String>) {
    let outcome = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let mut out = std::io::stdout().lock();
    match &outcome {
        Ok(detail) => writeln!(out, "PASS {name}: {detail}").unwrap(),
        Err(why) => writeln!(out, "FAIL {name}: {why}").unwrap(),
    }
    drop(out);
    if let Err(why) = outcome {
        panic!("{name}: {why}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn budget() -> Budget {
    Budget::new(1 << 24).unwrap()
}

/// Independent evaluator: enumeration and plain backtracking over a
/// `Vec<bool>` indexed by variable id.
mod brute {
    use super::*;

    pub fn atom(a: Atom, vals: &[bool]) -> bool {
        match a {
            Atom::Const(b) => b,
            Atom::Lit(l) => vals[l.var().id() as usize] != l.is_negated(),
        }
    }

    pub fn clause_holds(c: &Clause, vals: &[bool], sem: Semantics) -> bool {
        let (mut t, mut f) = (false, false);
        for &a in c.atoms() {
            if atom(a, vals) {
                t = true;
            } else {
                f = true;
            }
        }
        match sem {
            Semantics::Sat => t,
            Semantics::Nae => t && f,
        }
    }

    pub fn holds(matrix: &[Clause], vals: &[bool], sem: Semantics) -> bool {
        matrix.iter().all(|c| clause_holds(c, vals, sem))
    }

    pub fn table(f: &QuantifiedFormula) -> Vec<bool> {
        vec![false; f.max_var() as usize + 1]
    }

    pub fn set(vals: &mut [bool], vars: &[Var], bits: u64) {
        for (k, v) in vars.iter().enumerate() {
            vals[v.id() as usize] = bits >> k & 1 == 1;
        }
    }

    /// Backtracking over the `free` variables in order; each clause is
    /// checked at the depth where its last free variable gets a value. On
    /// success `vals` holds a model.
    pub fn extend(f: &QuantifiedFormula, free: &[Var], vals: &mut [bool]) -> bool {
        let mut depth_of = vec![usize::MAX; vals.len()];
        for (k, v) in free.iter().enumerate() {
            depth_of[v.id() as usize] = k;
        }
        let mut at: Vec<Vec<&Clause>> = vec![Vec::new(); free.len() + 1];
        for c in f.matrix() {
            let last = c.vars().map(|v| depth_of[v.id() as usize]).filter(|&d| d != usize::MAX).max();
            at[last.map_or(0, |d| d + 1)].push(c);
        }
        if !at[0].iter().all(|c| clause_holds(c, vals, f.semantics())) {
            return false;
        }
        fn go(k: usize, free: &[Var], at: &[Vec<&Clause>], vals: &mut [bool], sem: Semantics) -> bool {
            if k == free.len() {
                return true;
            }
            [false, true].into_iter().any(|b| {
                vals[free[k].id() as usize] = b;
                at[k + 1].iter().all(|c| clause_holds(c, vals, sem)) && go(k + 1, free, at, vals, sem)
            })
        }
        go(0, free, &at, vals, f.semantics())
    }

    pub fn universal_cases(f: &QuantifiedFormula) -> impl Iterator<Item = Assignment> + '_ {
        let us = f.universals();
        (0..1u64 << us.len()).map(move |bits| Assignment::from_pairs(us.iter().enumerate().map(|(k, &u)| (u, bits >> k & 1 == 1))))
    }

    /// Model of `f` extending `alpha`, if any.
    pub fn extension(f: &QuantifiedFormula, alpha: &Assignment) -> Option<Assignment> {
        let mut vals = table(f);
        for (v, b) in alpha.iter() {
            vals[v.id() as usize] = b;
        }
        let free: Vec<Var> = f.existentials().iter().copied().filter(|&v| !alpha.is_assigned(v)).collect();
        extend(f, &free, &mut vals).then(|| Assignment::from_pairs(free.iter().map(|&v| (v, vals[v.id() as usize]))))
    }

    pub fn forall_exists(f: &QuantifiedFormula) -> bool {
        universal_cases(f).all(|a| extension(f, &a).is_some())
    }

    /// True iff `a` assigns every variable of `f` and satisfies each clause.
    pub fn verifies(f: &QuantifiedFormula, a: &Assignment) -> bool {
        let mut vals = table(f);
        for v in f.vars() {
            match a.get(v) {
                Some(b) => vals[v.id() as usize] = b,
                None => return false,
            }
        }
        holds(f.matrix(), &vals, f.semantics())
    }
}

fn lit(v: u32, negated: bool) -> Atom {
    Atom::Lit(Lit::new(Var::new(v), negated))
}

fn qbf(p: u32, q: u32, clauses: Vec<Vec<Atom>>, sem: Semantics) -> QuantifiedFormula {
    QuantifiedFormula::new(
        (1..=p).map(Var::new).collect(),
        (p + 1..=p + q).map(Var::new).collect(),
        clauses.into_iter().map(|c| Clause::new(c).unwrap()).collect(),
        sem,
    )
    .unwrap()
}

fn generate(seed: u64, class: Option<&str>, p: usize, q: usize, m: usize, sem: Semantics) -> Option<QuantifiedFormula> {
    generate_instance(&GeneratorConfig {
        seed,
        universals: p,
        existentials: q,
        clauses: m,
        class: class.map(str::to_string),
        semantics: sem,
        ..GeneratorConfig::default()
    })
    .ok()
}

// ---------------------------------------------------------------- gadgets

#[test]
fn gadget_contracts() {
    criterion("gadget contract suite", || {
        let mut summary = Vec::new();
        for kind in GadgetKind::ALL {
            let g = build_named(kind, &mut VariableAllocator::starting_at(1)).unwrap();
            let report = verify_contract(&g, budget()).map_err(|e| format!("{kind}: {e}"))?;
            ensure(report.passed(), || format!("{kind}: {:?}", report.mismatch))?;

            // Exhaustive re-check: predicate holds iff every fresh-universal
            // case extends over the fresh existentials.
            let f = g.to_formula().unwrap();
            let mut vals = brute::table(&f);
            let ni = g.interface.len();
            let nu = g.fresh_universals.len();
            let mut cases = 0usize;
            for ibits in 0..1u64 << ni {
                brute::set(&mut vals, &g.interface, ibits);
                let iface = Assignment::from_pairs(g.interface.iter().map(|&v| (v, vals[v.id() as usize])));
                let expected = g.contract.predicate.holds(&iface);
                let mut all = true;
                for ubits in 0..1u64 << nu {
                    cases += 1;
                    brute::set(&mut vals, &g.fresh_universals, ubits);
                    if !brute::extend(&f, &g.fresh_existentials, &mut vals) {
                        all = false;
                        break;
                    }
                }
                ensure(all == expected, || format!("{kind}: interface bits {ibits:b} expected {expected}"))?;
            }
            if matches!(kind, GadgetKind::Q1 | GadgetKind::Q3) {
                ensure(ni == 0 && nu == 5 && cases == 32, || format!("{kind}: {cases} universal cases, expected 32"))?;
                ensure(brute::forall_exists(&f), || format!("{kind} is not a forall-exists yes-instance"))?;
            }
            summary.push(format!("{kind}={cases}"));
        }
        Ok(format!("11 gadgets, cases {}", summary.join(" ")))
    });
}

#[test]
fn gadget_profiles() {
    criterion("gadget profile suite", || {
        let mut alloc = VariableAllocator::starting_at(1);
        let count = |f: &QuantifiedFormula, v: Var| {
            let a = count_appearances(f, v).unwrap();
            (a.unnegated, a.negated)
        };
        for kind in GadgetKind::ALL {
            let g = build_named(kind, &mut alloc).unwrap();
            let f = g.to_formula().unwrap();
            // Independent recount from the clause list.
            for v in f.vars() {
                let (mut pos, mut neg) = (0, 0);
                for l in f.matrix().iter().flat_map(|c| c.lits()) {
                    if l.var() == v {
                        if l.is_negated() {
                            neg += 1
                        } else {
                            pos += 1
                        }
                    }
                }
                ensure(count(&f, v) == (pos, neg), || format!("{kind}: count_appearances({v}) disagrees"))?;
            }
            let fresh: Vec<Var> = g.fresh_vars().collect();
            match kind {
                GadgetKind::Q1 => {
                    for v in f.vars() {
                        ensure(count(&f, v) == (2, 2), || format!("Q1: {v} has {:?}", count(&f, v)))?;
                    }
                }
                GadgetKind::Q3 => {
                    for &v in f.universals() {
                        ensure(count(&f, v) == (1, 1), || format!("Q3: universal {v} has {:?}", count(&f, v)))?;
                    }
                    for &v in f.existentials() {
                        ensure(count(&f, v) == (2, 2), || format!("Q3: existential {v} has {:?}", count(&f, v)))?;
                    }
                }
                GadgetKind::E => {
                    let &[x] = g.interface.as_slice() else { return Err("E: one interface variable".into()) };
                    ensure(count(&f, x) == (2, 1), || format!("E: x has {:?}", count(&f, x)))?;
                    for &v in &fresh {
                        ensure(count(&f, v) == (2, 2), || format!("E: internal {v} has {:?}", count(&f, v)))?;
                    }
                }
                GadgetKind::P1 => {
                    for &v in &fresh {
                        let (a, b) = count(&f, v);
                        ensure(a + b == 4, || format!("P1: fresh {v} appears {} times", a + b))?;
                    }
                }
                GadgetKind::NeAux | GadgetKind::Eq | GadgetKind::Ne => {
                    for &v in &fresh {
                        let (a, b) = count(&f, v);
                        ensure(a + b <= 4, || format!("{kind}: fresh {v} appears {} times", a + b))?;
                    }
                }
                _ => {}
            }
        }
        Ok("Q1, Q3, E, P1, NE_aux, EQ, NE match their stated profiles".into())
    });
}

// ------------------------------------------------------------- reductions

const CLASS_ROUTES: [&str; 10] = [
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
];

/// A seeded source instance for `route`; `None` when the generator rejects
/// the configuration.
fn random_source(route: &str, seed: u64) -> Option<QuantifiedFormula> {
    let k = seed as usize;
    match route {
        "nae-to-b2222" | "nae-to-mono14" => generate(seed, None, k % 3, 2 + k / 3 % 3, 1 + k / 9 % 3, Semantics::Nae),
        "b2222-to-b1122" => generate(seed, Some("b2222"), 3, 3, 0, Semantics::Nae),
        "b1122-to-1121" | "b1122-to-1112" => {
            let p = 2 + k % 2;
            generate(seed, Some("b1122"), p, p, 0, Semantics::Nae)
        }
        r if r.starts_with("3sat3-to-ae:") => generate(seed, Some("3sat3-raw"), 0, 3 + k % 4, 0, Semantics::Sat),
        "mono14-to-mono13" => {
            let (p, q) = [(3, 3), (2, 4), (1, 2)][k % 3];
            generate(seed, Some("mono14"), p, q, 0, Semantics::Nae)
        }
        "strip-universals" => {
            let class = ["ae-1021", "ae-0121", "ae-1012", "ae-0112"][k % 4];
            generate(seed, Some(class), 3, 2 + k / 4 % 2, 0, Semantics::Sat)
        }
        _ => unreachable!("{route}"),
    }
}

struct Run {
    route: &'static str,
    result: ReductionResult,
}

/// At least 50 successful runs per class route, shared by the class and
/// arithmetic criteria.
fn class_runs() -> &'static Vec<Run> {
    static RUNS: OnceLock<Vec<Run>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut runs = Vec::new();
        for route in CLASS_ROUTES {
            let r = Route::parse(route).unwrap();
            let mut ok = 0;
            for seed in 0..1000 {
                if ok == 50 {
                    break;
                }
                let Some(src) = random_source(route, seed) else { continue };
                match run_route(r, &src) {
                    Ok(result) => {
                        ok += 1;
                        runs.push(Run { route, result });
                    }
                    Err(ReductionError::SourceIsNo { .. }) => {}
                    Err(e) => panic!("{route} seed {seed}: {e}"),
                }
            }
            assert_eq!(ok, 50, "{route}: only {ok} generated sources reduced");
        }
        runs
    })
}

/// Profile named by a target class: (universal (s1,s2) or total, existential
/// (t1,t2) or total).
fn structural_check(class: &str, f: &QuantifiedFormula) -> Result<(), String> {
    let universal: BTreeSet<Var> = f.universals().iter().copied().collect();
    let mut counts = std::collections::BTreeMap::<Var, (usize, usize)>::new();
    for l in f.matrix().iter().flat_map(|c| c.lits()) {
        let e = counts.entry(l.var()).or_default();
        if l.is_negated() {
            e.1 += 1
        } else {
            e.0 += 1
        }
    }
    for v in f.vars() {
        counts.entry(v).or_default();
    }
    let digits = |s: &str| s.chars().map(|c| c.to_digit(10).unwrap() as usize).collect::<Vec<_>>();
    let exact = |d: &[usize]| -> Result<(), String> {
        for (&v, &c) in &counts {
            let want = if universal.contains(&v) { (d[0], d[1]) } else { (d[2], d[3]) };
            ensure(c == want, || format!("{class}: {v} has {c:?}, want {want:?}"))?;
        }
        Ok(())
    };
    match class {
        "b2222" | "b1122" => {
            ensure(f.universals().len() == f.existentials().len(), || format!("{class}: unbalanced"))?;
            exact(&digits(&class[1..]))
        }
        c if c.starts_with("ae-") => exact(&digits(&c[3..])),
        "mono14" | "mono13" => {
            let t = if class == "mono14" { 4 } else { 3 };
            for c in f.matrix() {
                ensure(c.lits().all(|l| !l.is_negated()), || format!("{class}: negated literal in {c:?}"))?;
                ensure(c.vars().filter(|v| universal.contains(v)).count() <= 1, || format!("{class}: two universals in {c:?}"))?;
            }
            for (&v, &(a, b)) in &counts {
                let want = if universal.contains(&v) { 1 } else { t };
                ensure(a + b == want, || format!("{class}: {v} appears {} times", a + b))?;
            }
            if class == "mono13" {
                let sets: Vec<BTreeSet<Var>> = f.matrix().iter().map(|c| c.vars().collect()).collect();
                for i in 0..sets.len() {
                    for j in i + 1..sets.len() {
                        ensure(sets[i].intersection(&sets[j]).count() <= 1, || format!("mono13: clauses {i} and {j} share two variables"))?;
                    }
                }
            }
            Ok(())
        }
        _ => Err(format!("unexpected target class {class}")),
    }
}

#[test]
fn reduction_class_soundness() {
    criterion("reduction class soundness", || {
        let runs = class_runs();
        for run in runs {
            let class = run.result.target_class.clone().ok_or_else(|| format!("{}: no target class", run.route))?;
            let spec = ClassSpec::named(&class).ok_or_else(|| format!("unknown class {class}"))?;
            let report = validate_class(run.result.target(), &spec);
            ensure(report.passed(), || format!("{}: target fails {class}:\n{report}", run.route))?;
            structural_check(&class, run.result.target())?;
        }
        Ok(format!("{} routes x 50 generated sources, every target in its class", CLASS_ROUTES.len()))
    });
}

/// Structured NAE or SAT sources in the small region: shapes (p, q), clause
/// j over variables (j, j+1, j+2) mod n, every sign pattern. For NAE the
/// first literal is kept unnegated since flipping a whole clause is a
/// symmetry.
fn skeleton_sources(sem: Semantics) -> Vec<QuantifiedFormula> {
    let mut out = Vec::new();
    for (p, q) in [(0, 3), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)] {
        let n = p + q;
        for m in 1..=3u32 {
            let free = if sem == Semantics::Nae { 2 } else { 3 };
            for signs in 0..1u32 << (free * m) {
                let clauses = (0..m)
                    .map(|j| {
                        (0..3)
                            .map(|i| {
                                let v = (j + i) % n + 1;
                                let neg = if sem == Semantics::Nae && i == 0 {
                                    false
                                } else {
                                    let bit = j * free + if sem == Semantics::Nae { i - 1 } else { i };
                                    signs >> bit & 1 == 1
                                };
                                lit(v, neg)
                            })
                            .collect()
                    })
                    .collect();
                out.push(qbf(p, q, clauses, sem));
            }
        }
    }
    out
}

/// SAT sources where every universal appears once: clause j holds
/// existentials j and j+1 (mod q) and universal j when j < p, otherwise
/// existential j+2 if it is distinct.
fn strip_sources() -> Vec<QuantifiedFormula> {
    let mut out = Vec::new();
    for p in 0..=2u32 {
        for q in 1..=3u32 {
            for m in 1..=3u32 {
                let shape: Vec<Vec<u32>> = (0..m)
                    .map(|j| {
                        let mut vs = vec![p + j % q + 1];
                        let mut push = |v: u32| {
                            if !vs.contains(&v) {
                                vs.push(v)
                            }
                        };
                        push(p + (j + 1) % q + 1);
                        if j < p {
                            push(j + 1);
                        } else {
                            push(p + (j + 2) % q + 1);
                        }
                        vs
                    })
                    .collect();
                let width: usize = shape.iter().map(Vec::len).sum();
                for signs in 0..1u32 << width {
                    let mut k = 0;
                    let clauses = shape
                        .iter()
                        .map(|vs| {
                            vs.iter()
                                .map(|&v| {
                                    k += 1;
                                    lit(v, signs >> (k - 1) & 1 == 1)
                                })
                                .collect()
                        })
                        .collect();
                    out.push(qbf(p, q, clauses, Semantics::Sat));
                }
            }
        }
    }
    out
}

/// Every 3-SAT-(3) formula (each variable three times, both polarities) with
/// at most three variables and three clauses.
fn sat3_sources() -> Vec<QuantifiedFormula> {
    let mut out = Vec::new();
    let ok = |f: &QuantifiedFormula| validate_class(f, &ClassSpec::named("3sat3-raw").unwrap()).passed();
    // Two variables: three 2-clauses over {1, 2}.
    for signs in 0..1u32 << 6 {
        let clauses = (0..3).map(|j| vec![lit(1, signs >> (2 * j) & 1 == 1), lit(2, signs >> (2 * j + 1) & 1 == 1)]).collect();
        let f = qbf(0, 2, clauses, Semantics::Sat);
        if ok(&f) {
            out.push(f);
        }
    }
    // Three variables: three 3-clauses over {1, 2, 3}.
    for signs in 0..1u32 << 9 {
        let clauses = (0..3).map(|j| (0..3).map(|i| lit(i + 1, signs >> (3 * j + i) & 1 == 1)).collect()).collect();
        let f = qbf(0, 3, clauses, Semantics::Sat);
        if ok(&f) {
            out.push(f);
        }
    }
    out
}

fn region_sources(route: &str) -> Vec<QuantifiedFormula> {
    match route {
        "nae-to-b2222" | "nae-to-mono14" => skeleton_sources(Semantics::Nae),
        "strip-universals" => strip_sources(),
        r if r.starts_with("3sat3-to-ae:") => sat3_sources(),
        // No instance of b2222, b1122 or mono14 fits in p <= 2, q <= 3,
        // m <= 3; the smallest generated instances stand in.
        "b2222-to-b1122" => (0..20).filter_map(|s| generate(10_000 + s, Some("b2222"), 3, 3, 0, Semantics::Nae)).collect(),
        "b1122-to-1121" | "b1122-to-1112" => {
            (0..20).filter_map(|s| generate(10_000 + s, Some("b1122"), 2, 2, 0, Semantics::Nae)).collect()
        }
        "mono14-to-mono13" => (0..20).filter_map(|s| generate(10_000 + s, Some("mono14"), 3, 3, 0, Semantics::Nae)).collect(),
        _ => unreachable!("{route}"),
    }
}

#[derive(Default)]
struct Tally {
    instances: usize,
    yes: usize,
    source_is_no: usize,
    skipped: usize,
    witnesses: usize,
}

/// Compares the brute-force source verdict with the library verdict on the
/// target and, for yes-instances, re-verifies both witness maps clause by
/// clause. Errors are split by criterion.
fn check_instance(route: Route, src: &QuantifiedFormula, t: &mut Tally, witness_errors: &mut Vec<String>) -> Result<(), String> {
    let expected = brute::forall_exists(src);
    let r = match run_route(route, src) {
        Ok(r) => r,
        Err(ReductionError::SourceIsNo { .. }) => {
            t.instances += 1;
            t.source_is_no += 1;
            return ensure(!expected, || format!("{route}: reported NO for yes-source {src:?}"));
        }
        Err(ReductionError::Precondition { .. }) => {
            t.skipped += 1;
            return Ok(());
        }
        Err(e) => return Err(format!("{route}: {e} on {src:?}")),
    };
    t.instances += 1;
    let target = r.target();
    let adversary = r.stages[0].adversary.clone();
    // The strip route keeps the verdict at the adversarial universal
    // assignment; compare there.
    let source_verdict = match &adversary {
        Some(a) => brute::extension(src, a).is_some(),
        None => expected,
    };
    let target_verdict = decide_forall_exists(target, budget()).map_err(|e| format!("{route}: {e}"))?.is_yes();
    ensure(source_verdict == target_verdict, || {
        format!("{route}: source {source_verdict}, target {target_verdict} for {src:?}")
    })?;
    if adversary.is_some() && expected != source_verdict {
        return Err(format!("{route}: adversary is not the worst case for {src:?}"));
    }
    if !expected {
        return Ok(());
    }
    t.yes += 1;

    let alphas: Vec<Assignment> = match adversary {
        Some(a) => vec![a],
        None => brute::universal_cases(src).collect(),
    };
    for alpha in alphas {
        t.witnesses += 1;
        let w = brute::extension(src, &alpha).expect("yes-instance");
        let mut total = alpha.clone();
        total.extend_from(&w);
        let lifted = r.lift_universals(&alpha);
        match r.forward_witness(&total) {
            Ok(fw) => {
                if fw.restrict(target.universals()) != lifted {
                    witness_errors.push(format!("{route}: forward witness changes the lifted universals on {src:?}"));
                } else if !brute::verifies(target, &fw) {
                    witness_errors.push(format!("{route}: forward witness fails a target clause on {src:?} at {alpha:?}"));
                }
            }
            Err(e) => witness_errors.push(format!("{route}: forward witness: {e} on {src:?}")),
        }
        let tw = find_extension(target, &lifted, budget()).map_err(|e| format!("{route}: {e}"))?;
        let Some(tw) = tw else {
            return Err(format!("{route}: lifted universals do not extend in the target for {src:?} at {alpha:?}"));
        };
        let mut ttotal = lifted.clone();
        ttotal.extend_from(&tw);
        let mut back = r.backward_witness(&ttotal);
        back.extend_from(&alpha);
        if !brute::verifies(src, &back) {
            witness_errors.push(format!("{route}: backward witness fails a source clause on {src:?} at {alpha:?}"));
        }
    }
    Ok(())
}

fn equivalence_routes() -> &'static (Vec<String>, Vec<String>, String, String) {
    static OUT: OnceLock<(Vec<String>, Vec<String>, String, String)> = OnceLock::new();
    OUT.get_or_init(|| {
        let mut equiv_errors = Vec::new();
        let mut witness_errors = Vec::new();
        let mut equiv_detail = Vec::new();
        let mut witness_total = 0;
        for &name in Route::NAMES {
            let route = Route::parse(name).unwrap();
            let mut t = Tally::default();
            let region = region_sources(name);
            let region_len = region.len();
            let mut random = 0;
            let sources = region.into_iter().chain((0..).map_while(|seed| {
                (random < 100 && seed < 10_000).then(|| {
                    let s = random_source(name, 20_000 + seed);
                    random += usize::from(s.is_some());
                    s
                })
            }).flatten());
            for src in sources {
                if let Err(e) = check_instance(route, &src, &mut t, &mut witness_errors) {
                    equiv_errors.push(e);
                }
            }
            if random < 100 {
                equiv_errors.push(format!("{name}: only {random} random sources generated"));
            }
            witness_total += t.witnesses;
            equiv_detail.push(format!(
                "{name} {}+100 ({} yes, {} source-no, {} skipped)",
                region_len, t.yes, t.source_is_no, t.skipped
            ));
        }
        (
            equiv_errors,
            witness_errors,
            equiv_detail.join("; "),
            format!("{witness_total} universal cases re-verified in both directions"),
        )
    })
}

#[test]
fn reduction_equivalence() {
    criterion("reduction equivalence", || {
        let (errors, _, detail, _) = equivalence_routes();
        match errors.first() {
            Some(e) => Err(format!("{} disagreements; first: {e}", errors.len())),
            None => Ok(detail.clone()),
        }
    });
}

#[test]
fn witness_soundness() {
    criterion("witness soundness", || {
        let (_, errors, _, detail) = equivalence_routes();
        match errors.first() {
            Some(e) => Err(format!("{} failures; first: {e}", errors.len())),
            None => Ok(detail.clone()),
        }
    });
}

// --------------------------------------------------------------- deciders

const F: u32 = 1000;
const T: u32 = 1001;

fn atom(i: u32) -> Atom {
    match i {
        F => Atom::Const(false),
        T => Atom::Const(true),
        _ => lit(i, false),
    }
}

/// Nondecreasing sequences of `m` sorted triples over `alphabet` where
/// variable `v` (ids `1..=totals.len()`) appears exactly `totals[v-1]` times.
/// Constants may repeat inside a triple; variables may not.
fn triples(alphabet: &[u32], totals: &[usize], m: usize) -> Vec<Vec<[u32; 3]>> {
    let is_var = |i: u32| (i as usize) <= totals.len();
    let mut all = Vec::new();
    for (x, &a) in alphabet.iter().enumerate() {
        for (y, &b) in alphabet.iter().enumerate().skip(x) {
            for &c in &alphabet[y..] {
                if !((a == b && is_var(a)) || (b == c && is_var(b))) {
                    all.push([a, b, c]);
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut stack = vec![(0usize, Vec::<[u32; 3]>::new(), vec![0usize; totals.len()])];
    while let Some((from, cur, counts)) = stack.pop() {
        if cur.len() == m {
            if counts == totals {
                out.push(cur);
            }
            continue;
        }
        for (k, t) in all.iter().enumerate().skip(from) {
            let mut next = counts.clone();
            let mut fits = true;
            for &i in t.iter().filter(|&&i| is_var(i)) {
                next[i as usize - 1] += 1;
                fits &= next[i as usize - 1] <= totals[i as usize - 1];
            }
            if fits {
                let mut c = cur.clone();
                c.push(*t);
                stack.push((k, c, next));
            }
        }
    }
    out
}

fn monotone(p: usize, q: usize, spec: &[[u32; 3]]) -> QuantifiedFormula {
    let clauses = spec.iter().map(|c| c.iter().map(|&i| atom(i)).collect()).collect();
    qbf(p as u32, q as u32, clauses, Semantics::Nae)
}

/// In-class instances for shapes (p, s, q, t, m): p universals with s
/// appearances, q existentials with t appearances, m clauses.
fn class_sweep(class: &str, shapes: &[(usize, usize, usize, usize, usize)]) -> Vec<QuantifiedFormula> {
    let spec = ClassSpec::named(class).unwrap();
    let mut out = Vec::new();
    for &(p, s, q, t, m) in shapes {
        let mut totals = vec![s; p];
        totals.extend(vec![t; q]);
        let alphabet: Vec<u32> = (1..=(p + q) as u32).collect();
        for seq in triples(&alphabet, &totals, m) {
            let f = monotone(p, q, &seq);
            if validate_class(&f, &spec).passed() {
                out.push(f);
            }
        }
    }
    out
}

fn random_class(class: &str, p: usize, q: usize, count: usize) -> Vec<QuantifiedFormula> {
    let out: Vec<_> = (0..10 * count as u64)
        .filter_map(|seed| generate(30_000 + seed, Some(class), p, q, 0, Semantics::Nae))
        .take(count)
        .collect();
    assert_eq!(out.len(), count, "{class}: generator yielded {} instances", out.len());
    out
}

#[test]
fn decider_oracle_agreement() {
    criterion("decider-oracle agreement", || {
        let mut detail = Vec::new();

        // MC-NAE-2: every variable twice, constants anywhere.
        let mut n_mc = 0;
        for m in 1..=4 {
            for n in 0..=(3 * m / 2).min(6) {
                let mut alphabet: Vec<u32> = (1..=n as u32).collect();
                alphabet.extend([F, T]);
                for seq in triples(&alphabet, &vec![2; n], m) {
                    let clauses = seq.iter().map(|c| Clause::new(c.iter().map(|&i| atom(i)).collect()).unwrap()).collect();
                    let f = QuantifiedFormula::existential(clauses, Semantics::Nae).with_constants_allowed(true).unwrap();
                    let want = brute::forall_exists(&f);
                    let got = decide_mc_nae2(&f).map_err(|e| format!("mc-nae2: {e}"))?;
                    ensure(got.answer.is_yes() == want, || format!("mc-nae2 on {seq:?}: {} vs {want}", got.answer))?;
                    n_mc += 1;
                }
            }
        }
        detail.push(format!("mc-nae2 {n_mc}"));

        let agree = |name: &str, f: &QuantifiedFormula, got: bool| -> Result<(), String> {
            let want = brute::forall_exists(f);
            let lib = decide_forall_exists(f, budget()).map_err(|e| e.to_string())?.is_yes();
            ensure(got == want && lib == want, || format!("{name} on {f:?}: decider {got}, brute {want}, oracle {lib}"))
        };

        let s1 = class_sweep("mono-s1", &[(3, 1, 3, 1, 2), (2, 2, 2, 1, 2), (4, 1, 2, 1, 2), (3, 2, 3, 1, 3)]);
        let s1_random = random_class("mono-s1", 2, 4, 200);
        for f in s1.iter().chain(&s1_random) {
            let v = decide_monotone_s1(f).map_err(|e| e.to_string())?;
            agree("s1", f, v.answer.is_yes())?;
        }
        detail.push(format!("s1 {}+200", s1.len()));

        let s21 = class_sweep("mono-s2-1u", &[(1, 2, 2, 2, 2), (2, 1, 2, 2, 2), (3, 1, 3, 2, 3), (2, 2, 4, 2, 4)]);
        let s21_random = random_class("mono-s2-1u", 2, 5, 200);
        for f in s21.iter().chain(&s21_random) {
            let v = decide_monotone_s2_one_universal(f).map_err(|e| e.to_string())?;
            ensure(v.answer == VerdictAnswer::TrivialYes, || format!("s2-1u answered {}", v.answer))?;
            agree("s2-1u", f, v.answer.is_yes())?;
        }
        detail.push(format!("s2-1u {}+200", s21.len()));

        let m12 = class_sweep("mono-12", &[(3, 1, 0, 2, 1), (2, 1, 2, 2, 2), (1, 1, 4, 2, 3), (3, 1, 3, 2, 3), (4, 1, 4, 2, 4)]);
        let m12_random = random_class("mono-12", 3, 3, 200);
        for f in m12.iter().chain(&m12_random) {
            let v = decide_monotone_12(f).map_err(|e| e.to_string())?;
            agree("mono-12", f, v.answer.is_yes())?;
            if let Some(c) = &v.certificate {
                ensure(brute::extension(f, c).is_none(), || format!("mono-12 certificate {c:?} extends in {f:?}"))?;
            }
        }
        detail.push(format!("mono-12 {}+200", m12.len()));

        // Refutation: every universal assignment of each instance.
        let s2 = class_sweep("mono-s2", &[(2, 2, 2, 2, 3), (3, 1, 3, 2, 3), (2, 2, 4, 2, 4), (4, 1, 4, 2, 4)]);
        let s2_random = random_class("mono-s2", 3, 3, 200);
        let mut cases = 0;
        for f in s2.iter().chain(&s2_random) {
            let mut refuted = false;
            for alpha in brute::universal_cases(f) {
                let r = refute_monotone_s2(f, &alpha).map_err(|e| e.to_string())?;
                ensure(r == brute::extension(f, &alpha).is_none(), || format!("refute on {f:?} at {alpha:?}: {r}"))?;
                refuted |= r;
                cases += 1;
            }
            agree("refute", f, !refuted)?;
        }
        detail.push(format!("refute {}+200 ({cases} universal cases)", s2.len()));
        Ok(detail.join(", "))
    });
}

// ------------------------------------------------------------- arithmetic

#[test]
fn reduction_arithmetic() {
    criterion("reduction arithmetic", || {
        let runs = class_runs();
        let (mut q1, mut q3, mut m13) = (0, 0, 0);
        for run in runs {
            let r = &run.result;
            match run.route {
                "nae-to-b2222" => {
                    let st = r.stages.iter().find(|s| s.route == "balance-q1").ok_or("no balance-q1 stage")?;
                    let (pu, pe) = (st.source.universals().len() as i64, st.source.existentials().len() as i64);
                    let want = 5 * pe - 4 * pu;
                    let (u, e) = (st.target.universals().len() as i64, st.target.existentials().len() as i64);
                    ensure(u == want && e == want, || format!("balance-q1: {u} universals, {e} existentials, want {want}"))?;
                    q1 += 1;
                }
                "b2222-to-b1122" => {
                    let p = r.source().universals().len();
                    let st = r.stages.iter().find(|s| s.route == "balance-q3").ok_or("no balance-q3 stage")?;
                    let (pu, pe) = (st.source.universals().len(), st.source.existentials().len());
                    ensure(pe == 27 * p && pu == p, || format!("before balancing: p_e {pe}, p_u {pu}, p {p}"))?;
                    ensure(st.target.universals().len() == st.target.existentials().len(), || "unbalanced after Q3".into())?;
                    q3 += 1;
                }
                "mono14-to-mono13" => {
                    let (s, t) = (r.source(), r.target());
                    let n = s.existentials().len();
                    ensure(t.matrix().len() == s.matrix().len() + 20 * n, || format!("clauses {} from {} with n {n}", t.matrix().len(), s.matrix().len()))?;
                    ensure(t.existentials().len() == 16 * n, || format!("existentials {}", t.existentials().len()))?;
                    ensure(t.universals().len() == s.universals().len() + 16 * n, || format!("universals {}", t.universals().len()))?;
                    m13 += 1;
                }
                _ => {}
            }
        }
        ensure(q1 == 50 && q3 == 50 && m13 == 50, || format!("runs: {q1} {q3} {m13}"))?;
        Ok("50 runs each of Q1 balancing, the 27p split with Q3 balancing, and the mono13 gadget".into())
    });
}

// -------------------------------------------------------------------- io

fn fixtures(dir: &str) -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(dir);
    let mut out: Vec<PathBuf> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    out.sort();
    out
}

#[test]
fn io_round_trip() {
    criterion("io round trip", || {
        let (mut good, mut exported, mut bad) = (0, 0, 0);
        for path in fixtures("good") {
            let text = std::fs::read_to_string(&path).unwrap();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let f = if name.ends_with(".qdimacs") {
                parse_qdimacs(&text).map_err(|e| format!("{name}: {e}"))?
            } else {
                let doc = QextDocument::parse(&text).map_err(|e| format!("{name}: {e}"))?;
                ensure(doc.serialize() == text, || format!("{name}: not byte-identical after re-serialization"))?;
                doc.formula
            };
            let again = parse_qext(&serialize_qext(&f)).map_err(|e| format!("{name}: {e}"))?;
            ensure(again == f, || format!("{name}: parse . serialize changed the formula"))?;
            if let Ok(q) = export_qdimacs(&f) {
                let back = parse_qdimacs(&q).map_err(|e| format!("{name}: re-import: {e}"))?;
                ensure(back == f, || format!("{name}: QDIMACS re-import differs"))?;
                exported += 1;
            }
            good += 1;
        }
        for path in fixtures("bad") {
            let text = std::fs::read_to_string(&path).unwrap();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let expect = text.lines().next().and_then(|l| l.strip_prefix("c expect ")).ok_or(format!("{name}: no expectation"))?;
            let (l, c) = expect.split_once(':').unwrap();
            let want = (l.trim().parse::<usize>().unwrap(), c.trim().parse::<usize>().unwrap());
            let result = if name.ends_with(".qdimacs") { parse_qdimacs(&text) } else { parse_qext(&text) };
            match result {
                Err(IoError::Parse { line, column, .. }) => {
                    ensure((line, column) == want, || format!("{name}: rejected at {line}:{column}, expected {}:{}", want.0, want.1))?
                }
                Err(e) => return Err(format!("{name}: unlocated error {e}")),
                Ok(_) => return Err(format!("{name}: accepted")),
            }
            bad += 1;
        }
        Ok(format!("{good} good fixtures round-trip ({exported} through QDIMACS), {bad} malformed fixtures rejected at their locations"))
    });
}
