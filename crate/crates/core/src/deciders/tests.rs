use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::formula::{Atom, Clause, QuantifiedFormula, Semantics, Var};
use crate::io::{generate_instance, GeneratorConfig};
use crate::oracle::{decide_forall_exists, decide_forall_exists_fixed, decide_matrix, Budget};

const F: u32 = 1000;
const T: u32 = 1001;

fn atom(i: u32) -> Atom {
    match i {
        F => Atom::Const(false),
        T => Atom::Const(true),
        _ => Var::new(i).pos().into(),
    }
}

fn clauses(spec: &[[u32; 3]]) -> Vec<Clause> {
    spec.iter()
        .map(|c| Clause::new(c.iter().map(|&i| atom(i)).collect()).unwrap())
        .collect()
}

fn mc(spec: &[[u32; 3]]) -> QuantifiedFormula {
    QuantifiedFormula::existential(clauses(spec), Semantics::Nae)
        .with_constants_allowed(true)
        .unwrap()
}

fn qbf(p: u32, q: u32, spec: &[[u32; 3]]) -> QuantifiedFormula {
    QuantifiedFormula::new(
        (1..=p).map(Var::new).collect(),
        (p + 1..=p + q).map(Var::new).collect(),
        clauses(spec),
        Semantics::Nae,
    )
    .unwrap()
}

fn oracle_nae(matrix: &[Clause]) -> bool {
    decide_matrix(matrix, Semantics::Nae, Budget::default()).unwrap().is_yes()
}

fn oracle(f: &QuantifiedFormula) -> bool {
    decide_forall_exists(f, Budget::default()).unwrap().is_yes()
}

/// Every nondecreasing sequence of `m` sorted triples over `alphabet` in
/// which variable `v` (ids `1..=totals.len()`) appears exactly
/// `totals[v - 1]` times. Constants may repeat inside a triple.
fn sweep(alphabet: &[u32], totals: &[usize], m: usize) -> Vec<Vec<[u32; 3]>> {
    let is_var = |i: u32| (i as usize) <= totals.len();
    let mut triples = Vec::new();
    for (x, &a) in alphabet.iter().enumerate() {
        for (y, &b) in alphabet.iter().enumerate().skip(x) {
            for &c in &alphabet[y..] {
                let dup = (a == b && is_var(a)) || (b == c && is_var(b));
                if !dup {
                    triples.push([a, b, c]);
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut counts = vec![0; totals.len()];
    let mut cur = Vec::new();
    fn go(
        triples: &[[u32; 3]],
        from: usize,
        m: usize,
        totals: &[usize],
        counts: &mut [usize],
        cur: &mut Vec<[u32; 3]>,
        out: &mut Vec<Vec<[u32; 3]>>,
    ) {
        if cur.len() == m {
            if counts == totals {
                out.push(cur.clone());
            }
            return;
        }
        for (k, t) in triples.iter().enumerate().skip(from) {
            let vars: Vec<usize> = t.iter().map(|&i| i as usize).filter(|&i| i <= totals.len()).collect();
            if vars.iter().any(|&i| counts[i - 1] == totals[i - 1]) {
                continue;
            }
            vars.iter().for_each(|&i| counts[i - 1] += 1);
            cur.push(*t);
            go(triples, k, m, totals, counts, cur, out);
            cur.pop();
            vars.iter().for_each(|&i| counts[i - 1] -= 1);
        }
    }
    go(&triples, 0, m, totals, &mut counts, &mut cur, &mut out);
    out
}

fn mc_sweep(max_m: usize) -> Vec<QuantifiedFormula> {
    let mut all = Vec::new();
    for m in 1..=max_m {
        for n in 0..=(3 * m / 2).min(6) {
            let mut alphabet: Vec<u32> = (1..=n as u32).collect();
            alphabet.extend([F, T]);
            for s in sweep(&alphabet, &vec![2; n], m) {
                all.push(mc(&s));
            }
        }
    }
    all
}

#[test]
fn empty_instance_is_yes() {
    let v = decide_mc_nae2(&mc(&[])).unwrap();
    assert_eq!(v.answer, VerdictAnswer::Yes);
}

#[test]
fn three_equal_constants_is_no() {
    let v = decide_mc_nae2(&mc(&[[T, T, T]])).unwrap();
    assert_eq!(v.answer, VerdictAnswer::No);
    assert_eq!(v.rule, "mc-nae2/equal-constants");
}

#[test]
fn constant_pairs_need_a_fixpoint() {
    // x=T forces y=F forces z=T, which leaves (T T T).
    let f = mc(&[[1, F, F], [1, 2, T], [2, 3, F], [3, T, T]]);
    let t = trace_mc_nae2(&f).unwrap();
    assert_eq!(t.verdict.answer, VerdictAnswer::No);
    assert_eq!(t.substitutions, vec![(Var::new(1), true), (Var::new(2), false), (Var::new(3), true)]);
    assert!(!oracle_nae(f.matrix()));
}

#[test]
fn odd_cycle_with_constants_is_yes() {
    let f = mc(&[[1, 2, T], [2, 3, F], [1, 3, T]]);
    let t = trace_mc_nae2(&f).unwrap();
    assert_eq!(t.verdict.answer, VerdictAnswer::Yes);
    let g = t.graph.unwrap();
    assert_eq!(g.odd_cycles().count(), 1);
    assert!(oracle_nae(f.matrix()));
}

#[test]
fn clause_graph_preconditions() {
    let shared = clauses(&[[1, 2, 3], [1, 2, 4]]);
    assert!(ClauseGraph::build(&shared).is_none());
    let once = clauses(&[[1, 2, 3]]);
    assert!(ClauseGraph::build(&once).is_none());
    // K4 on four 3-clauses: every pair shares exactly one variable.
    let k4 = clauses(&[[1, 2, 3], [1, 4, 5], [2, 4, 6], [3, 5, 6]]);
    let g = ClauseGraph::build(&k4).unwrap();
    assert_eq!(g.edges.len(), 6);
    assert_eq!(g.components.len(), 1);
    assert_eq!(g.components[0].kind, ComponentKind::Other);
}

#[test]
fn mc_nae2_rejects_other_classes() {
    let thrice = mc(&[[1, 2, T], [1, 2, F], [1, 3, T]]);
    assert!(matches!(decide_mc_nae2(&thrice), Err(DeciderError::ClassViolation { .. })));
}

#[test]
fn mc_nae2_matches_oracle_and_each_step_preserves_the_verdict() {
    let all = mc_sweep(4);
    assert!(all.len() > 1000, "{}", all.len());
    let (mut yes, mut no) = (0, 0);
    for f in &all {
        let expected = oracle_nae(f.matrix());
        let t = trace_mc_nae2(f).unwrap();
        assert_eq!(t.verdict.answer.is_yes(), expected, "{f:?}");
        assert_eq!(t.proviso_hits, 0, "{f:?}");
        for s in &t.snapshots {
            assert_eq!(oracle_nae(&s.clauses), expected, "after {} on {f:?}", s.step);
        }
        if expected {
            yes += 1;
        } else {
            no += 1;
        }
    }
    assert!(yes > 0 && no > 0);
}

#[test]
fn s1_decides_by_existential_presence() {
    let mixed = qbf(3, 3, &[[1, 2, 4], [3, 5, 6]]);
    let v = decide_monotone_s1(&mixed).unwrap();
    assert_eq!(v.answer, VerdictAnswer::Yes);
    assert!(oracle(&mixed));

    let f = qbf(3, 3, &[[1, 2, 3], [4, 5, 6]]);
    let v = decide_monotone_s1(&f).unwrap();
    assert_eq!(v.answer, VerdictAnswer::No);
    let cert = v.certificate.unwrap();
    assert!(verify_certificate(&f, &cert).unwrap());
    assert!(!decide_forall_exists_fixed(&f, &cert, Budget::default()).unwrap().is_yes());
}

fn forall_exists_sweep(class: &str, shapes: &[(usize, usize, usize, usize, usize)]) -> Vec<QuantifiedFormula> {
    let spec = crate::formula::ClassSpec::named(class).unwrap();
    let mut all = Vec::new();
    for &(p, s, q, t, m) in shapes {
        let mut totals = vec![s; p];
        totals.extend(vec![t; q]);
        let alphabet: Vec<u32> = (1..=(p + q) as u32).collect();
        for seq in sweep(&alphabet, &totals, m) {
            let f = qbf(p as u32, q as u32, &seq);
            if crate::formula::validate_class(&f, &spec).passed() {
                all.push(f);
            }
        }
    }
    assert!(!all.is_empty(), "{class}");
    all
}

#[test]
fn s1_matches_oracle() {
    let all = forall_exists_sweep("mono-s1", &[(3, 1, 3, 1, 2), (2, 2, 2, 1, 2), (4, 1, 2, 1, 2), (3, 2, 3, 1, 3)]);
    let mut no = 0;
    for f in &all {
        let v = decide_monotone_s1(f).unwrap();
        assert_eq!(v.answer.is_yes(), oracle(f), "{f:?}");
        if let Some(c) = &v.certificate {
            no += 1;
            assert!(verify_certificate(f, c).unwrap());
        }
    }
    assert!(no > 0);
}

#[test]
fn s2_one_universal_is_always_yes() {
    assert_eq!(decide_monotone_s2_one_universal(&qbf(0, 0, &[])).unwrap().answer, VerdictAnswer::TrivialYes);
    let all = forall_exists_sweep("mono-s2-1u", &[(1, 2, 2, 2, 2), (2, 1, 2, 2, 2), (3, 1, 3, 2, 3), (2, 2, 4, 2, 4)]);
    for f in &all {
        assert_eq!(decide_monotone_s2_one_universal(f).unwrap().answer, VerdictAnswer::TrivialYes);
        assert!(oracle(f), "{f:?}");
    }
}

fn mono12_sweep() -> Vec<QuantifiedFormula> {
    forall_exists_sweep("mono-12", &[(3, 1, 0, 2, 1), (2, 1, 2, 2, 2), (1, 1, 4, 2, 3), (3, 1, 3, 2, 3), (4, 1, 4, 2, 4)])
}

#[test]
fn mono12_base_cases() {
    let f = qbf(3, 0, &[[1, 2, 3]]);
    let v = decide_monotone_12(&f).unwrap();
    assert_eq!((v.answer, v.rule), (VerdictAnswer::No, "mono-12/three-universals"));
    let f = qbf(1, 4, &[[1, 2, 3], [2, 4, 5], [3, 4, 5]]);
    let v = decide_monotone_12(&f).unwrap();
    assert_eq!(v.answer, VerdictAnswer::Yes);
    assert!(v.detail.starts_with("0 promotions"));
}

#[test]
fn mono12_matches_oracle_with_checked_certificates() {
    let (mut yes, mut no) = (0, 0);
    for f in &mono12_sweep() {
        let v = decide_monotone_12(f).unwrap();
        assert_eq!(v.answer.is_yes(), oracle(f), "{f:?}");
        if let Some(c) = &v.certificate {
            no += 1;
            assert!(refute_monotone_s2(f, c).unwrap(), "{f:?} {c:?}");
            assert!(!decide_forall_exists_fixed(f, c, Budget::default()).unwrap().is_yes());
        } else {
            yes += 1;
        }
    }
    assert!(yes > 0 && no > 0);
}

#[test]
fn single_promotion_preserves_the_verdict() {
    let mut promoted = 0;
    for f in &mono12_sweep() {
        if let Promotion::Promoted { formula, .. } = promotion_step(f).unwrap() {
            promoted += 1;
            assert_eq!(oracle(&formula), oracle(f), "{f:?}");
        }
    }
    assert!(promoted > 0);
}

#[test]
fn mono12_verdict_ignores_clause_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in &mono12_sweep() {
        let expected = decide_monotone_12(f).unwrap().answer;
        for _ in 0..3 {
            let mut m = f.matrix().to_vec();
            m.shuffle(&mut rng);
            assert_eq!(decide_monotone_12(&f.with_matrix(m).unwrap()).unwrap().answer, expected);
        }
    }
}

#[test]
fn refutation_substitutes_constants() {
    let f = qbf(1, 2, &[[1, 2, 3]]);
    let rest = monotone::substitute_universals(&f, &crate::Assignment::from_pairs([(Var::new(1), true)])).unwrap();
    assert_eq!(rest.matrix(), &clauses(&[[T, 2, 3]])[..]);
}

#[test]
fn refutation_agrees_with_extension_search() {
    let all = forall_exists_sweep("mono-s2", &[(2, 2, 2, 2, 3), (3, 1, 3, 2, 3), (2, 2, 4, 2, 4), (4, 1, 4, 2, 4)]);
    let mut refuted = 0;
    for f in &all {
        let p = f.universals().len();
        for bits in 0..1u32 << p {
            let a = crate::Assignment::from_pairs(f.universals().iter().enumerate().map(|(i, &u)| (u, bits >> i & 1 == 1)));
            let extends = decide_forall_exists_fixed(f, &a, Budget::default()).unwrap().is_yes();
            let r = refute_monotone_s2(f, &a).unwrap();
            assert_eq!(r, !extends, "{f:?} {a:?}");
            refuted += usize::from(r);
        }
        let v = decide_forall_exists(f, Budget::default()).unwrap();
        if let Some(c) = v.counterexample {
            assert!(refute_monotone_s2(f, &c).unwrap());
        }
    }
    assert!(refuted > 0);
}

#[test]
fn random_instances_agree_with_oracle() {
    for seed in 0..20 {
        for (class, p, q) in [("mono-s1", 2, 4), ("mono-s2-1u", 2, 5), ("mono-12", 3, 3), ("mc-nae2", 0, 5)] {
            let cfg = GeneratorConfig {
                seed,
                universals: p,
                existentials: q,
                clauses: 0,
                class: Some(class.into()),
                ..GeneratorConfig::default()
            };
            let f = generate_instance(&cfg).unwrap();
            let v = decide_poly(&f).unwrap().unwrap();
            assert_eq!(v.answer.is_yes(), oracle(&f), "{class} {f:?}");
        }
    }
}

#[test]
fn dispatch_skips_unknown_classes() {
    let f = qbf(2, 1, &[[1, 2, 3], [1, 2, 3]]);
    assert!(decide_poly(&f).unwrap().is_none());
}
