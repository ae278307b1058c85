use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IoError;
use crate::formula::{validate_class, Atom, Clause, ClassSpec, Lit, QuantifiedFormula, Semantics, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub universals: usize,
    pub existentials: usize,
    /// Clause count; 0 lets a class with a fixed literal budget pick it.
    pub clauses: usize,
    /// Named class (see [`ClassSpec::named`]); `None` draws unrestricted
    /// 3-clauses.
    pub class: Option<String>,
    /// Used only when `class` is `None`.
    pub semantics: Semantics,
    /// Appearances per universal for classes that leave it open.
    pub universal_appearances: usize,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            universals: 1,
            existentials: 3,
            clauses: 3,
            class: None,
            semantics: Semantics::Nae,
            universal_appearances: 1,
            max_attempts: 10_000,
        }
    }
}

/// What one attempt draws: a pool of atoms and the clause lengths to cut it
/// into.
struct Plan {
    pool: Vec<Atom>,
    lengths: Vec<usize>,
    semantics: Semantics,
    constants: bool,
}

fn vars(from: usize, n: usize) -> impl Iterator<Item = Var> {
    (from + 1..=from + n).map(|i| Var::new(i as u32))
}

fn push(pool: &mut Vec<Atom>, v: Var, unnegated: usize, negated: usize) {
    pool.extend(std::iter::repeat(Atom::from(v.pos())).take(unnegated));
    pool.extend(std::iter::repeat(Atom::from(v.neg())).take(negated));
}

fn fail(cfg: &GeneratorConfig, class: &str, hint: String) -> IoError {
    IoError::Generation {
        class: class.to_string(),
        attempts: 0,
        hint: format!("{hint} (asked for p={}, q={}, m={})", cfg.universals, cfg.existentials, cfg.clauses),
    }
}

/// Uses the requested clause count if it matches `needed`.
fn clause_count(cfg: &GeneratorConfig, class: &str, needed: usize) -> Result<usize, IoError> {
    if cfg.clauses != 0 && cfg.clauses != needed {
        return Err(fail(cfg, class, format!("this class needs m = {needed}")));
    }
    Ok(needed)
}

fn plan(cfg: &GeneratorConfig, spec: &ClassSpec, rng: &mut ChaCha8Rng) -> Result<Plan, IoError> {
    let (p, q) = (cfg.universals, cfg.existentials);
    let class = spec.name.as_str();
    let semantics = spec.semantics.unwrap_or(cfg.semantics);
    if spec.balanced && p != q {
        return Err(fail(cfg, class, "balanced classes need p = q".into()));
    }
    if spec.no_universals && p != 0 {
        return Err(fail(cfg, class, "this class has no universals; use p = 0".into()));
    }
    let mut pool = Vec::new();
    if let Some(pr) = spec.profile {
        vars(0, p).for_each(|v| push(&mut pool, v, pr.s1, pr.s2));
        vars(p, q).for_each(|v| push(&mut pool, v, pr.t1, pr.t2));
    } else if let Some(allowed) = &spec.existential_profiles {
        for v in vars(0, q) {
            let (u, n) = *allowed.choose(rng).expect("non-empty profile list");
            push(&mut pool, v, u, n);
        }
    } else {
        let s = spec.universal_total.unwrap_or(cfg.universal_appearances);
        let t = spec.existential_total.unwrap_or(2);
        vars(0, p).for_each(|v| push(&mut pool, v, s, 0));
        vars(p, q).for_each(|v| push(&mut pool, v, t, 0));
    }
    let l = pool.len();
    let lengths = match spec.clause_len {
        Some((2, 3)) => {
            // k 2-clauses and m - k 3-clauses hold 3m - k literals, so m
            // ranges over ceil(l/3)..=floor(l/2).
            let (lo, hi) = (l.div_ceil(3), l / 2);
            let m = match cfg.clauses {
                0 if lo <= hi => rng.gen_range(lo..=hi),
                0 => lo,
                m => m,
            };
            if m < lo || m > hi {
                return Err(fail(cfg, class, format!("{l} literals need m in {lo}..={hi}")));
            }
            let k = 3 * m - l;
            let mut lengths = vec![2; k];
            lengths.extend(vec![3; m - k]);
            lengths.shuffle(rng);
            lengths
        }
        _ if !spec.no_constants => {
            // Fill the remaining positions with constants.
            let m = clause_count(cfg, class, l.div_ceil(3).max(1))?;
            if 3 * m < l {
                return Err(fail(cfg, class, format!("{l} literals need at least {} clauses", l.div_ceil(3))));
            }
            for _ in l..3 * m {
                pool.push(Atom::Const(rng.gen()));
            }
            vec![3; m]
        }
        _ => {
            if l % 3 != 0 {
                return Err(fail(cfg, class, format!("{l} literal positions is not a multiple of 3")));
            }
            vec![3; clause_count(cfg, class, l / 3)?]
        }
    };
    Ok(Plan {
        pool,
        lengths,
        semantics,
        constants: !spec.no_constants,
    })
}

fn unrestricted(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<QuantifiedFormula, IoError> {
    let n = cfg.universals + cfg.existentials;
    if n == 0 && cfg.clauses > 0 {
        return Err(fail(cfg, "any", "clauses need at least one variable".into()));
    }
    let clauses = (0..cfg.clauses)
        .map(|_| {
            let atoms = (0..3)
                .map(|_| Atom::from(Lit::new(Var::new(rng.gen_range(1..=n) as u32), rng.gen())))
                .collect();
            Clause::new(atoms)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QuantifiedFormula::new(
        vars(0, cfg.universals).collect(),
        vars(cfg.universals, cfg.existentials).collect(),
        clauses,
        cfg.semantics,
    )?)
}

/// Draws a random instance; with a class, rejection-samples until the
/// instance passes its validator. Equal configs give equal instances.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<QuantifiedFormula, IoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let Some(name) = &cfg.class else {
        return unrestricted(cfg, &mut rng);
    };
    let spec = ClassSpec::named(name).ok_or_else(|| fail(cfg, name, "unknown class name".into()))?;
    for _ in 0..cfg.max_attempts {
        let Plan {
            mut pool,
            lengths,
            semantics,
            constants,
        } = plan(cfg, &spec, &mut rng)?;
        pool.shuffle(&mut rng);
        let mut rest = pool.as_slice();
        let mut clauses = Vec::with_capacity(lengths.len());
        for len in lengths {
            let (head, tail) = rest.split_at(len);
            clauses.push(Clause::new(head.to_vec())?);
            rest = tail;
        }
        let f = QuantifiedFormula::new(
            vars(0, cfg.universals).collect(),
            vars(cfg.universals, cfg.existentials).collect(),
            clauses,
            semantics,
        )?
        .with_constants_allowed(constants)?;
        if validate_class(&f, &spec).passed() {
            return Ok(f);
        }
    }
    Err(IoError::Generation {
        class: name.clone(),
        attempts: cfg.max_attempts,
        hint: "try fewer variables or a different seed".into(),
    })
}
