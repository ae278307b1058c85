//! A small CDCL solver: two watched literals, first-UIP learning, activity
//! ordering with phase saving, Luby restarts and solving under assumptions.
//!
//! Literals are encoded as `2 * var + sign` over 0-based variables.

use super::Meter;
use super::OracleError;

pub(crate) type SatLit = u32;

pub(crate) fn mk_lit(var: u32, negated: bool) -> SatLit {
    2 * var + negated as u32
}

fn var_of(l: SatLit) -> usize {
    (l >> 1) as usize
}

const NO_REASON: u32 = u32::MAX;
const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

pub(crate) struct Solver {
    clauses: Vec<Vec<SatLit>>,
    watches: Vec<Vec<u32>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<SatLit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
}

impl Solver {
    pub fn new(num_vars: usize) -> Solver {
        let mut s = Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
        };
        s.reserve_vars(num_vars);
        s
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    /// Grows the variable set to at least `n` variables.
    pub fn reserve_vars(&mut self, n: usize) {
        while self.assigns.len() < n {
            let v = self.assigns.len();
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(NO_REASON);
            self.activity.push(0.0);
            // Phase `true` means "assign negatively", so search tries F first.
            self.phase.push(true);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.heap.insert(v, &self.activity);
        }
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.num_vars();
        self.reserve_vars(v + 1);
        v as u32
    }

    fn value(&self, l: SatLit) -> i8 {
        let a = self.assigns[var_of(l)];
        if l & 1 == 1 {
            -a
        } else {
            a
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause at decision level 0. Returns false once the clause set is
    /// known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[SatLit]) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return false;
        }
        let mut c: Vec<SatLit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == l ^ 1 {
                return true;
            }
            match self.value(l) {
                TRUE => return true,
                FALSE => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NO_REASON);
                self.ok = self.propagate().is_none();
                self.ok
            }
            _ => {
                self.attach(out);
                true
            }
        }
    }

    fn attach(&mut self, c: Vec<SatLit>) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[c[0] as usize].push(cref);
        self.watches[c[1] as usize].push(cref);
        self.clauses.push(c);
        cref
    }

    fn enqueue(&mut self, l: SatLit, reason: u32) {
        let v = var_of(l);
        self.assigns[v] = if l & 1 == 1 { FALSE } else { TRUE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let false_lit = self.trail[self.qhead] ^ 1;
            self.qhead += 1;
            let ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut kept = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let cref = ws[i];
                i += 1;
                let c = &mut self.clauses[cref as usize];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                if value_in(&self.assigns, first) == TRUE {
                    kept.push(cref);
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    if value_in(&self.assigns, c[k]) != FALSE {
                        c.swap(1, k);
                        let w = c[1] as usize;
                        self.watches[w].push(cref);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(cref);
                if value_in(&self.assigns, first) == FALSE {
                    conflict = Some(cref);
                    kept.extend_from_slice(&ws[i..]);
                    break;
                }
                self.enqueue(first, cref);
            }
            self.watches[false_lit as usize] = kept;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increase(v, &self.activity);
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<SatLit>, u32) {
        let mut learnt: Vec<SatLit> = vec![0];
        let mut path = 0usize;
        let mut p: Option<SatLit> = None;
        let mut idx = self.trail.len();
        let dl = self.decision_level();
        loop {
            let start = usize::from(p.is_some());
            let clause = std::mem::take(&mut self.clauses[confl as usize]);
            for &q in &clause[start..] {
                let v = var_of(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            self.clauses[confl as usize] = clause;
            loop {
                idx -= 1;
                if self.seen[var_of(self.trail[idx])] {
                    break;
                }
            }
            let lit = self.trail[idx];
            let v = var_of(lit);
            self.seen[v] = false;
            path -= 1;
            p = Some(lit);
            if path == 0 {
                break;
            }
            confl = self.reason[v];
        }
        learnt[0] = p.unwrap() ^ 1;
        for &l in &learnt[1..] {
            self.seen[var_of(l)] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[var_of(learnt[i])] > self.level[var_of(learnt[max_i])] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[var_of(learnt[1])];
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for &l in self.trail[lim..].iter().rev() {
            let v = var_of(l);
            self.phase[v] = l & 1 == 1;
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            if !self.heap.contains(v) {
                self.heap.insert(v, &self.activity);
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<SatLit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(mk_lit(v as u32, self.phase[v]));
            }
        }
        None
    }

    /// Solves under `assumptions`. On `Ok(true)` the model is available via
    /// [`Solver::model_value`]. The solver returns to level 0 either way.
    pub fn solve(&mut self, assumptions: &[SatLit], meter: &mut Meter) -> Result<bool, OracleError> {
        if !self.ok {
            return Ok(false);
        }
        let mut restart = 0u32;
        loop {
            let limit = 100 * luby(restart);
            restart += 1;
            match self.search(assumptions, limit, meter) {
                Ok(Some(result)) => {
                    self.cancel_until(0);
                    return Ok(result);
                }
                Ok(None) => self.cancel_until(0),
                Err(e) => {
                    self.cancel_until(0);
                    return Err(e);
                }
            }
        }
    }

    fn search(
        &mut self,
        assumptions: &[SatLit],
        conflict_limit: u64,
        meter: &mut Meter,
    ) -> Result<Option<bool>, OracleError> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                meter.tick()?;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Ok(Some(false));
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt);
                    self.enqueue(first, cref);
                }
                self.var_inc /= 0.95;
                continue;
            }
            if conflicts >= conflict_limit {
                return Ok(None);
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let a = assumptions[self.decision_level() as usize];
                match self.value(a) {
                    TRUE => self.trail_lim.push(self.trail.len()),
                    FALSE => return Ok(Some(false)),
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let lit = match next {
                Some(a) => a,
                None => match self.pick_branch() {
                    Some(l) => l,
                    None => {
                        self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
                        return Ok(Some(true));
                    }
                },
            };
            meter.tick()?;
            self.trail_lim.push(self.trail.len());
            self.enqueue(lit, NO_REASON);
        }
    }

    pub fn model_value(&self, var: u32) -> bool {
        self.model.get(var as usize).copied().unwrap_or(false)
    }
}

fn value_in(assigns: &[i8], l: SatLit) -> i8 {
    let a = assigns[var_of(l)];
    if l & 1 == 1 {
        -a
    } else {
        a
    }
}

fn luby(i: u32) -> u64 {
    // Finite prefix of 1,1,2,1,1,2,4,...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < u64::from(i) + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut i = u64::from(i);
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

/// Max-heap of variables keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl VarHeap {
    fn contains(&self, v: usize) -> bool {
        self.pos.get(v).is_some_and(|&p| p != ABSENT)
    }

    fn better(act: &[f64], a: usize, b: usize) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.pos.len() <= v {
            self.pos.resize(v + 1, ABSENT);
        }
        self.pos[v] = self.heap.len();
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn increase(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::better(act, v, self.heap[parent]) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i]] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && Self::better(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !Self::better(act, self.heap[c], v) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i]] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }
}
