use std::collections::BTreeMap;

use serde::Serialize;

use crate::formula::{Clause, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    OddCycle,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Component {
    /// Vertex indices, ascending.
    pub vertices: Vec<usize>,
    pub kind: ComponentKind,
}

/// Vertices are clauses; two clauses are adjacent when they share a
/// variable. Constants are ignored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseGraph {
    pub vertices: usize,
    /// `(a, b, shared)` with `a < b`.
    pub edges: Vec<(usize, usize, Var)>,
    pub components: Vec<Component>,
}

impl ClauseGraph {
    /// `None` unless the clauses are linear and monotone, every variable
    /// appears exactly twice, and every clause has at least two distinct
    /// variables.
    pub fn build(clauses: &[Clause]) -> Option<ClauseGraph> {
        let mut occ: BTreeMap<Var, Vec<usize>> = BTreeMap::new();
        for (j, c) in clauses.iter().enumerate() {
            if !c.is_monotone() || !c.has_distinct_vars() || c.vars().count() < 2 {
                return None;
            }
            for v in c.vars() {
                occ.entry(v).or_default().push(j);
            }
        }
        let mut edges = Vec::with_capacity(occ.len());
        let mut seen = BTreeMap::new();
        for (&v, js) in &occ {
            let &[a, b] = js.as_slice() else { return None };
            // Linear: no two clauses share two variables.
            if seen.insert((a, b), v).is_some() {
                return None;
            }
            edges.push((a, b, v));
        }

        let n = clauses.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b, _) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut component = vec![usize::MAX; n];
        let mut components = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut stack = vec![start];
            let mut vertices = Vec::new();
            component[start] = id;
            while let Some(x) = stack.pop() {
                vertices.push(x);
                for &y in &adj[x] {
                    if component[y] == usize::MAX {
                        component[y] = id;
                        stack.push(y);
                    }
                }
            }
            vertices.sort_unstable();
            // Connected and 2-regular means a cycle.
            let cycle = vertices.iter().all(|&x| adj[x].len() == 2);
            let kind = if cycle && vertices.len() % 2 == 1 {
                ComponentKind::OddCycle
            } else {
                ComponentKind::Other
            };
            components.push(Component { vertices, kind });
        }
        Some(ClauseGraph {
            vertices: n,
            edges,
            components,
        })
    }

    pub fn odd_cycles(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.kind == ComponentKind::OddCycle)
    }
}
